#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace afmdp {

/// Mixed-radix description of S = S_1 x ... x S_n and A = A_1 x ... x A_m.
///
/// A state-action pair x = (s, a) is addressed by one flat index. Dimensions
/// are ordered state dims first, then action dims; dimension 0 is the least
/// significant digit. Consequently the flat pair index is s + |S| * a, where
/// s and a are the flat state and action indices.
class FactoredSpace {
public:
    FactoredSpace() = default;
    FactoredSpace(std::vector<std::size_t> state_dims, std::vector<std::size_t> action_dims);

    const std::vector<std::size_t>& state_dims() const noexcept { return state_dims_; }
    const std::vector<std::size_t>& action_dims() const noexcept { return action_dims_; }
    /// All n + m dimension sizes, state dims first.
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }

    std::size_t num_state_dims() const noexcept { return state_dims_.size(); }
    std::size_t num_action_dims() const noexcept { return action_dims_.size(); }
    std::size_t num_dims() const noexcept { return dims_.size(); }

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    std::size_t num_pairs() const noexcept { return num_states_ * num_actions_; }

    std::size_t stride(std::size_t dim) const { return strides_.at(dim); }

    /// Encodes per-dimension coordinates (length n + m) into a flat pair index.
    std::size_t flat_index(std::span<const std::size_t> coords) const;
    std::vector<std::size_t> unflat_index(std::size_t pair) const;

    /// Coordinate of `pair` along dimension `dim`.
    std::size_t digit(std::size_t pair, std::size_t dim) const noexcept {
        return (pair / strides_[dim]) % dims_[dim];
    }

    std::size_t pair(std::size_t state, std::size_t action) const noexcept { return state + num_states_ * action; }
    std::size_t state_of(std::size_t pair) const noexcept { return pair % num_states_; }
    std::size_t action_of(std::size_t pair) const noexcept { return pair / num_states_; }

    friend bool operator==(const FactoredSpace& a, const FactoredSpace& b) noexcept {
        return a.state_dims_ == b.state_dims_ && a.action_dims_ == b.action_dims_;
    }

private:
    std::vector<std::size_t> state_dims_;
    std::vector<std::size_t> action_dims_;
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> strides_;
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
};

/// An index subset of [n + m], sorted ascending and duplicate-free.
using Scope = std::vector<std::size_t>;

/// Sorts and deduplicates.
Scope normalize_scope(Scope scope);

bool is_subset(const Scope& inner, const Scope& outer);
bool intersects(const Scope& a, const Scope& b);
Scope scope_union(const Scope& a, const Scope& b);
/// Dimensions of [0, num_dims) not in `scope`.
Scope scope_complement(const Scope& scope, std::size_t num_dims);

/// Codec between flat pair indices and the sub-index of X[Z] for a scope Z.
///
/// The sub-index is mixed-radix over the scope's dimensions in ascending
/// order, which is the canonical enumeration of X[Z]. Every dimension in the
/// scope must be valid for the space.
class ScopeCodec {
public:
    ScopeCodec(const FactoredSpace& space, Scope scope);

    const Scope& scope() const noexcept { return scope_; }
    /// |X[Z]|; 1 for the empty scope.
    std::size_t size() const noexcept { return size_; }

    std::size_t project(std::size_t pair) const noexcept {
        std::size_t sub = 0;
        for (std::size_t i = 0; i < scope_.size(); ++i) {
            sub += ((pair / space_strides_[i]) % radices_[i]) * sub_strides_[i];
        }
        return sub;
    }

    /// Replaces the scope coordinates of `base` with those of `sub`.
    std::size_t embed(std::size_t sub, std::size_t base) const noexcept;

    /// Flat-index contribution of `sub` with every other coordinate zero.
    std::size_t offset(std::size_t sub) const noexcept;

    /// project() evaluated for every flat index in [0, count).
    std::vector<std::size_t> projection_table(std::size_t count) const;

private:
    Scope scope_;
    std::vector<std::size_t> radices_;
    std::vector<std::size_t> space_strides_;
    std::vector<std::size_t> sub_strides_;
    std::size_t size_ = 1;
};

}  // namespace afmdp
