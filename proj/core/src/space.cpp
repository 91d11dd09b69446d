#include "afmdp/space.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "afmdp/errors.hpp"

namespace afmdp {

namespace {

std::size_t checked_product(std::size_t acc, std::size_t factor) {
    if (factor != 0 && acc > std::numeric_limits<std::size_t>::max() / factor) {
        throw DomainError("factored space too large for the index type");
    }
    return acc * factor;
}

}  // namespace

FactoredSpace::FactoredSpace(std::vector<std::size_t> state_dims, std::vector<std::size_t> action_dims)
    : state_dims_(std::move(state_dims)), action_dims_(std::move(action_dims)) {
    if (state_dims_.empty()) throw DomainError("factored space needs at least one state dimension");
    if (action_dims_.empty()) throw DomainError("factored space needs at least one action dimension");
    dims_ = state_dims_;
    dims_.insert(dims_.end(), action_dims_.begin(), action_dims_.end());
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        if (dims_[d] == 0) throw DomainError("dimension " + std::to_string(d) + " has size 0");
    }
    num_states_ = 1;
    for (std::size_t d : state_dims_) num_states_ = checked_product(num_states_, d);
    num_actions_ = 1;
    for (std::size_t d : action_dims_) num_actions_ = checked_product(num_actions_, d);
    checked_product(num_states_, num_actions_);

    strides_.resize(dims_.size());
    std::size_t stride = 1;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        strides_[d] = stride;
        stride *= dims_[d];
    }
}

std::size_t FactoredSpace::flat_index(std::span<const std::size_t> coords) const {
    if (coords.size() != dims_.size()) {
        throw ShapeError("expected " + std::to_string(dims_.size()) + " coordinates, got " +
                         std::to_string(coords.size()));
    }
    std::size_t index = 0;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        if (coords[d] >= dims_[d]) {
            throw IndexError("coordinate " + std::to_string(coords[d]) + " out of range for dimension " +
                             std::to_string(d) + " of size " + std::to_string(dims_[d]));
        }
        index += coords[d] * strides_[d];
    }
    return index;
}

std::vector<std::size_t> FactoredSpace::unflat_index(std::size_t pair) const {
    if (pair >= num_pairs()) {
        throw IndexError("pair index " + std::to_string(pair) + " out of range");
    }
    std::vector<std::size_t> coords(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d) coords[d] = digit(pair, d);
    return coords;
}

Scope normalize_scope(Scope scope) {
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    return scope;
}

bool is_subset(const Scope& inner, const Scope& outer) {
    return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

bool intersects(const Scope& a, const Scope& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) return true;
        if (*i < *j) ++i; else ++j;
    }
    return false;
}

Scope scope_union(const Scope& a, const Scope& b) {
    Scope out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

Scope scope_complement(const Scope& scope, std::size_t num_dims) {
    Scope out;
    for (std::size_t d = 0; d < num_dims; ++d) {
        if (!std::binary_search(scope.begin(), scope.end(), d)) out.push_back(d);
    }
    return out;
}

ScopeCodec::ScopeCodec(const FactoredSpace& space, Scope scope) : scope_(normalize_scope(std::move(scope))) {
    radices_.reserve(scope_.size());
    for (std::size_t d : scope_) {
        if (d >= space.num_dims()) {
            throw IndexError("scope dimension " + std::to_string(d) + " out of range");
        }
        radices_.push_back(space.dims()[d]);
        space_strides_.push_back(space.stride(d));
        sub_strides_.push_back(size_);
        size_ *= space.dims()[d];
    }
}

std::size_t ScopeCodec::embed(std::size_t sub, std::size_t base) const noexcept {
    std::size_t out = base;
    for (std::size_t i = 0; i < scope_.size(); ++i) {
        const std::size_t old_digit = (base / space_strides_[i]) % radices_[i];
        const std::size_t new_digit = (sub / sub_strides_[i]) % radices_[i];
        out = out - old_digit * space_strides_[i] + new_digit * space_strides_[i];
    }
    return out;
}

std::size_t ScopeCodec::offset(std::size_t sub) const noexcept {
    std::size_t out = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i) {
        out += ((sub / sub_strides_[i]) % radices_[i]) * space_strides_[i];
    }
    return out;
}

std::vector<std::size_t> ScopeCodec::projection_table(std::size_t count) const {
    std::vector<std::size_t> table(count);
    for (std::size_t x = 0; x < count; ++x) table[x] = project(x);
    return table;
}

}  // namespace afmdp
