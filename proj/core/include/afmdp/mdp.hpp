#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "afmdp/space.hpp"

namespace afmdp {

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Largest absolute deviation of any row sum from 1, and the smallest entry.
struct StochasticityReport {
    double max_row_error = 0.0;
    double min_entry = 0.0;
};
StochasticityReport check_stochastic(const DenseMatrix& m);

/// Q-values indexed by flat pair index.
class QFunction {
public:
    QFunction() = default;
    explicit QFunction(std::size_t size, double fill = 0.0) : values_(size, fill) {}
    explicit QFunction(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    friend bool operator==(const QFunction&, const QFunction&) = default;

private:
    std::vector<double> values_;
};

/// Deterministic policy: one flat action index per flat state index.
struct Policy {
    std::vector<std::size_t> actions;
};

/// Dense tabular MDP, immutable after construction.
///
/// The kernel has one row per flat pair index and one column per flat state
/// index. Construction rejects non-stochastic rows (tolerance 1e-9), negative
/// entries, rewards outside [0, 1] and a discount outside (0, 1).
class TabularMdp {
public:
    TabularMdp(FactoredSpace space, DenseMatrix kernel, std::vector<double> reward, double gamma);

    const FactoredSpace& space() const noexcept { return space_; }
    const DenseMatrix& kernel() const noexcept { return kernel_; }
    const std::vector<double>& reward() const noexcept { return reward_; }
    double gamma() const noexcept { return gamma_; }

private:
    FactoredSpace space_;
    DenseMatrix kernel_;
    std::vector<double> reward_;
    double gamma_;
};

/// V(s) = max_a q(s, a).
std::vector<double> state_values(const QFunction& q, const FactoredSpace& space);

/// r(x) + gamma * sum_s' P(s'|x) max_a' q(s', a') on an arbitrary model.
QFunction bellman_apply(const QFunction& q, const DenseMatrix& kernel, std::span<const double> reward,
                        double gamma, const FactoredSpace& space);
QFunction bellman_apply(const QFunction& q, const TabularMdp& mdp);

/// Value iteration from Q = 0, stopped on the residual so that the returned
/// Q is within `tol` of Q* in the sup norm.
QFunction exact_value_iteration(const TabularMdp& mdp, double tol);

/// Greedy policy; ties go to the smallest action index.
Policy greedy_policy(const QFunction& q, const FactoredSpace& space);

/// Sup-norm distance between two Q-functions of equal size.
double q_error(const QFunction& q, const QFunction& q_ref);

}  // namespace afmdp
