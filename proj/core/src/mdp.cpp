#include "afmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afmdp/errors.hpp"

namespace afmdp {

StochasticityReport check_stochastic(const DenseMatrix& m) {
    StochasticityReport report;
    report.min_entry = m.rows() * m.cols() > 0 ? m(0, 0) : 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double sum = 0.0;
        for (double p : m.row(r)) {
            sum += p;
            // NaN must fail the check, hence the negated comparison.
            if (!(p >= report.min_entry)) report.min_entry = p;
        }
        const double err = std::abs(sum - 1.0);
        if (!(err <= report.max_row_error)) report.max_row_error = err;
    }
    return report;
}

TabularMdp::TabularMdp(FactoredSpace space, DenseMatrix kernel, std::vector<double> reward, double gamma)
    : space_(std::move(space)), kernel_(std::move(kernel)), reward_(std::move(reward)), gamma_(gamma) {
    if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw DomainError("discount must lie in (0, 1)");
    const std::size_t pairs = space_.num_pairs();
    if (kernel_.rows() != pairs || kernel_.cols() != space_.num_states()) {
        throw ShapeError("kernel must be " + std::to_string(pairs) + "x" + std::to_string(space_.num_states()));
    }
    if (reward_.size() != pairs) throw ShapeError("reward must have one entry per state-action pair");
    const auto report = check_stochastic(kernel_);
    if (!(report.min_entry >= 0.0)) throw ValidationError("kernel has a negative or NaN entry");
    if (!(report.max_row_error <= 1e-9)) throw ValidationError("kernel row does not sum to 1 within 1e-9");
    for (std::size_t x = 0; x < pairs; ++x) {
        if (!(reward_[x] >= 0.0 && reward_[x] <= 1.0)) {
            throw ValidationError("reward of pair " + std::to_string(x) + " outside [0, 1]");
        }
    }
}

std::vector<double> state_values(const QFunction& q, const FactoredSpace& space) {
    if (q.size() != space.num_pairs()) throw ShapeError("Q-function size does not match the space");
    const std::size_t ns = space.num_states();
    std::vector<double> v(q.values().begin(), q.values().begin() + static_cast<std::ptrdiff_t>(ns));
    for (std::size_t a = 1; a < space.num_actions(); ++a) {
        const double* row = q.values().data() + a * ns;
        for (std::size_t s = 0; s < ns; ++s) v[s] = std::max(v[s], row[s]);
    }
    return v;
}

QFunction bellman_apply(const QFunction& q, const DenseMatrix& kernel, std::span<const double> reward,
                        double gamma, const FactoredSpace& space) {
    const std::size_t pairs = space.num_pairs();
    if (q.size() != pairs || reward.size() != pairs || kernel.rows() != pairs ||
        kernel.cols() != space.num_states()) {
        throw ShapeError("Bellman operands do not match the space");
    }
    const auto v = state_values(q, space);
    QFunction out(pairs);
    for (std::size_t x = 0; x < pairs; ++x) {
        const auto row = kernel.row(x);
        double acc = 0.0;
        for (std::size_t s = 0; s < row.size(); ++s) acc += row[s] * v[s];
        out[x] = reward[x] + gamma * acc;
    }
    return out;
}

QFunction bellman_apply(const QFunction& q, const TabularMdp& mdp) {
    return bellman_apply(q, mdp.kernel(), mdp.reward(), mdp.gamma(), mdp.space());
}

QFunction exact_value_iteration(const TabularMdp& mdp, double tol) {
    if (!(tol > 0.0)) throw DomainError("value-iteration tolerance must be positive");
    const double threshold = tol * (1.0 - mdp.gamma()) / mdp.gamma();
    QFunction q(mdp.space().num_pairs());
    for (;;) {
        QFunction next = bellman_apply(q, mdp);
        const double residual = q_error(next, q);
        q = std::move(next);
        // The returned iterate is one contraction step past the certified one.
        if (residual <= threshold) return q;
    }
}

Policy greedy_policy(const QFunction& q, const FactoredSpace& space) {
    if (q.size() != space.num_pairs()) throw ShapeError("Q-function size does not match the space");
    const std::size_t ns = space.num_states();
    Policy policy{std::vector<std::size_t>(ns, 0)};
    for (std::size_t s = 0; s < ns; ++s) {
        double best = q[s];
        for (std::size_t a = 1; a < space.num_actions(); ++a) {
            const double value = q[s + a * ns];
            if (value > best) {
                best = value;
                policy.actions[s] = a;
            }
        }
    }
    return policy;
}

double q_error(const QFunction& q, const QFunction& q_ref) {
    if (q.size() != q_ref.size()) throw ShapeError("Q-functions differ in size");
    double err = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) err = std::max(err, std::abs(q[i] - q_ref[i]));
    return err;
}

}  // namespace afmdp
