#include "afmdp/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "afmdp/errors.hpp"

namespace afmdp {

namespace {

// Stream purposes within one spec seed.
enum : std::uint64_t { kChainStream = 1, kRewardStream = 2, kCoupledStream = 3 };

void check_spec(const SyntheticSpec& spec) {
    if (spec.n_sub < 1) throw DomainError("need at least one substate");
    if (spec.sub_size < 2 || spec.action_size < 2) throw DomainError("substate and action sizes must be at least 2");
    if (!(spec.coupling >= 0.0 && spec.coupling <= 1.0)) throw DomainError("coupling must lie in [0, 1]");
    if (!(spec.concentration > 0.0)) throw DomainError("concentration must be positive");
    if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) throw DomainError("discount must lie in (0, 1)");
}

FactoredSpace make_space(const SyntheticSpec& spec) {
    return FactoredSpace(std::vector<std::size_t>(spec.n_sub, spec.sub_size), {spec.action_size});
}

// Component i: substate i from itself, the last one also from the action.
std::vector<Scope> chain_inputs(std::size_t n) {
    std::vector<Scope> inputs;
    for (std::size_t i = 0; i < n; ++i) inputs.push_back(i + 1 == n ? Scope{i, n} : Scope{i});
    return inputs;
}

std::vector<Scope> singletons(std::size_t n) {
    std::vector<Scope> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({i});
    return out;
}

// Row-stochastic chain tables with Dirichlet(1) rows, one per component.
std::vector<DenseMatrix> chain_tables(const SyntheticSpec& spec, const FactoredSpace& space,
                                      const std::vector<Scope>& inputs) {
    std::vector<DenseMatrix> tables;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const ScopeCodec codec(space, inputs[k]);
        DenseMatrix t(codec.size(), spec.sub_size);
        for (std::size_t z = 0; z < codec.size(); ++z) {
            RandomStream rng(derive_seed(spec.seed, {kChainStream, k, z}));
            sample_dirichlet(1.0, t.row(z), rng);
        }
        tables.push_back(std::move(t));
    }
    return tables;
}

DenseMatrix product_kernel(const FactoredSpace& space, const std::vector<Scope>& inputs,
                           const std::vector<DenseMatrix>& tables) {
    const std::size_t n = space.num_state_dims();
    std::vector<ScopeCodec> codecs;
    for (const auto& scope : inputs) codecs.emplace_back(space, scope);
    DenseMatrix kernel(space.num_pairs(), space.num_states());
    for (std::size_t x = 0; x < space.num_pairs(); ++x) {
        auto row = kernel.row(x);
        for (std::size_t s = 0; s < space.num_states(); ++s) {
            double p = 1.0;
            for (std::size_t k = 0; k < n; ++k) p *= tables[k](codecs[k].project(x), space.digit(s, k));
            row[s] = p;
        }
    }
    return kernel;
}

// Additive reward over `scopes`, each local table uniform on [0, 1/L].
void additive_reward(const SyntheticSpec& spec, const FactoredSpace& space, SyntheticInstance& inst,
                     std::vector<Scope> scopes, std::vector<double>& reward) {
    const double scale = 1.0 / static_cast<double>(scopes.size());
    inst.native_reward.scopes = std::move(scopes);
    FactoredModel model;
    for (std::size_t i = 0; i < inst.native_reward.size(); ++i) {
        const ScopeCodec codec(space, inst.native_reward.scopes[i]);
        RandomStream rng(derive_seed(spec.seed, {kRewardStream, i}));
        std::vector<double> local(codec.size());
        for (double& v : local) v = scale * rng.uniform();
        inst.native_local.push_back(std::move(local));
    }
    model.scheme.reward = inst.native_reward;
    model.local_rewards = inst.native_local;
    reward = compose_reward(model, space);
    // Sums of values below 1/L each stay below 1 up to rounding.
    for (double& r : reward) r = std::min(r, 1.0);
}

}  // namespace

double sample_gamma(double shape, RandomStream& rng) {
    if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
    if (shape < 1.0) {
        const double u = rng.uniform();
        return sample_gamma(shape + 1.0, rng) * std::pow(1.0 - u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z = 0.0;
        double v = 0.0;
        do {
            z = rng.normal();
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - rng.uniform();
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
    }
}

void sample_dirichlet(double alpha, std::span<double> out, RandomStream& rng) {
    double total = 0.0;
    for (double& v : out) {
        v = alpha == 1.0 ? rng.exponential() : sample_gamma(alpha, rng);
        total += v;
    }
    if (!(total > 0.0)) {
        // Every draw underflowed: fall back to a point mass.
        for (double& v : out) v = 0.0;
        out[rng.below(out.size())] = 1.0;
        return;
    }
    for (double& v : out) v /= total;
}

const FactorizationScheme& SyntheticInstance::scheme(const std::string& name) const {
    for (const auto& s : schemes) {
        if (s.name == name) return s.scheme;
    }
    throw ConfigError("unknown scheme '" + name + "'");
}

TabularGenerativeModel SyntheticInstance::environment() const {
    return TabularGenerativeModel(mdp, native_reward, native_local);
}

SyntheticInstance gen_perfect_mdp(const SyntheticSpec& spec) {
    check_spec(spec);
    if (spec.coupling != 0.0) throw DomainError("a perfectly factorizable MDP needs coupling 0");
    const FactoredSpace space = make_space(spec);
    const std::size_t n = spec.n_sub;
    const auto inputs = chain_inputs(n);

    SyntheticInstance inst;
    std::vector<double> reward;
    additive_reward(spec, space, inst, inputs, reward);
    inst.mdp = std::make_shared<TabularMdp>(space, product_kernel(space, inputs, chain_tables(spec, space, inputs)),
                                            std::move(reward), spec.gamma);
    inst.schemes.push_back({"af", make_scheme(singletons(n), inputs, inputs)});
    inst.schemes.push_back({"trivial", trivial_scheme(space)});
    return inst;
}

SyntheticInstance gen_imperfect_mdp(const SyntheticSpec& spec) {
    check_spec(spec);
    if (spec.n_sub < 2) throw DomainError("the imperfect generator needs at least two substates");
    const FactoredSpace space = make_space(spec);
    const std::size_t n = spec.n_sub;
    const auto inputs = chain_inputs(n);

    DenseMatrix kernel = product_kernel(space, inputs, chain_tables(spec, space, inputs));
    if (spec.coupling > 0.0) {
        std::vector<double> row(space.num_states());
        for (std::size_t x = 0; x < space.num_pairs(); ++x) {
            RandomStream rng(derive_seed(spec.seed, {kCoupledStream, x}));
            sample_dirichlet(spec.concentration, row, rng);
            auto out = kernel.row(x);
            for (std::size_t s = 0; s < row.size(); ++s) {
                out[s] = (1.0 - spec.coupling) * out[s] + spec.coupling * row[s];
            }
        }
    }

    SyntheticInstance inst;
    std::vector<double> reward;
    additive_reward(spec, space, inst, inputs, reward);
    inst.mdp = std::make_shared<TabularMdp>(space, std::move(kernel), std::move(reward), spec.gamma);

    inst.schemes.push_back({"K" + std::to_string(n), make_scheme(singletons(n), inputs, inputs)});
    if (n > 2) {
        const std::size_t half = n / 2;
        Scope first;
        Scope second;
        for (std::size_t i = 0; i < n; ++i) (i < half ? first : second).push_back(i);
        Scope second_in = second;
        second_in.push_back(n);
        inst.schemes.push_back({"K2", make_scheme({first, second}, {first, second_in}, {first, second_in})});
    }
    inst.schemes.push_back({"K1", trivial_scheme(space)});
    return inst;
}

}  // namespace afmdp
