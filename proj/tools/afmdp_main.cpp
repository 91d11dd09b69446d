// afmdp: command-line front end for the approximate-factorization toolkit.
//
// Exit codes: 0 success, 2 configuration or input error, 3 runtime error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "afmdp/errors.hpp"
#include "afmdp/experiments.hpp"
#include "afmdp/mdp_io.hpp"
#include "afmdp/model_based.hpp"
#include "afmdp/model_free.hpp"
#include "afmdp/scheme_io.hpp"
#include "afmdp/series.hpp"
#include "afmdp/synthetic.hpp"

namespace {

using namespace afmdp;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Writes to a file when a path is given, to stdout otherwise.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw ConfigError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

// Environment selected by --mdp or --env, with an oracle for scoring.
struct Problem {
    std::shared_ptr<const TabularMdp> mdp;
    std::shared_ptr<const GenerativeModel> model;
    std::vector<NamedScheme> schemes;
};

Problem load_problem(const std::string& mdp_path, const std::string& env_name, std::uint64_t env_seed) {
    if (mdp_path.empty() == env_name.empty()) throw ConfigError("give exactly one of --mdp or --env");
    Problem p;
    if (!mdp_path.empty()) {
        p.mdp = std::make_shared<TabularMdp>(load_mdp(mdp_path));
        p.model = std::make_shared<TabularGenerativeModel>(p.mdp);
        p.schemes.push_back({"trivial", trivial_scheme(p.mdp->space())});
        return p;
    }
    const ExperimentId id = parse_experiment_id(env_name);
    if (id != ExperimentId::synthetic_perfect && id != ExperimentId::synthetic_imperfect) {
        throw ConfigError("--env must be synthetic-perfect or synthetic-imperfect");
    }
    SyntheticSpec spec = default_config(id).synthetic;
    spec.seed = env_seed;
    const auto inst = id == ExperimentId::synthetic_perfect ? gen_perfect_mdp(spec) : gen_imperfect_mdp(spec);
    p.mdp = inst.mdp;
    p.model = std::make_shared<TabularGenerativeModel>(inst.mdp, inst.native_reward, inst.native_local);
    p.schemes = inst.schemes;
    if (id == ExperimentId::synthetic_imperfect) p.schemes.push_back({"trivial", trivial_scheme(inst.mdp->space())});
    return p;
}

// A scheme file, or the name of one of the problem's built-in schemes.
FactorizationScheme resolve_scheme(const std::string& arg, const Problem& p) {
    if (arg.empty()) return trivial_scheme(p.mdp->space());
    if (fs::exists(arg)) {
        const auto file = load_scheme(arg);
        if (file.space && !(*file.space == p.mdp->space())) {
            throw ConfigError("scheme DIMS do not match the environment");
        }
        require_valid(file.scheme, p.mdp->space());
        return file.scheme;
    }
    for (const auto& s : p.schemes) {
        if (s.name == arg) return s.scheme;
    }
    throw ConfigError("'" + arg + "' is neither a scheme file nor a built-in scheme name");
}

// Scheme plus the space it applies to, from the file's DIMS or --dims.
std::pair<FactorizationScheme, FactoredSpace> scheme_with_space(const std::string& path, const std::string& dims) {
    const auto file = load_scheme(path);
    std::optional<FactoredSpace> space = file.space;
    if (!dims.empty()) {
        std::istringstream in(dims);
        std::string s_tok, a_tok;
        in >> s_tok >> a_tok;
        space = parse_dims(s_tok, a_tok);
    }
    if (!space) throw ConfigError("the scheme has no DIMS line; pass --dims \"s:... a:...\"");
    require_valid(file.scheme, *space);
    return {file.scheme, *space};
}

std::string members_text(const std::vector<std::size_t>& members) {
    std::string s;
    for (std::size_t i = 0; i < members.size(); ++i) s += (i ? ";" : "") + std::to_string(members[i]);
    return s;
}

void print_plan(std::ostream& out, const char* name, const GroupingPlan& plan) {
    out << "# " << name << " plan: " << plan.groups.size() << " groups, N_entry = " << plan.total_cost() << '\n';
    out << "group,members,dmax\n";
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        out << g << ',' << members_text(plan.groups[g]) << ',' << plan.dmax[g] << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate factorization of MDPs: sampling plans, learners and experiments"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run an experiment from a key = value config file");
    std::string config_path;
    std::optional<std::uint64_t> run_seed;
    std::string run_out;
    std::optional<std::size_t> run_threads;
    std::optional<std::size_t> run_trials;
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", run_seed, "Master seed (overrides the config)");
    run->add_option("--out", run_out, "Output directory (overrides the config)");
    run->add_option("--threads", run_threads, "Worker threads");
    run->add_option("--trials", run_trials, "Trials per cell (overrides the config)");

    // coloring
    auto* coloring = app.add_subcommand("coloring", "Print the conflict graph and grouping plans of a scheme");
    std::string scheme_path;
    std::string dims;
    coloring->add_option("--scheme", scheme_path, "SCHEMEv1 file")->required()->check(CLI::ExistingFile);
    coloring->add_option("--dims", dims, "Space, e.g. \"s:5,5,5 a:5\" (when the file has no DIMS)");

    // bound
    auto* bound = app.add_subcommand("bound", "Sample-size bound of a scheme");
    double eps = 0.1, delta = 0.05, gamma = 0.9;
    bound->add_option("--scheme", scheme_path, "SCHEMEv1 file")->required()->check(CLI::ExistingFile);
    bound->add_option("--dims", dims, "Space (when the file has no DIMS)");
    bound->add_option("--eps", eps, "Accuracy")->capture_default_str();
    bound->add_option("--delta", delta, "Failure probability")->capture_default_str();
    bound->add_option("--gamma", gamma, "Discount")->capture_default_str();

    // mbqvi
    auto* mb = app.add_subcommand("mbqvi", "Model-based Q-value iteration on a factored empirical model");
    std::string mdp_path, env_name, scheme_arg, out_path;
    std::uint64_t env_seed = 1, seed = 0;
    std::size_t replicates = 1;
    std::optional<std::size_t> iterations;
    bool oracle_reward = false;
    mb->add_option("--mdp", mdp_path, "MDPv1 file")->check(CLI::ExistingFile);
    mb->add_option("--env", env_name, "synthetic-perfect or synthetic-imperfect");
    mb->add_option("--env-seed", env_seed, "Generator seed for --env")->capture_default_str();
    mb->add_option("--scheme", scheme_arg, "SCHEMEv1 file or built-in scheme name (default: trivial)");
    mb->add_option("--replicates", replicates, "Draws per sampling-set entry")->capture_default_str();
    mb->add_option("--iterations", iterations, "Value-iteration steps (default from --eps)");
    mb->add_option("--eps", eps, "Accuracy used to derive the iteration count")->capture_default_str();
    mb->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    mb->add_flag("--oracle-reward", oracle_reward, "Iterate with the true reward");
    mb->add_option("--out", out_path, "Diagnostics CSV (default: stdout)");

    // vrql
    auto* vr = app.add_subcommand("vrql", "Variance-reduced Q-learning with approximate factorization");
    std::optional<std::size_t> epochs, inner, nref_base;
    ScheduleConstants constants;
    vr->add_option("--mdp", mdp_path, "MDPv1 file")->check(CLI::ExistingFile);
    vr->add_option("--env", env_name, "synthetic-perfect or synthetic-imperfect");
    vr->add_option("--env-seed", env_seed, "Generator seed for --env")->capture_default_str();
    vr->add_option("--scheme", scheme_arg, "SCHEMEv1 file or built-in scheme name (default: trivial)");
    vr->add_option("--epochs", epochs, "Epochs T (default from the schedule)");
    vr->add_option("--inner", inner, "Inner iterations M (default from the schedule)");
    vr->add_option("--nref-base", nref_base, "N_1; later epochs use N_1 * 4^(tau-1) (default from the schedule)");
    vr->add_option("--c1", constants.c1, "Schedule constant c1")->capture_default_str();
    vr->add_option("--c2", constants.c2, "Schedule constant c2")->capture_default_str();
    vr->add_option("--c3", constants.c3, "Schedule constant c3")->capture_default_str();
    vr->add_option("--eps", eps, "Schedule accuracy")->capture_default_str();
    vr->add_option("--delta", delta, "Schedule failure probability")->capture_default_str();
    vr->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    vr->add_flag("--oracle-reward", oracle_reward, "Use the true reward");
    vr->add_option("--out", out_path, "Per-epoch CSV (default: stdout)");

    // plotdata
    auto* plot = app.add_subcommand("plotdata", "Median/IQR plot data from a results CSV");
    std::string csv_path, plot_dir;
    plot->add_option("--csv", csv_path, "results.csv")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_dir, "Output directory")->required();

    // synth-data
    auto* synth = app.add_subcommand("synth-data", "Write synthetic price and mismatch series");
    std::size_t length = 100000;
    std::string data_dir = "data";
    synth->add_option("--seed", seed, "Seed")->capture_default_str();
    synth->add_option("--length", length, "Points per series")->capture_default_str();
    synth->add_option("--out", data_dir, "Output directory")->capture_default_str();

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic MDP and its schemes");
    std::string gen_dir;
    gen->add_option("--env", env_name, "synthetic-perfect or synthetic-imperfect")->required();
    gen->add_option("--env-seed", env_seed, "Generator seed")->capture_default_str();
    gen->add_option("--out", gen_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            ExperimentConfig config = load_config(config_path);
            if (run_seed) config.master_seed = *run_seed;
            if (!run_out.empty()) config.output = run_out;
            if (run_threads) config.threads = *run_threads;
            if (run_trials) config.trials = *run_trials;
            validate_config(config);
            const auto result = run_experiment(config);
            for (const auto& f : result.files) std::cout << f << '\n';
        } else if (*coloring) {
            const auto [scheme, space] = scheme_with_space(scheme_path, dims);
            const auto reduction = reduce_inclusive(scheme);
            const auto graph = build_conflict_graph(scheme, reduction, space);
            std::cout << graph.to_dot();
            print_plan(std::cout, "exact", color(graph, ColoringMethod::automatic));
            print_plan(std::cout, "greedy", color_greedy(graph));
        } else if (*bound) {
            const auto [scheme, space] = scheme_with_space(scheme_path, dims);
            const auto b = sample_bound(scheme, space, eps, delta, gamma);
            std::cout << "transition_term,reward_term,total\n"
                      << format_real(b.transition_term) << ',' << format_real(b.reward_term) << ','
                      << format_real(b.total) << '\n';
        } else if (*mb) {
            const Problem p = load_problem(mdp_path, env_name, env_seed);
            MbqviConfig cfg;
            cfg.scheme = resolve_scheme(scheme_arg, p);
            cfg.replicates = replicates;
            cfg.iterations = iterations ? *iterations : required_iterations(eps, p.mdp->gamma());
            cfg.seed = seed;
            cfg.oracle_reward = oracle_reward;
            const auto result = mbqvi(*p.model, cfg);
            Output out(out_path);
            auto& os = out.stream();
            os << "iter,residual\n";
            for (std::size_t t = 0; t < result.diagnostics.residuals.size(); ++t) {
                os << t + 1 << ',' << format_real(result.diagnostics.residuals[t]) << '\n';
            }
            const auto oracle = exact_value_iteration(*p.mdp, 1e-10);
            os << "# samples " << result.diagnostics.total_samples << '\n';
            os << "# q_error " << format_real(q_error(result.q, oracle)) << '\n';
        } else if (*vr) {
            const Problem p = load_problem(mdp_path, env_name, env_seed);
            VrqlConfig cfg;
            cfg.scheme = resolve_scheme(scheme_arg, p);
            const auto schedule = epoch_schedule(eps, delta, p.mdp->gamma(), cfg.scheme, p.mdp->space(), constants);
            cfg.epochs = epochs ? *epochs : schedule.epochs;
            cfg.inner = inner ? *inner : schedule.inner;
            for (std::size_t tau = 1; tau <= cfg.epochs; ++tau) {
                if (nref_base) {
                    cfg.reference_sizes.push_back(*nref_base << (2 * (tau - 1)));
                } else {
                    // Past the schedule's horizon keep quadrupling.
                    const std::size_t last = schedule.reference_sizes.size();
                    cfg.reference_sizes.push_back(tau <= last ? schedule.reference_size(tau)
                                                              : schedule.reference_size(last) << (2 * (tau - last)));
                }
            }
            cfg.seed = seed;
            cfg.oracle_reward = oracle_reward;
            cfg.oracle_q = exact_value_iteration(*p.mdp, 1e-10);
            const auto result = vrql_af(*p.model, cfg);
            Output out(out_path);
            auto& os = out.stream();
            os << "epoch,q_error,samples_cumulative\n";
            for (const auto& e : result.diagnostics.epochs) {
                os << e.epoch << ',' << format_real(e.q_error) << ',' << e.samples_cumulative << '\n';
            }
        } else if (*plot) {
            for (const auto& f : emit_plotdata(csv_path, plot_dir)) std::cout << f << '\n';
        } else if (*synth) {
            const auto [price, mismatch] = synth_wind_data(seed, length);
            fs::create_directories(data_dir);
            save_series_csv((fs::path(data_dir) / "wind_price.csv").string(), price);
            save_series_csv((fs::path(data_dir) / "wind_mismatch.csv").string(), mismatch);
            std::cout << (fs::path(data_dir) / "wind_price.csv").string() << '\n'
                      << (fs::path(data_dir) / "wind_mismatch.csv").string() << '\n';
        } else if (*gen) {
            const Problem p = load_problem("", env_name, env_seed);
            fs::create_directories(gen_dir);
            const auto mdp_file = (fs::path(gen_dir) / (env_name + ".mdp")).string();
            save_mdp(mdp_file, *p.mdp);
            std::cout << mdp_file << '\n';
            for (const auto& s : p.schemes) {
                const auto file = (fs::path(gen_dir) / (env_name + "." + s.name + ".scheme")).string();
                save_scheme(file, s.scheme, p.mdp->space());
                std::cout << file << '\n';
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
