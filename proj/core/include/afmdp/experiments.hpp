#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "afmdp/model_free.hpp"
#include "afmdp/synthetic.hpp"
#include "afmdp/wind.hpp"

namespace afmdp {

enum class ExperimentId { synthetic_perfect, synthetic_imperfect, windfarm, coloring, bound };
enum class Algorithm { mb_af, mb_vanilla, vrql_af, vrql_vanilla };

std::string to_string(ExperimentId id);
std::string to_string(Algorithm algorithm);
ExperimentId parse_experiment_id(const std::string& text);
Algorithm parse_algorithm(const std::string& text);
bool is_vanilla(Algorithm algorithm) noexcept;
bool is_model_based(Algorithm algorithm) noexcept;

struct ExperimentConfig {
    ExperimentId experiment = ExperimentId::synthetic_perfect;
    std::size_t trials = 1;
    /// Strictly increasing.
    std::vector<std::size_t> budgets;
    std::vector<Algorithm> algorithms;
    /// Schemes run by the factored algorithms; vanilla ones always use the
    /// trivial scheme.
    std::vector<std::string> schemes;
    std::uint64_t master_seed = 0;
    std::string output = "results";

    SyntheticSpec synthetic;
    std::string price_csv = "data/wind_price.csv";
    std::string mismatch_csv = "data/wind_mismatch.csv";

    /// Model-based iterations; 0 derives them from mb_eps with
    /// c_bar2 = 1 / (1 - gamma), which bounds the truncation by mb_eps.
    std::size_t mb_iterations = 0;
    double mb_eps = 1e-3;
    double mf_eps = 0.1;
    double mf_delta = 0.05;
    ScheduleConstants constants;

    std::size_t horizon = 3000;
    std::size_t episodes = 50;

    std::vector<double> eps_grid{0.1, 0.05};
    double delta = 0.05;

    std::size_t threads = 1;
    /// Record wall-clock time per cell; off keeps outputs byte-stable.
    bool timing = false;
};

/// Defaults for an experiment id (budgets, trials, algorithms, schemes).
ExperimentConfig default_config(ExperimentId id);

/// `key = value` lines, '#' comments. `experiment` selects the defaults the
/// other keys override. Relative data paths resolve against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);
/// Throws ConfigError on an inconsistent configuration.
void validate_config(const ExperimentConfig& config);

struct ResultRow {
    std::string experiment;
    std::string algorithm;
    std::string scheme;
    std::size_t budget = 0;
    std::size_t trial = 0;
    double q_error = 0.0;
    double wall_ms = 0.0;
    std::size_t samples_used = 0;
    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr const char* kResultHeader = "experiment,algorithm,scheme,budget,trial,q_error,wall_ms,samples_used";

std::string format_row(const ResultRow& row);
/// Parses a results CSV. A trailing line without a newline is ignored, as
/// left by an interrupted run. Malformed rows raise ParseError.
std::vector<ResultRow> read_results(std::istream& in);
std::vector<ResultRow> load_results(const std::string& path);

/// Ground truth shared by every cell of one experiment.
struct Environment {
    std::shared_ptr<const GenerativeModel> model;
    std::shared_ptr<const WindStorageEnv> wind;
    std::vector<NamedScheme> schemes;
    QFunction oracle;

    const FactorizationScheme& scheme(const std::string& name) const;
};

Environment build_environment(const ExperimentConfig& config);

/// Seed of (budget, trial); shared by every algorithm and scheme.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t budget, std::size_t trial) noexcept;

/// Reward queries estimate_rewards will make.
std::size_t reward_query_count(const GenerativeModel& env, const FactorizationScheme& scheme);

struct MbAllocation {
    std::size_t replicates = 0;
    std::size_t samples = 0;
};

/// N = floor((budget - reward_queries) / n_entry). Throws ConfigError naming
/// the minimum feasible budget when N would be 0.
MbAllocation allocate_model_based(std::size_t budget, std::size_t n_entry, std::size_t reward_queries);

struct MfAllocation {
    std::size_t epochs = 0;
    std::size_t inner = 0;
    std::vector<std::size_t> reference_sizes;
    std::size_t samples = 0;
};

/// Fits `base` into the budget: keeps at most floor(U / 2) epochs for U
/// affordable tables, scales M and every N_tau by one factor (at least 1
/// each) and gives the remaining tables to M.
MfAllocation allocate_model_free(std::size_t budget, std::size_t n_entry, std::size_t reward_queries,
                                 const EpochSchedule& base);

struct CellOutcome {
    QFunction q;
    /// Queries counted at the environment.
    std::size_t samples = 0;
};

CellOutcome run_cell(const Environment& env, const ExperimentConfig& config, Algorithm algorithm,
                     const FactorizationScheme& scheme, std::size_t budget, std::uint64_t seed);

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::vector<std::string> files;
};

/// Runs every (algorithm, scheme, budget, trial) cell not already present in
/// <output>/results.csv and writes results, summary and plot data. Output
/// bytes depend only on the configuration.
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// summary.csv: median and quartiles per (experiment, algorithm, scheme, budget).
void write_summary(std::ostream& out, const std::vector<ResultRow>& rows);

/// One whitespace-separated file per (experiment, algorithm, scheme) with
/// columns `budget median q1 q3`, named plot_<experiment>_<algorithm>_<scheme>.dat.
/// An empty result set yields a single header-only plotdata.dat.
std::vector<std::string> emit_plotdata(const std::string& csv_path, const std::string& out_dir);

}  // namespace afmdp
