#include "afmdp/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "afmdp/errors.hpp"
#include "afmdp/mdp_io.hpp"
#include "afmdp/model_based.hpp"
#include "afmdp/stats.hpp"

namespace afmdp {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPolicyHeader = "algorithm,scheme,budget,trial,mean_penalty,std_error";
// Stream tag for policy rollouts, distinct from every (budget, trial) pair.
constexpr std::uint64_t kEvaluationTag = 0x65'76'61'6c;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    auto res = std::from_chars(text.data(), end, v);
    if (res.ec == std::errc() && res.ptr == end && !text.empty()) return v;
    // Accept integral scientific notation such as 1e5.
    double d = 0.0;
    auto dres = std::from_chars(text.data(), end, d);
    if (dres.ec == std::errc() && dres.ptr == end && d >= 0.0 && d < 1.8e19 && std::floor(d) == d) {
        return static_cast<std::size_t>(d);
    }
    throw ConfigError("'" + key + "': expected a nonnegative integer, got '" + text + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || text.empty()) {
        throw ConfigError("'" + key + "': expected an unsigned integer, got '" + text + "'");
    }
    return v;
}

double parse_real(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || text.empty() || !std::isfinite(v)) {
        throw ConfigError("'" + key + "': expected a real number, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (base_dir.empty() || path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    }
    return out;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << contents;
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

struct Cell {
    Algorithm algorithm;
    std::string scheme;
    std::size_t budget;
    std::size_t trial;
};

using CellKey = std::tuple<std::string, std::string, std::size_t, std::size_t>;

CellKey key_of(const ResultRow& r) { return {r.algorithm, r.scheme, r.budget, r.trial}; }
CellKey key_of(const Cell& c) { return {to_string(c.algorithm), c.scheme, c.budget, c.trial}; }

std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
    std::vector<Cell> cells;
    for (Algorithm a : config.algorithms) {
        const std::vector<std::string> schemes = is_vanilla(a) ? std::vector<std::string>{"trivial"} : config.schemes;
        for (const auto& s : schemes) {
            for (std::size_t b : config.budgets) {
                for (std::size_t t = 0; t < config.trials; ++t) cells.push_back({a, s, b, t});
            }
        }
    }
    return cells;
}

struct PolicyRow {
    std::string algorithm;
    std::string scheme;
    std::size_t budget = 0;
    std::size_t trial = 0;
    double mean_penalty = 0.0;
    double std_error = 0.0;
};

std::string format_policy_row(const PolicyRow& r) {
    return r.algorithm + ',' + r.scheme + ',' + std::to_string(r.budget) + ',' + std::to_string(r.trial) + ',' +
           format_real(r.mean_penalty) + ',' + format_real(r.std_error);
}

std::vector<PolicyRow> load_policy_rows(const fs::path& path) {
    std::vector<PolicyRow> rows;
    std::ifstream in(path, std::ios::binary);
    if (!in) return rows;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::istringstream lines(text);
    std::string line;
    bool header = true;
    std::size_t consumed = 0;
    while (std::getline(lines, line)) {
        consumed += line.size() + 1;
        if (consumed > text.size()) break;  // unterminated final line
        if (header) {
            header = false;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 6) throw ParseError("malformed policy row '" + line + "'");
        rows.push_back({f[0], f[1], parse_count("budget", f[2]), parse_count("trial", f[3]),
                        parse_real("mean_penalty", f[4]), parse_real("std_error", f[5])});
    }
    return rows;
}

std::vector<NamedScheme> wind_schemes(const FactoredSpace& space) {
    return {{"af", WindStorageEnv::factored_scheme()},
            {"soc-action", WindStorageEnv::soc_action_scheme()},
            {"trivial", trivial_scheme(space)}};
}

struct SchemeFamily {
    std::string name;
    FactoredSpace space;
    std::vector<NamedScheme> schemes;
};

// Schemes of every built-in environment, for the coloring and bound reports.
std::vector<SchemeFamily> scheme_families(const ExperimentConfig& config) {
    std::vector<SchemeFamily> families;
    SyntheticSpec perfect = default_config(ExperimentId::synthetic_perfect).synthetic;
    perfect.seed = config.synthetic.seed;
    const auto p = gen_perfect_mdp(perfect);
    families.push_back({"synthetic-perfect", p.mdp->space(), p.schemes});

    SyntheticSpec imperfect = default_config(ExperimentId::synthetic_imperfect).synthetic;
    imperfect.seed = config.synthetic.seed;
    imperfect.coupling = 0.0;  // schemes do not depend on the coupled kernel
    const auto q = gen_imperfect_mdp(imperfect);
    families.push_back({"synthetic-imperfect", q.mdp->space(), q.schemes});

    const FactoredSpace wind_space = WindStorageEnv::space_for(WindFarmSpec{});
    families.push_back({"windfarm", wind_space, wind_schemes(wind_space)});
    return families;
}

std::string join_members(const std::vector<std::size_t>& members) {
    std::string s;
    for (std::size_t i = 0; i < members.size(); ++i) s += (i ? ";" : "") + std::to_string(members[i]);
    return s;
}

ExperimentOutput run_coloring_report(const ExperimentConfig& config) {
    fs::create_directories(config.output);
    std::ostringstream out;
    out << "family,scheme,method,group,members,dmax,n_entry\n";
    for (const auto& family : scheme_families(config)) {
        for (const auto& named : family.schemes) {
            const auto reduction = reduce_inclusive(named.scheme);
            const auto graph = build_conflict_graph(named.scheme, reduction, family.space);
            const std::pair<const char*, GroupingPlan> plans[] = {
                {"exact", color(graph, ColoringMethod::automatic)}, {"greedy", color_greedy(graph)}};
            for (const auto& [method, plan] : plans) {
                for (std::size_t g = 0; g < plan.groups.size(); ++g) {
                    out << family.name << ',' << named.name << ',' << method << ',' << g << ','
                        << join_members(plan.groups[g]) << ',' << plan.dmax[g] << ',' << plan.total_cost() << '\n';
                }
            }
        }
    }
    const fs::path path = fs::path(config.output) / "coloring.csv";
    write_file_atomic(path, out.str());
    return {{}, {path.string()}};
}

ExperimentOutput run_bound_report(const ExperimentConfig& config) {
    fs::create_directories(config.output);
    std::ostringstream out;
    out << "family,scheme,eps,delta,gamma,transition_cost,reward_cost,union_size,transition_term,reward_term,total\n";
    const double gamma = config.synthetic.gamma;
    for (const auto& family : scheme_families(config)) {
        for (const auto& named : family.schemes) {
            for (double eps : config.eps_grid) {
                const auto b = sample_bound(named.scheme, family.space, eps, config.delta, gamma);
                out << family.name << ',' << named.name << ',' << format_real(eps) << ',' << format_real(config.delta)
                    << ',' << format_real(gamma) << ',' << b.transition_cost << ',' << b.reward_cost << ','
                    << b.union_size << ',' << format_real(b.transition_term) << ',' << format_real(b.reward_term)
                    << ',' << format_real(b.total) << '\n';
            }
        }
    }
    const fs::path path = fs::path(config.output) / "bound.csv";
    write_file_atomic(path, out.str());
    return {{}, {path.string()}};
}

}  // namespace

std::string to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::synthetic_perfect: return "synthetic-perfect";
        case ExperimentId::synthetic_imperfect: return "synthetic-imperfect";
        case ExperimentId::windfarm: return "windfarm";
        case ExperimentId::coloring: return "coloring";
        case ExperimentId::bound: return "bound";
    }
    return "unknown";
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::mb_af: return "mb-af";
        case Algorithm::mb_vanilla: return "mb-vanilla";
        case Algorithm::vrql_af: return "vrql-af";
        case Algorithm::vrql_vanilla: return "vrql-vanilla";
    }
    return "unknown";
}

ExperimentId parse_experiment_id(const std::string& text) {
    for (auto id : {ExperimentId::synthetic_perfect, ExperimentId::synthetic_imperfect, ExperimentId::windfarm,
                    ExperimentId::coloring, ExperimentId::bound}) {
        if (to_string(id) == text) return id;
    }
    throw ConfigError("unknown experiment '" + text + "'");
}

Algorithm parse_algorithm(const std::string& text) {
    for (auto a : {Algorithm::mb_af, Algorithm::mb_vanilla, Algorithm::vrql_af, Algorithm::vrql_vanilla}) {
        if (to_string(a) == text) return a;
    }
    throw ConfigError("unknown algorithm '" + text + "'");
}

bool is_vanilla(Algorithm a) noexcept { return a == Algorithm::mb_vanilla || a == Algorithm::vrql_vanilla; }
bool is_model_based(Algorithm a) noexcept { return a == Algorithm::mb_af || a == Algorithm::mb_vanilla; }

ExperimentConfig default_config(ExperimentId id) {
    ExperimentConfig c;
    c.experiment = id;
    c.synthetic.seed = 1;
    switch (id) {
        case ExperimentId::synthetic_perfect:
            c.trials = 50;
            c.budgets = {10000, 17783, 31623, 56234, 100000};
            c.algorithms = {Algorithm::mb_af, Algorithm::mb_vanilla, Algorithm::vrql_af, Algorithm::vrql_vanilla};
            c.schemes = {"af"};
            c.synthetic.n_sub = 3;
            break;
        case ExperimentId::synthetic_imperfect:
            c.trials = 100;
            c.budgets = {10000, 40000, 160000, 640000, 2560000};
            c.algorithms = {Algorithm::mb_af};
            c.schemes = {"K4", "K2", "K1"};
            c.synthetic.n_sub = 4;
            c.synthetic.action_size = 2;
            c.synthetic.coupling = 0.15;
            break;
        case ExperimentId::windfarm:
            c.trials = 1;
            c.budgets = {60000};
            c.algorithms = {Algorithm::mb_af, Algorithm::mb_vanilla};
            c.schemes = {"af"};
            break;
        case ExperimentId::coloring:
        case ExperimentId::bound:
            c.trials = 1;
            break;
    }
    return c;
}

ExperimentConfig parse_config(std::istream& in, const std::string& base_dir) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        entries.emplace_back(std::move(key), trim(line.substr(eq + 1)));
    }

    ExperimentId id = ExperimentId::synthetic_perfect;
    for (const auto& [k, v] : entries) {
        if (k == "experiment") id = parse_experiment_id(v);
    }
    ExperimentConfig c = default_config(id);

    for (const auto& [k, v] : entries) {
        if (k == "experiment") continue;
        if (k == "trials") c.trials = parse_count(k, v);
        else if (k == "budgets") {
            c.budgets.clear();
            for (const auto& item : split(v, ',')) c.budgets.push_back(parse_count(k, item));
        } else if (k == "algorithms") {
            c.algorithms.clear();
            for (const auto& item : split(v, ',')) c.algorithms.push_back(parse_algorithm(item));
        } else if (k == "schemes") {
            c.schemes = split(v, ',');
        } else if (k == "master_seed" || k == "seed") c.master_seed = parse_u64(k, v);
        else if (k == "output") c.output = resolve(base_dir, v);
        else if (k == "env_seed") c.synthetic.seed = parse_u64(k, v);
        else if (k == "n_sub") c.synthetic.n_sub = parse_count(k, v);
        else if (k == "sub_size") c.synthetic.sub_size = parse_count(k, v);
        else if (k == "action_size") c.synthetic.action_size = parse_count(k, v);
        else if (k == "coupling") c.synthetic.coupling = parse_real(k, v);
        else if (k == "concentration") c.synthetic.concentration = parse_real(k, v);
        else if (k == "gamma") c.synthetic.gamma = parse_real(k, v);
        else if (k == "price_csv") c.price_csv = resolve(base_dir, v);
        else if (k == "mismatch_csv") c.mismatch_csv = resolve(base_dir, v);
        else if (k == "mb_iterations") c.mb_iterations = parse_count(k, v);
        else if (k == "mb_eps") c.mb_eps = parse_real(k, v);
        else if (k == "mf_eps") c.mf_eps = parse_real(k, v);
        else if (k == "mf_delta") c.mf_delta = parse_real(k, v);
        else if (k == "c1") c.constants.c1 = parse_real(k, v);
        else if (k == "c2") c.constants.c2 = parse_real(k, v);
        else if (k == "c3") c.constants.c3 = parse_real(k, v);
        else if (k == "horizon") c.horizon = parse_count(k, v);
        else if (k == "episodes") c.episodes = parse_count(k, v);
        else if (k == "eps_grid") {
            c.eps_grid.clear();
            for (const auto& item : split(v, ',')) c.eps_grid.push_back(parse_real(k, item));
        } else if (k == "delta") c.delta = parse_real(k, v);
        else if (k == "threads") c.threads = parse_count(k, v);
        else if (k == "timing") c.timing = parse_bool(k, v);
        else throw ConfigError("unknown key '" + k + "'");
    }
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in, fs::path(path).parent_path().string());
}

void validate_config(const ExperimentConfig& c) {
    if (c.trials < 1) throw ConfigError("trials must be at least 1");
    if (c.threads < 1) throw ConfigError("threads must be at least 1");
    for (std::size_t i = 1; i < c.budgets.size(); ++i) {
        if (c.budgets[i] <= c.budgets[i - 1]) throw ConfigError("budgets must be strictly increasing");
    }
    const bool learning = c.experiment == ExperimentId::synthetic_perfect ||
                          c.experiment == ExperimentId::synthetic_imperfect ||
                          c.experiment == ExperimentId::windfarm;
    if (learning) {
        if (c.budgets.empty()) throw ConfigError("no budgets given");
        if (c.algorithms.empty()) throw ConfigError("no algorithms given");
        for (Algorithm a : c.algorithms) {
            if (!is_vanilla(a) && c.schemes.empty()) throw ConfigError("factored algorithms need at least one scheme");
        }
        if (c.horizon < 1 || c.episodes < 1) throw ConfigError("horizon and episodes must be at least 1");
    }
    if (!(c.synthetic.gamma > 0.0 && c.synthetic.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(c.mb_eps > 0.0 && c.mb_eps < 1.0)) throw ConfigError("mb_eps must lie in (0, 1)");
    if (!(c.mf_eps > 0.0)) throw ConfigError("mf_eps must be positive");
    if (!(c.mf_delta > 0.0 && c.mf_delta < 1.0)) throw ConfigError("mf_delta must lie in (0, 1)");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    for (double e : c.eps_grid) {
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("eps_grid values must lie in (0, 1)");
    }
}

std::string format_row(const ResultRow& r) {
    return r.experiment + ',' + r.algorithm + ',' + r.scheme + ',' + std::to_string(r.budget) + ',' +
           std::to_string(r.trial) + ',' + format_real(r.q_error) + ',' + format_real(r.wall_ms) + ',' +
           std::to_string(r.samples_used);
}

std::vector<ResultRow> read_results(std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<ResultRow> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header = true;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // interrupted final line
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header) {
            if (line != kResultHeader) throw ParseError("line 1: unexpected header '" + line + "'");
            header = false;
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 8) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 8 fields, found " +
                             std::to_string(f.size()));
        }
        try {
            ResultRow r;
            r.experiment = f[0];
            r.algorithm = f[1];
            r.scheme = f[2];
            r.budget = parse_count("budget", f[3]);
            r.trial = parse_count("trial", f[4]);
            r.q_error = parse_real("q_error", f[5]);
            r.wall_ms = parse_real("wall_ms", f[6]);
            r.samples_used = parse_count("samples_used", f[7]);
            rows.push_back(std::move(r));
        } catch (const ConfigError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<ResultRow> load_results(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_results(in);
}

const FactorizationScheme& Environment::scheme(const std::string& name) const {
    for (const auto& s : schemes) {
        if (s.name == name) return s.scheme;
    }
    throw ConfigError("unknown scheme '" + name + "' for this experiment");
}

Environment build_environment(const ExperimentConfig& config) {
    Environment env;
    switch (config.experiment) {
        case ExperimentId::synthetic_perfect:
        case ExperimentId::synthetic_imperfect: {
            const auto inst = config.experiment == ExperimentId::synthetic_perfect
                                  ? gen_perfect_mdp(config.synthetic)
                                  : gen_imperfect_mdp(config.synthetic);
            env.model = std::make_shared<TabularGenerativeModel>(inst.mdp, inst.native_reward, inst.native_local);
            env.schemes = inst.schemes;
            env.oracle = exact_value_iteration(*inst.mdp, 1e-10);
            break;
        }
        case ExperimentId::windfarm: {
            const auto price = load_series_csv(config.price_csv);
            const auto mismatch = load_series_csv(config.mismatch_csv);
            WindFarmSpec spec = wind_spec_from_series(price, mismatch);
            spec.gamma = config.synthetic.gamma;
            auto wind = std::make_shared<WindStorageEnv>(std::move(spec));
            env.schemes = wind_schemes(wind->space());
            env.oracle = wind->optimal_q(1e-10);
            env.wind = wind;
            env.model = wind;
            break;
        }
        case ExperimentId::coloring:
        case ExperimentId::bound:
            throw ConfigError("experiment '" + to_string(config.experiment) + "' has no learning environment");
    }
    // Vanilla algorithms always look up "trivial".
    const bool has_trivial = std::any_of(env.schemes.begin(), env.schemes.end(),
                                         [](const NamedScheme& s) { return s.name == "trivial"; });
    if (!has_trivial) env.schemes.push_back({"trivial", trivial_scheme(env.model->space())});
    return env;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t budget, std::size_t trial) noexcept {
    return derive_seed(master_seed, {budget, trial});
}

std::size_t reward_query_count(const GenerativeModel& env, const FactorizationScheme& scheme) {
    const auto& scopes = scheme.reward.scopes;
    std::size_t total = 0;
    for (const auto& scope : scopes) total += ScopeCodec(env.space(), scope).size();
    const RewardScheme* native = env.native_reward_scheme();
    if (native && native->scopes == scopes) return total;
    return total + (scopes.size() > 1 ? 1 : 0);
}

MbAllocation allocate_model_based(std::size_t budget, std::size_t n_entry, std::size_t reward_queries) {
    if (n_entry == 0) throw DomainError("sampling plan has no entries");
    const std::size_t minimum = n_entry + reward_queries;
    if (budget < minimum) {
        throw ConfigError("budget " + std::to_string(budget) + " is below the minimum feasible budget " +
                          std::to_string(minimum));
    }
    MbAllocation a;
    a.replicates = (budget - reward_queries) / n_entry;
    a.samples = a.replicates * n_entry + reward_queries;
    return a;
}

MfAllocation allocate_model_free(std::size_t budget, std::size_t n_entry, std::size_t reward_queries,
                                 const EpochSchedule& base) {
    if (n_entry == 0) throw DomainError("sampling plan has no entries");
    const std::size_t minimum = 2 * n_entry + reward_queries;
    if (budget < minimum) {
        throw ConfigError("budget " + std::to_string(budget) + " is below the minimum feasible budget " +
                          std::to_string(minimum));
    }
    const std::size_t tables = (budget - reward_queries) / n_entry;

    MfAllocation a;
    a.epochs = std::max<std::size_t>(1, std::min(base.epochs, tables / 2));
    double wanted = static_cast<double>(a.epochs * base.inner);
    for (std::size_t tau = 1; tau <= a.epochs; ++tau) wanted += static_cast<double>(base.reference_size(tau));
    const double scale = std::min(1.0, static_cast<double>(tables) / wanted);

    auto scaled = [&](std::size_t n) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(scale * static_cast<double>(n))));
    };
    a.inner = scaled(base.inner);
    for (std::size_t tau = 1; tau <= a.epochs; ++tau) a.reference_sizes.push_back(scaled(base.reference_size(tau)));

    auto used = [&] {
        std::size_t u = a.epochs * a.inner;
        for (std::size_t n : a.reference_sizes) u += n;
        return u;
    };
    // The floor at 1 can overshoot; trim the largest reference size first.
    while (used() > tables) {
        auto it = std::max_element(a.reference_sizes.begin(), a.reference_sizes.end());
        if (*it > 1) --*it;
        else --a.inner;
    }
    if (scale < 1.0) a.inner += (tables - used()) / a.epochs;
    a.samples = vrql_sample_count(n_entry, reward_queries, a.inner, a.reference_sizes);
    return a;
}

CellOutcome run_cell(const Environment& env, const ExperimentConfig& config, Algorithm algorithm,
                     const FactorizationScheme& scheme, std::size_t budget, std::uint64_t seed) {
    const auto& model = *env.model;
    const auto& space = model.space();
    const CountingGenerativeModel counted(model);
    const SamplingPlan plan = plan_sampling(scheme, space);
    const std::size_t n_entry = plan.n_entry();
    const std::size_t reward_queries = reward_query_count(model, scheme);

    CellOutcome out;
    std::size_t ledger = 0;
    if (is_model_based(algorithm)) {
        const auto alloc = allocate_model_based(budget, n_entry, reward_queries);
        MbqviConfig cfg;
        cfg.scheme = scheme;
        cfg.replicates = alloc.replicates;
        const double gamma = model.discount();
        cfg.iterations = config.mb_iterations > 0 ? config.mb_iterations
                                                  : required_iterations(config.mb_eps, gamma, 1.0 / (1.0 - gamma));
        cfg.seed = seed;
        out.q = mbqvi(counted, cfg).q;
        ledger = alloc.samples;
    } else {
        const auto base = epoch_schedule(config.mf_eps, config.mf_delta, model.discount(), scheme, space,
                                         config.constants);
        const auto alloc = allocate_model_free(budget, n_entry, reward_queries, base);
        VrqlConfig cfg;
        cfg.scheme = scheme;
        cfg.epochs = alloc.epochs;
        cfg.inner = alloc.inner;
        cfg.reference_sizes = alloc.reference_sizes;
        cfg.seed = seed;
        out.q = vrql_af(counted, cfg).q;
        ledger = alloc.samples;
    }
    out.samples = static_cast<std::size_t>(counted.total_queries());
    if (out.samples != ledger || out.samples > budget) {
        throw Error("sample ledger mismatch: counted " + std::to_string(out.samples) + ", planned " +
                    std::to_string(ledger) + ", budget " + std::to_string(budget));
    }
    return out;
}

void write_summary(std::ostream& out, const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, std::string, std::string, std::size_t>;
    std::vector<Key> order;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : rows) {
        Key k{r.experiment, r.algorithm, r.scheme, r.budget};
        auto [it, inserted] = groups.try_emplace(k);
        if (inserted) order.push_back(k);
        it->second.push_back(r.q_error);
    }
    out << "experiment,algorithm,scheme,budget,trials,median,q1,q3\n";
    for (const auto& k : order) {
        const auto s = summarize(groups[k]);
        out << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << std::get<3>(k) << ','
            << s.count << ',' << format_real(s.median) << ',' << format_real(s.q1) << ',' << format_real(s.q3)
            << '\n';
    }
}

std::vector<std::string> emit_plotdata(const std::string& csv_path, const std::string& out_dir) {
    const auto rows = load_results(csv_path);
    fs::create_directories(out_dir);
    constexpr const char* header = "# budget median q1 q3\n";
    std::vector<std::string> files;
    if (rows.empty()) {
        const fs::path path = fs::path(out_dir) / "plotdata.dat";
        write_file_atomic(path, header);
        files.push_back(path.string());
        return files;
    }
    using Curve = std::tuple<std::string, std::string, std::string>;
    std::vector<Curve> order;
    std::map<Curve, std::map<std::size_t, std::vector<double>>> curves;
    for (const auto& r : rows) {
        Curve c{r.experiment, r.algorithm, r.scheme};
        auto [it, inserted] = curves.try_emplace(c);
        if (inserted) order.push_back(c);
        it->second[r.budget].push_back(r.q_error);
    }
    for (const auto& c : order) {
        std::ostringstream out;
        out << header;
        for (const auto& [budget, values] : curves[c]) {
            const auto s = summarize(values);
            out << budget << ' ' << format_real(s.median) << ' ' << format_real(s.q1) << ' ' << format_real(s.q3)
                << '\n';
        }
        const fs::path path = fs::path(out_dir) / ("plot_" + sanitize(std::get<0>(c)) + "_" + sanitize(std::get<1>(c)) +
                                                   "_" + sanitize(std::get<2>(c)) + ".dat");
        write_file_atomic(path, out.str());
        files.push_back(path.string());
    }
    return files;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    if (config.experiment == ExperimentId::coloring) return run_coloring_report(config);
    if (config.experiment == ExperimentId::bound) return run_bound_report(config);

    const Environment env = build_environment(config);
    const auto cells = enumerate_cells(config);
    const std::string experiment = to_string(config.experiment);
    const bool wind = config.experiment == ExperimentId::windfarm;

    // Fail on infeasible budgets before any work is done.
    for (Algorithm a : config.algorithms) {
        const std::vector<std::string> names = is_vanilla(a) ? std::vector<std::string>{"trivial"} : config.schemes;
        for (const auto& name : names) {
            const auto& scheme = env.scheme(name);
            const std::size_t n_entry = plan_sampling(scheme, env.model->space()).n_entry();
            const std::size_t r = reward_query_count(*env.model, scheme);
            if (is_model_based(a)) allocate_model_based(config.budgets.front(), n_entry, r);
            else allocate_model_free(config.budgets.front(), n_entry, r, EpochSchedule{1, 1, {1}});
        }
    }

    const fs::path dir(config.output);
    fs::create_directories(dir);
    const fs::path results_path = dir / "results.csv";
    const fs::path policy_path = dir / "policy_eval.csv";

    std::map<CellKey, ResultRow> done;
    if (fs::exists(results_path)) {
        std::set<CellKey> planned;
        for (const auto& c : cells) planned.insert(key_of(c));
        for (auto& r : load_results(results_path.string())) {
            if (r.experiment != experiment || !planned.count(key_of(r))) {
                throw ConfigError("existing " + results_path.string() + " does not match this configuration");
            }
            done.emplace(key_of(r), std::move(r));
        }
    }
    std::map<CellKey, PolicyRow> policy_done;
    if (wind) {
        for (auto& p : load_policy_rows(policy_path)) {
            CellKey k{p.algorithm, p.scheme, p.budget, p.trial};
            if (done.count(k)) policy_done.emplace(k, std::move(p));
        }
    }

    // Rewrite the completed prefix so appends continue from a clean file.
    auto rewrite = [&] {
        std::ostringstream res;
        res << kResultHeader << '\n';
        std::ostringstream pol;
        pol << kPolicyHeader << '\n';
        for (const auto& c : cells) {
            const auto k = key_of(c);
            if (auto it = done.find(k); it != done.end()) res << format_row(it->second) << '\n';
            if (auto it = policy_done.find(k); it != policy_done.end()) pol << format_policy_row(it->second) << '\n';
        }
        write_file_atomic(results_path, res.str());
        if (wind) write_file_atomic(policy_path, pol.str());
    };
    rewrite();

    std::vector<const Cell*> pending;
    for (const auto& c : cells) {
        if (!done.count(key_of(c))) pending.push_back(&c);
    }

    const std::uint64_t eval_seed = derive_seed(config.master_seed, {kEvaluationTag});
    struct Computed {
        ResultRow row;
        PolicyRow policy;
    };
    auto compute = [&](const Cell& c) {
        const auto start = std::chrono::steady_clock::now();
        const auto& scheme = is_vanilla(c.algorithm) ? env.scheme("trivial") : env.scheme(c.scheme);
        const auto outcome =
            run_cell(env, config, c.algorithm, scheme, c.budget, trial_seed(config.master_seed, c.budget, c.trial));
        Computed out;
        out.row.experiment = experiment;
        out.row.algorithm = to_string(c.algorithm);
        out.row.scheme = c.scheme;
        out.row.budget = c.budget;
        out.row.trial = c.trial;
        out.row.q_error = q_error(outcome.q, env.oracle);
        out.row.samples_used = outcome.samples;
        if (wind) {
            const auto eval = evaluate_policy(*env.wind, greedy_policy(outcome.q, env.model->space()), config.horizon,
                                              config.episodes, eval_seed);
            out.policy = {out.row.algorithm, c.scheme, c.budget, c.trial, eval.mean_penalty, eval.std_error};
        }
        if (config.timing) {
            out.row.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        return out;
    };

    std::ofstream results_out(results_path, std::ios::binary | std::ios::app);
    std::ofstream policy_out;
    if (wind) policy_out.open(policy_path, std::ios::binary | std::ios::app);
    auto commit = [&](const Cell& c, Computed&& computed) {
        const auto k = key_of(c);
        // The policy row goes first: a results row marks the cell complete.
        if (wind) {
            policy_out << format_policy_row(computed.policy) << '\n' << std::flush;
            policy_done.emplace(k, computed.policy);
        }
        results_out << format_row(computed.row) << '\n' << std::flush;
        done.emplace(k, std::move(computed.row));
    };

    for (std::size_t i = 0; i < pending.size(); i += config.threads) {
        const std::size_t end = std::min(pending.size(), i + config.threads);
        if (end - i == 1) {
            commit(*pending[i], compute(*pending[i]));
            continue;
        }
        std::vector<std::future<Computed>> futures;
        for (std::size_t j = i; j < end; ++j) {
            futures.push_back(std::async(std::launch::async, compute, std::cref(*pending[j])));
        }
        for (std::size_t j = i; j < end; ++j) commit(*pending[j], futures[j - i].get());
    }
    results_out.close();
    if (policy_out.is_open()) policy_out.close();
    rewrite();

    ExperimentOutput output;
    for (const auto& c : cells) output.rows.push_back(done.at(key_of(c)));
    output.files.push_back(results_path.string());

    std::ostringstream summary;
    write_summary(summary, output.rows);
    write_file_atomic(dir / "summary.csv", summary.str());
    output.files.push_back((dir / "summary.csv").string());

    if (wind) {
        output.files.push_back(policy_path.string());
        const auto& space = env.model->space();
        const auto& fractions = env.wind->spec().action_fractions;
        std::ostringstream base;
        base << "policy,mean_penalty,std_error\n";
        const auto oracle = evaluate_policy(*env.wind, greedy_policy(env.oracle, space), config.horizon,
                                            config.episodes, eval_seed);
        base << "oracle," << format_real(oracle.mean_penalty) << ',' << format_real(oracle.std_error) << '\n';
        const auto idle = std::find(fractions.begin(), fractions.end(), 0.0);
        if (idle != fractions.end()) {
            const Policy p{std::vector<std::size_t>(space.num_states(),
                                                    static_cast<std::size_t>(idle - fractions.begin()))};
            const auto e = evaluate_policy(*env.wind, p, config.horizon, config.episodes, eval_seed);
            base << "idle," << format_real(e.mean_penalty) << ',' << format_real(e.std_error) << '\n';
        }
        write_file_atomic(dir / "policy_baselines.csv", base.str());
        output.files.push_back((dir / "policy_baselines.csv").string());
    }

    for (auto& f : emit_plotdata(results_path.string(), (dir / "plot").string())) output.files.push_back(std::move(f));
    return output;
}

}  // namespace afmdp
