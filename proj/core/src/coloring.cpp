#include "afmdp/coloring.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "afmdp/errors.hpp"

namespace afmdp {

InclusiveReduction reduce_inclusive(const std::vector<Scope>& scopes) {
    const std::size_t K = scopes.size();
    InclusiveReduction out;
    out.cover.assign(K, std::nullopt);
    std::vector<bool> dropped(K, false);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < K && !dropped[k]; ++j) {
            if (j == k) continue;
            const bool strict = scopes[k] != scopes[j] && is_subset(scopes[k], scopes[j]);
            const bool earlier_duplicate = j < k && scopes[k] == scopes[j];
            dropped[k] = strict || earlier_duplicate;
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (!dropped[k]) out.survivors.push_back(k);
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (!dropped[k]) continue;
        // A maximal superset always survives, so a cover exists.
        for (std::size_t s : out.survivors) {
            if (is_subset(scopes[k], scopes[s])) {
                out.cover[k] = s;
                break;
            }
        }
    }
    return out;
}

InclusiveReduction reduce_inclusive(const FactorizationScheme& scheme) {
    return reduce_inclusive(scheme.transition.input_scopes);
}

ConflictGraph::ConflictGraph(std::vector<std::size_t> costs,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges)
    : costs_(std::move(costs)) {
    vertices_.resize(costs_.size());
    std::iota(vertices_.begin(), vertices_.end(), 0);
    adjacency_.assign(costs_.size() * costs_.size(), false);
    for (auto [i, j] : edges) {
        if (i >= costs_.size() || j >= costs_.size()) throw IndexError("edge endpoint out of range");
        if (i == j) throw DomainError("conflict graphs have no self-edges");
        add_edge(std::min(i, j), std::max(i, j));
    }
    std::sort(edges_.begin(), edges_.end());
}

void ConflictGraph::add_edge(std::size_t i, std::size_t j) {
    const std::size_t n = vertices_.size();
    if (adjacency_[i * n + j]) return;
    adjacency_[i * n + j] = adjacency_[j * n + i] = true;
    edges_.emplace_back(i, j);
}

std::string ConflictGraph::to_dot() const {
    std::ostringstream out;
    out << "graph conflict {\n";
    for (std::size_t v = 0; v < size(); ++v) {
        out << "  c" << vertices_[v] << " [label=\"" << vertices_[v] << " (" << costs_[v] << ")\"];\n";
    }
    for (auto [i, j] : edges_) out << "  c" << vertices_[i] << " -- c" << vertices_[j] << ";\n";
    out << "}\n";
    return out.str();
}

ConflictGraph build_conflict_graph(const std::vector<Scope>& scopes, const std::vector<std::size_t>& survivors,
                                   const FactoredSpace& space) {
    ConflictGraph g;
    g.vertices_ = survivors;
    const std::size_t n = survivors.size();
    g.adjacency_.assign(n * n, false);
    for (std::size_t k : survivors) {
        if (k >= scopes.size()) throw IndexError("survivor " + std::to_string(k) + " out of range");
        g.costs_.push_back(ScopeCodec(space, scopes[k]).size());
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (intersects(scopes[survivors[i]], scopes[survivors[j]])) g.add_edge(i, j);
        }
    }
    return g;
}

ConflictGraph build_conflict_graph(const FactorizationScheme& scheme, const InclusiveReduction& reduction,
                                   const FactoredSpace& space) {
    return build_conflict_graph(scheme.transition.input_scopes, reduction.survivors, space);
}

std::size_t GroupingPlan::total_cost() const noexcept {
    return std::accumulate(dmax.begin(), dmax.end(), std::size_t{0});
}

namespace {

GroupingPlan plan_from_assignment(const ConflictGraph& graph, const std::vector<std::size_t>& group_of,
                                  std::size_t num_groups) {
    GroupingPlan plan;
    plan.groups.assign(num_groups, {});
    plan.dmax.assign(num_groups, 0);
    for (std::size_t v = 0; v < graph.size(); ++v) {
        const std::size_t g = group_of[v];
        plan.groups[g].push_back(graph.vertices()[v]);
        plan.dmax[g] = std::max(plan.dmax[g], graph.costs()[v]);
    }
    for (auto& members : plan.groups) std::sort(members.begin(), members.end());
    return plan;
}

class PartitionSearch {
public:
    explicit PartitionSearch(const ConflictGraph& graph) : graph_(graph), n_(graph.size()) {
        adjacent_mask_.assign(n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (graph.adjacent(i, j)) adjacent_mask_[i] |= std::uint32_t{1} << j;
            }
        }
        group_of_.assign(n_, 0);
    }

    GroupingPlan run() {
        if (n_ == 0) return {};
        descend(0, 0);
        return plan_from_assignment(graph_, best_group_of_, best_groups_);
    }

private:
    void descend(std::size_t v, std::size_t cost) {
        if (cost >= best_cost_) return;
        if (v == n_) {
            best_cost_ = cost;
            best_group_of_ = group_of_;
            best_groups_ = masks_.size();
            return;
        }
        const std::size_t c = graph_.costs()[v];
        for (std::size_t g = 0; g < masks_.size(); ++g) {
            if (masks_[g] & adjacent_mask_[v]) continue;
            const std::size_t old_dmax = dmax_[g];
            const std::size_t new_dmax = std::max(old_dmax, c);
            masks_[g] |= std::uint32_t{1} << v;
            dmax_[g] = new_dmax;
            group_of_[v] = g;
            descend(v + 1, cost - old_dmax + new_dmax);
            masks_[g] &= ~(std::uint32_t{1} << v);
            dmax_[g] = old_dmax;
        }
        masks_.push_back(std::uint32_t{1} << v);
        dmax_.push_back(c);
        group_of_[v] = masks_.size() - 1;
        descend(v + 1, cost + c);
        masks_.pop_back();
        dmax_.pop_back();
    }

    const ConflictGraph& graph_;
    std::size_t n_;
    std::vector<std::uint32_t> adjacent_mask_;
    std::vector<std::uint32_t> masks_;
    std::vector<std::size_t> dmax_;
    std::vector<std::size_t> group_of_;
    std::vector<std::size_t> best_group_of_;
    std::size_t best_groups_ = 0;
    std::size_t best_cost_ = std::numeric_limits<std::size_t>::max();
};

}  // namespace

GroupingPlan color_exact(const ConflictGraph& graph) {
    if (graph.size() > kExactColoringLimit) {
        throw CapacityError("exact coloring is limited to " + std::to_string(kExactColoringLimit) +
                            " components (got " + std::to_string(graph.size()) + "); use color_greedy");
    }
    return PartitionSearch(graph).run();
}

GroupingPlan color_greedy(const ConflictGraph& graph) {
    // The objective is the sum of per-group maximum costs rather than the
    // number of colors, so the expensive vertices are placed first and later
    // vertices ride along in groups whose cost they do not raise.
    const std::size_t n = graph.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return graph.costs()[a] > graph.costs()[b]; });

    std::vector<std::vector<std::size_t>> members;
    std::vector<std::size_t> dmax;
    std::vector<std::size_t> group_of(n, 0);
    for (std::size_t v : order) {
        const std::size_t c = graph.costs()[v];
        auto compatible = [&](std::size_t g) {
            return std::none_of(members[g].begin(), members[g].end(),
                                [&](std::size_t u) { return graph.adjacent(u, v); });
        };
        std::optional<std::size_t> chosen;
        for (std::size_t g = 0; g < members.size() && !chosen; ++g) {
            if (dmax[g] >= c && compatible(g)) chosen = g;
        }
        for (std::size_t g = 0; g < members.size() && !chosen; ++g) {
            if (compatible(g)) chosen = g;
        }
        if (!chosen) {
            members.emplace_back();
            dmax.push_back(0);
            chosen = members.size() - 1;
        }
        members[*chosen].push_back(v);
        dmax[*chosen] = std::max(dmax[*chosen], c);
        group_of[v] = *chosen;
    }
    return plan_from_assignment(graph, group_of, members.size());
}

GroupingPlan color(const ConflictGraph& graph, ColoringMethod method) {
    switch (method) {
        case ColoringMethod::exact: return color_exact(graph);
        case ColoringMethod::greedy: return color_greedy(graph);
        case ColoringMethod::automatic: break;
    }
    return graph.size() <= kExactColoringLimit ? color_exact(graph) : color_greedy(graph);
}

bool plan_is_feasible(const GroupingPlan& plan, const ConflictGraph& graph) {
    std::vector<int> seen(graph.size(), 0);
    auto find = [&](std::size_t component) -> std::optional<std::size_t> {
        const auto& vs = graph.vertices();
        const auto it = std::find(vs.begin(), vs.end(), component);
        if (it == vs.end()) return std::nullopt;
        return static_cast<std::size_t>(it - vs.begin());
    };
    if (plan.groups.size() != plan.dmax.size()) return false;
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        std::size_t dmax = 0;
        std::vector<std::size_t> pos;
        for (std::size_t comp : plan.groups[g]) {
            const auto p = find(comp);
            if (!p) return false;
            ++seen[*p];
            dmax = std::max(dmax, graph.costs()[*p]);
            pos.push_back(*p);
        }
        if (plan.groups[g].empty() || dmax != plan.dmax[g]) return false;
        for (std::size_t a = 0; a < pos.size(); ++a) {
            for (std::size_t b = a + 1; b < pos.size(); ++b) {
                if (graph.adjacent(pos[a], pos[b])) return false;
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

}  // namespace afmdp
