#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "afmdp/factorization.hpp"

namespace afmdp {

/// Result of dropping components whose input scope is contained in another's.
struct InclusiveReduction {
    /// Surviving component indices, ascending.
    std::vector<std::size_t> survivors;
    /// cover[k] names the survivor whose samples component k reuses; empty for
    /// survivors themselves.
    std::vector<std::optional<std::size_t>> cover;
};

/// Survivors are the components whose scope is not a strict subset of another
/// scope; among equal scopes only the smallest index survives. A dropped
/// component maps to the smallest-index survivor whose scope contains it.
InclusiveReduction reduce_inclusive(const std::vector<Scope>& scopes);
InclusiveReduction reduce_inclusive(const FactorizationScheme& scheme);

/// Components as vertices, edges between overlapping scopes, vertex cost
/// |X[Z]|. Vertex v stands for component `vertices[v]`.
class ConflictGraph {
public:
    ConflictGraph() = default;
    /// Arbitrary graph over components 0..costs.size()-1.
    ConflictGraph(std::vector<std::size_t> costs, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

    const std::vector<std::size_t>& vertices() const noexcept { return vertices_; }
    const std::vector<std::size_t>& costs() const noexcept { return costs_; }
    /// Edges as vertex positions (i < j), sorted.
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    bool adjacent(std::size_t i, std::size_t j) const noexcept { return adjacency_[i * vertices_.size() + j]; }

    /// Graphviz rendering labelled by component index and cost.
    std::string to_dot() const;

    friend ConflictGraph build_conflict_graph(const std::vector<Scope>&, const std::vector<std::size_t>&,
                                              const FactoredSpace&);

private:
    void add_edge(std::size_t i, std::size_t j);

    std::vector<std::size_t> vertices_;
    std::vector<std::size_t> costs_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<bool> adjacency_;
};

ConflictGraph build_conflict_graph(const std::vector<Scope>& scopes, const std::vector<std::size_t>& survivors,
                                   const FactoredSpace& space);
ConflictGraph build_conflict_graph(const FactorizationScheme& scheme, const InclusiveReduction& reduction,
                                   const FactoredSpace& space);

/// Groups of mutually non-conflicting components (component indices, each
/// group ascending) and their costs D_max = max member cost.
struct GroupingPlan {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> dmax;

    std::size_t total_cost() const noexcept;
    friend bool operator==(const GroupingPlan&, const GroupingPlan&) = default;
};

inline constexpr std::size_t kExactColoringLimit = 10;

/// Minimum total cost over all partitions into independent sets, by
/// branch-and-bound over set partitions. Ties resolve to the partition whose
/// restricted-growth string (vertex order) is lexicographically smallest.
/// Throws CapacityError above kExactColoringLimit vertices.
GroupingPlan color_exact(const ConflictGraph& graph);

/// Cost-descending first fit. Always feasible, never cheaper than color_exact.
GroupingPlan color_greedy(const ConflictGraph& graph);

enum class ColoringMethod { automatic, exact, greedy };

/// exact when the graph fits the guard (or when asked), greedy otherwise.
GroupingPlan color(const ConflictGraph& graph, ColoringMethod method = ColoringMethod::automatic);

/// True when every group is an independent set and groups partition the vertices.
bool plan_is_feasible(const GroupingPlan& plan, const ConflictGraph& graph);

}  // namespace afmdp
