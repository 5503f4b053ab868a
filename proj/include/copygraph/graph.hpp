#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace copygraph {

using NodeId = std::int32_t;

struct Arc {
    NodeId target;
    double weight;

    friend bool operator==(const Arc& a, const Arc& b) {
        return a.target == b.target && a.weight == b.weight;
    }
};

enum class DegreeMode { In, Out, Total };

/// Weighted graph in row-compressed form: one sorted arc list per node.
/// Undirected graphs store both directions of every edge so that row-level
/// operations (copying a node's out-neighborhood) work uniformly.
/// Immutable after construction.
class Graph {
public:
    Graph() = default;
    Graph(NodeId n_nodes, bool directed);

    /// Build from an edge list. For undirected graphs each (i,j) edge is
    /// mirrored; passing both orientations of the same pair is a duplicate.
    static Graph from_edges(NodeId n_nodes, bool directed,
                            std::span<const std::tuple<NodeId, NodeId, double>> edges);

    /// Adopt pre-built rows. Validates sortedness, ranges, weights and (for
    /// undirected graphs) symmetry.
    static Graph from_rows(bool directed, std::vector<std::vector<Arc>> rows);

    NodeId num_nodes() const { return static_cast<NodeId>(rows_.size()); }
    bool directed() const { return directed_; }

    const std::vector<Arc>& row(NodeId v) const;

    /// Number of stored arcs.
    std::size_t arc_count() const { return arc_count_; }

    /// Directed: arc count. Undirected: unordered pairs, self-loops counted once.
    std::size_t edge_count() const;

    NodeId degree(NodeId v, DegreeMode mode) const;
    NodeId out_degree(NodeId v) const;
    NodeId in_degree(NodeId v) const;

    bool has_arc(NodeId src, NodeId dst) const;
    /// Weight of arc (src, dst); 0 when absent.
    double weight(NodeId src, NodeId dst) const;

    /// Sum of weights in row v (used by normalized operators).
    double row_sum(NodeId v) const;

    /// Visit each undirected edge once as (i, j, w) with i <= j; requires
    /// undirected. Directed graphs visit every arc.
    template <typename Fn>
    void for_each_edge(Fn&& fn) const {
        for (NodeId i = 0; i < num_nodes(); ++i) {
            for (const Arc& a : rows_[i]) {
                if (directed_ || a.target >= i) fn(i, a.target, a.weight);
            }
        }
    }

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.directed_ == b.directed_ && a.rows_ == b.rows_;
    }

private:
    void finalize();
    void check_node(NodeId v) const;

    bool directed_ = true;
    std::vector<std::vector<Arc>> rows_;
    std::vector<NodeId> in_degree_;
    std::size_t arc_count_ = 0;
};

/// Undirected view of a graph: A_ij = max(A'_ij, A'_ji). Idempotent.
Graph symmetrize(const Graph& g);

/// Induced subgraph on the largest connected component of an undirected
/// graph, plus the old->new id map (-1 for dropped nodes). Ties between
/// equal-sized components go to the one containing the smallest node id.
std::pair<Graph, std::vector<NodeId>> largest_connected_component(const Graph& g);

/// Apply a node relabeling: node v becomes perm[v]. Permutation must be a
/// bijection on [0, n).
Graph relabel(const Graph& g, std::span<const NodeId> perm);

/// Per-node class ids; -1 marks an unlabeled node.
struct NodeLabels {
    std::vector<int> labels;
    int n_classes = 0;

    bool has(NodeId v) const { return labels[static_cast<std::size_t>(v)] >= 0; }
    int label(NodeId v) const { return labels[static_cast<std::size_t>(v)]; }
    bool fully_labeled() const;
    /// Throws unless every present label is < n_classes and every class that
    /// appears is in range.
    void validate() const;
};

/// User-item interaction graph. Items are stored per user (sorted) and the
/// reverse incidence is kept for propagation-style traversals.
struct BipartiteGraph {
    NodeId n_users = 0;
    NodeId n_items = 0;
    std::vector<std::vector<NodeId>> user_items;
    std::vector<std::vector<NodeId>> item_users;

    static BipartiteGraph from_pairs(NodeId n_users, NodeId n_items,
                                     std::span<const std::pair<NodeId, NodeId>> pairs);

    std::size_t interaction_count() const;
    bool has(NodeId user, NodeId item) const;
};

}  // namespace copygraph
