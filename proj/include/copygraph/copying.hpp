#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "copygraph/graph.hpp"
#include "copygraph/rng.hpp"

namespace copygraph {

/// One draw of the replacement vector: zeta[i] names the node whose
/// out-neighborhood replaces node i's.
struct ReplacementVector {
    std::vector<NodeId> zeta;

    static ReplacementVector identity(NodeId n);
};

enum class DistKind { LabelUniform, KnnEmbedding, OrderStatistic, Jaccard, Custom };

std::string to_string(DistKind kind);

/// Per-node categorical distribution over replacement nodes. Rows are either
/// uniform over a candidate set (possibly shared between nodes of one class)
/// or carry explicit probabilities.
class CopyingDistribution {
public:
    struct RowView {
        std::span<const NodeId> candidates;
        const double* probs;  // null => uniform over candidates

        double prob_of(NodeId candidate) const;
    };

    CopyingDistribution() = default;
    explicit CopyingDistribution(NodeId n, DistKind kind = DistKind::Custom);

    NodeId size() const { return static_cast<NodeId>(rows_.size()); }
    DistKind kind() const { return kind_; }

    RowView row(NodeId j) const;

    /// Uniform row over its own candidate list.
    void set_uniform_row(NodeId j, std::vector<NodeId> candidates);
    /// Explicit categorical row; probabilities must sum to 1 within 1e-9.
    void set_row(NodeId j, std::vector<NodeId> candidates, std::vector<double> probs);
    /// Point mass on the node itself.
    void set_self_row(NodeId j);
    /// Register a shared uniform candidate pool and point rows at it.
    int add_pool(std::vector<NodeId> candidates);
    void set_pool_row(NodeId j, int pool);

    /// Checks candidate ranges, duplicates and row normalization.
    void validate(double tol = 1e-9) const;

    NodeId sample_row(NodeId j, rng::Stream& stream) const;

private:
    struct Row {
        int pool = -1;
        std::vector<NodeId> cands;
        std::vector<double> probs;  // empty => uniform
    };
    DistKind kind_ = DistKind::Custom;
    std::vector<Row> rows_;
    std::vector<std::vector<NodeId>> pools_;
};

/// Eq.-(7)-style distribution: uniform over all nodes sharing the node's
/// label. Every node must be labeled.
CopyingDistribution build_label_uniform(const std::vector<int>& labels);

/// Uniform over the K nearest other nodes by Euclidean embedding distance;
/// ties broken by smaller node id. Requires K < N.
CopyingDistribution build_knn_embedding(const Eigen::MatrixXd& embeddings, int K);

/// Uniform over the P nearest other nodes of a precomputed distance matrix
/// (symmetric, zero diagonal); ties broken by smaller node id.
CopyingDistribution build_order_statistic(const Eigen::MatrixXd& distances, int P);

/// Jaccard-weighted user-to-user distribution for bipartite graphs. The
/// domain covers only user nodes. A user whose row has no mass falls back to
/// a self-copy (counted in `fallback_users`).
struct JaccardResult {
    CopyingDistribution dist;  // size n_users
    int fallback_users = 0;
};
JaccardResult build_jaccard_user(const BipartiteGraph& bg, bool include_self = true);

ReplacementVector sample_zeta(const CopyingDistribution& dist, rng::Stream& stream);

/// Row i of the result is row zeta[i] of g_obs. Output is directed.
Graph apply_copy(const Graph& g_obs, const ReplacementVector& zeta);

/// Directed copy of the arc view followed by max-symmetrization.
Graph apply_copy_undirected(const Graph& g_obs, const ReplacementVector& zeta);

/// sample_zeta composed with apply_copy (directed) or apply_copy_undirected.
Graph sample_graph(const Graph& g_obs, const CopyingDistribution& dist, rng::Stream& stream);

/// Bipartite sampling: user u's item set becomes that of its replacement user.
BipartiteGraph sample_bipartite(const BipartiteGraph& bg, const CopyingDistribution& user_dist,
                                rng::Stream& stream);

/// Entrywise Monte Carlo mean of sampled adjacencies. Entries below
/// 1/(2 n_samples) are dropped; they cannot survive any threshold >= 1/n_samples.
struct ExpectedAdjacency {
    NodeId n_nodes = 0;
    long n_samples = 0;
    std::vector<std::vector<Arc>> rows;  // sorted, mean weights

    double value(NodeId i, NodeId j) const;
};

ExpectedAdjacency estimate_expected_adjacency(const Graph& g_obs, const CopyingDistribution& dist,
                                              int n_samples, std::uint64_t seed, int workers = 1);

ExpectedAdjacency estimate_expected_adjacency_bipartite(const BipartiteGraph& bg,
                                                        const CopyingDistribution& user_dist,
                                                        int n_samples, std::uint64_t seed,
                                                        int workers = 1);

/// Binary graph of entries strictly exceeding b (0 < b < 1).
Graph threshold_binary(const ExpectedAdjacency& ea, double b, bool directed = false);

/// Pairs (row, col) of a bipartite expected adjacency strictly exceeding b.
std::vector<std::pair<NodeId, NodeId>> threshold_pairs(const ExpectedAdjacency& ea, double b);

/// View of g_obs with a single node's neighborhood copied from another node;
/// no full-graph materialization. For undirected graphs the view reproduces
/// the copy-then-max-symmetrize semantics of a one-entry-off-identity zeta:
/// row v becomes max(row v, row r) and incident rows update symmetrically.
class SingleCopyView {
public:
    SingleCopyView(const Graph& g_obs, NodeId v, NodeId replacement);

    const Graph& base() const { return *g_; }
    NodeId node() const { return v_; }
    NodeId replacement() const { return r_; }

    /// Effective arcs of node u under the view (sorted by target).
    std::vector<Arc> row(NodeId u) const;
    double row_sum(NodeId u) const;
    NodeId degree(NodeId u) const;

private:
    const Graph* g_;
    NodeId v_;
    NodeId r_;
    std::vector<Arc> v_row_;  // materialized effective row of v
};

/// Serialization: sparse triplet file `node,candidate,prob` and `node,zeta` CSV.
void save_distribution_csv(const CopyingDistribution& dist, const std::string& path);
CopyingDistribution load_distribution_csv(const std::string& path, NodeId n_nodes);
void save_zeta_csv(const ReplacementVector& zeta, const std::string& path);
ReplacementVector load_zeta_csv(const std::string& path, NodeId n_nodes);

}  // namespace copygraph
