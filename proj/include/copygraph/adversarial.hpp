#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "copygraph/gcn.hpp"
#include "copygraph/graph.hpp"
#include "copygraph/rng.hpp"

namespace copygraph::adv {

struct AttackSpec {
    std::vector<NodeId> targets;
    double beta_frac = 0.5;  // fraction of same-class neighbors to rewire
    std::uint64_t seed = 0;
};

struct TargetEdit {
    NodeId target;
    std::vector<NodeId> removed;  // former same-class neighbors
    std::vector<NodeId> added;    // new different-class neighbors
    int shortfall = 0;            // additions that could not be placed
};

struct AttackResult {
    Graph graph;
    std::vector<TargetEdit> edits;
};

/// Targeted delete-internal/connect-external attack: per target, remove
/// round(beta * s) same-class neighbors (s = same-class neighbor count) and
/// add the same number of edges to random different-class non-neighbors.
/// Target degree is preserved unless candidates run out (logged as shortfall).
AttackResult dice_attack(const Graph& g, const NodeLabels& labels, const AttackSpec& spec);

/// Top-d eigenvector embedding of the normalized adjacency operator,
/// optionally concatenated with a rank-d principal-component projection of
/// the features. Deterministic sign convention: the first nonzero coordinate
/// of every eigenvector is positive.
Eigen::MatrixXd spectral_embedding(const Graph& g, const Eigen::MatrixXd* features, int d);

/// Symmetric Euclidean distance matrix of embedding rows.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& embeddings);

struct DefenseConfig {
    int n_graphs = 20;       // replacement draws per target
    int order_statistic = 5; // P nearest candidates
    int embedding_dim = 16;
    bool augment_features = true;
    gcn::GcnConfig gcn;
};

struct DefenseResult {
    gcn::SoftmaxTable attacked;  // classifier trained on the attacked graph
    gcn::SoftmaxTable defended;  // attacked predictions with target rows replaced
    std::vector<NodeId> targets;
};

/// Error correction at attacked nodes: train once on the attacked graph,
/// then for each target average the trained classifier's predictions over
/// single-node-copied views drawn from the order-statistic distribution.
/// Non-target rows are left untouched.
DefenseResult defend_copying(const Graph& g_attacked, const Eigen::MatrixXd& x,
                             const NodeLabels& labels, const std::vector<NodeId>& train_nodes,
                             const std::vector<NodeId>& targets, const DefenseConfig& config,
                             std::uint64_t seed, int workers = 1,
                             const Eigen::MatrixXd* embeddings_override = nullptr);

}  // namespace copygraph::adv
