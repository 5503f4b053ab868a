#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "copygraph/copying.hpp"
#include "copygraph/graph.hpp"
#include "copygraph/rng.hpp"

namespace copygraph::rec {

/// Exact sigmoid complement: sigmoid(x) + sigmoid(-x) == 1 bit-for-bit.
double sigmoid(double x);
double log_sigmoid(double x);

struct BprConfig {
    int dim = 16;
    int epochs = 30;
    double learning_rate = 0.05;
    double lambda_reg = 1e-4;   // per-triple weight decay on (w_u, v_i, v_j)
    double lambda_prop = 0.5;   // graph propagation mix weight
    long triples_per_epoch = 0; // 0 => one per observed interaction
};

struct BprModel {
    Eigen::MatrixXd user_emb;  // |U| x d
    Eigen::MatrixXd item_emb;  // |I| x d
    double lambda_prop = 0.5;
    double lambda_reg = 1e-4;
};

BprModel bpr_init(NodeId n_users, NodeId n_items, const BprConfig& config, rng::Stream& stream);

struct Embeddings {
    Eigen::MatrixXd users;
    Eigen::MatrixXd items;
};

/// One-hop mean-aggregation embeddings:
/// e_u = (1 - lambda) w_u + lambda * mean of neighbor item embeddings
/// (zero vector when the user has no items), and symmetrically for items.
Embeddings embed(const BprModel& model, const BipartiteGraph& bg);

/// sigma(e_u . e_i - e_u . e_j) under embed(model, bg).
double rank_probability(const BprModel& model, const BipartiteGraph& bg, NodeId u, NodeId i,
                        NodeId j);

struct Triple {
    NodeId user, pos, neg;
};

/// ln sigma(x_uij) - lambda_reg (|w_u|^2 + |v_i|^2 + |v_j|^2) for one triple.
double triple_objective(const BprModel& model, const BipartiteGraph& bg, const Triple& t);

/// Gradient of triple_objective. The callback receives (is_user, id, grad);
/// gradient flows through the propagation into neighbor embeddings.
void triple_gradient(const BprModel& model, const BipartiteGraph& bg, const Triple& t,
                     const std::function<void(bool, NodeId, const Eigen::VectorXd&)>& emit);

struct BprTrainResult {
    BprModel model;
    std::vector<double> epoch_objective;  // mean ln sigma per epoch
    std::vector<NodeId> skipped_users;    // no positives or no valid negative
};

/// Stochastic gradient ascent over uniformly drawn (u, i, j) triples with
/// i in the user's positives and j outside positives and the optional
/// per-user exclusion lists.
BprTrainResult bpr_train(const BipartiteGraph& bg, const std::vector<std::vector<NodeId>>* exclusion,
                         const BprConfig& config, rng::Stream& stream);

/// Mean over n_graphs sampled bipartite graphs of the per-triple ranking
/// probabilities (no retraining). Streams are derived from (seed, purpose, k).
std::vector<double> ensemble_triple_probabilities(const BprModel& model, const BipartiteGraph& bg,
                                                  const CopyingDistribution& user_dist,
                                                  int n_graphs, std::span<const Triple> triples,
                                                  std::uint64_t seed,
                                                  const char* purpose = "ebpr-graph");

/// Per-user item ranking scores: mean over sampled graphs of
/// sigma(e_u . e_i). A single self-copy graph reduces to the base scores.
Eigen::MatrixXd ensemble_scores(const BprModel& model, const BipartiteGraph& bg,
                                const CopyingDistribution& user_dist, int n_graphs,
                                std::uint64_t seed, int workers = 1,
                                const char* purpose = "ebpr-graph");

/// sigma(e_u . e_i) on the observed graph only.
Eigen::MatrixXd base_scores(const BprModel& model, const BipartiteGraph& bg);

double recall_at_k(const std::vector<NodeId>& recommended, const std::vector<NodeId>& positives,
                   int k);
double ndcg_at_k(const std::vector<NodeId>& recommended, const std::vector<NodeId>& positives,
                 int k);

struct MetricsReport {
    double recall10 = 0.0, recall20 = 0.0;
    double ndcg10 = 0.0, ndcg20 = 0.0;
    std::vector<NodeId> evaluated_users;
    std::vector<double> per_user_recall20;
    int skipped_users = 0;  // users without test positives
};

/// Rank items by score (training positives excluded from the candidate
/// list), then average Recall/NDCG at 10 and 20 over users with at least
/// one held-out positive.
MetricsReport evaluate_ranking(const Eigen::MatrixXd& scores, const BipartiteGraph& train,
                               const std::vector<std::vector<NodeId>>& test_positives);

struct Split {
    BipartiteGraph train;
    std::vector<std::vector<NodeId>> validation;  // per-user held-out items
    std::vector<std::vector<NodeId>> test;
};

/// Per-user random shuffle split of interactions (default 70/10/20).
Split split_interactions(const BipartiteGraph& bg, rng::Stream& stream, double train_frac = 0.7,
                         double val_frac = 0.1);

struct SgbprConfig {
    int n_graphs = 10;
    double threshold_b = 0.1;
    bool resample_eval_graphs = false;  // default: reuse the estimation draws
    bool jaccard_include_self = true;   // rho(j, j) = 1 enters the normalizer
    BprConfig bpr;
};

struct SgbprResult {
    MetricsReport metrics;
    BprModel model;
    std::size_t excluded_pairs = 0;  // negative-pool pairs removed by the threshold graph
    std::vector<NodeId> skipped_users;
};

/// Train with the copying-model exclusion of likely-positive negatives, then
/// evaluate with ensemble scores over the sampled graphs.
SgbprResult sgbpr_train_evaluate(const BipartiteGraph& train,
                                 const std::vector<std::vector<NodeId>>& test_positives,
                                 const SgbprConfig& config, std::uint64_t seed, int workers = 1);

}  // namespace copygraph::rec
