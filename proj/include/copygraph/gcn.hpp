#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "copygraph/copying.hpp"
#include "copygraph/graph.hpp"
#include "copygraph/rng.hpp"

namespace copygraph::gcn {

/// N x K class-probability matrix; rows sum to 1.
using SoftmaxTable = Eigen::MatrixXd;

void validate_softmax(const SoftmaxTable& table, double tol = 1e-6);

/// Argmax with ties broken by the smallest class id.
int argmax_row(const SoftmaxTable& table, NodeId v);

struct GcnConfig {
    int hidden = 16;
    double dropout = 0.5;
    int epochs = 200;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
};

struct GcnModel {
    Eigen::MatrixXd w1;  // F x H
    Eigen::MatrixXd w2;  // H x K
    double dropout_rate = 0.5;
};

struct LabelSplit {
    std::vector<NodeId> train;
    std::vector<NodeId> test;
};

/// Symmetric normalization with self-loops: D^{-1/2} (A + I) D^{-1/2}.
Eigen::SparseMatrix<double> normalize_adjacency(const Graph& g);

/// Fan-scaled symmetric-uniform initialization.
GcnModel init_model(int n_features, int hidden, int n_classes, double dropout_rate,
                    rng::Stream& stream);

/// Entrywise dropout with inverted scaling. Zero entries are untouched, so
/// only stored nonzeros consume randomness.
Eigen::MatrixXd dropout_matrix(const Eigen::MatrixXd& x, double rate, rng::Stream& stream);

/// softmax(op * relu(op * dropout(X) * W1) * W2). Dropout applies only when
/// the flag is set; the stream may be null otherwise.
SoftmaxTable gcn_forward(const GcnModel& model, const Eigen::SparseMatrix<double>& op,
                         const Eigen::MatrixXd& x, bool dropout_on, rng::Stream* stream);

/// Cross-entropy over the train nodes plus 0.5 * wd * (|W1|^2 + |W2|^2),
/// with gradients. Test hook for finite-difference checks; no dropout.
double loss_and_gradients(const GcnModel& model, const Eigen::SparseMatrix<double>& op,
                          const Eigen::MatrixXd& x, const NodeLabels& labels,
                          const std::vector<NodeId>& train_nodes, double weight_decay,
                          Eigen::MatrixXd& grad_w1, Eigen::MatrixXd& grad_w2);

struct TrainResult {
    GcnModel model;
    std::vector<double> epoch_loss;
    bool diverged = false;
};

/// Full-batch Adam on the masked cross-entropy with weight decay.
TrainResult gcn_train(const Eigen::SparseMatrix<double>& op, const Eigen::MatrixXd& x,
                      const NodeLabels& labels, const std::vector<NodeId>& train_nodes,
                      const GcnConfig& config, rng::Stream& stream);

/// S stochastic forward passes with dropout active.
std::vector<SoftmaxTable> mc_dropout_predict(const GcnModel& model,
                                             const Eigen::SparseMatrix<double>& op,
                                             const Eigen::MatrixXd& x, int S,
                                             rng::Stream& stream);

struct EnsembleConfig {
    int n_graphs = 10;       // sampled graphs
    int weight_samples = 5;  // MC-dropout passes per graph
    GcnConfig gcn;
    /// Evaluate predictions on the sampled graph instead of the observed one.
    bool condition_on_sampled = false;
};

/// Ensemble classifier over copying-model samples: trains a base model to
/// get predictive labels, builds the label-uniform copying distribution,
/// retrains one model per sampled graph, and averages n_graphs *
/// weight_samples dropout predictions evaluated on the observed graph.
/// `dist_override` substitutes the copying distribution (testing hook).
SoftmaxTable bgcn_copy_classify(const Graph& g_obs, const Eigen::MatrixXd& x,
                                const NodeLabels& labels, const LabelSplit& split,
                                const EnsembleConfig& config, std::uint64_t seed, int workers = 1,
                                const CopyingDistribution* dist_override = nullptr);

/// Fraction of argmax matches over node_set; ties go to the smaller class.
double accuracy(const SoftmaxTable& table, const NodeLabels& labels,
                const std::vector<NodeId>& node_set);

/// Evaluate the model's prediction at one node of a single-copy view without
/// materializing the modified graph: exact against the full forward pass.
Eigen::VectorXd predict_single_copy(const GcnModel& model, const Graph& g_obs,
                                    const Eigen::MatrixXd& x, NodeId v, NodeId replacement);

}  // namespace copygraph::gcn
