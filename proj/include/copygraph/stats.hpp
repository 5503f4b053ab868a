#pragma once

#include <optional>
#include <vector>

#include "copygraph/graph.hpp"
#include "copygraph/rng.hpp"

namespace copygraph::stats {

struct GraphStatistics {
    std::size_t n_nodes = 0;
    std::size_t n_edges = 0;
    double avg_degree = 0.0;
    NodeId max_degree = 0;
    std::optional<double> cross_community;  // absent when labels are not given
    double claw_fraction = 0.0;
    double edge_entropy_relative = 0.0;  // degree distribution normalized to sum 1
    double edge_entropy_verbatim = 0.0;  // d(v)/|E| form
};

/// Mean and max node degree. Weights are ignored; structure only.
std::pair<double, NodeId> degree_stats(const Graph& g);

/// Fraction of edges whose endpoints carry different labels; each undirected
/// edge counted once. Every endpoint must be labeled.
double cross_community_fraction(const Graph& g, const NodeLabels& labels);

/// (sum_v C(d(v),3)) / C(|E|,3). Requires |E| >= 3.
double claw_fraction(const Graph& g);

struct EntropyPair {
    double relative;  // degrees normalized to a probability distribution
    double verbatim;  // d(v)/|E| weights, which sum to 2 on undirected graphs
};
/// Entropy of the degree distribution over log N. Zero-degree nodes
/// contribute nothing. Requires |E| >= 1 and N >= 2.
EntropyPair edge_distribution_entropy(const Graph& g);

GraphStatistics summarize(const Graph& g, const NodeLabels* labels = nullptr);

/// Probabilities over unordered node pairs (i < j). Pairs a model never
/// scored stay undefined: they are excluded from calibration fits and treated
/// as probability zero by samplers.
class EdgeProbabilityMatrix {
public:
    EdgeProbabilityMatrix() = default;
    explicit EdgeProbabilityMatrix(NodeId n);

    NodeId num_nodes() const { return n_; }
    std::size_t pair_count() const { return values_.size(); }

    void set(NodeId i, NodeId j, double p);
    bool defined(NodeId i, NodeId j) const;
    /// 0 for undefined pairs.
    double get(NodeId i, NodeId j) const;

    double sum_defined() const;
    std::size_t defined_count() const;

    template <typename Fn>
    void for_each_defined(Fn&& fn) const {
        std::size_t k = 0;
        for (NodeId i = 0; i < n_; ++i) {
            for (NodeId j = i + 1; j < n_; ++j, ++k) {
                if (defined_[k]) fn(i, j, values_[k]);
            }
        }
    }

private:
    std::size_t index(NodeId i, NodeId j) const;

    NodeId n_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> defined_;
};

struct CalibrationModel {
    double alpha = 0.0;
    double beta = 0.0;
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;
};

/// Logistic calibration sigma(alpha * p + beta) of model probabilities
/// against the observed adjacency, fit by gradient ascent on the mean
/// Bernoulli log-likelihood until the gradient norm drops below `tol`.
/// alpha is clamped to [-alpha_cap, alpha_cap]; separable inputs pin it at
/// the cap and are reported as non-converged when the gradient cannot vanish.
CalibrationModel fit_calibration(const EdgeProbabilityMatrix& p_model, const Graph& g_obs,
                                 double tol = 1e-6, int max_iter = 20000, double alpha_cap = 30.0);

/// sigma(alpha * p + beta) applied to every defined entry.
EdgeProbabilityMatrix apply_calibration(const EdgeProbabilityMatrix& p_model,
                                        const CalibrationModel& cal);

struct CorrectionResult {
    EdgeProbabilityMatrix p;
    std::size_t clipped = 0;  // entries that exceeded 1 after rescaling
};
/// Rescale so the expected sampled edge count equals target_edge_count;
/// entries above 1 are clipped (and counted).
CorrectionResult calibrate_and_correct(const EdgeProbabilityMatrix& p_cal,
                                       std::size_t target_edge_count);

/// Independent-edge sampler: each defined pair is included with its
/// probability. Undirected output.
Graph sample_bernoulli_graph(const EdgeProbabilityMatrix& p, rng::Stream& stream);

}  // namespace copygraph::stats
