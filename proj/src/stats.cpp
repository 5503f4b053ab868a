#include "copygraph/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace copygraph::stats {

namespace {

double choose3(double x) { return x < 3.0 ? 0.0 : x * (x - 1.0) * (x - 2.0) / 6.0; }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

std::pair<double, NodeId> degree_stats(const Graph& g) {
    const NodeId n = g.num_nodes();
    if (n == 0) throw std::invalid_argument("degree_stats: empty graph");
    double total = 0.0;
    NodeId max_deg = 0;
    for (NodeId v = 0; v < n; ++v) {
        const NodeId d = g.degree(v, DegreeMode::Out);
        total += d;
        max_deg = std::max(max_deg, d);
    }
    return {total / n, max_deg};
}

double cross_community_fraction(const Graph& g, const NodeLabels& labels) {
    std::size_t edges = 0, cross = 0;
    g.for_each_edge([&](NodeId i, NodeId j, double) {
        if (!labels.has(i) || !labels.has(j))
            throw std::invalid_argument("cross_community_fraction: unlabeled endpoint");
        ++edges;
        if (labels.label(i) != labels.label(j)) ++cross;
    });
    if (edges == 0) throw std::invalid_argument("cross_community_fraction: graph has no edges");
    return static_cast<double>(cross) / static_cast<double>(edges);
}

double claw_fraction(const Graph& g) {
    const std::size_t m = g.edge_count();
    if (m < 3) throw std::invalid_argument("claw_fraction: need at least 3 edges");
    double claws = 0.0;
    for (NodeId v = 0; v < g.num_nodes(); ++v)
        claws += choose3(static_cast<double>(g.degree(v, DegreeMode::Out)));
    return claws / choose3(static_cast<double>(m));
}

EntropyPair edge_distribution_entropy(const Graph& g) {
    const NodeId n = g.num_nodes();
    const std::size_t m = g.edge_count();
    if (m == 0) throw std::invalid_argument("edge_distribution_entropy: graph has no edges");
    if (n < 2) throw std::invalid_argument("edge_distribution_entropy: need at least 2 nodes");
    double degree_sum = 0.0;
    for (NodeId v = 0; v < n; ++v) degree_sum += g.degree(v, DegreeMode::Out);

    double h_rel = 0.0, h_verbatim = 0.0;
    for (NodeId v = 0; v < n; ++v) {
        const double d = g.degree(v, DegreeMode::Out);
        if (d <= 0.0) continue;
        const double p = d / degree_sum;
        h_rel -= p * std::log(p);
        const double q = d / static_cast<double>(m);
        h_verbatim -= q * std::log(q);
    }
    const double log_n = std::log(static_cast<double>(n));
    return {h_rel / log_n, h_verbatim / log_n};
}

GraphStatistics summarize(const Graph& g, const NodeLabels* labels) {
    GraphStatistics s;
    s.n_nodes = static_cast<std::size_t>(g.num_nodes());
    s.n_edges = g.edge_count();
    std::tie(s.avg_degree, s.max_degree) = degree_stats(g);
    if (labels) s.cross_community = cross_community_fraction(g, *labels);
    s.claw_fraction = claw_fraction(g);
    const EntropyPair h = edge_distribution_entropy(g);
    s.edge_entropy_relative = h.relative;
    s.edge_entropy_verbatim = h.verbatim;
    return s;
}

EdgeProbabilityMatrix::EdgeProbabilityMatrix(NodeId n) : n_(n) {
    if (n < 0) throw std::invalid_argument("EdgeProbabilityMatrix: negative size");
    const std::size_t pairs = static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) - 1) / 2;
    values_.assign(pairs, 0.0);
    defined_.assign(pairs, 0);
}

std::size_t EdgeProbabilityMatrix::index(NodeId i, NodeId j) const {
    if (i == j || i < 0 || j < 0 || i >= n_ || j >= n_)
        throw std::out_of_range("EdgeProbabilityMatrix: bad pair");
    if (i > j) std::swap(i, j);
    const std::size_t si = static_cast<std::size_t>(i);
    return si * static_cast<std::size_t>(n_) - si * (si + 1) / 2 +
           static_cast<std::size_t>(j - i) - 1;
}

void EdgeProbabilityMatrix::set(NodeId i, NodeId j, double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("EdgeProbabilityMatrix: probability outside [0, 1]");
    const std::size_t k = index(i, j);
    values_[k] = p;
    defined_[k] = 1;
}

bool EdgeProbabilityMatrix::defined(NodeId i, NodeId j) const { return defined_[index(i, j)] != 0; }

double EdgeProbabilityMatrix::get(NodeId i, NodeId j) const {
    const std::size_t k = index(i, j);
    return defined_[k] ? values_[k] : 0.0;
}

double EdgeProbabilityMatrix::sum_defined() const {
    double s = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (defined_[k]) s += values_[k];
    return s;
}

std::size_t EdgeProbabilityMatrix::defined_count() const {
    std::size_t c = 0;
    for (std::uint8_t d : defined_) c += d;
    return c;
}

CalibrationModel fit_calibration(const EdgeProbabilityMatrix& p_model, const Graph& g_obs,
                                 double tol, int max_iter, double alpha_cap) {
    if (g_obs.num_nodes() != p_model.num_nodes())
        throw std::invalid_argument("fit_calibration: size mismatch");
    std::vector<double> x;
    std::vector<std::uint8_t> y;
    x.reserve(p_model.defined_count());
    p_model.for_each_defined([&](NodeId i, NodeId j, double p) {
        x.push_back(p);
        y.push_back(g_obs.has_arc(i, j) ? 1 : 0);
    });
    if (x.empty()) throw std::invalid_argument("fit_calibration: no defined pairs");
    const double inv_n = 1.0 / static_cast<double>(x.size());

    // Mean Bernoulli log-likelihood and its gradient.
    auto objective = [&](double a, double b, double& ga, double& gb) {
        double ll = 0.0;
        ga = gb = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double z = a * x[k] + b;
            const double s = sigmoid(z);
            // log sigma / log (1 - sigma), numerically stable
            ll += y[k] ? -std::log1p(std::exp(-std::abs(z))) - std::max(-z, 0.0)
                       : -std::log1p(std::exp(-std::abs(z))) - std::max(z, 0.0);
            const double resid = (y[k] ? 1.0 : 0.0) - s;
            ga += resid * x[k];
            gb += resid;
        }
        ga *= inv_n;
        gb *= inv_n;
        return ll * inv_n;
    };

    CalibrationModel m;
    double ga = 0.0, gb = 0.0;
    double ll = objective(m.alpha, m.beta, ga, gb);
    double step = 1.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        // Project the gradient at the alpha cap.
        double pga = ga;
        if ((m.alpha >= alpha_cap && ga > 0.0) || (m.alpha <= -alpha_cap && ga < 0.0)) pga = 0.0;
        m.grad_norm = std::sqrt(pga * pga + gb * gb);
        if (m.grad_norm < tol) {
            m.converged = true;
            break;
        }
        // Backtracking line search along the projected gradient.
        double trial_step = step * 2.0;
        for (;;) {
            const double na = std::clamp(m.alpha + trial_step * pga, -alpha_cap, alpha_cap);
            const double nb = m.beta + trial_step * gb;
            double nga, ngb;
            const double nll = objective(na, nb, nga, ngb);
            if (nll > ll) {
                m.alpha = na;
                m.beta = nb;
                ll = nll;
                ga = nga;
                gb = ngb;
                step = trial_step;
                break;
            }
            trial_step *= 0.5;
            if (trial_step < 1e-14) {  // no ascent possible along this direction
                it = max_iter;
                break;
            }
        }
    }
    m.iterations = std::min(it, max_iter);
    return m;
}

EdgeProbabilityMatrix apply_calibration(const EdgeProbabilityMatrix& p_model,
                                        const CalibrationModel& cal) {
    EdgeProbabilityMatrix out(p_model.num_nodes());
    p_model.for_each_defined(
        [&](NodeId i, NodeId j, double p) { out.set(i, j, sigmoid(cal.alpha * p + cal.beta)); });
    return out;
}

CorrectionResult calibrate_and_correct(const EdgeProbabilityMatrix& p_cal,
                                       std::size_t target_edge_count) {
    const double total = p_cal.sum_defined();
    if (total <= 0.0) throw std::invalid_argument("calibrate_and_correct: probability mass is zero");
    const double scale = static_cast<double>(target_edge_count) / total;
    CorrectionResult res;
    res.p = EdgeProbabilityMatrix(p_cal.num_nodes());
    p_cal.for_each_defined([&](NodeId i, NodeId j, double p) {
        double q = p * scale;
        if (q > 1.0) {
            q = 1.0;
            ++res.clipped;
        }
        res.p.set(i, j, q);
    });
    return res;
}

Graph sample_bernoulli_graph(const EdgeProbabilityMatrix& p, rng::Stream& stream) {
    std::vector<std::tuple<NodeId, NodeId, double>> edges;
    p.for_each_defined([&](NodeId i, NodeId j, double q) {
        if (q > 0.0 && stream.uniform() < q) edges.emplace_back(i, j, 1.0);
    });
    return Graph::from_edges(p.num_nodes(), false, edges);
}

}  // namespace copygraph::stats
