#include "copygraph/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "copygraph/parallel.hpp"

namespace copygraph::gcn {

void validate_softmax(const SoftmaxTable& table, double tol) {
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < table.cols(); ++c) {
            if (table(r, c) < 0.0 || !std::isfinite(table(r, c)))
                throw std::invalid_argument("SoftmaxTable: negative or non-finite entry");
            sum += table(r, c);
        }
        if (std::abs(sum - 1.0) > tol)
            throw std::invalid_argument("SoftmaxTable: row " + std::to_string(r) +
                                        " sums to " + std::to_string(sum));
    }
}

int argmax_row(const SoftmaxTable& table, NodeId v) {
    int best = 0;
    for (Eigen::Index c = 1; c < table.cols(); ++c)
        if (table(v, c) > table(v, best)) best = static_cast<int>(c);
    return best;
}

Eigen::SparseMatrix<double> normalize_adjacency(const Graph& g) {
    if (g.directed()) throw std::invalid_argument("normalize_adjacency: graph must be undirected");
    const NodeId n = g.num_nodes();
    std::vector<double> d(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) d[static_cast<std::size_t>(v)] = g.row_sum(v) + 1.0;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(g.arc_count() + static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) {
        double self = 1.0;
        for (const Arc& a : g.row(v)) {
            if (a.target == v) {
                self += a.weight;
                continue;
            }
            triplets.emplace_back(v, a.target,
                                  a.weight / std::sqrt(d[static_cast<std::size_t>(v)] *
                                                       d[static_cast<std::size_t>(a.target)]));
        }
        triplets.emplace_back(v, v, self / d[static_cast<std::size_t>(v)]);
    }
    Eigen::SparseMatrix<double> op(n, n);
    op.setFromTriplets(triplets.begin(), triplets.end());
    return op;
}

GcnModel init_model(int n_features, int hidden, int n_classes, double dropout_rate,
                    rng::Stream& stream) {
    if (n_features < 1 || hidden < 1 || n_classes < 1)
        throw std::invalid_argument("init_model: bad dimensions");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("init_model: dropout must lie in [0, 1)");
    GcnModel m;
    m.dropout_rate = dropout_rate;
    auto glorot = [&stream](Eigen::MatrixXd& w, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        w.resize(fan_in, fan_out);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                w(i, j) = (2.0 * stream.uniform() - 1.0) * limit;
    };
    glorot(m.w1, n_features, hidden);
    glorot(m.w2, hidden, n_classes);
    return m;
}

Eigen::MatrixXd dropout_matrix(const Eigen::MatrixXd& x, double rate, rng::Stream& stream) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
    Eigen::MatrixXd out = x;
    if (rate == 0.0) return out;
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            if (out(i, j) == 0.0) continue;  // dropping a zero is a no-op
            out(i, j) = stream.uniform() < rate ? 0.0 : out(i, j) * scale;
        }
    }
    return out;
}

namespace {

Eigen::MatrixXd row_softmax(Eigen::MatrixXd logits) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        logits.row(r) = (logits.row(r).array() - mx).exp();
        logits.row(r) /= logits.row(r).sum();
    }
    return logits;
}

}  // namespace

SoftmaxTable gcn_forward(const GcnModel& model, const Eigen::SparseMatrix<double>& op,
                         const Eigen::MatrixXd& x, bool dropout_on, rng::Stream* stream) {
    if (x.cols() != model.w1.rows()) throw std::invalid_argument("gcn_forward: feature shape mismatch");
    if (op.rows() != x.rows()) throw std::invalid_argument("gcn_forward: operator shape mismatch");
    Eigen::MatrixXd xd;
    if (dropout_on) {
        if (!stream) throw std::invalid_argument("gcn_forward: dropout requires a stream");
        xd = dropout_matrix(x, model.dropout_rate, *stream);
    }
    const Eigen::MatrixXd& input = dropout_on ? xd : x;
    const Eigen::MatrixXd h = (op * (input * model.w1)).cwiseMax(0.0);
    return row_softmax(op * (h * model.w2));
}

namespace {

struct ForwardCache {
    Eigen::MatrixXd input;  // after dropout
    Eigen::MatrixXd h_pre;  // op * input * W1
    Eigen::MatrixXd h;      // relu(h_pre)
    Eigen::MatrixXd z;      // softmax output
};

ForwardCache forward_cached(const GcnModel& model, const Eigen::SparseMatrix<double>& op,
                            Eigen::MatrixXd input) {
    ForwardCache c;
    c.input = std::move(input);
    c.h_pre = op * (c.input * model.w1);
    c.h = c.h_pre.cwiseMax(0.0);
    c.z = row_softmax(op * (c.h * model.w2));
    return c;
}

double masked_loss(const ForwardCache& c, const GcnModel& model, const NodeLabels& labels,
                   const std::vector<NodeId>& train_nodes, double weight_decay,
                   Eigen::MatrixXd* grad_w1, Eigen::MatrixXd* grad_w2,
                   const Eigen::SparseMatrix<double>& op) {
    const double inv_l = 1.0 / static_cast<double>(train_nodes.size());
    double ce = 0.0;
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(c.z.rows(), c.z.cols());
    for (NodeId v : train_nodes) {
        const int y = labels.label(v);
        if (y < 0) throw std::invalid_argument("gcn: train node without label");
        ce -= std::log(std::max(c.z(v, y), 1e-300));
        d_out.row(v) = c.z.row(v) * inv_l;
        d_out(v, y) -= inv_l;
    }
    ce *= inv_l;
    const double reg =
        0.5 * weight_decay * (model.w1.squaredNorm() + model.w2.squaredNorm());
    if (grad_w1 && grad_w2) {
        const Eigen::MatrixXd m = op * c.h;  // N x H
        *grad_w2 = m.transpose() * d_out + weight_decay * model.w2;
        Eigen::MatrixXd d_h = op * (d_out * model.w2.transpose());
        d_h = (c.h_pre.array() > 0.0).select(d_h, 0.0);
        *grad_w1 = c.input.transpose() * (op * d_h) + weight_decay * model.w1;
    }
    return ce + reg;
}

}  // namespace

double loss_and_gradients(const GcnModel& model, const Eigen::SparseMatrix<double>& op,
                          const Eigen::MatrixXd& x, const NodeLabels& labels,
                          const std::vector<NodeId>& train_nodes, double weight_decay,
                          Eigen::MatrixXd& grad_w1, Eigen::MatrixXd& grad_w2) {
    if (train_nodes.empty()) throw std::invalid_argument("gcn: empty train set");
    const ForwardCache c = forward_cached(model, op, x);
    return masked_loss(c, model, labels, train_nodes, weight_decay, &grad_w1, &grad_w2, op);
}

TrainResult gcn_train(const Eigen::SparseMatrix<double>& op, const Eigen::MatrixXd& x,
                      const NodeLabels& labels, const std::vector<NodeId>& train_nodes,
                      const GcnConfig& config, rng::Stream& stream) {
    if (train_nodes.empty()) throw std::invalid_argument("gcn_train: empty train set");
    TrainResult result;
    result.model = init_model(static_cast<int>(x.cols()), config.hidden, labels.n_classes,
                              config.dropout, stream);
    GcnModel& model = result.model;

    Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    Eigen::MatrixXd v1 = m1, m2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols()), v2 = m2;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const ForwardCache cache =
            forward_cached(model, op, dropout_matrix(x, config.dropout, stream));
        Eigen::MatrixXd g1, g2;
        const double loss = masked_loss(cache, model, labels, train_nodes, config.weight_decay,
                                        &g1, &g2, op);
        result.epoch_loss.push_back(loss);
        if (!std::isfinite(loss)) {
            result.diverged = true;
            break;
        }
        const double t = epoch + 1;
        const double corr = std::sqrt(1.0 - std::pow(b2, t)) / (1.0 - std::pow(b1, t));
        auto adam = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                        const Eigen::MatrixXd& g) {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
            w.array() -= config.learning_rate * corr * m.array() / (v.array().sqrt() + eps);
        };
        adam(model.w1, m1, v1, g1);
        adam(model.w2, m2, v2, g2);
    }
    return result;
}

std::vector<SoftmaxTable> mc_dropout_predict(const GcnModel& model,
                                             const Eigen::SparseMatrix<double>& op,
                                             const Eigen::MatrixXd& x, int S,
                                             rng::Stream& stream) {
    if (S < 1) throw std::invalid_argument("mc_dropout_predict: S must be >= 1");
    std::vector<SoftmaxTable> out;
    out.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) out.push_back(gcn_forward(model, op, x, true, &stream));
    return out;
}

SoftmaxTable bgcn_copy_classify(const Graph& g_obs, const Eigen::MatrixXd& x,
                                const NodeLabels& labels, const LabelSplit& split,
                                const EnsembleConfig& config, std::uint64_t seed, int workers,
                                const CopyingDistribution* dist_override) {
    if (config.n_graphs < 1 || config.weight_samples < 1)
        throw std::invalid_argument("bgcn_copy_classify: n_graphs and weight_samples must be >= 1");
    const Eigen::SparseMatrix<double> op_obs = normalize_adjacency(g_obs);

    rng::Stream base_stream = rng::make_stream(seed, "bgcn", "base");
    const TrainResult base = gcn_train(op_obs, x, labels, split.train, config.gcn, base_stream);
    const SoftmaxTable base_pred = gcn_forward(base.model, op_obs, x, false, nullptr);

    CopyingDistribution dist;
    if (!dist_override) {
        std::vector<int> predicted(static_cast<std::size_t>(g_obs.num_nodes()));
        for (NodeId v = 0; v < g_obs.num_nodes(); ++v)
            predicted[static_cast<std::size_t>(v)] = argmax_row(base_pred, v);
        dist = build_label_uniform(predicted);
    }
    const CopyingDistribution& zeta_dist = dist_override ? *dist_override : dist;

    std::vector<SoftmaxTable> per_graph(static_cast<std::size_t>(config.n_graphs));
    parallel_for(static_cast<std::size_t>(config.n_graphs), workers, [&](std::size_t i) {
        rng::Stream graph_stream = rng::make_stream(seed, "bgcn", "graph", i);
        const Graph g_i = sample_graph(g_obs, zeta_dist, graph_stream);
        const Eigen::SparseMatrix<double> op_i = normalize_adjacency(g_i);
        rng::Stream train_stream = rng::make_stream(seed, "bgcn", "train", i);
        const TrainResult trained = gcn_train(op_i, x, labels, split.train, config.gcn, train_stream);
        rng::Stream mc_stream = rng::make_stream(seed, "bgcn", "mc", i);
        const auto& op_eval = config.condition_on_sampled ? op_i : op_obs;
        SoftmaxTable sum = SoftmaxTable::Zero(x.rows(), labels.n_classes);
        for (const SoftmaxTable& t :
             mc_dropout_predict(trained.model, op_eval, x, config.weight_samples, mc_stream))
            sum += t;
        per_graph[i] = sum / config.weight_samples;
    });

    SoftmaxTable mean = SoftmaxTable::Zero(x.rows(), labels.n_classes);
    for (const SoftmaxTable& t : per_graph) mean += t;
    return mean / config.n_graphs;
}

double accuracy(const SoftmaxTable& table, const NodeLabels& labels,
                const std::vector<NodeId>& node_set) {
    if (node_set.empty()) throw std::invalid_argument("accuracy: empty node set");
    std::size_t correct = 0;
    for (NodeId v : node_set) {
        if (!labels.has(v)) throw std::invalid_argument("accuracy: unlabeled node in set");
        if (argmax_row(table, v) == labels.label(v)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(node_set.size());
}

Eigen::VectorXd predict_single_copy(const GcnModel& model, const Graph& g_obs,
                                    const Eigen::MatrixXd& x, NodeId v, NodeId replacement) {
    const SingleCopyView view(g_obs, v, replacement);

    // Receptive field of a two-layer model: v, its view-neighbors, and theirs.
    std::unordered_map<NodeId, Eigen::RowVectorXd> xw1_cache;
    auto xw1 = [&](NodeId u) -> const Eigen::RowVectorXd& {
        auto it = xw1_cache.find(u);
        if (it == xw1_cache.end())
            it = xw1_cache.emplace(u, x.row(u) * model.w1).first;
        return it->second;
    };
    auto deg = [&](NodeId u) { return view.row_sum(u) + 1.0; };

    auto hidden_at = [&](NodeId u) {
        const double du = deg(u);
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(model.w1.cols());
        double self_weight = 1.0;
        for (const Arc& a : view.row(u)) {
            if (a.target == u) {
                self_weight += a.weight;
                continue;
            }
            acc += xw1(a.target) * (a.weight / std::sqrt(du * deg(a.target)));
        }
        acc += xw1(u) * (self_weight / du);
        return acc.cwiseMax(0.0).eval();
    };

    const double dv = deg(v);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(model.w2.cols());
    double self_weight = 1.0;
    for (const Arc& a : view.row(v)) {
        if (a.target == v) {
            self_weight += a.weight;
            continue;
        }
        out += (hidden_at(a.target) * model.w2) * (a.weight / std::sqrt(dv * deg(a.target)));
    }
    out += (hidden_at(v) * model.w2) * (self_weight / dv);

    const double mx = out.maxCoeff();
    Eigen::VectorXd z = (out.array() - mx).exp().transpose();
    return z / z.sum();
}

}  // namespace copygraph::gcn
