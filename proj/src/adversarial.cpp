#include "copygraph/adversarial.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "copygraph/copying.hpp"
#include "copygraph/parallel.hpp"

namespace copygraph::adv {

namespace {

/// Draw k distinct elements from pool (uniform, order-insensitive), by
/// partial Fisher-Yates. Pool must already be in a deterministic order.
std::vector<NodeId> draw_without_replacement(std::vector<NodeId> pool, std::size_t k,
                                             rng::Stream& stream) {
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.uniform_index(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

AttackResult dice_attack(const Graph& g, const NodeLabels& labels, const AttackSpec& spec) {
    if (g.directed()) throw std::invalid_argument("dice_attack: graph must be undirected");
    if (spec.beta_frac < 0.0 || spec.beta_frac > 1.0)
        throw std::invalid_argument("dice_attack: beta must lie in [0, 1]");
    if (!labels.fully_labeled())
        throw std::invalid_argument("dice_attack: every node must be labeled");

    // Mutable edge set keyed by sorted pair.
    std::set<std::pair<NodeId, NodeId>> edges;
    std::map<std::pair<NodeId, NodeId>, double> weights;
    g.for_each_edge([&](NodeId i, NodeId j, double w) {
        edges.insert({std::min(i, j), std::max(i, j)});
        weights[{std::min(i, j), std::max(i, j)}] = w;
    });
    auto has_edge = [&](NodeId a, NodeId b) {
        return edges.count({std::min(a, b), std::max(a, b)}) > 0;
    };

    AttackResult result;
    for (std::size_t t = 0; t < spec.targets.size(); ++t) {
        const NodeId v = spec.targets[t];
        if (v < 0 || v >= g.num_nodes()) throw std::out_of_range("dice_attack: target out of range");
        rng::Stream stream = rng::make_stream(spec.seed, "attack", "dice", t);
        TargetEdit edit;
        edit.target = v;

        std::vector<NodeId> same_class;
        for (const Arc& a : g.row(v)) {
            if (a.target == v) continue;
            if (labels.label(a.target) == labels.label(v) && has_edge(v, a.target))
                same_class.push_back(a.target);
        }
        const std::size_t n_rewire =
            static_cast<std::size_t>(std::floor(spec.beta_frac * same_class.size() + 0.5));
        edit.removed = draw_without_replacement(same_class, n_rewire, stream);
        for (NodeId u : edit.removed) edges.erase({std::min(v, u), std::max(v, u)});

        std::vector<NodeId> candidates;
        for (NodeId u = 0; u < g.num_nodes(); ++u) {
            if (u == v || labels.label(u) == labels.label(v)) continue;
            if (!has_edge(v, u)) candidates.push_back(u);
        }
        edit.added = draw_without_replacement(candidates, n_rewire, stream);
        edit.shortfall = static_cast<int>(n_rewire - edit.added.size());
        for (NodeId u : edit.added) {
            edges.insert({std::min(v, u), std::max(v, u)});
            weights[{std::min(v, u), std::max(v, u)}] = 1.0;
        }
        result.edits.push_back(std::move(edit));
    }

    std::vector<std::tuple<NodeId, NodeId, double>> edge_list;
    edge_list.reserve(edges.size());
    for (const auto& [a, b] : edges) edge_list.emplace_back(a, b, weights[{a, b}]);
    result.graph = Graph::from_edges(g.num_nodes(), false, edge_list);
    return result;
}

namespace {

void fix_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            if (std::abs(vectors(r, c)) > 1e-12) {
                if (vectors(r, c) < 0.0) vectors.col(c) = -vectors.col(c);
                break;
            }
        }
    }
}

}  // namespace

Eigen::MatrixXd spectral_embedding(const Graph& g, const Eigen::MatrixXd* features, int d) {
    const NodeId n = g.num_nodes();
    if (d < 1 || d >= n) throw std::invalid_argument("spectral_embedding: need 1 <= d < N");

    Eigen::MatrixXd dense = Eigen::MatrixXd(gcn::normalize_adjacency(g));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectral_embedding: eigensolver failed to converge");
    // Eigenvalues come in ascending order; take the top-d columns.
    Eigen::MatrixXd top(n, d);
    for (int k = 0; k < d; ++k) top.col(k) = solver.eigenvectors().col(n - 1 - k);
    fix_signs(top);
    if (!features) return top;

    // Principal-component projection of the features, same rank.
    const Eigen::MatrixXd& x = *features;
    if (x.rows() != n) throw std::invalid_argument("spectral_embedding: feature row count mismatch");
    const int q = static_cast<int>(std::min<Eigen::Index>(d, std::min(x.cols(), x.rows() - 1)));
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd proj;
    if (x.cols() <= x.rows()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pca(centered.transpose() * centered);
        Eigen::MatrixXd basis(x.cols(), q);
        for (int k = 0; k < q; ++k) basis.col(k) = pca.eigenvectors().col(x.cols() - 1 - k);
        fix_signs(basis);
        proj = centered * basis;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(centered * centered.transpose());
        Eigen::MatrixXd scores(n, q);
        for (int k = 0; k < q; ++k) scores.col(k) = gram.eigenvectors().col(n - 1 - k);
        fix_signs(scores);
        proj = scores;
    }
    // Scale the feature block to the embedding block's magnitude so neither
    // dominates the Euclidean metric.
    const double top_norm = top.norm();
    const double proj_norm = proj.norm();
    if (proj_norm > 0.0) proj *= top_norm / proj_norm;
    Eigen::MatrixXd out(n, top.cols() + proj.cols());
    out << top, proj;
    return out;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& embeddings) {
    const Eigen::Index n = embeddings.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = (embeddings.row(i) - embeddings.row(j)).norm();
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

DefenseResult defend_copying(const Graph& g_attacked, const Eigen::MatrixXd& x,
                             const NodeLabels& labels, const std::vector<NodeId>& train_nodes,
                             const std::vector<NodeId>& targets, const DefenseConfig& config,
                             std::uint64_t seed, int workers,
                             const Eigen::MatrixXd* embeddings_override) {
    if (config.n_graphs < 1) throw std::invalid_argument("defend_copying: n_graphs must be >= 1");
    const Eigen::SparseMatrix<double> op = gcn::normalize_adjacency(g_attacked);

    rng::Stream train_stream = rng::make_stream(seed, "defend", "train");
    const gcn::TrainResult trained =
        gcn::gcn_train(op, x, labels, train_nodes, config.gcn, train_stream);

    Eigen::MatrixXd emb;
    if (embeddings_override) {
        emb = *embeddings_override;
        if (emb.rows() != g_attacked.num_nodes())
            throw std::invalid_argument("defend_copying: embedding row count mismatch");
    } else {
        emb = spectral_embedding(g_attacked, config.augment_features ? &x : nullptr,
                                 config.embedding_dim);
    }
    const CopyingDistribution dist =
        build_order_statistic(pairwise_distances(emb), config.order_statistic);

    DefenseResult result;
    result.attacked = gcn::gcn_forward(trained.model, op, x, false, nullptr);
    result.defended = result.attacked;
    result.targets = targets;

    std::vector<Eigen::VectorXd> rows(targets.size());
    parallel_for(targets.size(), workers, [&](std::size_t t) {
        const NodeId v = targets[t];
        rng::Stream stream = rng::make_stream(seed, "defend", "target", static_cast<std::uint64_t>(v));
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(result.attacked.cols());
        for (int k = 0; k < config.n_graphs; ++k) {
            const NodeId replacement = dist.sample_row(v, stream);
            mean += gcn::predict_single_copy(trained.model, g_attacked, x, v, replacement);
        }
        rows[t] = mean / config.n_graphs;
    });
    for (std::size_t t = 0; t < targets.size(); ++t)
        result.defended.row(targets[t]) = rows[t].transpose();
    return result;
}

}  // namespace copygraph::adv
