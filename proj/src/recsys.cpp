#include "copygraph/recsys.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "copygraph/parallel.hpp"

namespace copygraph::rec {

double sigmoid(double x) {
    // The two branches share 1/(1+e^{-|x|}), so sigmoid(x) + sigmoid(-x)
    // is exactly 1 (Sterbenz: 1 - t is exact for t in [0.5, 1]).
    const double t = 1.0 / (1.0 + std::exp(-std::abs(x)));
    return x >= 0.0 ? t : 1.0 - t;
}

double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

BprModel bpr_init(NodeId n_users, NodeId n_items, const BprConfig& config, rng::Stream& stream) {
    if (config.dim < 1) throw std::invalid_argument("bpr_init: dim must be >= 1");
    BprModel m;
    m.lambda_prop = config.lambda_prop;
    m.lambda_reg = config.lambda_reg;
    m.user_emb.resize(n_users, config.dim);
    m.item_emb.resize(n_items, config.dim);
    for (Eigen::Index r = 0; r < m.user_emb.rows(); ++r)
        for (Eigen::Index c = 0; c < m.user_emb.cols(); ++c)
            m.user_emb(r, c) = 0.1 * stream.normal();
    for (Eigen::Index r = 0; r < m.item_emb.rows(); ++r)
        for (Eigen::Index c = 0; c < m.item_emb.cols(); ++c)
            m.item_emb(r, c) = 0.1 * stream.normal();
    return m;
}

namespace {

Eigen::VectorXd propagated_user(const BprModel& m, const BipartiteGraph& bg, NodeId u) {
    const auto& items = bg.user_items[static_cast<std::size_t>(u)];
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(m.user_emb.cols());
    for (NodeId i : items) agg += m.item_emb.row(i).transpose();
    if (!items.empty()) agg /= static_cast<double>(items.size());
    return (1.0 - m.lambda_prop) * m.user_emb.row(u).transpose() + m.lambda_prop * agg;
}

Eigen::VectorXd propagated_item(const BprModel& m, const BipartiteGraph& bg, NodeId i) {
    const auto& users = bg.item_users[static_cast<std::size_t>(i)];
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(m.item_emb.cols());
    for (NodeId u : users) agg += m.user_emb.row(u).transpose();
    if (!users.empty()) agg /= static_cast<double>(users.size());
    return (1.0 - m.lambda_prop) * m.item_emb.row(i).transpose() + m.lambda_prop * agg;
}

double triple_score(const BprModel& m, const BipartiteGraph& bg, const Triple& t) {
    const Eigen::VectorXd eu = propagated_user(m, bg, t.user);
    const Eigen::VectorXd ei = propagated_item(m, bg, t.pos);
    const Eigen::VectorXd ej = propagated_item(m, bg, t.neg);
    return eu.dot(ei) - eu.dot(ej);
}

double pair_score(const Embeddings& e, const Triple& t) {
    return e.users.row(t.user).dot(e.items.row(t.pos)) -
           e.users.row(t.user).dot(e.items.row(t.neg));
}

}  // namespace

Embeddings embed(const BprModel& model, const BipartiteGraph& bg) {
    if (model.user_emb.rows() != bg.n_users || model.item_emb.rows() != bg.n_items)
        throw std::invalid_argument("embed: model/graph size mismatch");
    Embeddings e;
    e.users.resize(bg.n_users, model.user_emb.cols());
    e.items.resize(bg.n_items, model.item_emb.cols());
    for (NodeId u = 0; u < bg.n_users; ++u) e.users.row(u) = propagated_user(model, bg, u).transpose();
    for (NodeId i = 0; i < bg.n_items; ++i) e.items.row(i) = propagated_item(model, bg, i).transpose();
    return e;
}

double rank_probability(const BprModel& model, const BipartiteGraph& bg, NodeId u, NodeId i,
                        NodeId j) {
    if (u < 0 || u >= bg.n_users || i < 0 || i >= bg.n_items || j < 0 || j >= bg.n_items)
        throw std::out_of_range("rank_probability: id out of range");
    return sigmoid(pair_score(embed(model, bg), {u, i, j}));
}

double triple_objective(const BprModel& model, const BipartiteGraph& bg, const Triple& t) {
    const double reg = model.user_emb.row(t.user).squaredNorm() +
                       model.item_emb.row(t.pos).squaredNorm() +
                       model.item_emb.row(t.neg).squaredNorm();
    return log_sigmoid(triple_score(model, bg, t)) - model.lambda_reg * reg;
}

void triple_gradient(const BprModel& model, const BipartiteGraph& bg, const Triple& t,
                     const std::function<void(bool, NodeId, const Eigen::VectorXd&)>& emit) {
    const NodeId u = t.user, i = t.pos, j = t.neg;
    const Eigen::VectorXd eu = propagated_user(model, bg, u);
    const Eigen::VectorXd ei = propagated_item(model, bg, i);
    const Eigen::VectorXd ej = propagated_item(model, bg, j);
    const double s = eu.dot(ei) - eu.dot(ej);
    const double g = sigmoid(-s);  // d/ds ln sigma(s)
    const double lam = model.lambda_prop;

    // Through e_u: ds/de_u = e_i - e_j.
    const Eigen::VectorXd du = g * (ei - ej);
    emit(true, u, ((1.0 - lam) * du - 2.0 * model.lambda_reg * model.user_emb.row(u).transpose()).eval());
    const auto& items_u = bg.user_items[static_cast<std::size_t>(u)];
    if (!items_u.empty()) {
        const Eigen::VectorXd per_item = (lam / static_cast<double>(items_u.size())) * du;
        for (NodeId it : items_u) emit(false, it, per_item);
    }

    // Through e_i: ds/de_i = e_u.
    const Eigen::VectorXd di = g * eu;
    emit(false, i, ((1.0 - lam) * di - 2.0 * model.lambda_reg * model.item_emb.row(i).transpose()).eval());
    const auto& users_i = bg.item_users[static_cast<std::size_t>(i)];
    if (!users_i.empty()) {
        const Eigen::VectorXd per_user = (lam / static_cast<double>(users_i.size())) * di;
        for (NodeId r : users_i) emit(true, r, per_user);
    }

    // Through e_j: ds/de_j = -e_u.
    emit(false, j, (-(1.0 - lam) * di - 2.0 * model.lambda_reg * model.item_emb.row(j).transpose()).eval());
    const auto& users_j = bg.item_users[static_cast<std::size_t>(j)];
    if (!users_j.empty()) {
        const Eigen::VectorXd per_user = -(lam / static_cast<double>(users_j.size())) * di;
        for (NodeId r : users_j) emit(true, r, per_user);
    }
}

BprTrainResult bpr_train(const BipartiteGraph& bg, const std::vector<std::vector<NodeId>>* exclusion,
                         const BprConfig& config, rng::Stream& stream) {
    if (exclusion && static_cast<NodeId>(exclusion->size()) != bg.n_users)
        throw std::invalid_argument("bpr_train: exclusion list size mismatch");

    BprTrainResult result;
    result.model = bpr_init(bg.n_users, bg.n_items, config, stream);
    BprModel& model = result.model;

    // Per-user blocked negatives: positives plus the exclusion set.
    std::vector<std::vector<NodeId>> blocked(static_cast<std::size_t>(bg.n_users));
    std::vector<NodeId> eligible;
    for (NodeId u = 0; u < bg.n_users; ++u) {
        const auto& pos = bg.user_items[static_cast<std::size_t>(u)];
        auto& b = blocked[static_cast<std::size_t>(u)];
        b = pos;
        if (exclusion) {
            const auto& ex = (*exclusion)[static_cast<std::size_t>(u)];
            b.insert(b.end(), ex.begin(), ex.end());
            std::sort(b.begin(), b.end());
            b.erase(std::unique(b.begin(), b.end()), b.end());
        }
        if (!pos.empty() && static_cast<NodeId>(b.size()) < bg.n_items)
            eligible.push_back(u);
        else
            result.skipped_users.push_back(u);
    }
    if (eligible.empty()) throw std::invalid_argument("bpr_train: no trainable user");

    const long steps = config.triples_per_epoch > 0
                           ? config.triples_per_epoch
                           : static_cast<long>(bg.interaction_count());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double objective = 0.0;
        for (long step = 0; step < steps; ++step) {
            const NodeId u = eligible[stream.uniform_index(eligible.size())];
            const auto& pos = bg.user_items[static_cast<std::size_t>(u)];
            const NodeId i = pos[stream.uniform_index(pos.size())];
            const auto& b = blocked[static_cast<std::size_t>(u)];
            NodeId j;
            do {
                j = static_cast<NodeId>(stream.uniform_index(static_cast<std::uint64_t>(bg.n_items)));
            } while (std::binary_search(b.begin(), b.end(), j));
            objective += log_sigmoid(triple_score(model, bg, {u, i, j}));
            triple_gradient(model, bg, {u, i, j}, [&](bool is_user, NodeId id, const Eigen::VectorXd& grad) {
                if (is_user)
                    model.user_emb.row(id) += config.learning_rate * grad.transpose();
                else
                    model.item_emb.row(id) += config.learning_rate * grad.transpose();
            });
        }
        result.epoch_objective.push_back(objective / static_cast<double>(steps));
    }
    return result;
}

std::vector<double> ensemble_triple_probabilities(const BprModel& model, const BipartiteGraph& bg,
                                                  const CopyingDistribution& user_dist,
                                                  int n_graphs, std::span<const Triple> triples,
                                                  std::uint64_t seed, const char* purpose) {
    if (n_graphs < 1) throw std::invalid_argument("ensemble_triple_probabilities: n_graphs >= 1");
    // Running mean: exact when every sampled graph yields the same value,
    // which realizes the degenerate-ensemble identities.
    std::vector<double> mean(triples.size(), 0.0);
    for (int k = 0; k < n_graphs; ++k) {
        rng::Stream stream = rng::make_stream(seed, "copying", purpose, static_cast<std::uint64_t>(k));
        const BipartiteGraph g = sample_bipartite(bg, user_dist, stream);
        const Embeddings e = embed(model, g);
        for (std::size_t t = 0; t < triples.size(); ++t)
            mean[t] += (sigmoid(pair_score(e, triples[t])) - mean[t]) / (k + 1);
    }
    return mean;
}

Eigen::MatrixXd ensemble_scores(const BprModel& model, const BipartiteGraph& bg,
                                const CopyingDistribution& user_dist, int n_graphs,
                                std::uint64_t seed, int workers, const char* purpose) {
    if (n_graphs < 1) throw std::invalid_argument("ensemble_scores: n_graphs >= 1");
    std::vector<Eigen::MatrixXd> per_graph(static_cast<std::size_t>(n_graphs));
    parallel_for(static_cast<std::size_t>(n_graphs), workers, [&](std::size_t k) {
        rng::Stream stream = rng::make_stream(seed, "copying", purpose, k);
        const BipartiteGraph g = sample_bipartite(bg, user_dist, stream);
        const Embeddings e = embed(model, g);
        Eigen::MatrixXd raw = e.users * e.items.transpose();
        for (Eigen::Index r = 0; r < raw.rows(); ++r)
            for (Eigen::Index c = 0; c < raw.cols(); ++c) raw(r, c) = sigmoid(raw(r, c));
        per_graph[k] = std::move(raw);
    });
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(bg.n_users, bg.n_items);
    for (int k = 0; k < n_graphs; ++k) mean += (per_graph[static_cast<std::size_t>(k)] - mean) / (k + 1);
    return mean;
}

Eigen::MatrixXd base_scores(const BprModel& model, const BipartiteGraph& bg) {
    const Embeddings e = embed(model, bg);
    Eigen::MatrixXd raw = e.users * e.items.transpose();
    for (Eigen::Index r = 0; r < raw.rows(); ++r)
        for (Eigen::Index c = 0; c < raw.cols(); ++c) raw(r, c) = sigmoid(raw(r, c));
    return raw;
}

double recall_at_k(const std::vector<NodeId>& recommended, const std::vector<NodeId>& positives,
                   int k) {
    if (positives.empty()) throw std::invalid_argument("recall_at_k: empty positive set");
    std::set<NodeId> pos(positives.begin(), positives.end());
    std::size_t hits = 0;
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), recommended.size());
    for (std::size_t n = 0; n < kk; ++n)
        if (pos.count(recommended[n])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pos.size());
}

double ndcg_at_k(const std::vector<NodeId>& recommended, const std::vector<NodeId>& positives,
                 int k) {
    if (positives.empty()) throw std::invalid_argument("ndcg_at_k: empty positive set");
    std::set<NodeId> pos(positives.begin(), positives.end());
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), recommended.size());
    double dcg = 0.0;
    for (std::size_t n = 0; n < kk; ++n)
        if (pos.count(recommended[n])) dcg += 1.0 / std::log2(static_cast<double>(n) + 2.0);
    double idcg = 0.0;
    const std::size_t ideal = std::min<std::size_t>(static_cast<std::size_t>(k), pos.size());
    for (std::size_t n = 0; n < ideal; ++n) idcg += 1.0 / std::log2(static_cast<double>(n) + 2.0);
    return dcg / idcg;
}

MetricsReport evaluate_ranking(const Eigen::MatrixXd& scores, const BipartiteGraph& train,
                               const std::vector<std::vector<NodeId>>& test_positives) {
    if (scores.rows() != train.n_users || scores.cols() != train.n_items)
        throw std::invalid_argument("evaluate_ranking: score shape mismatch");
    if (static_cast<NodeId>(test_positives.size()) != train.n_users)
        throw std::invalid_argument("evaluate_ranking: test positives size mismatch");

    MetricsReport report;
    double r10 = 0.0, r20 = 0.0, n10 = 0.0, n20 = 0.0;
    for (NodeId u = 0; u < train.n_users; ++u) {
        const auto& pos = test_positives[static_cast<std::size_t>(u)];
        if (pos.empty()) {
            ++report.skipped_users;
            continue;
        }
        // Candidates exclude the user's training positives.
        std::vector<std::pair<double, NodeId>> ranked;
        ranked.reserve(static_cast<std::size_t>(train.n_items));
        for (NodeId i = 0; i < train.n_items; ++i) {
            if (train.has(u, i)) continue;
            ranked.emplace_back(-scores(u, i), i);  // descending score, ascending id
        }
        std::sort(ranked.begin(), ranked.end());
        std::vector<NodeId> rec;
        rec.reserve(std::min<std::size_t>(20, ranked.size()));
        for (std::size_t n = 0; n < std::min<std::size_t>(20, ranked.size()); ++n)
            rec.push_back(ranked[n].second);

        r10 += recall_at_k(rec, pos, 10);
        const double user_r20 = recall_at_k(rec, pos, 20);
        r20 += user_r20;
        n10 += ndcg_at_k(rec, pos, 10);
        n20 += ndcg_at_k(rec, pos, 20);
        report.evaluated_users.push_back(u);
        report.per_user_recall20.push_back(user_r20);
    }
    const double n_eval = static_cast<double>(report.evaluated_users.size());
    if (n_eval == 0.0) throw std::invalid_argument("evaluate_ranking: no user has test positives");
    report.recall10 = r10 / n_eval;
    report.recall20 = r20 / n_eval;
    report.ndcg10 = n10 / n_eval;
    report.ndcg20 = n20 / n_eval;
    return report;
}

Split split_interactions(const BipartiteGraph& bg, rng::Stream& stream, double train_frac,
                         double val_frac) {
    if (train_frac <= 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0)
        throw std::invalid_argument("split_interactions: bad fractions");
    Split split;
    split.validation.resize(static_cast<std::size_t>(bg.n_users));
    split.test.resize(static_cast<std::size_t>(bg.n_users));
    std::vector<std::pair<NodeId, NodeId>> train_pairs;
    for (NodeId u = 0; u < bg.n_users; ++u) {
        std::vector<NodeId> items = bg.user_items[static_cast<std::size_t>(u)];
        for (std::size_t i = items.size(); i > 1; --i)
            std::swap(items[i - 1], items[stream.uniform_index(i)]);
        const std::size_t n = items.size();
        const std::size_t n_train = static_cast<std::size_t>(std::ceil(train_frac * n));
        const std::size_t n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(val_frac * n)));
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_train)
                train_pairs.emplace_back(u, items[i]);
            else if (i < n_train + n_val)
                split.validation[static_cast<std::size_t>(u)].push_back(items[i]);
            else
                split.test[static_cast<std::size_t>(u)].push_back(items[i]);
        }
        std::sort(split.validation[static_cast<std::size_t>(u)].begin(), split.validation[static_cast<std::size_t>(u)].end());
        std::sort(split.test[static_cast<std::size_t>(u)].begin(), split.test[static_cast<std::size_t>(u)].end());
    }
    split.train = BipartiteGraph::from_pairs(bg.n_users, bg.n_items, train_pairs);
    return split;
}

SgbprResult sgbpr_train_evaluate(const BipartiteGraph& train,
                                 const std::vector<std::vector<NodeId>>& test_positives,
                                 const SgbprConfig& config, std::uint64_t seed, int workers) {
    const JaccardResult jaccard = build_jaccard_user(train, config.jaccard_include_self);

    // Expected adjacency over the same sampled-graph streams the evaluation
    // reuses ("ebpr-graph" purpose keyed by sample index).
    const ExpectedAdjacency ea =
        estimate_expected_adjacency_bipartite(train, jaccard.dist, config.n_graphs, seed, workers);

    SgbprResult result;
    std::vector<std::vector<NodeId>> exclusion(static_cast<std::size_t>(train.n_users));
    for (const auto& [u, item] : threshold_pairs(ea, config.threshold_b)) {
        if (!train.has(u, item)) {
            exclusion[static_cast<std::size_t>(u)].push_back(item);
            ++result.excluded_pairs;
        }
    }
    for (auto& ex : exclusion) std::sort(ex.begin(), ex.end());

    rng::Stream train_stream = rng::make_stream(seed, "recsys", "sgbpr-train");
    BprTrainResult trained = bpr_train(train, &exclusion, config.bpr, train_stream);
    result.skipped_users = trained.skipped_users;
    result.model = std::move(trained.model);

    const char* purpose = config.resample_eval_graphs ? "sgbpr-eval" : "expected-adjacency";
    const Eigen::MatrixXd scores =
        ensemble_scores(result.model, train, jaccard.dist, config.n_graphs, seed, workers, purpose);
    result.metrics = evaluate_ranking(scores, train, test_positives);
    return result;
}

}  // namespace copygraph::rec
