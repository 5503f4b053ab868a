#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "copygraph/recsys.hpp"
#include "test_util.hpp"

using namespace copygraph;
using namespace copygraph::rec;

namespace {

/// Two-block preference data: users favor their own block's items.
BipartiteGraph planted_blocks(NodeId n_users, NodeId n_items, std::uint64_t seed,
                              double within = 0.45, double across = 0.03) {
    rng::Stream stream = rng::make_stream(seed, "recsys-test", "planted");
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (NodeId u = 0; u < n_users; ++u) {
        const int block = u < n_users / 2 ? 0 : 1;
        bool any = false;
        for (NodeId i = 0; i < n_items; ++i) {
            const int item_block = i < n_items / 2 ? 0 : 1;
            if (stream.bernoulli(block == item_block ? within : across)) {
                pairs.emplace_back(u, i);
                any = true;
            }
        }
        if (!any) pairs.emplace_back(u, block == 0 ? 0 : n_items - 1);
    }
    return BipartiteGraph::from_pairs(n_users, n_items, pairs);
}

double held_out_auc(const BprModel& model, const BipartiteGraph& train,
                    const std::vector<std::vector<NodeId>>& test_positives) {
    const Eigen::MatrixXd scores = base_scores(model, train);
    double wins = 0.0, total = 0.0;
    for (NodeId u = 0; u < train.n_users; ++u) {
        std::set<NodeId> pos(test_positives[static_cast<std::size_t>(u)].begin(),
                             test_positives[static_cast<std::size_t>(u)].end());
        if (pos.empty()) continue;
        for (NodeId i : pos) {
            for (NodeId j = 0; j < train.n_items; ++j) {
                if (train.has(u, j) || pos.count(j)) continue;
                total += 1.0;
                if (scores(u, i) > scores(u, j)) wins += 1.0;
                if (scores(u, i) == scores(u, j)) wins += 0.5;
            }
        }
    }
    return wins / total;
}

}  // namespace

TEST_CASE("embed") {
    const std::vector<std::pair<NodeId, NodeId>> pairs = {{0, 0}, {0, 1}, {1, 1}};
    const BipartiteGraph bg = BipartiteGraph::from_pairs(2, 2, pairs);
    BprConfig config;
    config.dim = 2;
    rng::Stream stream(1);
    BprModel model = bpr_init(2, 2, config, stream);

    SUBCASE("zero mix weight returns base embeddings") {
        model.lambda_prop = 0.0;
        const Embeddings e = embed(model, bg);
        CHECK(e.users == model.user_emb);
        CHECK(e.items == model.item_emb);
    }

    SUBCASE("single item neighbor with full propagation") {
        model.lambda_prop = 1.0;
        const Embeddings e = embed(model, bg);
        CHECK(e.users.row(1) == model.item_emb.row(1));
    }

    SUBCASE("hand-computed two-by-two case") {
        model.lambda_prop = 0.5;
        const Embeddings e = embed(model, bg);
        const Eigen::RowVector2d expected_u0 =
            0.5 * model.user_emb.row(0) + 0.5 * 0.5 * (model.item_emb.row(0) + model.item_emb.row(1));
        CHECK((e.users.row(0) - expected_u0).cwiseAbs().maxCoeff() < 1e-15);
        const Eigen::RowVector2d expected_i1 =
            0.5 * model.item_emb.row(1) + 0.5 * 0.5 * (model.user_emb.row(0) + model.user_emb.row(1));
        CHECK((e.items.row(1) - expected_i1).cwiseAbs().maxCoeff() < 1e-15);
    }

    SUBCASE("user with no items keeps a shrunk base embedding") {
        const BipartiteGraph sparse =
            BipartiteGraph::from_pairs(2, 2, std::vector<std::pair<NodeId, NodeId>>{{1, 0}});
        model.lambda_prop = 0.5;
        const Embeddings e = embed(model, sparse);
        CHECK(e.users.row(0) == 0.5 * model.user_emb.row(0));
    }
}

TEST_CASE("rank_probability") {
    const std::vector<std::pair<NodeId, NodeId>> pairs = {{0, 0}, {1, 1}, {1, 2}};
    const BipartiteGraph bg = BipartiteGraph::from_pairs(2, 3, pairs);
    BprConfig config;
    config.dim = 2;
    rng::Stream stream(2);
    BprModel model = bpr_init(2, 3, config, stream);

    SUBCASE("comparing an item against itself is a coin flip") {
        CHECK(rank_probability(model, bg, 0, 1, 1) == 0.5);
        CHECK(rank_probability(model, bg, 1, 2, 2) == 0.5);
    }

    SUBCASE("hand sigmoid") {
        model.lambda_prop = 0.0;
        model.user_emb.row(0) << 1.0, 0.0;
        model.item_emb.row(1) << 2.0, 0.0;
        model.item_emb.row(2) << 0.0, 0.0;
        CHECK(rank_probability(model, bg, 0, 1, 2) ==
              doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
    }

    SUBCASE("complement identity holds exactly") {
        rng::Stream rand(3);
        for (int t = 0; t < 200; ++t) {
            const NodeId i = static_cast<NodeId>(rand.uniform_index(3));
            const NodeId j = static_cast<NodeId>(rand.uniform_index(3));
            const NodeId u = static_cast<NodeId>(rand.uniform_index(2));
            CHECK(rank_probability(model, bg, u, i, j) + rank_probability(model, bg, u, j, i) == 1.0);
        }
    }

    SUBCASE("monotone in the score difference") {
        model.lambda_prop = 0.0;
        model.user_emb.row(0) << 1.0, 0.0;
        model.item_emb.row(0) << 0.0, 0.0;
        model.item_emb.row(1) << 1.0, 0.0;
        model.item_emb.row(2) << 3.0, 0.0;
        CHECK(rank_probability(model, bg, 0, 2, 0) > rank_probability(model, bg, 0, 1, 0));
    }

    SUBCASE("out-of-range ids rejected") {
        CHECK_THROWS(rank_probability(model, bg, 5, 0, 1));
        CHECK_THROWS(rank_probability(model, bg, 0, 7, 1));
    }
}

TEST_CASE("triple gradient matches finite differences") {
    const BipartiteGraph bg = planted_blocks(3, 4, 77, 0.8, 0.3);
    BprConfig config;
    config.dim = 3;
    config.lambda_prop = 0.5;
    config.lambda_reg = 0.01;
    rng::Stream stream(4);
    BprModel model = bpr_init(3, 4, config, stream);

    // Pick a valid triple.
    const NodeId u = 1;
    const NodeId i = bg.user_items[1].front();
    NodeId j = 0;
    while (bg.has(u, j)) ++j;
    const Triple triple{u, i, j};

    std::map<std::pair<bool, NodeId>, Eigen::VectorXd> grads;
    triple_gradient(model, bg, triple, [&](bool is_user, NodeId id, const Eigen::VectorXd& g) {
        auto [it, fresh] = grads.try_emplace({is_user, id}, Eigen::VectorXd::Zero(config.dim));
        it->second += g;
    });

    const double h = 1e-6;
    auto fd_entry = [&](bool is_user, NodeId id, int k) {
        BprModel plus = model, minus = model;
        (is_user ? plus.user_emb : plus.item_emb)(id, k) += h;
        (is_user ? minus.user_emb : minus.item_emb)(id, k) -= h;
        return (triple_objective(plus, bg, triple) - triple_objective(minus, bg, triple)) / (2.0 * h);
    };
    for (bool is_user : {true, false}) {
        const NodeId count = is_user ? 3 : 4;
        for (NodeId id = 0; id < count; ++id) {
            for (int k = 0; k < config.dim; ++k) {
                const double fd = fd_entry(is_user, id, k);
                const auto it = grads.find({is_user, id});
                const double analytic = it == grads.end() ? 0.0 : it->second(k);
                CHECK(std::abs(analytic - fd) / std::max(std::abs(fd), 1e-4) < 1e-4);
            }
        }
    }
}

TEST_CASE("bpr_train") {
    SUBCASE("strong regularization shrinks the embeddings monotonically") {
        const BipartiteGraph bg = planted_blocks(10, 8, 5);
        BprConfig config;
        config.dim = 4;
        config.lambda_reg = 1e3;
        config.learning_rate = 1e-5;
        auto norm_after = [&](int epochs) {
            BprConfig c = config;
            c.epochs = epochs;
            rng::Stream stream(9);
            const BprTrainResult r = bpr_train(bg, nullptr, c, stream);
            return r.model.user_emb.norm() + r.model.item_emb.norm();
        };
        const double n0 = norm_after(0);
        const double n1 = norm_after(1);
        const double n2 = norm_after(2);
        const double n3 = norm_after(3);
        CHECK(n1 < n0);
        CHECK(n2 < n1);
        CHECK(n3 < n2);
    }

    SUBCASE("planted blocks reach high held-out AUC") {
        const BipartiteGraph bg = planted_blocks(60, 40, 6);
        rng::Stream split_stream(7);
        const Split split = split_interactions(bg, split_stream);
        BprConfig config;
        rng::Stream stream(8);
        const BprTrainResult r = bpr_train(split.train, nullptr, config, stream);
        CHECK(r.epoch_objective.back() > r.epoch_objective.front());
        CHECK(held_out_auc(r.model, split.train, split.test) > 0.9);
    }

    SUBCASE("zero epochs return the initialization") {
        const BipartiteGraph bg = planted_blocks(6, 5, 9);
        BprConfig config;
        config.epochs = 0;
        rng::Stream a(10);
        const BprTrainResult r = bpr_train(bg, nullptr, config, a);
        rng::Stream b(10);
        const BprModel fresh = bpr_init(6, 5, config, b);
        CHECK(r.model.user_emb == fresh.user_emb);
        CHECK(r.model.item_emb == fresh.item_emb);
    }

    SUBCASE("fully excluded users are skipped and logged") {
        const std::vector<std::pair<NodeId, NodeId>> pairs = {{0, 0}, {1, 0}, {1, 1}};
        const BipartiteGraph bg = BipartiteGraph::from_pairs(2, 2, pairs);
        // User 0: positives {0}, exclusion {1} -> no valid negative.
        std::vector<std::vector<NodeId>> exclusion = {{1}, {}};
        BprConfig config;
        config.epochs = 1;
        rng::Stream stream(11);
        CHECK_THROWS(bpr_train(bg, &exclusion, config, stream));  // user 1 has no negatives either
        const std::vector<std::pair<NodeId, NodeId>> pairs2 = {{0, 0}, {1, 0}};
        const BipartiteGraph bg2 = BipartiteGraph::from_pairs(2, 3, pairs2);
        std::vector<std::vector<NodeId>> exclusion2 = {{1, 2}, {}};
        rng::Stream stream2(12);
        const BprTrainResult r = bpr_train(bg2, &exclusion2, config, stream2);
        CHECK(r.skipped_users == std::vector<NodeId>{0});
    }
}

TEST_CASE("ensemble evaluation") {
    const BipartiteGraph bg = planted_blocks(24, 16, 13);
    BprConfig config;
    config.dim = 4;
    config.epochs = 5;
    rng::Stream stream(14);
    const BprTrainResult trained = bpr_train(bg, nullptr, config, stream);
    const JaccardResult jaccard = build_jaccard_user(bg);

    std::vector<Triple> triples;
    for (NodeId u = 0; u < bg.n_users; ++u) {
        const NodeId i = bg.user_items[static_cast<std::size_t>(u)].front();
        for (NodeId j = 0; j < bg.n_items && triples.size() < 40; ++j)
            if (!bg.has(u, j)) triples.push_back({u, i, j});
    }

    SUBCASE("self-copy ensembling equals the base evaluation") {
        CopyingDistribution self(bg.n_users);
        for (NodeId u = 0; u < bg.n_users; ++u) self.set_self_row(u);
        const std::vector<double> avg =
            ensemble_triple_probabilities(trained.model, bg, self, 3, triples, 21);
        for (std::size_t t = 0; t < triples.size(); ++t)
            CHECK(avg[t] ==
                  rank_probability(trained.model, bg, triples[t].user, triples[t].pos, triples[t].neg));
    }

    SUBCASE("graph-independent embeddings make ensembling a no-op") {
        BprModel flat = trained.model;
        flat.lambda_prop = 0.0;
        const std::vector<double> avg =
            ensemble_triple_probabilities(flat, bg, jaccard.dist, 7, triples, 22);
        for (std::size_t t = 0; t < triples.size(); ++t)
            CHECK(avg[t] == rank_probability(flat, bg, triples[t].user, triples[t].pos, triples[t].neg));
    }

    SUBCASE("estimator is the exact arithmetic mean of per-graph probabilities") {
        const int n_graphs = 5;
        const std::vector<double> avg =
            ensemble_triple_probabilities(trained.model, bg, jaccard.dist, n_graphs, triples, 23);
        std::vector<double> manual(triples.size(), 0.0);
        for (int k = 0; k < n_graphs; ++k) {
            rng::Stream replay = rng::make_stream(23, "copying", "ebpr-graph", static_cast<std::uint64_t>(k));
            const BipartiteGraph g = sample_bipartite(bg, jaccard.dist, replay);
            for (std::size_t t = 0; t < triples.size(); ++t)
                manual[t] += rank_probability(trained.model, g, triples[t].user, triples[t].pos,
                                              triples[t].neg);
        }
        for (std::size_t t = 0; t < triples.size(); ++t)
            CHECK(avg[t] == doctest::Approx(manual[t] / n_graphs).epsilon(1e-15));
    }

    SUBCASE("ensemble scores are deterministic across worker counts") {
        const Eigen::MatrixXd a = ensemble_scores(trained.model, bg, jaccard.dist, 6, 24, 1);
        const Eigen::MatrixXd b = ensemble_scores(trained.model, bg, jaccard.dist, 6, 24, 8);
        CHECK(a == b);
    }
}

TEST_CASE("recall and ndcg") {
    SUBCASE("recall basics") {
        CHECK(recall_at_k({1, 2, 3}, {1, 2, 3}, 10) == 1.0);
        CHECK(recall_at_k({4, 5, 6}, {1, 2}, 10) == 0.0);
        CHECK(recall_at_k({1, 9, 2, 8, 3, 7}, {1, 2, 3, 4}, 10) == doctest::Approx(0.75));
        CHECK_THROWS(recall_at_k({1}, {}, 10));
    }

    SUBCASE("ndcg basics") {
        CHECK(ndcg_at_k({3, 1, 2}, {3, 1, 2}, 3) == doctest::Approx(1.0));
        CHECK(ndcg_at_k({9, 5}, {5}, 2) == doctest::Approx(0.6309297535714574).epsilon(1e-9));
        CHECK(ndcg_at_k({9, 8, 7}, {1}, 3) == 0.0);
    }

    SUBCASE("reordering the non-recommended tail changes nothing") {
        const std::vector<NodeId> rec = {4, 1, 7};
        CHECK(recall_at_k(rec, {1, 2}, 3) == recall_at_k(rec, {2, 1}, 3));
        CHECK(ndcg_at_k(rec, {1, 2}, 3) == ndcg_at_k(rec, {2, 1}, 3));
    }

    SUBCASE("pushing a hit down one rank strictly lowers ndcg") {
        const double up = ndcg_at_k({5, 9, 8}, {5}, 3);
        const double mid = ndcg_at_k({9, 5, 8}, {5}, 3);
        const double down = ndcg_at_k({9, 8, 5}, {5}, 3);
        CHECK(up > mid);
        CHECK(mid > down);
    }
}

TEST_CASE("evaluate_ranking") {
    // 1 user, 4 items; item 0 is a training positive with the best score and
    // must be excluded from the recommendations.
    const BipartiteGraph train =
        BipartiteGraph::from_pairs(1, 4, std::vector<std::pair<NodeId, NodeId>>{{0, 0}});
    Eigen::MatrixXd scores(1, 4);
    scores << 0.99, 0.1, 0.9, 0.5;
    const std::vector<std::vector<NodeId>> test_positives = {{2}};
    const MetricsReport report = evaluate_ranking(scores, train, test_positives);
    CHECK(report.recall10 == 1.0);
    CHECK(report.ndcg10 == doctest::Approx(1.0));  // item 2 ranks first once 0 is excluded
    CHECK(report.evaluated_users.size() == 1);
    CHECK(report.skipped_users == 0);

    const std::vector<std::vector<NodeId>> nobody = {{}};
    CHECK_THROWS(evaluate_ranking(scores, train, nobody));
}

TEST_CASE("split_interactions") {
    const BipartiteGraph bg = planted_blocks(30, 20, 15);
    rng::Stream stream(16);
    const Split split = split_interactions(bg, stream);

    std::size_t train_n = split.train.interaction_count(), val_n = 0, test_n = 0;
    for (NodeId u = 0; u < bg.n_users; ++u) {
        val_n += split.validation[static_cast<std::size_t>(u)].size();
        test_n += split.test[static_cast<std::size_t>(u)].size();
        std::set<NodeId> all(bg.user_items[static_cast<std::size_t>(u)].begin(),
                             bg.user_items[static_cast<std::size_t>(u)].end());
        for (NodeId i : split.train.user_items[static_cast<std::size_t>(u)]) CHECK(all.count(i));
        for (NodeId i : split.validation[static_cast<std::size_t>(u)]) CHECK(all.count(i));
        for (NodeId i : split.test[static_cast<std::size_t>(u)]) {
            CHECK(all.count(i));
            CHECK_FALSE(split.train.has(u, i));
        }
    }
    CHECK(train_n + val_n + test_n == bg.interaction_count());
    CHECK(train_n > test_n);
    CHECK(test_n > 0);

    rng::Stream again(16);
    const Split replay = split_interactions(bg, again);
    CHECK(replay.train.user_items == split.train.user_items);
    CHECK(replay.test == split.test);
}

TEST_CASE("sgbpr") {
    const BipartiteGraph bg = planted_blocks(40, 24, 17);
    rng::Stream split_stream(18);
    const Split split = split_interactions(bg, split_stream);

    SUBCASE("vacuous threshold reduces to ensemble evaluation with retraining") {
        SgbprConfig config;
        config.n_graphs = 4;
        config.threshold_b = 1.0;  // nothing exceeds it
        config.bpr.epochs = 5;
        const SgbprResult r = sgbpr_train_evaluate(split.train, split.test, config, 31, 2);
        CHECK(r.excluded_pairs == 0);

        // Same pipeline composed by hand without any exclusion.
        rng::Stream train_stream = rng::make_stream(31, "recsys", "sgbpr-train");
        const BprTrainResult plain = bpr_train(split.train, nullptr, config.bpr, train_stream);
        const JaccardResult jaccard = build_jaccard_user(split.train);
        const Eigen::MatrixXd scores = ensemble_scores(plain.model, split.train, jaccard.dist,
                                                       config.n_graphs, 31, 2, "expected-adjacency");
        const MetricsReport manual = evaluate_ranking(scores, split.train, split.test);
        CHECK(r.metrics.recall20 == manual.recall20);
        CHECK(r.metrics.ndcg10 == manual.ndcg10);
    }

    SUBCASE("disjoint users make the jaccard model a self-copy and exclusion empty") {
        // Each user has a private item: jaccard rows collapse to self.
        std::vector<std::pair<NodeId, NodeId>> pairs;
        for (NodeId u = 0; u < 6; ++u) pairs.emplace_back(u, u);
        const BipartiteGraph solo = BipartiteGraph::from_pairs(6, 7, pairs);
        SgbprConfig config;
        config.n_graphs = 3;
        config.threshold_b = 0.1;
        config.bpr.epochs = 2;
        const std::vector<std::vector<NodeId>> test_positives = {{6}, {6}, {6}, {6}, {6}, {6}};
        const SgbprResult r = sgbpr_train_evaluate(solo, test_positives, config, 32, 1);
        CHECK(r.excluded_pairs == 0);
    }

    SUBCASE("deterministic across worker counts") {
        SgbprConfig config;
        config.n_graphs = 3;
        config.bpr.epochs = 3;
        const SgbprResult a = sgbpr_train_evaluate(split.train, split.test, config, 33, 1);
        const SgbprResult b = sgbpr_train_evaluate(split.train, split.test, config, 33, 8);
        CHECK(a.metrics.recall20 == b.metrics.recall20);
        CHECK(a.excluded_pairs == b.excluded_pairs);
    }
}
