#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "copygraph/adversarial.hpp"
#include "copygraph/copying.hpp"
#include "copygraph/gcn.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace copygraph;
using namespace copygraph::adv;

namespace {

int same_class_neighbors(const Graph& g, const NodeLabels& labels, NodeId v) {
    int count = 0;
    for (const Arc& a : g.row(v))
        if (a.target != v && labels.label(a.target) == labels.label(v)) ++count;
    return count;
}

}  // namespace

TEST_CASE("dice_attack") {
    const auto problem = testutil::make_classification_problem({.n_nodes = 80}, 51);

    SUBCASE("beta zero leaves the graph unchanged") {
        AttackSpec spec;
        spec.targets = {5, 11};
        spec.beta_frac = 0.0;
        const AttackResult r = dice_attack(problem.graph, problem.labels, spec);
        CHECK(r.graph == problem.graph);
        for (const auto& e : r.edits) {
            CHECK(e.removed.empty());
            CHECK(e.added.empty());
        }
    }

    SUBCASE("half of four same-class neighbors are rewired, degree preserved") {
        // Build a controlled instance: target 0 with 4 same-class and 2
        // cross-class neighbors plus spare cross-class non-neighbors.
        std::vector<std::tuple<NodeId, NodeId, double>> edges;
        for (NodeId u = 1; u <= 4; ++u) edges.emplace_back(0, u, 1.0);
        edges.emplace_back(0, 5, 1.0);
        edges.emplace_back(0, 6, 1.0);
        const Graph g = Graph::from_edges(10, false, edges);
        NodeLabels labels{{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, 2};
        AttackSpec spec;
        spec.targets = {0};
        spec.beta_frac = 0.5;
        spec.seed = 3;
        const AttackResult r = dice_attack(g, labels, spec);
        CHECK(r.edits[0].removed.size() == 2);
        CHECK(r.edits[0].added.size() == 2);
        CHECK(r.edits[0].shortfall == 0);
        CHECK(r.graph.out_degree(0) == g.out_degree(0));
        for (NodeId u : r.edits[0].removed) CHECK(labels.label(u) == 0);
        for (NodeId u : r.edits[0].added) {
            CHECK(labels.label(u) == 1);
            CHECK_FALSE(g.has_arc(0, u));
            CHECK(r.graph.has_arc(0, u));
            CHECK(r.graph.has_arc(u, 0));
        }
    }

    SUBCASE("round-half-up removes two of two at beta 0.75") {
        std::vector<std::tuple<NodeId, NodeId, double>> edges = {{0, 1, 1}, {0, 2, 1}};
        const Graph g = Graph::from_edges(8, false, edges);
        NodeLabels labels{{0, 0, 0, 1, 1, 1, 1, 1}, 2};
        AttackSpec spec;
        spec.targets = {0};
        spec.beta_frac = 0.75;
        const AttackResult r = dice_attack(g, labels, spec);
        CHECK(r.edits[0].removed.size() == 2);
        CHECK(r.edits[0].added.size() == 2);
    }

    SUBCASE("shortfall is reported when cross-class candidates run out") {
        // Only one cross-class node exists and it is already a neighbor.
        std::vector<std::tuple<NodeId, NodeId, double>> edges = {
            {0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {0, 4, 1}};
        const Graph g = Graph::from_edges(5, false, edges);
        NodeLabels labels{{0, 0, 0, 0, 1}, 2};
        AttackSpec spec;
        spec.targets = {0};
        spec.beta_frac = 1.0;
        const AttackResult r = dice_attack(g, labels, spec);
        CHECK(r.edits[0].removed.size() == 3);
        CHECK(r.edits[0].added.empty());
        CHECK(r.edits[0].shortfall == 3);
    }

    SUBCASE("same-class neighbor fraction strictly decreases") {
        AttackSpec spec;
        spec.beta_frac = 0.5;
        spec.seed = 9;
        for (NodeId v = 0; v < 20; ++v)
            if (same_class_neighbors(problem.graph, problem.labels, v) >= 2) spec.targets.push_back(v);
        REQUIRE(spec.targets.size() >= 5);
        const AttackResult r = dice_attack(problem.graph, problem.labels, spec);
        for (NodeId v : spec.targets) {
            const int before = same_class_neighbors(problem.graph, problem.labels, v);
            const int after = same_class_neighbors(r.graph, problem.labels, v);
            CHECK(after < before);
        }
    }

    SUBCASE("degree is preserved exactly for non-adjacent targets") {
        // Adjacent targets edit each other's incident edges, so the exact
        // degree identity is checked on an independent set.
        AttackSpec spec;
        spec.beta_frac = 0.5;
        spec.seed = 10;
        std::set<NodeId> taken;
        for (NodeId v = 0; v < problem.graph.num_nodes(); ++v) {
            if (same_class_neighbors(problem.graph, problem.labels, v) < 2) continue;
            bool adjacent = taken.count(v) > 0;
            for (const Arc& a : problem.graph.row(v)) adjacent = adjacent || taken.count(a.target) > 0;
            if (adjacent) continue;
            spec.targets.push_back(v);
            taken.insert(v);
        }
        REQUIRE(spec.targets.size() >= 4);
        const AttackResult r = dice_attack(problem.graph, problem.labels, spec);
        bool interference = false;
        for (const auto& e : r.edits)
            for (NodeId u : e.added) interference = interference || taken.count(u) > 0;
        if (!interference) {
            for (const auto& e : r.edits) {
                if (e.shortfall > 0) continue;
                CHECK(r.graph.out_degree(e.target) == problem.graph.out_degree(e.target));
            }
        }
    }

    SUBCASE("unlabeled node or directed graph rejected") {
        NodeLabels partial = problem.labels;
        partial.labels[3] = -1;
        AttackSpec spec;
        spec.targets = {0};
        CHECK_THROWS(dice_attack(problem.graph, partial, spec));
        CHECK_THROWS(dice_attack(Graph(4, true), NodeLabels{{0, 0, 0, 0}, 1}, spec));
    }
}

TEST_CASE("spectral_embedding") {
    SUBCASE("two cliques separate") {
        std::vector<std::tuple<NodeId, NodeId, double>> edges;
        for (NodeId i = 0; i < 4; ++i)
            for (NodeId j = i + 1; j < 4; ++j) edges.emplace_back(i, j, 1.0);
        for (NodeId i = 4; i < 8; ++i)
            for (NodeId j = i + 1; j < 8; ++j) edges.emplace_back(i, j, 1.0);
        const Graph g = Graph::from_edges(8, false, edges);
        const Eigen::MatrixXd e = spectral_embedding(g, nullptr, 2);
        double max_within = 0.0, min_across = 1e9;
        for (NodeId i = 0; i < 8; ++i)
            for (NodeId j = i + 1; j < 8; ++j) {
                const double d = (e.row(i) - e.row(j)).norm();
                if ((i < 4) == (j < 4))
                    max_within = std::max(max_within, d);
                else
                    min_across = std::min(min_across, d);
            }
        CHECK(max_within < min_across);
    }

    SUBCASE("leading eigenvector of a connected graph is positive") {
        const auto problem = testutil::make_classification_problem(
            {.n_nodes = 40, .within = 0.4, .across = 0.2}, 52);
        const Eigen::MatrixXd e = spectral_embedding(problem.graph, nullptr, 1);
        for (NodeId v = 0; v < 40; ++v) CHECK(e(v, 0) > 0.0);
    }

    SUBCASE("nodes with identical adjacency rows embed identically") {
        // Nodes 0 and 1 both connect to {2, 3} and not to each other.
        std::vector<std::tuple<NodeId, NodeId, double>> edges = {
            {0, 2, 1}, {0, 3, 1}, {1, 2, 1}, {1, 3, 1}, {2, 3, 1}, {3, 4, 1}};
        const Graph g = Graph::from_edges(5, false, edges);
        const Eigen::MatrixXd e = spectral_embedding(g, nullptr, 2);
        CHECK((e.row(0) - e.row(1)).norm() < 1e-9);
    }

    SUBCASE("feature augmentation doubles the width and stays deterministic") {
        const auto problem = testutil::make_classification_problem({.n_nodes = 30}, 53);
        const Eigen::MatrixXd a = spectral_embedding(problem.graph, &problem.features, 3);
        const Eigen::MatrixXd b = spectral_embedding(problem.graph, &problem.features, 3);
        CHECK(a == b);
        CHECK(a.cols() == 3 + std::min<Eigen::Index>(3, problem.features.cols()));
    }

    SUBCASE("bad dimension rejected") {
        const Graph g(5, false);
        CHECK_THROWS(spectral_embedding(g, nullptr, 0));
        CHECK_THROWS(spectral_embedding(g, nullptr, 5));
    }
}

TEST_CASE("pairwise_distances") {
    SUBCASE("identical rows give zero") {
        Eigen::MatrixXd e = Eigen::MatrixXd::Ones(3, 4);
        CHECK(pairwise_distances(e).maxCoeff() == 0.0);
    }
    SUBCASE("one-dimensional rows") {
        Eigen::MatrixXd e(2, 1);
        e << 0.0, 3.0;
        const Eigen::MatrixXd d = pairwise_distances(e);
        CHECK(d(0, 1) == 3.0);
        CHECK(d(1, 0) == 3.0);
        CHECK(d(0, 0) == 0.0);
    }
    SUBCASE("matches the explicit double loop") {
        rng::Stream stream(54);
        Eigen::MatrixXd e(4, 3);
        for (Eigen::Index i = 0; i < 4; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) e(i, j) = stream.normal();
        const Eigen::MatrixXd d = pairwise_distances(e);
        for (Eigen::Index i = 0; i < 4; ++i)
            for (Eigen::Index j = 0; j < 4; ++j) {
                double s = 0.0;
                for (Eigen::Index k = 0; k < 3; ++k) s += (e(i, k) - e(j, k)) * (e(i, k) - e(j, k));
                CHECK(d(i, j) == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
            }
    }
}

TEST_CASE("localized single-copy prediction is exact") {
    const auto problem = testutil::make_classification_problem({.n_nodes = 20}, 55);
    rng::Stream init(3);
    const gcn::GcnModel model = gcn::init_model(2, 8, 2, 0.0, init);
    rng::Stream pick(4);
    for (int trial = 0; trial < 40; ++trial) {
        const NodeId v = static_cast<NodeId>(pick.uniform_index(20));
        const NodeId r = static_cast<NodeId>(pick.uniform_index(20));
        ReplacementVector zeta = ReplacementVector::identity(20);
        zeta.zeta[static_cast<std::size_t>(v)] = r;
        const Graph full = apply_copy_undirected(problem.graph, zeta);
        const gcn::SoftmaxTable z =
            gcn::gcn_forward(model, gcn::normalize_adjacency(full), problem.features, false, nullptr);
        const Eigen::VectorXd local = gcn::predict_single_copy(model, problem.graph, problem.features, v, r);
        CHECK((local.transpose() - z.row(v)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("self replacement reproduces the trained prediction") {
    const auto problem = testutil::make_classification_problem({.n_nodes = 25}, 56);
    const Eigen::SparseMatrix<double> op = gcn::normalize_adjacency(problem.graph);
    rng::Stream stream(5);
    const gcn::TrainResult trained =
        gcn::gcn_train(op, problem.features, problem.labels, problem.split.train, {.epochs = 30}, stream);
    const gcn::SoftmaxTable base = gcn::gcn_forward(trained.model, op, problem.features, false, nullptr);
    for (NodeId v = 0; v < 25; ++v) {
        const Eigen::VectorXd row =
            gcn::predict_single_copy(trained.model, problem.graph, problem.features, v, v);
        CHECK((row.transpose() - base.row(v)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("defend_copying") {
    const auto problem = testutil::make_classification_problem(
        {.n_nodes = 300, .within = 0.08, .across = 0.005, .feature_noise = 0.8}, 57);

    AttackSpec spec;
    spec.beta_frac = 0.5;
    spec.seed = 6;
    std::set<NodeId> train_set(problem.split.train.begin(), problem.split.train.end());
    for (NodeId v = 0; v < 300 && spec.targets.size() < 25; ++v)
        if (!train_set.count(v) && same_class_neighbors(problem.graph, problem.labels, v) >= 2)
            spec.targets.push_back(v);
    const AttackResult attack = dice_attack(problem.graph, problem.labels, spec);

    DefenseConfig config;
    config.n_graphs = 10;
    config.order_statistic = 5;
    config.embedding_dim = 4;
    const DefenseResult defense =
        defend_copying(attack.graph, problem.features, problem.labels, problem.split.train,
                       spec.targets, config, 77, 4);

    SUBCASE("non-target predictions are untouched") {
        std::set<NodeId> targets(spec.targets.begin(), spec.targets.end());
        for (NodeId v = 0; v < 200; ++v) {
            if (targets.count(v)) continue;
            CHECK((defense.defended.row(v) - defense.attacked.row(v)).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    SUBCASE("defense recovers accuracy at the attacked nodes") {
        const double attacked_acc = gcn::accuracy(defense.attacked, problem.labels, spec.targets);
        const double defended_acc = gcn::accuracy(defense.defended, problem.labels, spec.targets);
        CHECK(defended_acc > attacked_acc);
    }

    SUBCASE("worker count does not change the defense") {
        const DefenseResult again =
            defend_copying(attack.graph, problem.features, problem.labels, problem.split.train,
                           spec.targets, config, 77, 1);
        CHECK((again.defended - defense.defended).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("deterministic single-draw defense equals the nearest-neighbor view") {
        DefenseConfig det = config;
        det.n_graphs = 1;
        det.order_statistic = 1;
        const DefenseResult d =
            defend_copying(attack.graph, problem.features, problem.labels, problem.split.train,
                           {spec.targets[0]}, det, 99, 1);
        // P=1 makes the replacement the unique nearest embedding neighbor.
        const Eigen::MatrixXd emb =
            spectral_embedding(attack.graph, &problem.features, det.embedding_dim);
        const Eigen::MatrixXd dist = pairwise_distances(emb);
        const CopyingDistribution nn = build_order_statistic(dist, 1);
        const NodeId v = spec.targets[0];
        const NodeId r = nn.row(v).candidates[0];
        rng::Stream replay = rng::make_stream(99, "defend", "train");
        const gcn::TrainResult trained = gcn::gcn_train(gcn::normalize_adjacency(attack.graph),
                                                        problem.features, problem.labels,
                                                        problem.split.train, det.gcn, replay);
        const Eigen::VectorXd expected =
            gcn::predict_single_copy(trained.model, attack.graph, problem.features, v, r);
        CHECK((d.defended.row(v) - expected.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}
