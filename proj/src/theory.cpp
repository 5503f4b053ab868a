#include "copygraph/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "copygraph/parallel.hpp"

namespace copygraph::theory {

void SBMParams::validate() const {
    if (n_nodes < 1) throw std::invalid_argument("SBMParams: need at least one node");
    if (n_blocks < 1) throw std::invalid_argument("SBMParams: need at least one block");
    if (static_cast<NodeId>(assignment.size()) != n_nodes)
        throw std::invalid_argument("SBMParams: assignment size mismatch");
    if (beta.rows() != n_blocks || beta.cols() != n_blocks)
        throw std::invalid_argument("SBMParams: beta must be K x K");
    std::vector<bool> seen(static_cast<std::size_t>(n_blocks), false);
    for (int c : assignment) {
        if (c < 0 || c >= n_blocks) throw std::invalid_argument("SBMParams: block id out of range");
        seen[static_cast<std::size_t>(c)] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
        throw std::invalid_argument("SBMParams: every block must be nonempty");
    for (int a = 0; a < n_blocks; ++a)
        for (int b = 0; b < n_blocks; ++b) {
            if (beta(a, b) < 0.0 || beta(a, b) > 1.0)
                throw std::invalid_argument("SBMParams: probabilities must lie in [0, 1]");
            if (beta(a, b) != beta(b, a))
                throw std::invalid_argument("SBMParams: beta must be symmetric");
        }
}

void ERParams::validate() const {
    if (n_nodes < 1) throw std::invalid_argument("ERParams: need at least one node");
    if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("ERParams: theta must lie in [0, 1]");
}

Graph sample_sbm(const SBMParams& params, rng::Stream& stream) {
    params.validate();
    const NodeId n = params.n_nodes;
    std::vector<std::tuple<NodeId, NodeId, double>> edges;
    for (NodeId i = 0; i < n; ++i) {
        const int ci = params.assignment[static_cast<std::size_t>(i)];
        for (NodeId j = i + 1; j < n; ++j) {
            const double p = params.beta(ci, params.assignment[static_cast<std::size_t>(j)]);
            if (p >= 1.0 || (p > 0.0 && stream.uniform() < p)) edges.emplace_back(i, j, 1.0);
        }
    }
    return Graph::from_edges(n, false, edges);
}

Graph sample_er(const ERParams& params, rng::Stream& stream) {
    params.validate();
    SBMParams sbm;
    sbm.n_nodes = params.n_nodes;
    sbm.n_blocks = 1;
    sbm.assignment.assign(static_cast<std::size_t>(params.n_nodes), 0);
    sbm.beta = Eigen::MatrixXd::Constant(1, 1, params.theta);
    return sample_sbm(sbm, stream);
}

CopyingDistribution within_class_distribution(const std::vector<int>& labels) {
    return build_label_uniform(labels);
}

CopyingDistribution uniform_distribution(NodeId n) {
    CopyingDistribution dist(n, DistKind::Custom);
    std::vector<NodeId> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    const int pool = dist.add_pool(std::move(all));
    for (NodeId v = 0; v < n; ++v) dist.set_pool_row(v, pool);
    return dist;
}

CopyingDistribution powerlaw_distribution(NodeId n) {
    CopyingDistribution dist(n, DistKind::Custom);
    std::vector<NodeId> cands(static_cast<std::size_t>(n));
    std::iota(cands.begin(), cands.end(), 0);
    std::vector<double> probs(static_cast<std::size_t>(n));
    double total = 0.0;
    for (NodeId m = 0; m < n; ++m) total += 1.0 / (1.0 + m);
    for (NodeId m = 0; m < n; ++m) probs[static_cast<std::size_t>(m)] = 1.0 / ((1.0 + m) * total);
    for (NodeId v = 0; v < n; ++v) dist.set_row(v, cands, probs);
    return dist;
}

CopyingDistribution self_copy_distribution(NodeId n) {
    CopyingDistribution dist(n, DistKind::Custom);
    for (NodeId v = 0; v < n; ++v) dist.set_self_row(v);
    return dist;
}

CopyingDistribution cross_class_distribution(const std::vector<int>& labels) {
    const NodeId n = static_cast<NodeId>(labels.size());
    int n_classes = 0;
    for (int c : labels) n_classes = std::max(n_classes, c + 1);
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(n_classes));
    for (NodeId v = 0; v < n; ++v) members[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])].push_back(v);
    CopyingDistribution dist(n, DistKind::Custom);
    std::vector<int> pool_of(static_cast<std::size_t>(n_classes));
    for (int k = 0; k < n_classes; ++k) {
        const auto& next = members[static_cast<std::size_t>((k + 1) % n_classes)];
        if (next.empty()) throw std::invalid_argument("cross_class_distribution: empty class");
        pool_of[static_cast<std::size_t>(k)] = dist.add_pool(next);
    }
    for (NodeId v = 0; v < n; ++v)
        dist.set_pool_row(v, pool_of[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])]);
    return dist;
}

namespace {

struct ProbePair {
    NodeId i1, j1, i2, j2;
};

double normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

struct TrialTally {
    std::vector<double> cell_freq;         // per cell, over non-collision pairs
    std::vector<long long> cell_valid;     // counted pair indicators per cell
    std::vector<std::uint8_t> probe_bits;  // first-sample indicators, 2 per probe
};

VerificationReport run_harness(const SBMParams& params, const CopyingDistribution& dist,
                               std::uint64_t seed, const VerifyOptions& opts,
                               const char* purpose) {
    params.validate();
    dist.validate();
    if (dist.size() != params.n_nodes)
        throw std::invalid_argument("verify: distribution size must match node count");
    if (opts.n_trials < 2) throw std::invalid_argument("verify: need at least 2 trials");
    if (opts.samples_per_trial < 1)
        throw std::invalid_argument("verify: need at least 1 sample per trial");

    const NodeId n = params.n_nodes;
    const int K = params.n_blocks;
    const int n_cells = K * (K + 1) / 2;
    auto cell_of = [K](int a, int b) {
        if (a > b) std::swap(a, b);
        return a * K - a * (a - 1) / 2 + (b - a);
    };

    std::vector<long long> cell_pairs(static_cast<std::size_t>(n_cells), 0);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            ++cell_pairs[static_cast<std::size_t>(cell_of(params.assignment[static_cast<std::size_t>(i)],
                                                          params.assignment[static_cast<std::size_t>(j)]))];

    // Expected-count precondition for every non-degenerate cell.
    for (int a = 0; a < K; ++a)
        for (int b = a; b < K; ++b) {
            const double p = params.beta(a, b);
            if (p <= 0.0 || p >= 1.0) continue;
            const double expected = static_cast<double>(cell_pairs[static_cast<std::size_t>(cell_of(a, b))]) *
                                    opts.n_trials * opts.samples_per_trial * p;
            if (expected < 20.0)
                throw std::invalid_argument("verify: expected edge count below 20 in block cell (" +
                                            std::to_string(a) + "," + std::to_string(b) + ")");
        }

    // Deterministic covariance probe pairs: case 1 has distinct source rows,
    // case 2 shares the source row.
    rng::Stream probe_stream = rng::make_stream(seed, "theory", "probes");
    auto draw_pair = [&](bool shared_source) {
        for (;;) {
            const NodeId i1 = static_cast<NodeId>(probe_stream.uniform_index(static_cast<std::uint64_t>(n)));
            NodeId j1 = static_cast<NodeId>(probe_stream.uniform_index(static_cast<std::uint64_t>(n)));
            const NodeId i2 = shared_source
                                  ? i1
                                  : static_cast<NodeId>(probe_stream.uniform_index(static_cast<std::uint64_t>(n)));
            NodeId j2 = static_cast<NodeId>(probe_stream.uniform_index(static_cast<std::uint64_t>(n)));
            if (j1 == i1 || j2 == i2) continue;
            if (!shared_source && (i1 == i2 || j1 == j2)) continue;
            if (shared_source && j1 == j2) continue;
            return ProbePair{i1, j1, i2, j2};
        }
    };
    std::vector<ProbePair> probes;
    probes.reserve(static_cast<std::size_t>(2 * opts.n_covariance_probes));
    for (int k = 0; k < opts.n_covariance_probes; ++k) probes.push_back(draw_pair(false));
    for (int k = 0; k < opts.n_covariance_probes; ++k) probes.push_back(draw_pair(true));

    Graph fixed_gobs;
    if (opts.fixed_observed_graph) {
        rng::Stream s = rng::make_stream(seed, "theory", std::string(purpose) + "/gobs");
        fixed_gobs = sample_sbm(params, s);
    }

    std::vector<TrialTally> tallies(static_cast<std::size_t>(opts.n_trials));
    parallel_for(static_cast<std::size_t>(opts.n_trials), opts.workers, [&](std::size_t t) {
        rng::Stream stream = rng::make_stream(seed, "theory", purpose, t);
        TrialTally& tally = tallies[t];
        tally.cell_freq.assign(static_cast<std::size_t>(n_cells), 0.0);
        tally.cell_valid.assign(static_cast<std::size_t>(n_cells), 0);
        tally.probe_bits.assign(2 * probes.size(), 0);
        const Graph g_obs = opts.fixed_observed_graph ? fixed_gobs : sample_sbm(params, stream);
        for (int s = 0; s < opts.samples_per_trial; ++s) {
            const ReplacementVector zeta = sample_zeta(dist, stream);
            // Directed-copy entries: row i of the sample is row zeta[i] of
            // g_obs. A pair whose replacement collides with the probed
            // endpoint (zeta[i] == j) reads the empty diagonal of g_obs and
            // is skipped; the remaining indicators are exact Bernoulli(beta)
            // draws of the observed model.
            auto edge_on = [&](NodeId i, NodeId j) {
                return g_obs.has_arc(zeta.zeta[static_cast<std::size_t>(i)], j);
            };
            for (NodeId i = 0; i < n; ++i) {
                const NodeId zi = zeta.zeta[static_cast<std::size_t>(i)];
                const int ci = params.assignment[static_cast<std::size_t>(i)];
                for (NodeId j = i + 1; j < n; ++j) {
                    if (zi == j) continue;
                    const int cell = cell_of(ci, params.assignment[static_cast<std::size_t>(j)]);
                    ++tally.cell_valid[static_cast<std::size_t>(cell)];
                    if (g_obs.has_arc(zi, j)) tally.cell_freq[static_cast<std::size_t>(cell)] += 1.0;
                }
            }
            if (s == 0) {
                // Probes keep the raw indicators (collisions included); the
                // covariance test only needs the empirical means.
                for (std::size_t p = 0; p < probes.size(); ++p) {
                    tally.probe_bits[2 * p] = edge_on(probes[p].i1, probes[p].j1) ? 1 : 0;
                    tally.probe_bits[2 * p + 1] = edge_on(probes[p].i2, probes[p].j2) ? 1 : 0;
                }
            }
        }
        for (int c = 0; c < n_cells; ++c) {
            const long long valid = tally.cell_valid[static_cast<std::size_t>(c)];
            if (valid > 0)
                tally.cell_freq[static_cast<std::size_t>(c)] /= static_cast<double>(valid);
        }
    });

    VerificationReport report;
    report.n_trials = opts.n_trials;
    report.samples_per_trial = opts.samples_per_trial;
    report.z_threshold = opts.z_threshold;
    report.fixed_observed_graph = opts.fixed_observed_graph;

    bool all_pass = true;
    for (int a = 0; a < K; ++a) {
        for (int b = a; b < K; ++b) {
            const int c = cell_of(a, b);
            CellReport cell;
            cell.block_a = a;
            cell.block_b = b;
            cell.target = params.beta(a, b);
            cell.n_indicators = 0;
            for (const auto& t : tallies) cell.n_indicators += t.cell_valid[static_cast<std::size_t>(c)];
            double mean = 0.0;
            for (const auto& t : tallies) mean += t.cell_freq[static_cast<std::size_t>(c)];
            mean /= opts.n_trials;
            double var = 0.0;
            for (const auto& t : tallies) {
                const double d = t.cell_freq[static_cast<std::size_t>(c)] - mean;
                var += d * d;
            }
            var /= (opts.n_trials - 1);
            cell.frequency = mean;
            cell.std_error = std::sqrt(var / opts.n_trials);
            if (cell.std_error > 0.0) {
                cell.z = (mean - cell.target) / cell.std_error;
                cell.pass = std::abs(cell.z) < opts.z_threshold;
            } else {
                cell.z = (mean == cell.target) ? 0.0 : std::numeric_limits<double>::infinity();
                cell.pass = mean == cell.target;
            }
            all_pass = all_pass && cell.pass;
            report.cells.push_back(cell);
        }
    }

    auto probe_summary = [&](std::size_t lo, std::size_t hi) {
        CovarianceProbes out;
        out.n_probes = static_cast<int>(hi - lo);
        for (std::size_t p = lo; p < hi; ++p) {
            double mx = 0.0, my = 0.0;
            for (const auto& t : tallies) {
                mx += t.probe_bits[2 * p];
                my += t.probe_bits[2 * p + 1];
            }
            mx /= opts.n_trials;
            my /= opts.n_trials;
            double cov = 0.0, vx = 0.0, vy = 0.0;
            for (const auto& t : tallies) {
                const double dx = t.probe_bits[2 * p] - mx;
                const double dy = t.probe_bits[2 * p + 1] - my;
                cov += dx * dy;
                vx += dx * dx;
                vy += dy * dy;
            }
            cov /= (opts.n_trials - 1);
            vx /= (opts.n_trials - 1);
            vy /= (opts.n_trials - 1);
            const double z = (vx > 0.0 && vy > 0.0)
                                 ? cov / std::sqrt(vx * vy) * std::sqrt(static_cast<double>(opts.n_trials))
                                 : 0.0;
            out.max_abs_covariance = std::max(out.max_abs_covariance, std::abs(cov));
            out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
        }
        out.pass = out.max_abs_z < opts.z_threshold;
        return out;
    };
    report.disjoint_source_probes = probe_summary(0, static_cast<std::size_t>(opts.n_covariance_probes));
    report.shared_source_probes =
        probe_summary(static_cast<std::size_t>(opts.n_covariance_probes), probes.size());
    all_pass = all_pass && report.disjoint_source_probes.pass && report.shared_source_probes.pass;

    const int n_tests = n_cells + 2 * opts.n_covariance_probes;
    report.union_bound_budget = n_tests * 2.0 * normal_tail(opts.z_threshold);
    report.pass = all_pass;
    return report;
}

}  // namespace

VerificationReport verify_sbm_marginal(const SBMParams& params, const CopyingDistribution& dist,
                                       std::uint64_t seed, const VerifyOptions& opts) {
    return run_harness(params, dist, seed, opts, "sbm-trial");
}

VerificationReport verify_er_marginal(const ERParams& params, const CopyingDistribution& dist,
                                      std::uint64_t seed, const VerifyOptions& opts) {
    params.validate();
    SBMParams sbm;
    sbm.n_nodes = params.n_nodes;
    sbm.n_blocks = 1;
    sbm.assignment.assign(static_cast<std::size_t>(params.n_nodes), 0);
    sbm.beta = Eigen::MatrixXd::Constant(1, 1, params.theta);
    return run_harness(sbm, dist, seed, opts, "er-trial");
}

}  // namespace copygraph::theory
