#include "copygraph/copying.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <charconv>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "copygraph/io.hpp"
#include "copygraph/parallel.hpp"

namespace copygraph {

namespace {

long strict_long(const std::string& s, const std::string& path, std::size_t lineno) {
    long out = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw io::ParseError(path, lineno, "expected an integer, got '" + s + "'");
    return out;
}

double strict_double(const std::string& s, const std::string& path, std::size_t lineno) {
    if (s.empty()) throw io::ParseError(path, lineno, "empty number");
    char* end = nullptr;
    const double out = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(out))
        throw io::ParseError(path, lineno, "expected a number, got '" + s + "'");
    return out;
}

}  // namespace

ReplacementVector ReplacementVector::identity(NodeId n) {
    ReplacementVector zeta;
    zeta.zeta.resize(static_cast<std::size_t>(n));
    std::iota(zeta.zeta.begin(), zeta.zeta.end(), 0);
    return zeta;
}

std::string to_string(DistKind kind) {
    switch (kind) {
        case DistKind::LabelUniform: return "label-uniform";
        case DistKind::KnnEmbedding: return "knn";
        case DistKind::OrderStatistic: return "order-statistic";
        case DistKind::Jaccard: return "jaccard";
        case DistKind::Custom: return "custom";
    }
    return "unknown";
}

double CopyingDistribution::RowView::prob_of(NodeId candidate) const {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (candidates[k] == candidate) return probs ? probs[k] : 1.0 / candidates.size();
    }
    return 0.0;
}

CopyingDistribution::CopyingDistribution(NodeId n, DistKind kind) : kind_(kind) {
    rows_.resize(static_cast<std::size_t>(n));
}

CopyingDistribution::RowView CopyingDistribution::row(NodeId j) const {
    const Row& r = rows_.at(static_cast<std::size_t>(j));
    if (r.pool >= 0) {
        const auto& pool = pools_[static_cast<std::size_t>(r.pool)];
        return {std::span<const NodeId>(pool), nullptr};
    }
    return {std::span<const NodeId>(r.cands), r.probs.empty() ? nullptr : r.probs.data()};
}

void CopyingDistribution::set_uniform_row(NodeId j, std::vector<NodeId> candidates) {
    if (candidates.empty()) throw std::invalid_argument("CopyingDistribution: empty row");
    rows_.at(static_cast<std::size_t>(j)) = Row{-1, std::move(candidates), {}};
}

void CopyingDistribution::set_row(NodeId j, std::vector<NodeId> candidates,
                                  std::vector<double> probs) {
    if (candidates.size() != probs.size() || candidates.empty())
        throw std::invalid_argument("CopyingDistribution: bad row");
    rows_.at(static_cast<std::size_t>(j)) = Row{-1, std::move(candidates), std::move(probs)};
}

void CopyingDistribution::set_self_row(NodeId j) { set_uniform_row(j, {j}); }

int CopyingDistribution::add_pool(std::vector<NodeId> candidates) {
    if (candidates.empty()) throw std::invalid_argument("CopyingDistribution: empty pool");
    pools_.push_back(std::move(candidates));
    return static_cast<int>(pools_.size()) - 1;
}

void CopyingDistribution::set_pool_row(NodeId j, int pool) {
    if (pool < 0 || pool >= static_cast<int>(pools_.size()))
        throw std::out_of_range("CopyingDistribution: bad pool id");
    rows_.at(static_cast<std::size_t>(j)) = Row{pool, {}, {}};
}

void CopyingDistribution::validate(double tol) const {
    const NodeId n = size();
    for (NodeId j = 0; j < n; ++j) {
        const RowView rv = row(j);
        if (rv.candidates.empty())
            throw std::invalid_argument("CopyingDistribution: node " + std::to_string(j) +
                                        " has no candidates");
        std::vector<NodeId> sorted(rv.candidates.begin(), rv.candidates.end());
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("CopyingDistribution: duplicate candidate in row " +
                                        std::to_string(j));
        for (NodeId c : rv.candidates)
            if (c < 0 || c >= n)
                throw std::out_of_range("CopyingDistribution: candidate out of range in row " +
                                        std::to_string(j));
        if (rv.probs) {
            double sum = 0.0;
            for (std::size_t k = 0; k < rv.candidates.size(); ++k) {
                if (rv.probs[k] < 0.0 || !std::isfinite(rv.probs[k]))
                    throw std::invalid_argument("CopyingDistribution: negative probability in row " +
                                                std::to_string(j));
                sum += rv.probs[k];
            }
            if (std::abs(sum - 1.0) > tol)
                throw std::invalid_argument("CopyingDistribution: row " + std::to_string(j) +
                                            " sums to " + std::to_string(sum));
        }
    }
}

NodeId CopyingDistribution::sample_row(NodeId j, rng::Stream& stream) const {
    const RowView rv = row(j);
    if (!rv.probs)
        return rv.candidates[stream.uniform_index(rv.candidates.size())];
    const double u = stream.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < rv.candidates.size(); ++k) {
        acc += rv.probs[k];
        if (u < acc) return rv.candidates[k];
    }
    return rv.candidates.back();  // guard against accumulated rounding
}

CopyingDistribution build_label_uniform(const std::vector<int>& labels) {
    const NodeId n = static_cast<NodeId>(labels.size());
    int n_classes = 0;
    for (NodeId v = 0; v < n; ++v) {
        if (labels[static_cast<std::size_t>(v)] < 0)
            throw std::invalid_argument("build_label_uniform: node " + std::to_string(v) +
                                        " has no label");
        n_classes = std::max(n_classes, labels[static_cast<std::size_t>(v)] + 1);
    }
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(n_classes));
    for (NodeId v = 0; v < n; ++v) members[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])].push_back(v);

    CopyingDistribution dist(n, DistKind::LabelUniform);
    std::vector<int> pool_of(static_cast<std::size_t>(n_classes), -1);
    for (int k = 0; k < n_classes; ++k)
        if (!members[static_cast<std::size_t>(k)].empty())
            pool_of[static_cast<std::size_t>(k)] = dist.add_pool(members[static_cast<std::size_t>(k)]);
    for (NodeId v = 0; v < n; ++v)
        dist.set_pool_row(v, pool_of[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])]);
    return dist;
}

namespace {

/// K smallest (value, id) entries of row j excluding j itself; ties by id.
std::vector<NodeId> k_nearest(const std::function<double(NodeId)>& dist_to, NodeId n, NodeId j,
                              int K) {
    std::vector<std::pair<double, NodeId>> entries;
    entries.reserve(static_cast<std::size_t>(n) - 1);
    for (NodeId m = 0; m < n; ++m) {
        if (m == j) continue;
        entries.emplace_back(dist_to(m), m);
    }
    std::partial_sort(entries.begin(), entries.begin() + K, entries.end());
    std::vector<NodeId> out(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) out[static_cast<std::size_t>(k)] = entries[static_cast<std::size_t>(k)].second;
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

CopyingDistribution build_knn_embedding(const Eigen::MatrixXd& embeddings, int K) {
    const NodeId n = static_cast<NodeId>(embeddings.rows());
    if (K < 1) throw std::invalid_argument("build_knn_embedding: K must be >= 1");
    if (K >= n) throw std::invalid_argument("build_knn_embedding: K must be < N");
    if (!embeddings.allFinite())
        throw std::invalid_argument("build_knn_embedding: embeddings must be finite");
    CopyingDistribution dist(n, DistKind::KnnEmbedding);
    for (NodeId j = 0; j < n; ++j) {
        const auto ej = embeddings.row(j);
        dist.set_uniform_row(j, k_nearest([&](NodeId m) { return (embeddings.row(m) - ej).squaredNorm(); },
                                          n, j, K));
    }
    return dist;
}

CopyingDistribution build_order_statistic(const Eigen::MatrixXd& distances, int P) {
    const NodeId n = static_cast<NodeId>(distances.rows());
    if (distances.cols() != distances.rows())
        throw std::invalid_argument("build_order_statistic: distance matrix must be square");
    if (P < 1) throw std::invalid_argument("build_order_statistic: P must be >= 1");
    if (P >= n) throw std::invalid_argument("build_order_statistic: P must be < N");
    for (NodeId i = 0; i < n; ++i) {
        if (distances(i, i) != 0.0)
            throw std::invalid_argument("build_order_statistic: nonzero diagonal");
        for (NodeId j = i + 1; j < n; ++j) {
            if (distances(i, j) < 0.0 || distances(i, j) != distances(j, i))
                throw std::invalid_argument("build_order_statistic: matrix must be symmetric nonnegative");
        }
    }
    CopyingDistribution dist(n, DistKind::OrderStatistic);
    for (NodeId v = 0; v < n; ++v)
        dist.set_uniform_row(v, k_nearest([&](NodeId m) { return distances(v, m); }, n, v, P));
    return dist;
}

JaccardResult build_jaccard_user(const BipartiteGraph& bg, bool include_self) {
    const NodeId n_users = bg.n_users;
    JaccardResult out;
    out.dist = CopyingDistribution(n_users, DistKind::Jaccard);

    std::vector<double> overlap(static_cast<std::size_t>(n_users), 0.0);
    std::vector<NodeId> touched;
    for (NodeId j = 0; j < n_users; ++j) {
        const auto& items_j = bg.user_items[static_cast<std::size_t>(j)];
        touched.clear();
        for (NodeId i : items_j) {
            for (NodeId m : bg.item_users[static_cast<std::size_t>(i)]) {
                if (m == j) continue;
                if (overlap[static_cast<std::size_t>(m)] == 0.0) touched.push_back(m);
                overlap[static_cast<std::size_t>(m)] += 1.0;
            }
        }
        std::sort(touched.begin(), touched.end());

        std::vector<NodeId> cands;
        std::vector<double> rho;
        for (NodeId m : touched) {
            const double inter = overlap[static_cast<std::size_t>(m)];
            const double uni = static_cast<double>(items_j.size()) +
                               static_cast<double>(bg.user_items[static_cast<std::size_t>(m)].size()) - inter;
            cands.push_back(m);
            rho.push_back(inter / uni);
        }
        if (include_self && !items_j.empty()) {
            // rho(j, j) = 1: insert keeping candidates sorted by id. For a
            // user with no items the self-similarity is 0/0, so the row
            // stays undefined and takes the fallback below.
            auto pos = std::lower_bound(cands.begin(), cands.end(), j);
            rho.insert(rho.begin() + (pos - cands.begin()), 1.0);
            cands.insert(pos, j);
        }
        const double total = std::accumulate(rho.begin(), rho.end(), 0.0);
        if (total <= 0.0) {
            out.dist.set_self_row(j);
            ++out.fallback_users;
        } else {
            for (double& p : rho) p /= total;
            out.dist.set_row(j, std::move(cands), std::move(rho));
        }
        for (NodeId m : touched) overlap[static_cast<std::size_t>(m)] = 0.0;
    }
    return out;
}

ReplacementVector sample_zeta(const CopyingDistribution& dist, rng::Stream& stream) {
    ReplacementVector out;
    const NodeId n = dist.size();
    out.zeta.resize(static_cast<std::size_t>(n));
    for (NodeId j = 0; j < n; ++j) out.zeta[static_cast<std::size_t>(j)] = dist.sample_row(j, stream);
    return out;
}

Graph apply_copy(const Graph& g_obs, const ReplacementVector& zeta) {
    const NodeId n = g_obs.num_nodes();
    if (static_cast<NodeId>(zeta.zeta.size()) != n)
        throw std::invalid_argument("apply_copy: zeta length must equal node count");
    std::vector<std::vector<Arc>> rows(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) {
        const NodeId r = zeta.zeta[static_cast<std::size_t>(i)];
        if (r < 0 || r >= n) throw std::out_of_range("apply_copy: replacement id out of range");
        rows[static_cast<std::size_t>(i)] = g_obs.row(r);
    }
    return Graph::from_rows(true, std::move(rows));
}

Graph apply_copy_undirected(const Graph& g_obs, const ReplacementVector& zeta) {
    if (g_obs.directed())
        throw std::invalid_argument("apply_copy_undirected: graph must be undirected");
    return symmetrize(apply_copy(g_obs, zeta));
}

Graph sample_graph(const Graph& g_obs, const CopyingDistribution& dist, rng::Stream& stream) {
    const ReplacementVector zeta = sample_zeta(dist, stream);
    return g_obs.directed() ? apply_copy(g_obs, zeta) : apply_copy_undirected(g_obs, zeta);
}

BipartiteGraph sample_bipartite(const BipartiteGraph& bg, const CopyingDistribution& user_dist,
                                rng::Stream& stream) {
    if (user_dist.size() != bg.n_users)
        throw std::invalid_argument("sample_bipartite: distribution size must equal user count");
    BipartiteGraph out;
    out.n_users = bg.n_users;
    out.n_items = bg.n_items;
    out.user_items.resize(static_cast<std::size_t>(bg.n_users));
    out.item_users.assign(static_cast<std::size_t>(bg.n_items), {});
    for (NodeId u = 0; u < bg.n_users; ++u) {
        const NodeId r = user_dist.sample_row(u, stream);
        out.user_items[static_cast<std::size_t>(u)] = bg.user_items[static_cast<std::size_t>(r)];
        for (NodeId i : out.user_items[static_cast<std::size_t>(u)])
            out.item_users[static_cast<std::size_t>(i)].push_back(u);
    }
    return out;
}

double ExpectedAdjacency::value(NodeId i, NodeId j) const {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const Arc& a, NodeId t) { return a.target < t; });
    return (it != row.end() && it->target == j) ? it->weight : 0.0;
}

namespace {

ExpectedAdjacency average_sampled_rows(
    NodeId n, int n_samples,
    const std::vector<std::vector<std::pair<NodeId, std::vector<Arc>>>>& per_sample_rows) {
    ExpectedAdjacency ea;
    ea.n_nodes = n;
    ea.n_samples = n_samples;
    ea.rows.resize(static_cast<std::size_t>(n));

    // Accumulate sample-by-sample in index order so the result does not
    // depend on the parallel schedule that produced the samples.
    std::vector<std::unordered_map<NodeId, double>> acc(static_cast<std::size_t>(n));
    for (const auto& sample : per_sample_rows)
        for (const auto& [i, arcs] : sample)
            for (const Arc& a : arcs) acc[static_cast<std::size_t>(i)][a.target] += a.weight;

    const double cutoff = 1.0 / (2.0 * n_samples);
    for (NodeId i = 0; i < n; ++i) {
        auto& row = ea.rows[static_cast<std::size_t>(i)];
        for (const auto& [j, total] : acc[static_cast<std::size_t>(i)]) {
            const double mean = total / n_samples;
            if (mean >= cutoff) row.push_back({j, mean});
        }
        std::sort(row.begin(), row.end(),
                  [](const Arc& a, const Arc& b) { return a.target < b.target; });
    }
    return ea;
}

}  // namespace

ExpectedAdjacency estimate_expected_adjacency(const Graph& g_obs, const CopyingDistribution& dist,
                                              int n_samples, std::uint64_t seed, int workers) {
    if (n_samples < 1) throw std::invalid_argument("estimate_expected_adjacency: n_samples >= 1");
    const NodeId n = g_obs.num_nodes();
    std::vector<std::vector<std::pair<NodeId, std::vector<Arc>>>> samples(
        static_cast<std::size_t>(n_samples));
    parallel_for(static_cast<std::size_t>(n_samples), workers, [&](std::size_t k) {
        rng::Stream stream = rng::make_stream(seed, "copying", "expected-adjacency", k);
        const Graph g = sample_graph(g_obs, dist, stream);
        auto& rows = samples[k];
        rows.reserve(static_cast<std::size_t>(n));
        for (NodeId i = 0; i < n; ++i)
            if (!g.row(i).empty()) rows.emplace_back(i, g.row(i));
    });
    return average_sampled_rows(n, n_samples, samples);
}

ExpectedAdjacency estimate_expected_adjacency_bipartite(const BipartiteGraph& bg,
                                                        const CopyingDistribution& user_dist,
                                                        int n_samples, std::uint64_t seed,
                                                        int workers) {
    if (n_samples < 1) throw std::invalid_argument("estimate_expected_adjacency: n_samples >= 1");
    std::vector<std::vector<std::pair<NodeId, std::vector<Arc>>>> samples(
        static_cast<std::size_t>(n_samples));
    parallel_for(static_cast<std::size_t>(n_samples), workers, [&](std::size_t k) {
        rng::Stream stream = rng::make_stream(seed, "copying", "expected-adjacency", k);
        const BipartiteGraph g = sample_bipartite(bg, user_dist, stream);
        auto& rows = samples[k];
        for (NodeId u = 0; u < g.n_users; ++u) {
            const auto& items = g.user_items[static_cast<std::size_t>(u)];
            if (items.empty()) continue;
            std::vector<Arc> arcs;
            arcs.reserve(items.size());
            for (NodeId i : items) arcs.push_back({i, 1.0});
            rows.emplace_back(u, std::move(arcs));
        }
    });
    ExpectedAdjacency ea = average_sampled_rows(bg.n_users, n_samples, samples);
    ea.n_nodes = bg.n_users;  // rows indexed by user; columns are items
    return ea;
}

Graph threshold_binary(const ExpectedAdjacency& ea, double b, bool directed) {
    // b = 1 is allowed as the vacuous threshold: no entry can exceed it.
    if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("threshold_binary: need 0 < b <= 1");
    std::vector<std::vector<Arc>> rows(static_cast<std::size_t>(ea.n_nodes));
    for (NodeId i = 0; i < ea.n_nodes; ++i)
        for (const Arc& a : ea.rows[static_cast<std::size_t>(i)])
            if (a.weight > b) rows[static_cast<std::size_t>(i)].push_back({a.target, 1.0});
    if (!directed) {
        // Expected adjacencies of undirected samples are symmetric up to the
        // sparsity cutoff; enforce symmetry with the max rule.
        return symmetrize(Graph::from_rows(true, std::move(rows)));
    }
    return Graph::from_rows(true, std::move(rows));
}

std::vector<std::pair<NodeId, NodeId>> threshold_pairs(const ExpectedAdjacency& ea, double b) {
    if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("threshold_pairs: need 0 < b <= 1");
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId i = 0; i < static_cast<NodeId>(ea.rows.size()); ++i)
        for (const Arc& a : ea.rows[static_cast<std::size_t>(i)])
            if (a.weight > b) out.emplace_back(i, a.target);
    return out;
}

SingleCopyView::SingleCopyView(const Graph& g_obs, NodeId v, NodeId replacement)
    : g_(&g_obs), v_(v), r_(replacement) {
    if (v < 0 || v >= g_obs.num_nodes() || replacement < 0 || replacement >= g_obs.num_nodes())
        throw std::out_of_range("SingleCopyView: node id out of range");
    if (g_obs.directed()) {
        v_row_ = g_obs.row(r_);
        return;
    }
    // Row v of max(C_zeta A, (C_zeta A)^T) with zeta = identity except v -> r:
    // entry (v, j) = max(A[r, j], A[j, v]) and (v, v) = A[r, v].
    const auto& row_v = g_obs.row(v_);
    const auto& row_r = g_obs.row(r_);
    std::size_t a = 0, b = 0;
    auto effective_v = [&](const Arc& arc) { return arc.target != v_; };
    while (a < row_v.size() || b < row_r.size()) {
        if (b == row_r.size() || (a < row_v.size() && row_v[a].target < row_r[b].target)) {
            if (effective_v(row_v[a])) v_row_.push_back(row_v[a]);
            ++a;
        } else if (a == row_v.size() || row_r[b].target < row_v[a].target) {
            v_row_.push_back(row_r[b]);
            ++b;
        } else {
            if (effective_v(row_v[a]))
                v_row_.push_back({row_v[a].target, std::max(row_v[a].weight, row_r[b].weight)});
            else
                v_row_.push_back(row_r[b]);  // (v, v) entry comes from A[r, v]
            ++a;
            ++b;
        }
    }
}

std::vector<Arc> SingleCopyView::row(NodeId u) const {
    if (u == v_) return v_row_;
    std::vector<Arc> out = g_->row(u);
    if (g_->directed()) return out;
    // Entry (u, v) becomes max(A[u, v], A[r, u]).
    const double to_v = std::max(g_->weight(u, v_), g_->weight(r_, u));
    auto it = std::lower_bound(out.begin(), out.end(), v_,
                               [](const Arc& a, NodeId t) { return a.target < t; });
    const bool present = it != out.end() && it->target == v_;
    if (to_v > 0.0) {
        if (present)
            it->weight = to_v;
        else
            out.insert(it, {v_, to_v});
    } else if (present) {
        out.erase(it);
    }
    return out;
}

double SingleCopyView::row_sum(NodeId u) const {
    if (u == v_) {
        double s = 0.0;
        for (const Arc& a : v_row_) s += a.weight;
        return s;
    }
    double s = g_->row_sum(u);
    if (!g_->directed()) {
        const double old_to_v = g_->weight(u, v_);
        const double new_to_v = std::max(old_to_v, g_->weight(r_, u));
        s += new_to_v - old_to_v;
    }
    return s;
}

NodeId SingleCopyView::degree(NodeId u) const {
    if (u == v_) return static_cast<NodeId>(v_row_.size());
    NodeId d = g_->out_degree(u);
    if (!g_->directed() && !g_->has_arc(u, v_) && g_->has_arc(r_, u)) ++d;
    return d;
}

void save_distribution_csv(const CopyingDistribution& dist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    char buf[64];
    for (NodeId j = 0; j < dist.size(); ++j) {
        const auto rv = dist.row(j);
        for (std::size_t k = 0; k < rv.candidates.size(); ++k) {
            const double p = rv.probs ? rv.probs[k] : 1.0 / rv.candidates.size();
            std::snprintf(buf, sizeof(buf), "%.17g", p);
            out << j << "," << rv.candidates[k] << "," << buf << "\n";
        }
    }
}

CopyingDistribution load_distribution_csv(const std::string& path, NodeId n_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::vector<NodeId>> cands(static_cast<std::size_t>(n_nodes));
    std::vector<std::vector<double>> probs(static_cast<std::size_t>(n_nodes));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = line;
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ss(t);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw io::ParseError(path, lineno, "expected 'node,candidate,prob'");
        const long node = strict_long(a, path, lineno);
        const long cand = strict_long(b, path, lineno);
        const double p = strict_double(c, path, lineno);
        if (node < 0 || node >= n_nodes || cand < 0 || cand >= n_nodes)
            throw io::ParseError(path, lineno, "node id out of range");
        cands[static_cast<std::size_t>(node)].push_back(static_cast<NodeId>(cand));
        probs[static_cast<std::size_t>(node)].push_back(p);
    }
    CopyingDistribution dist(n_nodes, DistKind::Custom);
    for (NodeId j = 0; j < n_nodes; ++j) {
        if (cands[static_cast<std::size_t>(j)].empty())
            throw std::runtime_error(path + ": no distribution row for node " + std::to_string(j));
        dist.set_row(j, std::move(cands[static_cast<std::size_t>(j)]),
                     std::move(probs[static_cast<std::size_t>(j)]));
    }
    dist.validate();
    return dist;
}

void save_zeta_csv(const ReplacementVector& zeta, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (std::size_t i = 0; i < zeta.zeta.size(); ++i) out << i << "," << zeta.zeta[i] << "\n";
}

ReplacementVector load_zeta_csv(const std::string& path, NodeId n_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    ReplacementVector out;
    out.zeta.assign(static_cast<std::size_t>(n_nodes), -1);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw io::ParseError(path, lineno, "expected 'node,zeta'");
        const long node = strict_long(a, path, lineno);
        const long z = strict_long(b, path, lineno);
        if (node < 0 || node >= n_nodes || z < 0 || z >= n_nodes)
            throw io::ParseError(path, lineno, "node id out of range");
        out.zeta[static_cast<std::size_t>(node)] = static_cast<NodeId>(z);
    }
    for (std::size_t i = 0; i < out.zeta.size(); ++i)
        if (out.zeta[i] < 0)
            throw std::runtime_error(path + ": missing zeta entry for node " + std::to_string(i));
    return out;
}

}  // namespace copygraph
