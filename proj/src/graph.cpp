#include "copygraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace copygraph {

Graph::Graph(NodeId n_nodes, bool directed) : directed_(directed) {
    if (n_nodes < 0) throw std::invalid_argument("Graph: negative node count");
    rows_.resize(static_cast<std::size_t>(n_nodes));
    finalize();
}

Graph Graph::from_edges(NodeId n_nodes, bool directed,
                        std::span<const std::tuple<NodeId, NodeId, double>> edges) {
    if (n_nodes < 0) throw std::invalid_argument("Graph: negative node count");
    std::vector<std::vector<Arc>> rows(static_cast<std::size_t>(n_nodes));
    for (const auto& [src, dst, w] : edges) {
        if (src < 0 || src >= n_nodes || dst < 0 || dst >= n_nodes)
            throw std::out_of_range("Graph: edge endpoint out of range");
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("Graph: edge weight must be strictly positive");
        rows[static_cast<std::size_t>(src)].push_back({dst, w});
        if (!directed && src != dst) rows[static_cast<std::size_t>(dst)].push_back({src, w});
    }
    return from_rows(directed, std::move(rows));
}

Graph Graph::from_rows(bool directed, std::vector<std::vector<Arc>> rows) {
    Graph g;
    g.directed_ = directed;
    g.rows_ = std::move(rows);
    const NodeId n = g.num_nodes();
    for (NodeId v = 0; v < n; ++v) {
        auto& row = g.rows_[static_cast<std::size_t>(v)];
        std::sort(row.begin(), row.end(),
                  [](const Arc& a, const Arc& b) { return a.target < b.target; });
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (row[k].target < 0 || row[k].target >= n)
                throw std::out_of_range("Graph: arc target out of range");
            if (!(row[k].weight > 0.0) || !std::isfinite(row[k].weight))
                throw std::invalid_argument("Graph: arc weight must be strictly positive");
            if (k > 0 && row[k].target == row[k - 1].target)
                throw std::invalid_argument("Graph: duplicate arc in row " + std::to_string(v));
        }
    }
    if (!directed) {
        for (NodeId v = 0; v < n; ++v) {
            for (const Arc& a : g.rows_[static_cast<std::size_t>(v)]) {
                if (g.weight(a.target, v) != a.weight)
                    throw std::invalid_argument("Graph: undirected adjacency is not symmetric");
            }
        }
    }
    g.finalize();
    return g;
}

void Graph::finalize() {
    arc_count_ = 0;
    in_degree_.assign(rows_.size(), 0);
    for (const auto& row : rows_) {
        arc_count_ += row.size();
        for (const Arc& a : row) ++in_degree_[static_cast<std::size_t>(a.target)];
    }
}

void Graph::check_node(NodeId v) const {
    if (v < 0 || v >= num_nodes()) throw std::out_of_range("Graph: node id out of range");
}

const std::vector<Arc>& Graph::row(NodeId v) const {
    check_node(v);
    return rows_[static_cast<std::size_t>(v)];
}

std::size_t Graph::edge_count() const {
    if (directed_) return arc_count_;
    std::size_t self_loops = 0;
    for (NodeId v = 0; v < num_nodes(); ++v)
        if (has_arc(v, v)) ++self_loops;
    return (arc_count_ - self_loops) / 2 + self_loops;
}

NodeId Graph::out_degree(NodeId v) const {
    check_node(v);
    return static_cast<NodeId>(rows_[static_cast<std::size_t>(v)].size());
}

NodeId Graph::in_degree(NodeId v) const {
    check_node(v);
    return in_degree_[static_cast<std::size_t>(v)];
}

NodeId Graph::degree(NodeId v, DegreeMode mode) const {
    check_node(v);
    switch (mode) {
        case DegreeMode::Out:
            return out_degree(v);
        case DegreeMode::In:
            return in_degree(v);
        case DegreeMode::Total:
            if (!directed_) return out_degree(v);
            return out_degree(v) + in_degree(v);
    }
    throw std::logic_error("Graph: bad degree mode");
}

bool Graph::has_arc(NodeId src, NodeId dst) const { return weight(src, dst) > 0.0; }

double Graph::weight(NodeId src, NodeId dst) const {
    check_node(src);
    check_node(dst);
    const auto& row = rows_[static_cast<std::size_t>(src)];
    auto it = std::lower_bound(row.begin(), row.end(), dst,
                               [](const Arc& a, NodeId t) { return a.target < t; });
    if (it != row.end() && it->target == dst) return it->weight;
    return 0.0;
}

double Graph::row_sum(NodeId v) const {
    check_node(v);
    double s = 0.0;
    for (const Arc& a : rows_[static_cast<std::size_t>(v)]) s += a.weight;
    return s;
}

Graph symmetrize(const Graph& g) {
    const NodeId n = g.num_nodes();
    std::vector<std::vector<Arc>> rows(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) {
        for (const Arc& a : g.row(i)) {
            const double w = std::max(a.weight, g.weight(a.target, i));
            rows[static_cast<std::size_t>(i)].push_back({a.target, w});
            if (!g.has_arc(a.target, i) && a.target != i)
                rows[static_cast<std::size_t>(a.target)].push_back({i, w});
        }
    }
    return Graph::from_rows(false, std::move(rows));
}

std::pair<Graph, std::vector<NodeId>> largest_connected_component(const Graph& g) {
    if (g.directed()) throw std::invalid_argument("largest_connected_component: graph must be undirected");
    const NodeId n = g.num_nodes();
    if (n == 0) throw std::invalid_argument("largest_connected_component: empty graph");

    std::vector<NodeId> comp(static_cast<std::size_t>(n), -1);
    std::vector<NodeId> comp_size;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < n; ++s) {
        if (comp[static_cast<std::size_t>(s)] >= 0) continue;
        const NodeId id = static_cast<NodeId>(comp_size.size());
        comp_size.push_back(0);
        stack.push_back(s);
        comp[static_cast<std::size_t>(s)] = id;
        while (!stack.empty()) {
            const NodeId v = stack.back();
            stack.pop_back();
            ++comp_size[static_cast<std::size_t>(id)];
            for (const Arc& a : g.row(v)) {
                if (comp[static_cast<std::size_t>(a.target)] < 0) {
                    comp[static_cast<std::size_t>(a.target)] = id;
                    stack.push_back(a.target);
                }
            }
        }
    }
    // Components are discovered in order of their smallest node id, so the
    // first component of maximal size realizes the tie-break.
    NodeId best = 0;
    for (NodeId c = 1; c < static_cast<NodeId>(comp_size.size()); ++c)
        if (comp_size[static_cast<std::size_t>(c)] > comp_size[static_cast<std::size_t>(best)]) best = c;

    std::vector<NodeId> remap(static_cast<std::size_t>(n), -1);
    NodeId next = 0;
    for (NodeId v = 0; v < n; ++v)
        if (comp[static_cast<std::size_t>(v)] == best) remap[static_cast<std::size_t>(v)] = next++;

    std::vector<std::vector<Arc>> rows(static_cast<std::size_t>(next));
    for (NodeId v = 0; v < n; ++v) {
        const NodeId nv = remap[static_cast<std::size_t>(v)];
        if (nv < 0) continue;
        for (const Arc& a : g.row(v))
            rows[static_cast<std::size_t>(nv)].push_back({remap[static_cast<std::size_t>(a.target)], a.weight});
    }
    return {Graph::from_rows(false, std::move(rows)), std::move(remap)};
}

Graph relabel(const Graph& g, std::span<const NodeId> perm) {
    const NodeId n = g.num_nodes();
    if (static_cast<NodeId>(perm.size()) != n)
        throw std::invalid_argument("relabel: permutation size mismatch");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (NodeId p : perm) {
        if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)])
            throw std::invalid_argument("relabel: not a permutation");
        seen[static_cast<std::size_t>(p)] = true;
    }
    std::vector<std::vector<Arc>> rows(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) {
        auto& out = rows[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])];
        for (const Arc& a : g.row(v)) out.push_back({perm[static_cast<std::size_t>(a.target)], a.weight});
    }
    return Graph::from_rows(g.directed(), std::move(rows));
}

bool NodeLabels::fully_labeled() const {
    return std::all_of(labels.begin(), labels.end(), [](int c) { return c >= 0; });
}

void NodeLabels::validate() const {
    std::vector<bool> present(static_cast<std::size_t>(std::max(n_classes, 0)), false);
    for (int c : labels) {
        if (c < -1 || c >= n_classes)
            throw std::invalid_argument("NodeLabels: label out of range");
        if (c >= 0) present[static_cast<std::size_t>(c)] = true;
    }
    (void)present;
}

BipartiteGraph BipartiteGraph::from_pairs(NodeId n_users, NodeId n_items,
                                          std::span<const std::pair<NodeId, NodeId>> pairs) {
    if (n_users < 0 || n_items < 0)
        throw std::invalid_argument("BipartiteGraph: negative node count");
    BipartiteGraph bg;
    bg.n_users = n_users;
    bg.n_items = n_items;
    bg.user_items.resize(static_cast<std::size_t>(n_users));
    bg.item_users.resize(static_cast<std::size_t>(n_items));
    for (const auto& [u, i] : pairs) {
        if (u < 0 || u >= n_users) throw std::out_of_range("BipartiteGraph: user id out of range");
        if (i < 0 || i >= n_items) throw std::out_of_range("BipartiteGraph: item id out of range");
        bg.user_items[static_cast<std::size_t>(u)].push_back(i);
    }
    for (NodeId u = 0; u < n_users; ++u) {
        auto& items = bg.user_items[static_cast<std::size_t>(u)];
        std::sort(items.begin(), items.end());
        if (std::adjacent_find(items.begin(), items.end()) != items.end())
            throw std::invalid_argument("BipartiteGraph: duplicate (user, item) pair");
        for (NodeId i : items) bg.item_users[static_cast<std::size_t>(i)].push_back(u);
    }
    return bg;
}

std::size_t BipartiteGraph::interaction_count() const {
    std::size_t total = 0;
    for (const auto& items : user_items) total += items.size();
    return total;
}

bool BipartiteGraph::has(NodeId user, NodeId item) const {
    const auto& items = user_items.at(static_cast<std::size_t>(user));
    return std::binary_search(items.begin(), items.end(), item);
}

}  // namespace copygraph
