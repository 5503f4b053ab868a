#include "copygraph/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace copygraph::io {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::vector<std::string> split_char(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_long(const std::string& s, long long& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return in;
}

std::string weight_repr(double w) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", w);
    return buf;
}

}  // namespace

ParseError::ParseError(const std::string& path, std::size_t line, const std::string& what)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}

Graph load_edge_list(const std::string& path, bool directed,
                     std::optional<NodeId> n_nodes_override) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 0;
    std::optional<NodeId> header_nodes;
    std::vector<std::tuple<NodeId, NodeId, double>> edges;
    std::set<std::pair<NodeId, NodeId>> seen;
    NodeId max_id = -1;

    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t[0] == '%') {
            auto toks = split_ws(t);
            long long n;
            if (toks.size() == 2 && toks[0] == "%nodes" && parse_long(toks[1], n) && n >= 0) {
                header_nodes = static_cast<NodeId>(n);
                continue;
            }
            throw ParseError(path, lineno, "bad header line '" + t + "'");
        }
        auto toks = split_ws(t);
        if (toks.size() < 2 || toks.size() > 3)
            throw ParseError(path, lineno, "expected 'src dst [weight]'");
        long long src, dst;
        if (!parse_long(toks[0], src) || !parse_long(toks[1], dst))
            throw ParseError(path, lineno, "node ids must be integers");
        if (src < 0 || dst < 0) throw ParseError(path, lineno, "negative node id");
        double w = 1.0;
        if (toks.size() == 3) {
            if (!parse_double(toks[2], w)) throw ParseError(path, lineno, "bad edge weight");
            if (!(w > 0.0)) throw ParseError(path, lineno, "non-positive edge weight");
        }
        const NodeId s = static_cast<NodeId>(src);
        const NodeId d = static_cast<NodeId>(dst);
        const auto key = directed ? std::make_pair(s, d)
                                  : std::make_pair(std::min(s, d), std::max(s, d));
        if (!seen.insert(key).second)
            throw ParseError(path, lineno, "duplicate edge " + toks[0] + " " + toks[1]);
        edges.emplace_back(s, d, w);
        max_id = std::max(max_id, std::max(s, d));
    }

    NodeId n = max_id + 1;
    if (n_nodes_override) header_nodes = n_nodes_override;
    if (header_nodes) {
        if (*header_nodes < n)
            throw std::runtime_error(path + ": node id exceeds declared node count");
        n = *header_nodes;
    }
    return Graph::from_edges(n, directed, edges);
}

void save_edge_list(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "%nodes " << g.num_nodes() << "\n";
    g.for_each_edge([&](NodeId i, NodeId j, double w) {
        out << i << " " << j;
        if (w != 1.0) out << " " << weight_repr(w);
        out << "\n";
    });
    if (!out) throw std::runtime_error("write failed: " + path);
}

NodeLabels load_labels_csv(const std::string& path, NodeId n_nodes,
                           std::optional<int> n_classes) {
    std::ifstream in = open_or_throw(path);
    NodeLabels out;
    out.labels.assign(static_cast<std::size_t>(n_nodes), -1);
    std::string line;
    std::size_t lineno = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto toks = split_char(t, ',');
        long long node, label;
        if (toks.size() != 2 || !parse_long(trim(toks[0]), node) || !parse_long(trim(toks[1]), label))
            throw ParseError(path, lineno, "expected 'node,label'");
        if (node < 0 || node >= n_nodes) throw ParseError(path, lineno, "node id out of range");
        if (label < 0) throw ParseError(path, lineno, "negative label");
        out.labels[static_cast<std::size_t>(node)] = static_cast<int>(label);
        max_label = std::max(max_label, static_cast<int>(label));
    }
    out.n_classes = n_classes.value_or(max_label + 1);
    out.validate();
    return out;
}

void save_labels_csv(const NodeLabels& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (std::size_t v = 0; v < labels.labels.size(); ++v)
        if (labels.labels[v] >= 0) out << v << "," << labels.labels[v] << "\n";
}

Eigen::MatrixXd load_features_csv(const std::string& path, NodeId n_nodes) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 0;

    // Peek the first meaningful line to decide dense vs sparse.
    std::vector<std::pair<std::size_t, std::string>> rows;
    bool sparse = false;
    long long sparse_rows = 0, sparse_cols = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.rfind("%sparse", 0) == 0) {
            auto toks = split_ws(t);
            if (toks.size() != 3 || !parse_long(toks[1], sparse_rows) || !parse_long(toks[2], sparse_cols))
                throw ParseError(path, lineno, "bad '%sparse rows cols' header");
            sparse = true;
            continue;
        }
        rows.emplace_back(lineno, t);
    }

    if (sparse) {
        if (sparse_rows != n_nodes)
            throw std::runtime_error(path + ": feature row count does not match node count");
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(sparse_rows, sparse_cols);
        for (const auto& [ln, t] : rows) {
            auto toks = split_char(t, ',');
            long long node, col;
            double val;
            if (toks.size() != 3 || !parse_long(trim(toks[0]), node) ||
                !parse_long(trim(toks[1]), col) || !parse_double(trim(toks[2]), val))
                throw ParseError(path, ln, "expected 'node,feature_index,value'");
            if (node < 0 || node >= sparse_rows || col < 0 || col >= sparse_cols)
                throw ParseError(path, ln, "sparse feature index out of range");
            m(node, col) = val;
        }
        return m;
    }

    if (rows.empty()) throw std::runtime_error(path + ": empty feature file");
    const std::size_t n_features = split_char(rows.front().second, ',').size();
    if (static_cast<NodeId>(rows.size()) != n_nodes)
        throw std::runtime_error(path + ": feature row count does not match node count");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_features));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto toks = split_char(rows[r].second, ',');
        if (toks.size() != n_features)
            throw ParseError(path, rows[r].first, "inconsistent feature column count");
        for (std::size_t c = 0; c < n_features; ++c) {
            double val;
            if (!parse_double(trim(toks[c]), val))
                throw ParseError(path, rows[r].first, "bad feature value '" + toks[c] + "'");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = val;
        }
    }
    return m;
}

BipartiteGraph load_interactions(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::pair<NodeId, NodeId>> pairs;
    long long max_user = -1, max_item = -1;
    std::optional<std::pair<NodeId, NodeId>> shape;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.rfind("%shape", 0) == 0) {
            auto toks = split_ws(t);
            long long u, i;
            if (toks.size() != 3 || !parse_long(toks[1], u) || !parse_long(toks[2], i) || u < 0 || i < 0)
                throw ParseError(path, lineno, "bad '%shape users items' header");
            shape = {static_cast<NodeId>(u), static_cast<NodeId>(i)};
            continue;
        }
        auto toks = split_ws(t);
        long long u, i;
        if (toks.size() != 2 || !parse_long(toks[0], u) || !parse_long(toks[1], i))
            throw ParseError(path, lineno, "expected 'user<TAB>item'");
        if (u < 0 || i < 0) throw ParseError(path, lineno, "negative id");
        pairs.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(i));
        max_user = std::max(max_user, u);
        max_item = std::max(max_item, i);
    }
    const NodeId n_users = shape ? shape->first : static_cast<NodeId>(max_user + 1);
    const NodeId n_items = shape ? shape->second : static_cast<NodeId>(max_item + 1);
    return BipartiteGraph::from_pairs(n_users, n_items, pairs);
}

void save_interactions(const BipartiteGraph& bg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "%shape " << bg.n_users << " " << bg.n_items << "\n";
    for (NodeId u = 0; u < bg.n_users; ++u)
        for (NodeId i : bg.user_items[static_cast<std::size_t>(u)]) out << u << "\t" << i << "\n";
}

std::vector<NodeId> load_node_list(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<NodeId> out;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        long long v;
        if (!parse_long(t, v) || v < 0) throw ParseError(path, lineno, "expected a node id");
        out.push_back(static_cast<NodeId>(v));
    }
    return out;
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ",";
            out << weight_repr(m(r, c));
        }
        out << "\n";
    }
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto toks = split_char(t, ',');
        std::vector<double> row(toks.size());
        for (std::size_t c = 0; c < toks.size(); ++c)
            if (!parse_double(trim(toks[c]), row[c]))
                throw ParseError(path, lineno, "bad matrix entry '" + toks[c] + "'");
        if (!rows.empty() && rows.front().size() != row.size())
            throw ParseError(path, lineno, "inconsistent column count");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

CitationDataset load_citation_dataset(const std::string& content_path,
                                      const std::string& cites_path) {
    std::ifstream content = open_or_throw(content_path);
    std::string line;
    std::size_t lineno = 0;

    std::vector<std::string> ids;
    std::unordered_map<std::string, NodeId> id_of;
    std::vector<std::vector<double>> feats;
    std::vector<std::string> raw_labels;
    while (std::getline(content, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto toks = split_ws(t);
        if (toks.size() < 3)
            throw ParseError(content_path, lineno, "expected '<id> <features...> <class>'");
        const std::string& id = toks.front();
        if (!id_of.emplace(id, static_cast<NodeId>(ids.size())).second)
            throw ParseError(content_path, lineno, "duplicate node id " + id);
        ids.push_back(id);
        std::vector<double> row(toks.size() - 2);
        for (std::size_t k = 1; k + 1 < toks.size(); ++k) {
            double v;
            if (!parse_double(toks[k], v))
                throw ParseError(content_path, lineno, "bad feature value '" + toks[k] + "'");
            row[k - 1] = v;
        }
        if (!feats.empty() && feats.front().size() != row.size())
            throw ParseError(content_path, lineno, "inconsistent feature count");
        feats.push_back(std::move(row));
        raw_labels.push_back(toks.back());
    }
    if (ids.empty()) throw std::runtime_error(content_path + ": no records");

    std::map<std::string, int> class_of;  // ordered: class ids are alphabetical
    for (const auto& c : raw_labels) class_of.emplace(c, 0);
    int next_class = 0;
    for (auto& [name, cid] : class_of) cid = next_class++;

    CitationDataset ds;
    ds.ids = ids;
    ds.class_names.resize(class_of.size());
    for (const auto& [name, cid] : class_of) ds.class_names[static_cast<std::size_t>(cid)] = name;
    ds.labels.n_classes = next_class;
    ds.labels.labels.resize(ids.size());
    for (std::size_t v = 0; v < ids.size(); ++v)
        ds.labels.labels[v] = class_of[raw_labels[v]];
    ds.features.resize(static_cast<Eigen::Index>(feats.size()),
                       static_cast<Eigen::Index>(feats.front().size()));
    for (std::size_t r = 0; r < feats.size(); ++r)
        for (std::size_t c = 0; c < feats[r].size(); ++c)
            ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = feats[r][c];

    std::ifstream cites = open_or_throw(cites_path);
    lineno = 0;
    std::set<std::pair<NodeId, NodeId>> seen;
    std::vector<std::tuple<NodeId, NodeId, double>> edges;
    while (std::getline(cites, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto toks = split_ws(t);
        if (toks.size() != 2) throw ParseError(cites_path, lineno, "expected '<cited> <citing>'");
        auto a = id_of.find(toks[0]);
        auto b = id_of.find(toks[1]);
        if (a == id_of.end() || b == id_of.end())
            throw ParseError(cites_path, lineno, "edge references unknown node id");
        if (a->second == b->second) continue;  // drop self-citations
        if (seen.insert({b->second, a->second}).second)
            edges.emplace_back(b->second, a->second, 1.0);  // citing -> cited
    }
    ds.graph = Graph::from_edges(static_cast<NodeId>(ids.size()), true, edges);
    return ds;
}

}  // namespace copygraph::io
