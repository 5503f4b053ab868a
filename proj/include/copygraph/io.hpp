#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "copygraph/graph.hpp"

namespace copygraph::io {

/// Parse failure with the offending 1-based line number in the message.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what);
};

/// Edge list: one `src dst [weight]` per line, whitespace separated.
/// `#` lines are comments; an optional `%nodes N` header fixes the node
/// count (required to represent trailing isolated nodes). Without it the
/// count is max(id)+1. Duplicate edges are rejected; for undirected graphs
/// the two orientations of a pair count as duplicates.
Graph load_edge_list(const std::string& path, bool directed,
                     std::optional<NodeId> n_nodes_override = std::nullopt);

/// Writes `%nodes N` plus one line per edge (undirected edges once, i <= j)
/// with round-trip-exact weights. Unit weights are omitted.
void save_edge_list(const Graph& g, const std::string& path);

/// CSV `node,label` with integer labels; n_classes = max label + 1 unless given.
NodeLabels load_labels_csv(const std::string& path, NodeId n_nodes,
                           std::optional<int> n_classes = std::nullopt);
void save_labels_csv(const NodeLabels& labels, const std::string& path);

/// Dense CSV (row i = node i) or sparse `node,feature_index,value` triplets;
/// the sparse form is detected by a `%sparse rows cols` header.
Eigen::MatrixXd load_features_csv(const std::string& path, NodeId n_nodes);

/// Interactions: `user<TAB>item` per line, `#` comments, optional
/// `%shape U I` header fixing the user/item counts.
BipartiteGraph load_interactions(const std::string& path);
void save_interactions(const BipartiteGraph& bg, const std::string& path);

/// Node list: one integer per line (`#` comments allowed).
std::vector<NodeId> load_node_list(const std::string& path);

/// Matrix as CSV rows (used for softmax tables and embeddings).
void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

/// A citation dataset in the classic content/cites format: `<id> <f1..fF> <class>`
/// lines plus `<cited> <citing>` pairs. Ids are arbitrary strings, remapped to
/// [0, n) in file order of the content file.
struct CitationDataset {
    Graph graph;  // directed citation arcs
    NodeLabels labels;
    Eigen::MatrixXd features;
    std::vector<std::string> ids;
    std::vector<std::string> class_names;
};
CitationDataset load_citation_dataset(const std::string& content_path,
                                      const std::string& cites_path);

}  // namespace copygraph::io
