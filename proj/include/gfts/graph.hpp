#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gfts/error.hpp"
#include "gfts/linalg.hpp"

namespace gfts {

enum class NodeKind { junction, reservoir, tank };

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::junction: return "junction";
    case NodeKind::reservoir: return "reservoir";
    case NodeKind::tank: return "tank";
  }
  return "junction";
}

inline NodeKind parse_node_kind(std::string_view s) {
  if (s == "junction") return NodeKind::junction;
  if (s == "reservoir") return NodeKind::reservoir;
  if (s == "tank") return NodeKind::tank;
  throw DataError("unknown node kind '" + std::string(s) + "'");
}

struct Node {
  std::string id;
  NodeKind kind = NodeKind::junction;
};

/// Directed link from -> to. Direction is the flow direction used by the
/// transport model; spectral code only ever sees the symmetrized weights.
struct Edge {
  Index from = 0;
  Index to = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Static network G(V, A). Immutable after construction.
class NetworkGraph {
 public:
  NetworkGraph() = default;

  /// Validates indices, self-loops, weights and id uniqueness. Parallel edges
  /// with the same direction are merged by summing their weights.
  NetworkGraph(std::vector<Node> nodes, std::vector<Edge> edges) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw DataError("graph has no nodes");
    const auto n = static_cast<Index>(nodes_.size());
    for (Index i = 0; i < n; ++i) {
      const auto& id = nodes_[static_cast<std::size_t>(i)].id;
      if (id.empty()) throw DataError("node " + std::to_string(i) + " has an empty id");
      if (!index_.emplace(id, i).second) throw DataError("duplicate node id '" + id + "'");
    }
    std::map<std::pair<Index, Index>, double> merged;
    for (const auto& e : edges) {
      if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
        throw DataError("edge (" + std::to_string(e.from) + ", " + std::to_string(e.to) +
                        ") has an index outside [0, " + std::to_string(n) + ")");
      }
      if (e.from == e.to) throw DataError("self-loop on node " + std::to_string(e.from));
      if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
        throw DataError("edge (" + std::to_string(e.from) + ", " + std::to_string(e.to) +
                        ") has a negative or non-finite weight");
      }
      merged[{e.from, e.to}] += e.weight;
    }
    edges_.reserve(merged.size());
    for (const auto& [key, w] : merged) edges_.push_back({key.first, key.second, w});
  }

  Index node_count() const { return static_cast<Index>(nodes_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(Index i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  Index index_of(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) throw DataError("unknown node id '" + std::string(id) + "'");
    return it->second;
  }

  std::vector<std::string> node_ids() const {
    std::vector<std::string> ids;
    ids.reserve(nodes_.size());
    for (const auto& n : nodes_) ids.push_back(n.id);
    return ids;
  }

  /// W with W_ij = max(a_ij, a_ji). With binary = true every link counts 1.
  Matrix symmetric_weights(bool binary = false) const {
    const Index n = node_count();
    Matrix w = Matrix::Zero(n, n);
    for (const auto& e : edges_) {
      const double v = binary ? (e.weight > 0 ? 1.0 : 0.0) : e.weight;
      w(e.from, e.to) = std::max(w(e.from, e.to), v);
      w(e.to, e.from) = std::max(w(e.to, e.from), v);
    }
    return w;
  }

  /// Out-neighbours along the directed edges, in ascending index order.
  std::vector<IndexList> downstream() const {
    std::vector<IndexList> out(nodes_.size());
    for (const auto& e : edges_) {
      if (e.weight > 0) out[static_cast<std::size_t>(e.from)].push_back(e.to);
    }
    return out;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, Index> index_;
};

inline constexpr std::string_view kGraphSchema = "gfts.graph/1";

/// Accepts {"nodes": [{"id", "kind"}], "edges": [{"from", "to", "weight"?}]}.
/// "schema" is optional on input.
inline NetworkGraph parse_graph(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw DataError("graph document must be a JSON object");
    if (!doc.contains("nodes") || !doc.at("nodes").is_array())
      throw DataError("graph document needs a 'nodes' array");
    std::vector<Node> nodes;
    for (const auto& jn : doc.at("nodes")) {
      Node n;
      n.id = jn.at("id").get<std::string>();
      n.kind = jn.contains("kind") ? parse_node_kind(jn.at("kind").get<std::string>())
                                   : NodeKind::junction;
      nodes.push_back(std::move(n));
    }
    std::vector<Edge> edges;
    if (doc.contains("edges")) {
      for (const auto& je : doc.at("edges")) {
        Edge e;
        e.from = je.at("from").get<Index>();
        e.to = je.at("to").get<Index>();
        e.weight = je.contains("weight") ? je.at("weight").get<double>() : 1.0;
        edges.push_back(e);
      }
    }
    return NetworkGraph(std::move(nodes), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("graph document: ") + e.what());
  }
}

inline NetworkGraph parse_graph_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("graph file does not parse: ") + e.what());
  }
  return parse_graph(doc);
}

inline NetworkGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph_text(ss.str());
}

inline nlohmann::ordered_json graph_to_json(const NetworkGraph& g) {
  nlohmann::ordered_json doc;
  doc["schema"] = kGraphSchema;
  auto& nodes = doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes()) {
    nodes.push_back({{"id", n.id}, {"kind", std::string(to_string(n.kind))}});
  }
  auto& edges = doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
  }
  return doc;
}

inline void save_graph(const NetworkGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write graph file '" + path + "'");
  out << graph_to_json(g).dump(2) << '\n';
}

/// D^{-1/2} (D − W) D^{-1/2} over the symmetrized weights.
inline Matrix normalized_laplacian(const NetworkGraph& g, bool binary = false) {
  const Matrix w = g.symmetric_weights(binary);
  const Vector d = w.rowwise().sum();
  for (Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0)) {
      throw DataError("node '" + g.node(i).id +
                      "' is isolated (zero degree); normalized Laplacian undefined");
    }
  }
  const Vector dinv = d.cwiseSqrt().cwiseInverse();
  Matrix l = -(dinv.asDiagonal() * w * dinv.asDiagonal());
  l.diagonal().array() += 1.0;
  // exact symmetry regardless of rounding order
  return 0.5 * (l + l.transpose());
}

struct LaplacianSpectrum {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column i pairs with eigenvalues(i)
};

inline LaplacianSpectrum laplacian_spectrum(const Matrix& l) {
  if (l.rows() != l.cols()) throw DataError("laplacian_spectrum: matrix is not square");
  if (max_abs(l - l.transpose()) > 1e-10)
    throw DataError("laplacian_spectrum: matrix is not symmetric within 1e-10");
  Eigen::SelfAdjointEigenSolver<Matrix> es(l);
  if (es.info() != Eigen::Success) throw NumericalError("laplacian_spectrum: eigensolver failed");
  LaplacianSpectrum out{es.eigenvalues(), es.eigenvectors()};
  for (Index j = 0; j < out.eigenvectors.cols(); ++j) {
    make_first_nonzero_positive(out.eigenvectors.col(j));
  }
  return out;
}

}  // namespace gfts
