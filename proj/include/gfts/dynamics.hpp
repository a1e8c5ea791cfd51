#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfts/error.hpp"
#include "gfts/graph.hpp"
#include "gfts/linalg.hpp"
#include "gfts/signal.hpp"

namespace gfts {

/// Three hours in 168 steps.
inline constexpr double kDefaultTimestepSeconds = 3.0 * 3600.0 / 168.0;
inline constexpr Index kDefaultSteps = 168;

struct Injection {
  Index step = 0;
  double amount = 0.0;

  friend bool operator==(const Injection&, const Injection&) = default;
};

struct ScenarioConfig {
  std::string id;
  Index injection_node = 0;
  std::vector<Injection> injection_profile;
  double decay_rate = 0.0;        // fraction lost per step
  double transport_weight = 1.0;  // fraction of a node's mass routed downstream per step
  Index steps = kDefaultSteps;
  std::uint64_t seed = 0;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline void validate(const ScenarioConfig& cfg, const NetworkGraph& g) {
  if (cfg.injection_node < 0 || cfg.injection_node >= g.node_count())
    throw DataError("scenario '" + cfg.id + "': injection node " +
                    std::to_string(cfg.injection_node) + " is not in the graph");
  if (cfg.steps < 1) throw DataError("scenario '" + cfg.id + "': steps must be >= 1");
  if (!(cfg.decay_rate >= 0.0 && cfg.decay_rate <= 1.0))
    throw DataError("scenario '" + cfg.id + "': decay_rate must lie in [0, 1]");
  if (!(cfg.transport_weight > 0.0 && cfg.transport_weight <= 1.0))
    throw DataError("scenario '" + cfg.id + "': transport_weight must lie in (0, 1]");
  for (const auto& inj : cfg.injection_profile) {
    if (inj.step < 0) throw DataError("scenario '" + cfg.id + "': negative injection step");
    if (!(inj.amount >= 0.0) || !std::isfinite(inj.amount))
      throw DataError("scenario '" + cfg.id + "': injection amounts must be finite and >= 0");
  }
}

/// T = (1 − decay) · [(1 − w) I + w P], with P splitting each node's mass
/// uniformly over its downstream neighbours. Nodes without downstream
/// neighbours keep their mass, so T is column-stochastic when decay = 0.
inline Matrix transport_operator(const NetworkGraph& g, double transport_weight,
                                 double decay_rate) {
  const Index n = g.node_count();
  const auto down = g.downstream();
  Matrix t = Matrix::Zero(n, n);
  for (Index m = 0; m < n; ++m) {
    const auto& d = down[static_cast<std::size_t>(m)];
    if (d.empty()) {
      t(m, m) = 1.0;
      continue;
    }
    t(m, m) += 1.0 - transport_weight;
    const double share = transport_weight / static_cast<double>(d.size());
    for (Index to : d) t(to, m) += share;
  }
  return (1.0 - decay_rate) * t;
}

/// x_0 = b_0, x_{k+1} = T x_k + b_{k+1}. Reservoirs are constant-concentration
/// boundaries: their value is pinned to the injection at that step.
inline SignalMatrix simulate_dynamics(const NetworkGraph& g, const ScenarioConfig& cfg,
                                      double timestep_seconds = kDefaultTimestepSeconds,
                                      double rank_tolerance = kDefaultRankTolerance) {
  validate(cfg, g);
  const Index n = g.node_count();
  Matrix t = transport_operator(g, cfg.transport_weight, cfg.decay_rate);
  for (Index i = 0; i < n; ++i) {
    if (g.node(i).kind == NodeKind::reservoir) t.row(i).setZero();
  }
  Vector injected = Vector::Zero(cfg.steps);
  for (const auto& inj : cfg.injection_profile) {
    if (inj.step < cfg.steps) injected(inj.step) += inj.amount;
  }

  Matrix x(n, cfg.steps);
  Vector cur = Vector::Zero(n);
  for (Index k = 0; k < cfg.steps; ++k) {
    Vector next = k == 0 ? Vector::Zero(n) : Vector(t * cur);
    next(cfg.injection_node) += injected(k);
    if (!next.allFinite())
      throw NumericalError("scenario '" + cfg.id + "': non-finite state at step " +
                           std::to_string(k));
    x.col(k) = next;
    cur = std::move(next);
  }
  return SignalMatrix(std::move(x), g.node_ids(), timestep_seconds, rank_tolerance);
}

/// Small portable generator helpers on top of mt19937_64 so that banks are
/// identical across standard libraries.
class ScenarioRng {
 public:
  explicit ScenarioRng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  /// Integer in [lo, hi].
  Index integer(Index lo, Index hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<Index>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

/// Longest downstream path (in edges) from every node. Cycles are cut at the
/// first revisit.
inline std::vector<Index> downstream_depth(const NetworkGraph& g) {
  const auto down = g.downstream();
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<Index> depth(n, -1);
  std::vector<char> on_stack(n, 0);
  std::function<Index(Index)> visit = [&](Index v) -> Index {
    const auto u = static_cast<std::size_t>(v);
    if (depth[u] >= 0) return depth[u];
    if (on_stack[u]) return 0;
    on_stack[u] = 1;
    Index best = 0;
    for (Index w : down[u]) best = std::max(best, 1 + visit(w));
    on_stack[u] = 0;
    depth[u] = best;
    return best;
  };
  for (std::size_t v = 0; v < n; ++v) visit(static_cast<Index>(v));
  return depth;
}

/// Synthetic stand-in for a 102-node distribution network: reservoirs R1, R2
/// and junctions J1..J100. J1..J60 form a trunk fed by R1 (R2 joins at J26);
/// the remaining junctions hang off the trunk as side branches of 1-5 pipes.
inline NetworkGraph make_default_network(std::uint64_t seed = 7) {
  constexpr Index trunk_len = 60;
  constexpr Index junctions = 100;
  std::vector<Node> nodes;
  nodes.push_back({"R1", NodeKind::reservoir});
  nodes.push_back({"R2", NodeKind::reservoir});
  for (Index j = 1; j <= junctions; ++j) nodes.push_back({"J" + std::to_string(j), NodeKind::junction});
  auto junction = [](Index k) { return 1 + k; };  // J<k> -> node index

  std::vector<Edge> edges;
  edges.push_back({0, junction(1), 1.0});
  for (Index k = 1; k < trunk_len; ++k) edges.push_back({junction(k), junction(k + 1), 1.0});
  edges.push_back({1, junction(26), 1.0});

  ScenarioRng rng(seed);
  Index next = trunk_len + 1;
  while (next <= junctions) {
    const Index len = std::min<Index>(rng.integer(1, 5), junctions - next + 1);
    Index prev = junction(rng.integer(1, trunk_len - 1));
    for (Index i = 0; i < len; ++i) {
      edges.push_back({prev, junction(next), 1.0});
      prev = junction(next);
      ++next;
    }
  }
  return NetworkGraph(std::move(nodes), std::move(edges));
}

struct BankOptions {
  Index count = 100;
  std::uint64_t seed = 2024;
  Index steps = kDefaultSteps;
  Index min_depth = 29;  // injection junctions are drawn from this downstream-depth window
  Index max_depth = 59;
};

/// Draws short pulse injections at junctions whose downstream depth lies in
/// the window, which keeps the Krylov dimension (the data rank) well below N.
inline std::vector<ScenarioConfig> make_scenario_bank(const NetworkGraph& g,
                                                      const BankOptions& opt = {}) {
  if (opt.count < 1) throw UsageError("scenario bank needs at least one scenario");
  const auto depth = downstream_depth(g);
  IndexList candidates;
  for (Index i = 0; i < g.node_count(); ++i) {
    const Index d = depth[static_cast<std::size_t>(i)];
    if (g.node(i).kind == NodeKind::junction && d >= opt.min_depth && d <= opt.max_depth)
      candidates.push_back(i);
  }
  if (candidates.empty()) {
    for (Index i = 0; i < g.node_count(); ++i)
      if (g.node(i).kind == NodeKind::junction) candidates.push_back(i);
  }
  if (candidates.empty()) candidates = iota_list(g.node_count());

  ScenarioRng rng(opt.seed);
  std::vector<ScenarioConfig> bank;
  bank.reserve(static_cast<std::size_t>(opt.count));
  for (Index s = 0; s < opt.count; ++s) {
    ScenarioConfig cfg;
    std::string id = std::to_string(s);
    cfg.id = "s" + std::string(3 - std::min<std::size_t>(3, id.size()), '0') + id;
    cfg.injection_node =
        candidates[static_cast<std::size_t>(rng.integer(0, static_cast<Index>(candidates.size()) - 1))];
    cfg.transport_weight = rng.uniform(0.95, 1.0);
    cfg.decay_rate = rng.uniform(0.0, 0.01);
    const Index duration = rng.integer(2, 7);
    const Index start = rng.integer(0, 9);
    for (Index d = 0; d < duration; ++d) cfg.injection_profile.push_back({start + d, rng.uniform(0.5, 2.0)});
    cfg.steps = opt.steps;
    cfg.seed = opt.seed + static_cast<std::uint64_t>(s);
    bank.push_back(std::move(cfg));
  }
  return bank;
}

inline constexpr std::string_view kScenarioBankSchema = "gfts.scenario-bank/1";

inline nlohmann::ordered_json scenario_bank_to_json(const std::vector<ScenarioConfig>& bank,
                                                    const NetworkGraph& g) {
  nlohmann::ordered_json doc;
  doc["schema"] = kScenarioBankSchema;
  auto& arr = doc["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& c : bank) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["injection_node"] = g.node(c.injection_node).id;
    auto& prof = j["injection_profile"] = nlohmann::ordered_json::array();
    for (const auto& inj : c.injection_profile) prof.push_back({inj.step, inj.amount});
    j["decay_rate"] = c.decay_rate;
    j["transport_weight"] = c.transport_weight;
    j["steps"] = c.steps;
    j["seed"] = c.seed;
    arr.push_back(std::move(j));
  }
  return doc;
}

/// injection_node may be a node id (string) or a 0-based index.
inline std::vector<ScenarioConfig> parse_scenario_bank(const nlohmann::json& doc,
                                                       const NetworkGraph& g) {
  std::vector<ScenarioConfig> bank;
  try {
    const auto& arr = doc.is_array() ? doc : doc.at("scenarios");
    for (const auto& j : arr) {
      ScenarioConfig c;
      c.id = j.value("id", "s" + std::to_string(bank.size()));
      const auto& node = j.at("injection_node");
      c.injection_node = node.is_string() ? g.index_of(node.get<std::string>()) : node.get<Index>();
      for (const auto& p : j.at("injection_profile")) {
        if (p.is_array()) {
          c.injection_profile.push_back({p.at(0).get<Index>(), p.at(1).get<double>()});
        } else {
          c.injection_profile.push_back({p.at("step").get<Index>(), p.at("amount").get<double>()});
        }
      }
      c.decay_rate = j.value("decay_rate", 0.0);
      c.transport_weight = j.value("transport_weight", 1.0);
      c.steps = j.value("steps", kDefaultSteps);
      c.seed = j.value("seed", std::uint64_t{0});
      validate(c, g);
      bank.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scenario bank: ") + e.what());
  }
  if (bank.empty()) throw DataError("scenario bank is empty");
  return bank;
}

inline std::vector<ScenarioConfig> load_scenario_bank(const std::string& path,
                                                      const NetworkGraph& g) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario bank '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("scenario bank does not parse: ") + e.what());
  }
  return parse_scenario_bank(doc, g);
}

}  // namespace gfts
