#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gfts/baselines.hpp"
#include "gfts/error.hpp"
#include "gfts/eval.hpp"
#include "gfts/gft.hpp"
#include "gfts/linalg.hpp"
#include "gfts/sampling.hpp"
#include "gfts/signal.hpp"

#ifndef GFTS_VERSION
#define GFTS_VERSION "0.0.0"
#endif

namespace gfts {

inline constexpr std::string_view kVersion = GFTS_VERSION;
inline constexpr std::string_view kOperatorSchema = "gfts.operator/1";
inline constexpr std::string_view kPlanSchema = "gfts.plan/1";
inline constexpr std::string_view kSweepSchema = "gfts.sweep/1";
inline constexpr std::string_view kComparisonSchema = "gfts.comparison/1";
inline constexpr std::string_view kRankMeansSchema = "gfts.rank-means/1";
inline constexpr std::string_view kProfileSchema = "gfts.profile/1";
inline constexpr std::string_view kReportSchema = "gfts.recovery/1";
inline constexpr std::string_view kManifestSchema = "gfts.manifest/1";
inline constexpr std::string_view kSignalCsvSchema = "gfts.signal-csv/1";

// ---------------------------------------------------------------------------
// Small file helpers

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline std::string file_checksum(const std::string& path) { return checksum(read_text_file(path)); }

inline nlohmann::json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string(what) + " does not parse: " + e.what());
  }
}

inline void expect_schema(const nlohmann::json& doc, std::string_view schema, std::string_view what) {
  if (!doc.is_object() || !doc.contains("schema") || doc.at("schema") != schema)
    throw DataError(std::string(what) + ": expected schema '" + std::string(schema) + "'");
}

/// Commas, pipes and line breaks would break the delimited formats.
inline std::string sanitize_field(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c == ',' || c == '|' || c == '\n' || c == '\r') c = ' ';
  return out;
}

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// "# schema key=value key=value" first line of the delimited reports.
inline std::string schema_line(std::string_view schema,
                               const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string line = "# " + std::string(schema);
  for (const auto& [k, v] : meta) line += " " + k + "=" + v;
  return line + "\n";
}

struct DelimitedDoc {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline DelimitedDoc parse_delimited(std::string_view text, std::string_view schema,
                                    std::string_view what) {
  DelimitedDoc doc;
  std::istringstream in{std::string(text)};
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      const auto parts = split(line, ' ');
      if (parts.size() < 2 || parts[0] != "#" || parts[1] != schema)
        throw DataError(std::string(what) + ": first line must be '# " + std::string(schema) + " ...'");
      for (std::size_t i = 2; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) throw DataError(std::string(what) + ": bad metadata '" + parts[i] + "'");
        doc.meta[parts[i].substr(0, eq)] = parts[i].substr(eq + 1);
      }
      continue;
    }
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (doc.header.empty()) {
      doc.header = std::move(cells);
      continue;
    }
    if (cells.size() != doc.header.size())
      throw DataError(std::string(what) + ": row with " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(doc.header.size()));
    doc.rows.push_back(std::move(cells));
  }
  if (doc.header.empty()) throw DataError(std::string(what) + ": missing header line");
  return doc;
}

inline const std::string& meta_at(const DelimitedDoc& d, const std::string& key, std::string_view what) {
  const auto it = d.meta.find(key);
  if (it == d.meta.end()) throw DataError(std::string(what) + ": missing metadata '" + key + "'");
  return it->second;
}

inline double to_double(const std::string& s, std::string_view what) {
  double v = 0.0;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!parse_double(s, v)) throw DataError(std::string(what) + ": '" + s + "' is not a number");
  return v;
}

inline Index to_index(const std::string& s, std::string_view what) {
  Index v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(std::string(what) + ": '" + s + "' is not an integer");
  return v;
}

inline std::string number_text(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// GFT operator: <stem>.json metadata + <stem>.csv basis (one row per node)

struct StoredOperator {
  GftOperator op;
  std::vector<std::string> node_ids;
};

inline std::string operator_basis_path(const std::string& json_path) {
  return std::filesystem::path(json_path).replace_extension(".csv").string();
}

inline void save_operator(const GftOperator& op, const std::vector<std::string>& node_ids,
                          const std::string& json_path) {
  if (static_cast<Index>(node_ids.size()) != op.size())
    throw DataError("save_operator: node id count does not match N");
  const std::string csv_path = operator_basis_path(json_path);
  std::ostringstream csv;
  write_matrix_csv(csv, op.basis(), &node_ids);
  write_text_file(csv_path, csv.str());

  nlohmann::ordered_json doc;
  doc["schema"] = kOperatorSchema;
  doc["kind"] = "gft";
  doc["node_count"] = op.size();
  doc["cutoff"] = op.cutoff();
  doc["independent_columns"] = op.independent_columns();
  doc["source_checksum"] = op.source_checksum();
  doc["basis_file"] = std::filesystem::path(csv_path).filename().string();
  doc["basis_checksum"] = op.checksum();
  write_text_file(json_path, doc.dump(2) + "\n");
}

inline StoredOperator load_operator(const std::string& json_path) {
  const auto doc = parse_json_text(read_text_file(json_path), "operator file");
  expect_schema(doc, kOperatorSchema, "operator file");
  try {
    const auto dir = std::filesystem::path(json_path).parent_path();
    const auto table = read_csv_file((dir / doc.at("basis_file").get<std::string>()).string(), true);
    const Index n = doc.at("node_count").get<Index>();
    if (table.values.rows() != n || table.values.cols() != n)
      throw DataError("operator basis is not " + std::to_string(n) + "x" + std::to_string(n));
    StoredOperator out{GftOperator(table.values, doc.at("cutoff").get<Index>(),
                                   doc.at("independent_columns").get<IndexList>(),
                                   doc.value("source_checksum", std::string())),
                       table.row_labels};
    if (doc.contains("basis_checksum") && doc.at("basis_checksum") != out.op.checksum())
      throw DataError("operator basis checksum mismatch (file modified?)");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("operator file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sampling plan: node ids, 1-based frequency indices

inline nlohmann::ordered_json plan_to_json(const SamplingPlan& plan,
                                           const std::vector<std::string>& node_ids) {
  nlohmann::ordered_json doc;
  doc["schema"] = kPlanSchema;
  doc["scheme"] = std::string(to_string(plan.scheme));
  auto& nodes = doc["nodes"] = nlohmann::ordered_json::array();
  for (Index i : plan.nodes) {
    if (i < 0 || i >= static_cast<Index>(node_ids.size()))
      throw DataError("plan node index outside the node id list");
    nodes.push_back(node_ids[static_cast<std::size_t>(i)]);
  }
  doc["band_size"] = plan.band_size();
  auto& band = doc["band"] = nlohmann::ordered_json::array();
  for (Index b : plan.band) band.push_back(b + 1);
  doc["sigma_min"] = plan.sigma_min;
  doc["operator_checksum"] = plan.operator_ref;
  return doc;
}

inline SamplingPlan parse_plan(const nlohmann::json& doc, const std::vector<std::string>& node_ids) {
  expect_schema(doc, kPlanSchema, "plan file");
  std::map<std::string, Index> index;
  for (std::size_t i = 0; i < node_ids.size(); ++i) index[node_ids[i]] = static_cast<Index>(i);
  try {
    SamplingPlan plan;
    plan.scheme = parse_scheme(doc.at("scheme").get<std::string>());
    for (const auto& id : doc.at("nodes")) {
      const auto it = index.find(id.get<std::string>());
      if (it == index.end()) throw DataError("plan names unknown node '" + id.get<std::string>() + "'");
      plan.nodes.push_back(it->second);
    }
    if (doc.contains("band")) {
      for (const auto& b : doc.at("band")) plan.band.push_back(b.get<Index>() - 1);
    } else {
      plan.band = iota_list(doc.at("band_size").get<Index>());
    }
    if (doc.contains("band_size") && doc.at("band_size").get<Index>() != plan.band_size())
      throw DataError("plan band_size disagrees with its band list");
    plan.sigma_min = doc.value("sigma_min", 0.0);
    plan.operator_ref = doc.value("operator_checksum", std::string());
    check_plan(plan, static_cast<Index>(node_ids.size()));
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("plan file: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("plan file: ") + e.what());
  }
}

inline void save_plan(const SamplingPlan& plan, const std::vector<std::string>& node_ids,
                      const std::string& path) {
  write_text_file(path, plan_to_json(plan, node_ids).dump(2) + "\n");
}

inline SamplingPlan load_plan(const std::string& path, const std::vector<std::string>& node_ids) {
  return parse_plan(parse_json_text(read_text_file(path), "plan file"), node_ids);
}

// ---------------------------------------------------------------------------
// Recovery summary

inline nlohmann::ordered_json report_to_json(const RecoveryReport& rep,
                                             const std::vector<std::string>& node_ids) {
  nlohmann::ordered_json doc;
  doc["schema"] = kReportSchema;
  doc["scheme"] = std::string(to_string(rep.scheme));
  doc["rmse"] = std::isnan(rep.rmse) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(rep.rmse);
  doc["rank_deficient"] = rep.rank_deficient;
  doc["unconverged_steps"] = rep.unconverged_steps;
  doc["plan"] = plan_to_json(rep.plan, node_ids);
  if (rep.per_node_rmse.size() == static_cast<Index>(node_ids.size())) {
    auto& per = doc["per_node_rmse"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < node_ids.size(); ++i)
      per[node_ids[i]] = rep.per_node_rmse(static_cast<Index>(i));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Sweep CSV

inline std::string sweep_to_csv(const SweepResult& s) {
  std::string out = detail::schema_line(
      kSweepSchema, {{"scenario", s.scenario_id.empty() ? "-" : sanitize_field(s.scenario_id)},
                     {"scheme", std::string(to_string(s.scheme))},
                     {"rank", std::to_string(s.rank)},
                     {"nodes", std::to_string(s.node_count)}});
  out += "band_size,sample_size,rmse,rank_deficient,failed,error\n";
  for (const auto& c : s.grid) {
    out += std::to_string(c.band) + "," + std::to_string(c.size) + "," + detail::number_text(c.rmse) +
           "," + (c.rank_deficient ? "1" : "0") + "," + (c.failed ? "1" : "0") + "," +
           sanitize_field(c.error) + "\n";
  }
  return out;
}

inline SweepResult parse_sweep_csv(std::string_view text) {
  constexpr std::string_view what = "sweep file";
  const auto d = detail::parse_delimited(text, kSweepSchema, what);
  SweepResult s;
  s.scenario_id = detail::meta_at(d, "scenario", what);
  if (s.scenario_id == "-") s.scenario_id.clear();
  s.scheme = parse_scheme(detail::meta_at(d, "scheme", what));
  s.rank = detail::to_index(detail::meta_at(d, "rank", what), what);
  s.node_count = detail::to_index(detail::meta_at(d, "nodes", what), what);
  if (d.header.size() != 6) throw DataError("sweep file: expected 6 columns");
  for (const auto& row : d.rows) {
    SweepCell c;
    c.band = detail::to_index(row[0], what);
    c.size = detail::to_index(row[1], what);
    c.rmse = detail::to_double(row[2], what);
    c.rank_deficient = row[3] == "1";
    c.failed = row[4] == "1";
    c.error = row[5];
    s.grid.push_back(std::move(c));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Comparison table CSV

inline constexpr Scheme kAllSchemes[] = {Scheme::gft, Scheme::laplacian, Scheme::cs_pca,
                                         Scheme::cs_dct};

inline std::string comparison_to_csv(const ComparisonTable& t) {
  std::string schemes;
  for (Scheme s : t.schemes) schemes += (schemes.empty() ? "" : ";") + std::string(to_string(s));
  std::string out = detail::schema_line(
      kComparisonSchema, {{"threshold", format_double(t.threshold)}, {"schemes", schemes}});
  out += "scenario_id,rank,nodes,steps,s_min_gft,s_min_laplacian,s_min_cs_pca,s_min_cs_dct,r_min_gft,flags\n";
  for (const auto& row : t.rows) {
    out += sanitize_field(row.scenario_id) + "," + std::to_string(row.rank) + "," +
           std::to_string(row.node_count) + "," + std::to_string(row.steps);
    std::string flags;
    auto flag = [&](const std::string& f) { flags += (flags.empty() ? "" : "|") + f; };
    for (Scheme s : kAllSchemes) {
      out += ",";
      const auto it = row.outcomes.find(s);
      if (it == row.outcomes.end()) continue;
      const auto& o = it->second;
      const std::string name(to_string(s));
      if (!o.ok()) {
        flag(name + ":error=" + sanitize_field(o.error));
        continue;
      }
      out += std::to_string(o.s_min);
      if (o.unreachable) flag(name + ":unreachable");
      if (o.unconverged_steps > 0) flag(name + ":unconverged=" + std::to_string(o.unconverged_steps));
    }
    out += "," + (row.r_min_gft ? std::to_string(*row.r_min_gft) : std::string()) + "," + flags + "\n";
  }
  return out;
}

inline ComparisonTable parse_comparison_csv(std::string_view text) {
  constexpr std::string_view what = "comparison file";
  const auto d = detail::parse_delimited(text, kComparisonSchema, what);
  if (d.header.size() != 10) throw DataError("comparison file: expected 10 columns");
  ComparisonTable t;
  t.threshold = detail::to_double(detail::meta_at(d, "threshold", what), what);
  for (const auto& name : detail::split(detail::meta_at(d, "schemes", what), ';'))
    if (!name.empty()) t.schemes.push_back(parse_scheme(name));
  for (const auto& cells : d.rows) {
    ComparisonRow row;
    row.scenario_id = cells[0];
    row.rank = detail::to_index(cells[1], what);
    row.node_count = detail::to_index(cells[2], what);
    row.steps = detail::to_index(cells[3], what);
    for (std::size_t i = 0; i < 4; ++i)
      if (!cells[4 + i].empty()) row.outcomes[kAllSchemes[i]].s_min = detail::to_index(cells[4 + i], what);
    if (!cells[8].empty()) row.r_min_gft = detail::to_index(cells[8], what);
    if (!cells[9].empty()) {
      for (const auto& f : detail::split(cells[9], '|')) {
        const auto colon = f.find(':');
        if (colon == std::string::npos) throw DataError("comparison file: bad flag '" + f + "'");
        auto& o = row.outcomes[parse_scheme(f.substr(0, colon))];
        const std::string rest = f.substr(colon + 1);
        if (rest == "unreachable") {
          o.unreachable = true;
        } else if (rest.rfind("unconverged=", 0) == 0) {
          o.unconverged_steps = detail::to_index(rest.substr(12), what);
        } else if (rest.rfind("error=", 0) == 0) {
          o.error = rest.substr(6);
        } else {
          throw DataError("comparison file: unknown flag '" + f + "'");
        }
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string rank_means_to_csv(const std::vector<RankAggregate>& aggs,
                                     const std::vector<Scheme>& schemes) {
  std::string out = detail::schema_line(kRankMeansSchema, {});
  out += "rank,count";
  for (Scheme s : schemes) out += ",mean_s_min_" + std::string(to_string(s));
  out += "\n";
  for (const auto& a : aggs) {
    out += std::to_string(a.rank) + "," + std::to_string(a.count);
    for (Scheme s : schemes) {
      const auto it = a.mean_s_min.find(s);
      out += "," + (it == a.mean_s_min.end() ? std::string() : format_double(it->second));
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frequency profile CSV (frequency index is 1-based)

inline std::string profile_to_csv(const FrequencyProfile& p) {
  std::vector<std::pair<std::string, const Vector*>> cols;
  if (p.gft) cols.emplace_back("gft", &*p.gft);
  if (p.laplacian) cols.emplace_back("laplacian", &*p.laplacian);
  if (p.pca) cols.emplace_back("pca", &*p.pca);
  std::string out = detail::schema_line(kProfileSchema, {{"rank", std::to_string(p.rank)}});
  out += "frequency";
  Index n = 0;
  for (const auto& [name, v] : cols) {
    out += "," + name;
    n = std::max(n, v->size());
  }
  out += "\n";
  for (Index i = 0; i < n; ++i) {
    out += std::to_string(i + 1);
    for (const auto& [name, v] : cols) out += "," + format_double((*v)(i));
    out += "\n";
  }
  return out;
}

inline FrequencyProfile parse_profile_csv(std::string_view text) {
  constexpr std::string_view what = "profile file";
  const auto d = detail::parse_delimited(text, kProfileSchema, what);
  FrequencyProfile p;
  p.rank = detail::to_index(detail::meta_at(d, "rank", what), what);
  const auto n = static_cast<Index>(d.rows.size());
  for (std::size_t c = 1; c < d.header.size(); ++c) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = detail::to_double(d.rows[static_cast<std::size_t>(i)][c], what);
    if (d.header[c] == "gft") p.gft = v;
    else if (d.header[c] == "laplacian") p.laplacian = v;
    else if (d.header[c] == "pca") p.pca = v;
    else throw DataError("profile file: unknown column '" + d.header[c] + "'");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Run manifest. No timestamps or host data, so reruns are byte-identical.

class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void parameter(const std::string& key, nlohmann::ordered_json value) {
    params_[key] = std::move(value);
  }
  void input(const std::string& path) { inputs_.push_back({path, file_checksum(path), {}}); }
  void output(const std::string& path, std::string_view schema) {
    outputs_.push_back({path, file_checksum(path), std::string(schema)});
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json doc;
    doc["schema"] = kManifestSchema;
    doc["tool"] = "gfts";
    doc["version"] = kVersion;
    doc["command"] = command_;
    doc["parameters"] = params_.is_null() ? nlohmann::ordered_json::object() : params_;
    auto& in = doc["inputs"] = nlohmann::ordered_json::array();
    for (const auto& f : inputs_) in.push_back({{"path", f.path}, {"checksum", f.sum}});
    auto& out = doc["outputs"] = nlohmann::ordered_json::array();
    for (const auto& f : outputs_)
      out.push_back({{"path", f.path}, {"schema", f.schema}, {"checksum", f.sum}});
    return doc;
  }

  void save(const std::string& path) const { write_text_file(path, to_json().dump(2) + "\n"); }

 private:
  struct File {
    std::string path, sum, schema;
  };
  std::string command_;
  nlohmann::ordered_json params_;
  std::vector<File> inputs_, outputs_;
};

}  // namespace gfts
