#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfts/baselines.hpp"
#include "gfts/error.hpp"
#include "gfts/gft.hpp"
#include "gfts/graph.hpp"
#include "gfts/linalg.hpp"
#include "gfts/parallel.hpp"
#include "gfts/sampling.hpp"

namespace gfts {

inline constexpr double kRecoveryThreshold = 1e-8;

inline void check_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DataError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()) + ")");
}

/// sqrt(Σ_k ‖x̂_k − x_k‖² / (N K))
inline double rmse(const Matrix& estimate, const Matrix& truth) {
  check_same_shape(estimate, truth, "rmse");
  if (truth.size() == 0) return 0.0;
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(truth.size()));
}

inline Vector per_node_rmse(const Matrix& estimate, const Matrix& truth) {
  check_same_shape(estimate, truth, "per_node_rmse");
  if (truth.cols() == 0) return Vector::Zero(truth.rows());
  return ((estimate - truth).rowwise().squaredNorm() / static_cast<double>(truth.cols()))
      .cwiseSqrt();
}

inline void score(RecoveryReport& rep, const Matrix& truth) {
  rep.rmse = rmse(rep.estimate, truth);
  rep.per_node_rmse = per_node_rmse(rep.estimate, truth);
}

/// Shared settings for the evaluation drivers.
struct EvalContext {
  const LaplacianSpectrum* laplacian = nullptr;  // needed by the laplacian scheme
  std::uint64_t seed = 1;                         // CS node order
  unsigned jobs = 1;
  BasisPursuitOptions solver;
  std::function<void(const std::string&)> progress;  // progress lines, never data

  void report(const std::string& line) const {
    if (progress) progress(line);
  }
};

/// Sensor order used by the CS schemes: a seeded random permutation of V.
inline IndexList random_node_order(Index n, std::uint64_t seed) {
  IndexList order = iota_list(n);
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepCell {
  Index band = 0;  // |R|
  Index size = 0;  // |S|
  double rmse = std::numeric_limits<double>::quiet_NaN();
  bool rank_deficient = false;
  bool failed = false;
  std::string error;

  friend bool operator==(const SweepCell& a, const SweepCell& b) {
    const bool same_rmse = (std::isnan(a.rmse) && std::isnan(b.rmse)) || a.rmse == b.rmse;
    return a.band == b.band && a.size == b.size && same_rmse &&
           a.rank_deficient == b.rank_deficient && a.failed == b.failed && a.error == b.error;
  }
};

struct SweepResult {
  std::string scenario_id;
  Scheme scheme = Scheme::gft;
  Index rank = 0;
  Index node_count = 0;
  std::vector<SweepCell> grid;  // sorted by (band, size)

  const SweepCell* find(Index band, Index size) const {
    for (const auto& c : grid)
      if (c.band == band && c.size == size) return &c;
    return nullptr;
  }
  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

/// Odd grid 1, 1 + step, … plus the extra points, clipped to [1, n].
inline IndexList grid_axis(Index n, Index step, const IndexList& extra = {}) {
  if (step < 1) throw UsageError("grid step must be >= 1");
  IndexList axis;
  for (Index v = 1; v <= n; v += step) axis.push_back(v);
  for (Index v : extra)
    if (v >= 1 && v <= n) axis.push_back(v);
  axis.push_back(n);
  std::sort(axis.begin(), axis.end());
  axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  return axis;
}

inline void check_axis(const IndexList& axis, Index n, std::string_view name) {
  if (axis.empty()) throw UsageError(std::string(name) + " range is empty");
  for (Index v : axis)
    if (v < 1 || v > n)
      throw UsageError(std::string(name) + " value " + std::to_string(v) + " outside [1, " +
                       std::to_string(n) + "]");
}

namespace detail {

inline void sweep_band(const Matrix& x, const Matrix& basis, const IndexList& band,
                       const IndexList& sizes, std::vector<SweepCell>& cells) {
  GreedyOptions gopt;
  gopt.throw_on_degenerate = false;
  GreedyTrace trace;
  try {
    trace = greedy_rows(select_cols(basis, band), sizes.back(), gopt);
  } catch (const Error& e) {
    for (auto& c : cells) {
      c.failed = true;
      c.error = e.what();
    }
    return;
  }
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    auto& cell = cells[j];
    try {
      SamplingPlan plan;
      plan.nodes.assign(trace.order.begin(), trace.order.begin() + sizes[j]);
      plan.band = band;
      const auto rep = recover_basis(sample(x, plan), basis, plan);
      cell.rmse = rmse(rep.estimate, x);
      cell.rank_deficient = rep.rank_deficient;
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
    }
  }
}

}  // namespace detail

/// RMSE over the Cartesian grid bands × sizes. GFT and Laplacian run one
/// greedy plan per |R| and read the |S| axis off its prefixes. CS schemes
/// have no band parameter: their band axis collapses to the single value N
/// and sensors are prefixes of random_node_order. Failures are recorded per
/// cell.
inline SweepResult sweep(const Matrix& x, Scheme scheme, IndexList bands, IndexList sizes,
                         const EvalContext& ctx = {}, std::string scenario_id = {}) {
  const Index n = x.rows();
  std::sort(bands.begin(), bands.end());
  bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  check_axis(bands, n, "band");
  check_axis(sizes, n, "size");

  SweepResult out;
  out.scenario_id = std::move(scenario_id);
  out.scheme = scheme;
  out.node_count = n;
  out.rank = numerical_rank(x);

  if (scheme == Scheme::cs_pca || scheme == Scheme::cs_dct) {
    const CsBasis basis = scheme == Scheme::cs_pca ? build_pca_basis(x) : build_dct_basis(x);
    const IndexList order = random_node_order(n, ctx.seed);
    out.grid.resize(sizes.size());
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      auto& cell = out.grid[j];
      cell.band = n;
      cell.size = sizes[j];
      IndexList nodes(order.begin(), order.begin() + sizes[j]);
      CsOptions copt;
      copt.jobs = ctx.jobs;
      copt.solver = ctx.solver;
      try {
        const auto rec = cs_recover(select_rows(x, nodes), basis, nodes, copt);
        cell.rmse = rmse(rec.report.estimate, x);
        if (rec.report.unconverged_steps > 0) {
          cell.failed = true;
          cell.error = std::to_string(rec.report.unconverged_steps) + " steps did not converge";
        }
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      ctx.report("sweep " + std::string(to_string(scheme)) + " |S|=" + std::to_string(sizes[j]));
    }
    return out;
  }

  Matrix basis;
  if (scheme == Scheme::gft) {
    basis = build_gft(x).basis();
  } else {
    if (!ctx.laplacian) throw UsageError("laplacian sweep needs the graph spectrum");
    if (ctx.laplacian->eigenvectors.rows() != n)
      throw DataError("laplacian spectrum does not match the data's node count");
    basis = ctx.laplacian->eigenvectors;
  }
  std::vector<std::vector<SweepCell>> rows(bands.size());
  for (std::size_t i = 0; i < bands.size(); ++i) {
    rows[i].resize(sizes.size());
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      rows[i][j].band = bands[i];
      rows[i][j].size = sizes[j];
    }
  }
  parallel_for(bands.size(), ctx.jobs, [&](std::size_t i) {
    detail::sweep_band(x, basis, iota_list(bands[i]), sizes, rows[i]);
    ctx.report("sweep " + std::string(to_string(scheme)) + " |R|=" + std::to_string(bands[i]));
  });
  for (auto& row : rows) out.grid.insert(out.grid.end(), row.begin(), row.end());
  return out;
}

// ---------------------------------------------------------------------------
// Minimum sampling size

struct MinSizeResult {
  Scheme scheme = Scheme::gft;
  Index s_min = 0;
  Index r_min = 0;
  bool unreachable = false;
  double rmse_at_min = std::numeric_limits<double>::quiet_NaN();
  Index unconverged_steps = 0;  // CS solver steps that hit the iteration cap at s_min
};

namespace detail {

// Smallest v in [lo, hi] with pred(v), assuming pred is monotone; hi + 1 if none.
template <typename Pred>
Index lower_bound_index(Index lo, Index hi, Pred pred) {
  Index first = hi + 1;
  while (lo <= hi) {
    const Index mid = lo + (hi - lo) / 2;
    if (pred(mid)) {
      first = mid;
      hi = mid - 1;
    } else {
      lo = mid + 1;
    }
  }
  return first;
}

inline MinSizeResult min_size_gft(const Matrix& x, double threshold) {
  const Index n = x.rows();
  MinSizeResult out;
  out.scheme = Scheme::gft;
  const auto op = build_gft(x);
  const Index r = op.cutoff();
  const IndexList band = iota_list(r);
  const auto trace = greedy_rows(op.basis().leftCols(r), n);
  std::map<Index, double> seen;
  auto err = [&](Index s) {
    if (auto it = seen.find(s); it != seen.end()) return it->second;
    SamplingPlan plan;
    plan.nodes.assign(trace.order.begin(), trace.order.begin() + s);
    plan.band = band;
    const double e = rmse(recover(sample(x, plan), op, plan).estimate, x);
    return seen[s] = e;
  };
  out.s_min = lower_bound_index(1, n, [&](Index s) { return err(s) < threshold; });
  if (out.s_min > n) {
    out.s_min = n;
    out.unreachable = true;
  }
  out.rmse_at_min = err(out.s_min);

  // r_min: smallest band that reaches the threshold with every node sampled.
  SamplingPlan all;
  all.nodes = iota_list(n);
  out.r_min = lower_bound_index(1, n, [&](Index b) {
    all.band = iota_list(b);
    return rmse(recover(x, op, all).estimate, x) < threshold;
  });
  if (out.r_min > n) out.r_min = n;
  return out;
}

inline MinSizeResult min_size_laplacian(const Matrix& x, double threshold,
                                        const LaplacianSpectrum& spec) {
  const Index n = x.rows();
  MinSizeResult out;
  out.scheme = Scheme::laplacian;
  const IndexList band = laplacian_band_select(spec, x);
  out.r_min = static_cast<Index>(band.size());
  if (band.empty()) {  // zero data
    out.s_min = 1;
    out.rmse_at_min = rmse(Matrix::Zero(x.rows(), x.cols()), x);
    return out;
  }
  GreedyOptions gopt;
  gopt.throw_on_degenerate = false;
  const auto trace = greedy_rows(select_cols(spec.eigenvectors, band), n, gopt);
  for (Index s = 1; s <= n; ++s) {
    SamplingPlan plan;
    plan.nodes.assign(trace.order.begin(), trace.order.begin() + s);
    plan.band = band;
    const double e = rmse(recover_basis(sample(x, plan), spec.eigenvectors, plan).estimate, x);
    if (e < threshold || s == n) {
      out.s_min = s;
      out.rmse_at_min = e;
      out.unreachable = !(e < threshold);
      return out;
    }
  }
  return out;
}

inline MinSizeResult min_size_cs(const Matrix& x, double threshold, CsKind kind,
                                 const EvalContext& ctx) {
  const Index n = x.rows();
  MinSizeResult out;
  out.scheme = kind == CsKind::pca ? Scheme::cs_pca : Scheme::cs_dct;
  out.r_min = n;
  const CsBasis basis = kind == CsKind::pca ? build_pca_basis(x) : build_dct_basis(x);
  const IndexList order = random_node_order(n, ctx.seed);
  // A step's squared error alone can push the total past the threshold, so
  // a size is abandoned as soon as the running sum does.
  const double budget = threshold * threshold * static_cast<double>(x.size());
  for (Index s = 1; s <= n; ++s) {
    IndexList nodes(order.begin(), order.begin() + s);
    double sse = 0.0;
    CsOptions copt;
    copt.jobs = ctx.jobs;
    copt.solver = ctx.solver;
    copt.on_step = [&](Index k, const Vector& est) {
      sse += (est - x.col(k)).squaredNorm();
      return sse < budget || s == n;
    };
    const auto rec = cs_recover(select_rows(x, nodes), basis, nodes, copt);
    if (!rec.aborted) {
      const double e = std::sqrt(sse / static_cast<double>(x.size()));
      if (e < threshold || s == n) {
        out.s_min = s;
        out.rmse_at_min = e;
        out.unreachable = !(e < threshold);
        out.unconverged_steps = rec.report.unconverged_steps;
        return out;
      }
    }
    ctx.report(std::string(to_string(out.scheme)) + " |S|=" + std::to_string(s) + " fails");
  }
  return out;
}

}  // namespace detail

/// Smallest |S| whose recovery reaches rmse < threshold. The GFT scheme uses
/// |R| = r and a binary search over greedy prefixes; the other schemes scan
/// |S| upward. Reported as N with `unreachable` when even |S| = N misses.
inline MinSizeResult min_sampling_size(const Matrix& x, Scheme scheme,
                                       double threshold = kRecoveryThreshold,
                                       const EvalContext& ctx = {}) {
  if (!(threshold > 0.0)) throw UsageError("threshold must be positive");
  if (max_abs(x) == 0.0) {
    MinSizeResult out;
    out.scheme = scheme;
    out.s_min = 1;
    out.r_min = scheme == Scheme::gft ? 1 : 0;
    out.rmse_at_min = 0.0;
    return out;
  }
  switch (scheme) {
    case Scheme::gft: return detail::min_size_gft(x, threshold);
    case Scheme::laplacian:
      if (!ctx.laplacian) throw UsageError("laplacian scheme needs the graph spectrum");
      return detail::min_size_laplacian(x, threshold, *ctx.laplacian);
    case Scheme::cs_pca: return detail::min_size_cs(x, threshold, CsKind::pca, ctx);
    case Scheme::cs_dct: return detail::min_size_cs(x, threshold, CsKind::dct, ctx);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Scheme comparison

struct NamedSignal {
  std::string id;
  Matrix data;
};

struct SchemeOutcome {
  Index s_min = 0;
  bool unreachable = false;
  Index unconverged_steps = 0;
  std::string error;  // non-empty when the scheme failed on this scenario

  bool ok() const { return error.empty(); }
  friend bool operator==(const SchemeOutcome&, const SchemeOutcome&) = default;
};

struct ComparisonRow {
  std::string scenario_id;
  Index rank = 0;
  Index node_count = 0;
  Index steps = 0;
  std::map<Scheme, SchemeOutcome> outcomes;
  std::optional<Index> r_min_gft;

  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct RankAggregate {
  Index rank = 0;
  Index count = 0;
  std::map<Scheme, double> mean_s_min;  // over scenarios where the scheme succeeded

  friend bool operator==(const RankAggregate&, const RankAggregate&) = default;
};

struct ComparisonTable {
  double threshold = kRecoveryThreshold;
  std::vector<Scheme> schemes;
  std::vector<ComparisonRow> rows;

  friend bool operator==(const ComparisonTable&, const ComparisonTable&) = default;
};

/// (N + K − r) r / K rounded up: the information bound on CS sensor counts.
inline Index cs_sample_bound(Index n, Index k, Index r) {
  return static_cast<Index>(
      std::ceil(static_cast<double>((n + k - r) * r) / static_cast<double>(k) - 1e-12));
}

inline std::vector<RankAggregate> mean_by_rank(const ComparisonTable& t) {
  std::map<Index, RankAggregate> acc;
  std::map<Index, std::map<Scheme, Index>> counts;
  for (const auto& row : t.rows) {
    auto& a = acc[row.rank];
    a.rank = row.rank;
    ++a.count;
    for (const auto& [scheme, o] : row.outcomes) {
      if (!o.ok()) continue;
      a.mean_s_min[scheme] += static_cast<double>(o.s_min);
      ++counts[row.rank][scheme];
    }
  }
  std::vector<RankAggregate> out;
  for (auto& [rank, a] : acc) {
    for (auto& [scheme, sum] : a.mean_s_min) sum /= static_cast<double>(counts[rank][scheme]);
    out.push_back(std::move(a));
  }
  return out;
}

/// Per-scenario s_min for each requested scheme (and r_min for gft).
/// Scenario failures are recorded in the row; the table is always complete.
inline ComparisonTable compare_schemes(const std::vector<NamedSignal>& bank,
                                       std::vector<Scheme> schemes,
                                       double threshold = kRecoveryThreshold,
                                       const EvalContext& ctx = {}) {
  if (bank.empty()) throw UsageError("compare_schemes: empty scenario bank");
  if (schemes.empty()) throw UsageError("compare_schemes: no schemes requested");
  std::sort(schemes.begin(), schemes.end());
  schemes.erase(std::unique(schemes.begin(), schemes.end()), schemes.end());

  ComparisonTable table;
  table.threshold = threshold;
  table.schemes = schemes;
  table.rows.resize(bank.size());
  EvalContext inner = ctx;
  inner.jobs = 1;
  inner.progress = nullptr;
  parallel_for(bank.size(), ctx.jobs, [&](std::size_t i) {
    const auto& sc = bank[i];
    auto& row = table.rows[i];
    row.scenario_id = sc.id;
    row.node_count = sc.data.rows();
    row.steps = sc.data.cols();
    try {
      row.rank = numerical_rank(sc.data);
    } catch (const Error&) {
      row.rank = 0;
    }
    for (Scheme s : schemes) {
      auto& o = row.outcomes[s];
      try {
        const auto m = min_sampling_size(sc.data, s, threshold, inner);
        o.s_min = m.s_min;
        o.unreachable = m.unreachable;
        o.unconverged_steps = m.unconverged_steps;
        if (s == Scheme::gft) row.r_min_gft = m.r_min;
      } catch (const Error& e) {
        o.error = e.what();
      }
    }
    ctx.report("compare " + sc.id + " done");
  });
  return table;
}

// ---------------------------------------------------------------------------
// Frequency profiles

struct FrequencyProfile {
  std::optional<Vector> gft;
  std::optional<Vector> laplacian;
  std::optional<Vector> pca;
  Index rank = 0;
};

/// Σ_k |x̃_k| per frequency index.
inline Vector magnitude_profile(const Matrix& basis, const Matrix& x) {
  if (basis.rows() != x.rows()) throw DataError("frequency profile: basis/data mismatch");
  return (basis.transpose() * x).cwiseAbs().rowwise().sum();
}

inline FrequencyProfile frequency_profile(const Matrix& x, const GftOperator* gft,
                                          const LaplacianSpectrum* laplacian,
                                          const CsBasis* pca) {
  FrequencyProfile out;
  out.rank = numerical_rank(x);
  if (gft) out.gft = magnitude_profile(gft->basis(), x);
  if (laplacian) out.laplacian = magnitude_profile(laplacian->eigenvectors, x);
  if (pca) out.pca = magnitude_profile(pca->p, x);
  return out;
}

/// Share of the profile's mass in the first `count` indices (1 for a zero profile).
inline double mass_within(const Vector& profile, Index count) {
  const double total = profile.sum();
  if (total == 0.0) return 1.0;
  return profile.head(std::min(count, profile.size())).sum() / total;
}

}  // namespace gfts
