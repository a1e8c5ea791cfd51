#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfts/error.hpp"
#include "gfts/gft.hpp"
#include "gfts/linalg.hpp"
#include "gfts/parallel.hpp"

namespace gfts {

enum class Scheme { gft, laplacian, cs_pca, cs_dct };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::gft: return "gft";
    case Scheme::laplacian: return "laplacian";
    case Scheme::cs_pca: return "cs_pca";
    case Scheme::cs_dct: return "cs_dct";
  }
  return "gft";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "gft") return Scheme::gft;
  if (s == "laplacian") return Scheme::laplacian;
  if (s == "cs_pca" || s == "cs-pca") return Scheme::cs_pca;
  if (s == "cs_dct" || s == "cs-dct") return Scheme::cs_dct;
  throw UsageError("unknown scheme '" + std::string(s) + "' (gft, laplacian, cs_pca, cs_dct)");
}

/// Sensor set S (selection order) and frequency set R (basis columns).
struct SamplingPlan {
  IndexList nodes;
  IndexList band;
  double sigma_min = 0.0;  // σ_min(F_SR)
  std::string operator_ref;
  Scheme scheme = Scheme::gft;

  Index size() const { return static_cast<Index>(nodes.size()); }
  Index band_size() const { return static_cast<Index>(band.size()); }
};

struct RecoveryReport {
  Matrix estimate;  // X̂
  double rmse = std::numeric_limits<double>::quiet_NaN();
  Vector per_node_rmse;
  Scheme scheme = Scheme::gft;
  SamplingPlan plan;
  /// rank(F_SR) < |R|: X̂ is the minimum-norm least-squares estimate.
  bool rank_deficient = false;
  /// Steps whose sparse solve hit the iteration cap (compressed sensing only).
  Index unconverged_steps = 0;
};

/// Threshold below which a greedy step counts as adding nothing.
inline constexpr double kDegenerateSigma = 1e-12;
/// Scores within this margin are ties; the lower node index wins.
inline constexpr double kTieTolerance = 1e-12;
/// F_SR with σ_min < kConditioningGuard · σ_max is treated as rank deficient.
inline constexpr double kConditioningGuard = 1e-10;

struct GreedyOptions {
  unsigned jobs = 1;
  /// Throw when no candidate raises σ_min above kDegenerateSigma while
  /// |S| < |R|. Sweeps turn this off and record the zero instead.
  bool throw_on_degenerate = true;
};

struct GreedyTrace {
  IndexList order;            // rows in selection order
  std::vector<double> score;  // σ_min(A_{order[0..i]}) after step i
};

namespace detail {

// Smallest eigenvalue of [[G, b], [bᵀ, c]] with G = V diag(lam) Vᵀ, z = Vᵀb,
// lam ascending. Root of c − λ − Σ z_j²/(λ_j − λ) on [0, λ_1].
inline double bordered_min_eig(const Vector& lam, const Eigen::Ref<const Vector>& z, double c) {
  if (lam.size() == 0) return std::max(c, 0.0);
  const double top = std::max(lam(0), 0.0);
  auto phi = [&](double x) {
    double s = c - x;
    for (Index j = 0; j < lam.size(); ++j) {
      const double zz = z(j) * z(j);
      if (zz > 0.0) s -= zz / (lam(j) - x);
    }
    return s;
  };
  if (top == 0.0 || phi(0.0) <= 0.0) return 0.0;
  double lo = 0.0, hi = top;
  for (int it = 0; it < 200 && hi - lo > 1e-17 * top; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (phi(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Smallest eigenvalue of diag(lam) + z zᵀ (lam ascending): root of
// 1 + Σ z_j²/(λ_j − λ) on (λ_1, min(λ_2, λ_1 + ‖z‖²)].
inline double rank_one_min_eig(const Vector& lam, const Eigen::Ref<const Vector>& z) {
  const double znorm2 = z.squaredNorm();
  double lo = lam(0);
  double hi = lam(0) + znorm2;
  if (lam.size() > 1) hi = std::min(hi, lam(1));
  if (z(0) == 0.0 || hi <= lo) return lo;
  auto psi = [&](double x) {
    double s = 1.0;
    for (Index j = 0; j < lam.size(); ++j) {
      const double zz = z(j) * z(j);
      if (zz > 0.0) s += zz / (lam(j) - x);
    }
    return s;
  };
  if (psi(hi) < 0.0) return hi;
  const double scale = std::max(std::abs(hi), 1e-300);
  for (int it = 0; it < 200 && hi - lo > 1e-17 * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (psi(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Greedy row selection over `a` (N × |R|, already restricted
/// to the band): each step appends the row that maximizes σ_min of the
/// selected rows. Candidate scores come from secular equations on the
/// current Gram eigendecomposition, not a fresh SVD per candidate.
inline GreedyTrace greedy_rows(const Matrix& a, Index budget, const GreedyOptions& opt = {}) {
  const Index n = a.rows();
  const Index m = a.cols();
  if (budget < 1) throw UsageError("greedy selection: budget must be >= 1");
  if (budget > n)
    throw UsageError("greedy selection: budget " + std::to_string(budget) +
                     " exceeds the node count " + std::to_string(n));
  if (m < 1) throw UsageError("greedy selection: empty band");
  if (!a.allFinite()) throw DataError("greedy selection: basis has non-finite entries");

  GreedyTrace out;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  const Vector row_norm2 = a.rowwise().squaredNorm();
  std::vector<double> score(static_cast<std::size_t>(n));

  for (Index step = 0; step < budget; ++step) {
    const Matrix sel = select_rows(a, out.order);
    const Index k = sel.rows();
    Vector lam;
    Matrix z;  // column i = projected candidate i
    if (k == 0) {
      z.resize(0, n);
    } else if (k < m) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(sel * sel.transpose());
      lam = es.eigenvalues();
      z = es.eigenvectors().transpose() * (sel * a.transpose());
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es(sel.transpose() * sel);
      lam = es.eigenvalues();
      z = es.eigenvectors().transpose() * a.transpose();
    }
    parallel_for(static_cast<std::size_t>(n), opt.jobs, [&](std::size_t i) {
      if (taken[i]) return;
      const auto col = static_cast<Index>(i);
      const double ev = k < m ? detail::bordered_min_eig(lam, z.col(col), row_norm2(col))
                              : detail::rank_one_min_eig(lam, z.col(col));
      score[i] = std::sqrt(std::max(ev, 0.0));
    });
    Index best = -1;
    double best_score = -1.0;
    for (Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (score[static_cast<std::size_t>(i)] > best_score + kTieTolerance) {
        best_score = score[static_cast<std::size_t>(i)];
        best = i;
      }
    }
    if (k < m && best_score <= kDegenerateSigma && opt.throw_on_degenerate) {
      throw NumericalError("degenerate operator: no remaining node raises sigma_min above 1e-12 at "
                           "|S| = " + std::to_string(k) + " < |R| = " + std::to_string(m));
    }
    taken[static_cast<std::size_t>(best)] = 1;
    out.order.push_back(best);
    out.score.push_back(best_score);
  }
  return out;
}

/// Greedy max-σ_min plan over the frequencies `band` of an arbitrary basis.
inline SamplingPlan greedy_select_basis(const Matrix& basis, const IndexList& band, Index budget,
                                        const GreedyOptions& opt = {}) {
  for (Index b : band)
    if (b < 0 || b >= basis.cols())
      throw UsageError("band index " + std::to_string(b) + " outside the operator's frequencies");
  const Matrix a = select_cols(basis, band);
  auto trace = greedy_rows(a, budget, opt);
  SamplingPlan plan;
  plan.nodes = std::move(trace.order);
  plan.band = band;
  plan.sigma_min = smallest_singular_value(select_rows(a, plan.nodes));
  plan.operator_ref = checksum(basis);
  return plan;
}

/// Greedy plan with R = {1, …, band}.
inline SamplingPlan greedy_select(const GftOperator& op, Index band, Index budget,
                                  const GreedyOptions& opt = {}) {
  if (band < 1 || band > op.size())
    throw UsageError("band size " + std::to_string(band) + " outside [1, N]");
  auto plan = greedy_select_basis(op.basis(), iota_list(band), budget, opt);
  plan.operator_ref = op.checksum();
  return plan;
}

/// Plan whose sensors are the first `size` entries of a greedy trace.
inline SamplingPlan plan_prefix(const Matrix& basis, const IndexList& band,
                                const GreedyTrace& trace, Index size, std::string operator_ref) {
  if (size < 1 || size > static_cast<Index>(trace.order.size()))
    throw UsageError("prefix size outside the greedy trace");
  SamplingPlan plan;
  plan.nodes.assign(trace.order.begin(), trace.order.begin() + size);
  plan.band = band;
  plan.sigma_min = smallest_singular_value(select(basis, plan.nodes, band));
  plan.operator_ref = std::move(operator_ref);
  return plan;
}

inline void check_plan(const SamplingPlan& plan, Index n) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Index i : plan.nodes) {
    if (i < 0 || i >= n)
      throw DataError("plan node index " + std::to_string(i) + " outside [0, " +
                      std::to_string(n) + ")");
    if (seen[static_cast<std::size_t>(i)]++) throw DataError("plan lists node " + std::to_string(i) + " twice");
  }
}

/// X_SK: rows of X at the plan's nodes, in plan order.
inline Matrix sample(const Matrix& x, const SamplingPlan& plan) {
  check_plan(plan, x.rows());
  return select_rows(x, plan.nodes);
}

/// X̂ = F_VR (F_SRᵀ F_SR)⁻¹ F_SRᵀ X_SK, evaluated as a least-squares
/// solve. A rank-deficient F_SR yields the minimum-norm solution and sets
/// rank_deficient; with strict = true it throws instead.
inline RecoveryReport recover_basis(const Matrix& x_sk, const Matrix& basis,
                                    const SamplingPlan& plan, bool strict = false) {
  const Index n = basis.rows();
  check_plan(plan, n);
  if (x_sk.rows() != plan.size())
    throw DataError("sampled data has " + std::to_string(x_sk.rows()) + " rows but the plan has " +
                    std::to_string(plan.size()) + " nodes");
  if (plan.band.empty()) throw UsageError("recover: empty band");
  for (Index b : plan.band)
    if (b < 0 || b >= basis.cols()) throw DataError("recover: band index outside the operator");

  const Matrix f_vr = select_cols(basis, plan.band);
  const Matrix f_sr = select_rows(f_vr, plan.nodes);
  const Vector sv = singular_values(f_sr);
  const double smax = sv.size() ? sv(0) : 0.0;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;

  RecoveryReport rep;
  rep.scheme = plan.scheme;
  rep.plan = plan;
  rep.plan.sigma_min = plan.size() >= plan.band_size() ? smin : 0.0;
  rep.rank_deficient = plan.size() < plan.band_size() || !(smin >= kConditioningGuard * smax);
  if (rep.rank_deficient && strict) {
    throw NumericalError("F_SR is rank deficient (|S| = " + std::to_string(plan.size()) +
                         ", |R| = " + std::to_string(plan.band_size()) +
                         ", sigma_min = " + format_double(rep.plan.sigma_min) +
                         ", sigma_max = " + format_double(smax) + ")");
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(f_sr);
  cod.setThreshold(kConditioningGuard);
  rep.estimate = f_vr * cod.solve(x_sk);
  return rep;
}

inline RecoveryReport recover(const Matrix& x_sk, const GftOperator& op, const SamplingPlan& plan,
                              bool strict = false) {
  return recover_basis(x_sk, op.basis(), plan, strict);
}

}  // namespace gfts
