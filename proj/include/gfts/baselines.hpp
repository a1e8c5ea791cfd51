#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfts/error.hpp"
#include "gfts/graph.hpp"
#include "gfts/linalg.hpp"
#include "gfts/parallel.hpp"
#include "gfts/sampling.hpp"

namespace gfts {

// ---------------------------------------------------------------------------
// Laplacian graph sampling

inline constexpr double kLaplacianBandTolerance = 1e-8;

/// N_ω: frequencies whose coefficient exceeds tol · max|F_lapᵀ X| at some step.
inline IndexList laplacian_band_select(const LaplacianSpectrum& spec, const Matrix& x,
                                       double tol = kLaplacianBandTolerance) {
  if (x.rows() != spec.eigenvectors.rows())
    throw DataError("laplacian_band_select: data has " + std::to_string(x.rows()) +
                    " rows, spectrum has N = " + std::to_string(spec.eigenvectors.rows()));
  const Matrix coeff = spec.eigenvectors.transpose() * x;
  const double peak = max_abs(coeff);
  IndexList band;
  if (peak == 0.0) return band;
  for (Index i = 0; i < coeff.rows(); ++i)
    if (coeff.row(i).cwiseAbs().maxCoeff() > tol * peak) band.push_back(i);
  return band;
}

inline SamplingPlan laplacian_select(const LaplacianSpectrum& spec, const IndexList& band,
                                     Index budget, const GreedyOptions& opt = {}) {
  auto plan = greedy_select_basis(spec.eigenvectors, band, budget, opt);
  plan.scheme = Scheme::laplacian;
  return plan;
}

// ---------------------------------------------------------------------------
// Compressed-sensing bases

enum class CsKind { pca, dct };

inline std::string_view to_string(CsKind k) { return k == CsKind::pca ? "pca" : "dct"; }

inline constexpr double kSparsityTolerance = 1e-8;

struct CsBasis {
  Matrix p;  // x_k = P c_k
  CsKind kind = CsKind::pca;
  Index sparsity = 0;  // γ

  Scheme scheme() const { return kind == CsKind::pca ? Scheme::cs_pca : Scheme::cs_dct; }
};

/// γ = max_k #{i : |c_{ik}| > tol · max_i |c_{ik}|} with C = Pᵀ X (P orthogonal).
inline Index measure_sparsity(const Matrix& p, const Matrix& x, double tol = kSparsityTolerance) {
  const Matrix c = p.transpose() * x;
  Index gamma = 0;
  for (Index k = 0; k < c.cols(); ++k) {
    const double peak = c.col(k).cwiseAbs().maxCoeff();
    if (peak == 0.0) continue;
    gamma = std::max(gamma, (c.col(k).array().abs() > tol * peak).cast<Index>().sum());
  }
  return gamma;
}

/// Uncentered PCA: P = U from the full SVD of X.
inline CsBasis build_pca_basis(const Matrix& x) {
  if (!x.allFinite()) throw DataError("build_pca_basis: non-finite data");
  if (max_abs(x) == 0.0) throw DataError("build_pca_basis: zero matrix has no principal components");
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeFullU);
  CsBasis b;
  b.p = svd.matrixU();
  for (Index j = 0; j < b.p.cols(); ++j) make_largest_entry_positive(b.p.col(j));
  b.kind = CsKind::pca;
  b.sparsity = measure_sparsity(b.p, x);
  return b;
}

/// Orthonormal DCT-II: P_{nk} = α_k cos(π (2n + 1) k / 2N). Without data the
/// sparsity is unknown and set to N.
inline CsBasis build_dct_basis(Index n) {
  if (n < 1) throw UsageError("build_dct_basis: N must be >= 1");
  CsBasis b;
  b.kind = CsKind::dct;
  b.p.resize(n, n);
  const double pi = std::acos(-1.0);
  const double nn = static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / nn);
    for (Index i = 0; i < n; ++i)
      b.p(i, k) = alpha * std::cos(pi * (2.0 * static_cast<double>(i) + 1.0) *
                                   static_cast<double>(k) / (2.0 * nn));
  }
  b.sparsity = n;
  return b;
}

inline CsBasis build_dct_basis(const Matrix& x) {
  auto b = build_dct_basis(x.rows());
  b.sparsity = measure_sparsity(b.p, x);
  return b;
}

// ---------------------------------------------------------------------------
// Basis pursuit: min ‖c‖₁ s.t. A c = y

struct BasisPursuitOptions {
  double tolerance = 1e-9;      // on ‖c_{t+1} − c_t‖_∞ relative to max(1, ‖c‖_∞)
  Index max_iterations = 50000;  // across all continuation stages
  double lambda_start = 0.5;     // λ_0 = lambda_start · ‖Aᵀy‖_∞
  double lambda_factor = 0.2;
  double lambda_floor = 1e-11;   // relative to ‖Aᵀy‖_∞
};

struct BasisPursuitResult {
  Vector c;
  Index iterations = 0;
  /// c satisfies Ac = y and carries a dual certificate, so it is a minimizer.
  bool certified = false;
  bool converged = false;
};

namespace detail {

inline void soft_threshold(Vector& v, double t) {
  v = v.array().sign() * (v.array().abs() - t).max(0.0);
}

// Least squares on the support of c, then a dual certificate: w with
// A_Tᵀ w = sign(c_T) of minimum norm must satisfy |A_{T^c}ᵀ w| ≤ 1.
inline bool debias_and_certify(const Matrix& a, const Vector& y, const Vector& c, Vector& out) {
  const double cmax = c.cwiseAbs().maxCoeff();
  const double ynorm = y.norm();
  if (cmax == 0.0) {
    if (ynorm != 0.0) return false;
    out = Vector::Zero(a.cols());
    return true;
  }
  IndexList support;
  for (Index i = 0; i < c.size(); ++i)
    if (std::abs(c(i)) > 1e-9 * cmax) support.push_back(i);
  if (static_cast<Index>(support.size()) > a.rows()) return false;
  const Matrix at = select_cols(a, support);
  Eigen::ColPivHouseholderQR<Matrix> qr(at);
  if (qr.rank() < at.cols()) return false;
  const Vector ct = qr.solve(y);
  if ((at * ct - y).norm() > 1e-10 * std::max(ynorm, 1e-300)) return false;

  Vector sgn(ct.size());
  for (Index i = 0; i < ct.size(); ++i) {
    if (ct(i) == 0.0) return false;
    sgn(i) = ct(i) > 0 ? 1.0 : -1.0;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(at.transpose());
  const Vector w = cod.solve(sgn);
  if ((at.transpose() * w - sgn).cwiseAbs().maxCoeff() > 1e-9) return false;
  const Vector corr = a.transpose() * w;
  std::vector<char> on(static_cast<std::size_t>(a.cols()), 0);
  for (Index i : support) on[static_cast<std::size_t>(i)] = 1;
  for (Index i = 0; i < a.cols(); ++i)
    if (!on[static_cast<std::size_t>(i)] && std::abs(corr(i)) > 1.0 + 1e-9) return false;

  out = Vector::Zero(a.cols());
  for (std::size_t i = 0; i < support.size(); ++i) out(support[i]) = ct(static_cast<Index>(i));
  return true;
}

}  // namespace detail

/// FISTA on ½‖Ac − y‖² + λ‖c‖₁ with λ decreased geometrically (penalty
/// continuation). After each stage the support is debiased and tested for
/// optimality of the equality-constrained problem.
inline BasisPursuitResult basis_pursuit(const Matrix& a, const Vector& y,
                                        const BasisPursuitOptions& opt = {}) {
  BasisPursuitResult res;
  const Index n = a.cols();
  res.c = Vector::Zero(n);
  const Vector aty = a.transpose() * y;
  const double scale = aty.size() ? aty.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) {
    res.certified = res.converged = y.norm() == 0.0;
    return res;
  }
  const Matrix gram = a.transpose() * a;
  const double lip = singular_values(a)(0);
  const double step = 1.0 / (lip * lip);

  double lambda = opt.lambda_start * scale;
  Vector c = res.c, prev = c, z = c;
  while (res.iterations < opt.max_iterations) {
    double t = 1.0;
    bool stage_done = false;
    while (res.iterations < opt.max_iterations) {
      ++res.iterations;
      prev = c;
      c = z - step * (gram * z - aty);
      detail::soft_threshold(c, step * lambda);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = c + ((t - 1.0) / t_next) * (c - prev);
      t = t_next;
      const double size = std::max(1.0, c.cwiseAbs().maxCoeff());
      if ((c - prev).cwiseAbs().maxCoeff() <= opt.tolerance * size) {
        stage_done = true;
        break;
      }
    }
    Vector exact;
    if (detail::debias_and_certify(a, y, c, exact)) {
      res.c = std::move(exact);
      res.certified = res.converged = true;
      return res;
    }
    if (!stage_done) break;
    if (lambda <= opt.lambda_floor * scale) {
      res.converged = true;
      break;
    }
    lambda = std::max(lambda * opt.lambda_factor, opt.lambda_floor * scale);
    z = c;
  }
  res.c = c;
  return res;
}

struct CsOptions {
  unsigned jobs = 1;
  BasisPursuitOptions solver;
  /// Called in step order with each recovered column; returning false stops
  /// the recovery early (the report is then marked aborted).
  std::function<bool(Index step, const Vector& estimate)> on_step;
};

struct CsRecovery {
  RecoveryReport report;
  bool aborted = false;
  Index steps_done = 0;
};

/// Per time-step: ĉ_k = argmin ‖c‖₁ s.t. P_SV c = X_{S,k}; x̂_k = P ĉ_k.
inline CsRecovery cs_recover(const Matrix& x_sk, const CsBasis& basis, const IndexList& nodes,
                             const CsOptions& opt = {}) {
  if (nodes.empty()) throw UsageError("cs_recover: empty sensor set");
  SamplingPlan plan;
  plan.nodes = nodes;
  plan.band = iota_list(basis.p.cols());
  plan.scheme = basis.scheme();
  plan.operator_ref = checksum(basis.p);
  check_plan(plan, basis.p.rows());
  if (x_sk.rows() != plan.size())
    throw DataError("cs_recover: sampled data has " + std::to_string(x_sk.rows()) +
                    " rows for " + std::to_string(plan.size()) + " sensors");
  const Matrix a = select_rows(basis.p, nodes);
  plan.sigma_min = smallest_singular_value(a);

  CsRecovery out;
  out.report.scheme = plan.scheme;
  out.report.plan = std::move(plan);
  out.report.estimate = Matrix::Zero(basis.p.rows(), x_sk.cols());

  const Index k_total = x_sk.cols();
  const Index chunk = std::max<Index>(1, opt.jobs);
  std::vector<char> ok(static_cast<std::size_t>(k_total), 1);
  for (Index start = 0; start < k_total; start += chunk) {
    const Index len = std::min(chunk, k_total - start);
    parallel_for(static_cast<std::size_t>(len), opt.jobs, [&](std::size_t i) {
      const Index k = start + static_cast<Index>(i);
      const auto bp = basis_pursuit(a, x_sk.col(k), opt.solver);
      ok[static_cast<std::size_t>(k)] = bp.converged;
      out.report.estimate.col(k) = basis.p * bp.c;
    });
    for (Index k = start; k < start + len; ++k) {
      if (!ok[static_cast<std::size_t>(k)]) ++out.report.unconverged_steps;
      ++out.steps_done;
      if (opt.on_step && !opt.on_step(k, out.report.estimate.col(k))) {
        out.aborted = true;
        return out;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Restricted isometry estimate

struct RipCheck {
  double delta = 0.0;  // δ_{2γ}
  Index subset_size = 0;
  bool satisfied = false;
  bool exhaustive = false;
  Index supports_checked = 0;
};

inline constexpr double kExhaustiveSupportLimit = 1e4;

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double v = 1.0;
  for (Index i = 1; i <= k; ++i) v = v * static_cast<double>(n - k + i) / static_cast<double>(i);
  return v;
}

/// δ_{2γ} of P_SV: the worst |‖P_SV c‖² − 1| over unit c supported on 2γ
/// coordinates, taken per support as the extreme eigenvalues of A_Tᵀ A_T.
/// Every support is checked when there are at most 10⁴ of them; otherwise
/// `trials` uniformly random supports.
inline RipCheck rip_estimate(const Matrix& p, const IndexList& nodes, Index gamma, Index trials,
                             std::uint64_t seed = 1) {
  if (trials < 1) throw UsageError("rip_estimate: trials must be >= 1");
  if (gamma < 1) throw UsageError("rip_estimate: sparsity must be >= 1");
  SamplingPlan tmp;
  tmp.nodes = nodes;
  check_plan(tmp, p.rows());
  const Index n = p.cols();
  const Index t = std::min(2 * gamma, n);
  const Matrix a = select_rows(p, nodes);
  const Matrix gram = a.transpose() * a;

  RipCheck out;
  out.subset_size = static_cast<Index>(nodes.size());
  auto score = [&](const IndexList& support) {
    const Matrix g = select(gram, support, support);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    out.delta = std::max({out.delta, std::abs(ev(0) - 1.0), std::abs(ev(ev.size() - 1) - 1.0)});
    ++out.supports_checked;
  };

  if (binomial(n, t) <= kExhaustiveSupportLimit) {
    out.exhaustive = true;
    IndexList support = iota_list(t);
    while (true) {
      score(support);
      Index i = t - 1;
      while (i >= 0 && support[static_cast<std::size_t>(i)] == n - t + i) --i;
      if (i < 0) break;
      ++support[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < t; ++j)
        support[static_cast<std::size_t>(j)] = support[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    std::mt19937_64 rng(seed);
    IndexList pool = iota_list(n);
    for (Index trial = 0; trial < trials; ++trial) {
      for (Index i = 0; i < t; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
      }
      IndexList support(pool.begin(), pool.begin() + t);
      std::sort(support.begin(), support.end());
      score(support);
    }
  }
  out.satisfied = out.delta < 1.0;
  return out;
}

}  // namespace gfts
