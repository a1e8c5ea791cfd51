#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gfts/error.hpp"
#include "gfts/linalg.hpp"
#include "gfts/signal.hpp"

namespace gfts {

/// A column joins M when its residual exceeds this fraction of σ_max(X).
inline constexpr double kColumnTolerance = 1e-10;
/// Frequency rows below this fraction of the peak magnitude count as silent.
inline constexpr double kBandTolerance = 1e-8;

/// Data-driven GFT: orthogonal F = [f_1 … f_N] whose first `cutoff` columns
/// span the column space of the source data. The transform is Fᵀ.
class GftOperator {
 public:
  GftOperator() = default;

  GftOperator(Matrix basis, Index cutoff, IndexList independent_columns,
              std::string source_checksum = {})
      : basis_(std::move(basis)),
        cutoff_(cutoff),
        independent_columns_(std::move(independent_columns)),
        source_checksum_(std::move(source_checksum)) {
    if (basis_.rows() != basis_.cols() || basis_.rows() == 0)
      throw DataError("GFT basis must be a non-empty square matrix");
    if (cutoff_ < 0 || cutoff_ > basis_.rows())
      throw DataError("GFT cutoff " + std::to_string(cutoff_) + " outside [0, N]");
    if (!basis_.allFinite()) throw DataError("GFT basis has non-finite entries");
    if (orthogonality_defect(basis_) > 1e-10)
      throw DataError("GFT basis is not orthogonal within 1e-10");
  }

  const Matrix& basis() const { return basis_; }
  Index size() const { return basis_.rows(); }
  Index cutoff() const { return cutoff_; }
  const IndexList& independent_columns() const { return independent_columns_; }
  const std::string& source_checksum() const { return source_checksum_; }
  std::string checksum() const { return gfts::checksum(basis_); }

  /// F_{V,R} for R = {1, …, band}.
  auto band_basis(Index band) const { return basis_.leftCols(band); }

 private:
  Matrix basis_;
  Index cutoff_ = 0;
  IndexList independent_columns_;
  std::string source_checksum_;
};

struct FrequencyResponse {
  Matrix coefficients;  // Fᵀ X
  IndexList active_band;
};

struct BandlimitCheck {
  bool bandlimited = false;
  double residual = 0.0;  // max |(FᵀX)_{ik}| over rows i ≥ band
  double bound = 0.0;     // kBandTolerance · ‖X‖_max
};

namespace detail {

/// Orthonormal basis of the numerical range of X plus the reduced
/// coordinates Y = U_rᵀ X.
struct NumericalRange {
  Matrix basis;  // U_r, N × r
  Matrix coordinates;
  double sigma_max = 0.0;
  Index rank = 0;
};

inline NumericalRange numerical_range(const Matrix& x, double rank_tol) {
  if (!x.allFinite()) throw DataError("data matrix has non-finite entries");
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  NumericalRange out;
  out.sigma_max = sv.size() ? sv(0) : 0.0;
  for (Index i = 0; i < sv.size(); ++i)
    if (out.sigma_max > 0 && sv(i) > rank_tol * out.sigma_max) ++out.rank;
  out.basis = svd.matrixU().leftCols(out.rank);
  out.coordinates = out.basis.transpose() * x;
  return out;
}

// v ← v − Q Qᵀ v, applied twice; classical Gram–Schmidt drifts otherwise.
template <typename Basis>
void project_out(const Basis& q, Vector& v) {
  if (q.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) v.noalias() -= q * (q.transpose() * v);
}

/// Left-to-right greedy: keep column j if its residual against the columns
/// already kept exceeds tol · σ_max. Stops once `limit` columns are kept.
inline IndexList greedy_independent_columns(const Matrix& coords, double sigma_max, Index limit,
                                            double tol) {
  IndexList kept;
  Matrix q(coords.rows(), limit);
  for (Index j = 0; j < coords.cols() && static_cast<Index>(kept.size()) < limit; ++j) {
    Vector v = coords.col(j);
    project_out(q.leftCols(static_cast<Index>(kept.size())), v);
    const double nrm = v.norm();
    if (nrm > tol * sigma_max) {
      q.col(static_cast<Index>(kept.size())) = v / nrm;
      kept.push_back(j);
    }
  }
  return kept;
}

}  // namespace detail

/// Deterministic maximal set of linearly independent columns M (|M| = r).
/// Selection runs on X restricted to its numerical range, so rounding in
/// discarded directions cannot promote a dependent column.
inline IndexList independent_columns(const Matrix& x, double rank_tol = kDefaultRankTolerance,
                                     double column_tol = kColumnTolerance) {
  const auto range = detail::numerical_range(x, rank_tol);
  if (range.rank == 0) throw DataError("independent_columns: matrix has numerical rank 0");
  auto m = detail::greedy_independent_columns(range.coordinates, range.sigma_max, range.rank,
                                              column_tol);
  if (static_cast<Index>(m.size()) != range.rank) {
    throw NumericalError("independent_columns: found " + std::to_string(m.size()) +
                         " independent columns but the numerical rank is " +
                         std::to_string(range.rank));
  }
  return m;
}

inline IndexList independent_columns(const SignalMatrix& x,
                                     double column_tol = kColumnTolerance) {
  return independent_columns(x.data(), x.rank_tolerance(), column_tol);
}

/// Builds F: f_1…f_r by Gram–Schmidt over x_{m_1}, …, x_{m_r} (positive
/// normalization, so the R block has a positive diagonal), then f_{r+1}…f_N
/// as an orthonormal basis of the null space of [f_1 … f_r]ᵀ.
inline GftOperator build_gft(const Matrix& x, double rank_tol = kDefaultRankTolerance,
                             double column_tol = kColumnTolerance) {
  const auto range = detail::numerical_range(x, rank_tol);
  const Index n = x.rows();
  const Index r = range.rank;
  if (r == 0) throw DataError("build_gft: data matrix has numerical rank 0");

  IndexList m = detail::greedy_independent_columns(range.coordinates, range.sigma_max, r, column_tol);
  if (static_cast<Index>(m.size()) != r) {
    throw NumericalError("build_gft: found " + std::to_string(m.size()) +
                         " independent columns but the numerical rank is " + std::to_string(r) +
                         " (rank mis-estimate)");
  }

  // Gram–Schmidt in range coordinates; U_r maps the result back to R^N.
  Matrix q(r, r);
  for (Index i = 0; i < r; ++i) {
    Vector v = range.coordinates.col(m[static_cast<std::size_t>(i)]);
    detail::project_out(q.leftCols(i), v);
    const double nrm = v.norm();
    if (nrm <= 1e-12 * range.sigma_max) {
      throw NumericalError("build_gft: Gram-Schmidt breakdown at column " +
                           std::to_string(m[static_cast<std::size_t>(i)]) +
                           " (rank mis-estimate)");
    }
    q.col(i) = v / nrm;
  }

  Matrix f(n, n);
  f.leftCols(r) = range.basis * q;

  if (r < n) {
    // Complement from the full orthogonal QR factor, then one more
    // orthonormalization pass against everything already in F.
    Eigen::HouseholderQR<Matrix> qr(f.leftCols(r));
    const Matrix full = qr.householderQ();
    for (Index i = r; i < n; ++i) {
      Vector v = full.col(i);
      detail::project_out(f.leftCols(i), v);
      v.normalize();
      make_largest_entry_positive(v);
      f.col(i) = v;
    }
  }
  return GftOperator(std::move(f), r, std::move(m), checksum(x));
}

inline GftOperator build_gft(const SignalMatrix& x, double column_tol = kColumnTolerance) {
  return build_gft(x.data(), x.rank_tolerance(), column_tol);
}

/// X̃ = Fᵀ X; active rows are those above kBandTolerance of the peak.
inline FrequencyResponse forward_gft(const GftOperator& op, const Matrix& x) {
  if (x.rows() != op.size())
    throw DataError("forward_gft: data has " + std::to_string(x.rows()) +
                    " rows, operator has N = " + std::to_string(op.size()));
  FrequencyResponse out;
  out.coefficients = op.basis().transpose() * x;
  const double peak = max_abs(out.coefficients);
  if (peak > 0) {
    for (Index i = 0; i < out.coefficients.rows(); ++i) {
      if (out.coefficients.row(i).cwiseAbs().maxCoeff() > kBandTolerance * peak)
        out.active_band.push_back(i);
    }
  }
  return out;
}

/// X is band-limited to the first `band` frequencies when every later row of
/// FᵀX stays within kBandTolerance · ‖X‖_max.
inline BandlimitCheck verify_bandlimited(const GftOperator& op, const Matrix& x, Index band) {
  if (x.rows() != op.size())
    throw DataError("verify_bandlimited: data/operator dimension mismatch");
  if (band < 0 || band > op.size())
    throw UsageError("verify_bandlimited: band " + std::to_string(band) + " outside [0, N]");
  BandlimitCheck out;
  out.bound = kBandTolerance * max_abs(x);
  const Index tail = op.size() - band;
  if (tail > 0) out.residual = max_abs(op.basis().rightCols(tail).transpose() * x);
  out.bandlimited = out.residual <= out.bound;
  return out;
}

}  // namespace gfts
