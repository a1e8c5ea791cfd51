#pragma once

// Reference computations for the tests. Each one takes the slow, obvious
// route (exhaustive search, fresh SVDs, closed forms) and shares no code
// with the library beyond the Eigen types.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

/// Rank-r matrix as a product of Gaussian factors.
inline Matrix low_rank(Index rows, Index cols, Index r, std::mt19937_64& rng) {
  return gaussian(rows, r, rng) * gaussian(r, cols, rng);
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian, R diagonal made positive).
inline Matrix random_orthogonal(Index n, std::mt19937_64& rng) {
  const Matrix g = gaussian(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

inline Vector svals(const Matrix& m) {
  if (m.size() == 0) return Vector();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

inline Index rank(const Matrix& m, double tol = 1e-10) {
  const Vector s = svals(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > tol * s(0)).cast<Index>().sum();
}

inline double sigma_min(const Matrix& m) {
  const Vector s = svals(m);
  return s.size() ? s(s.size() - 1) : 0.0;
}

inline Matrix rows_of(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

inline Matrix cols_of(const Matrix& m, const IndexList& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

/// Calls fn for every k-subset of {0..n-1} in lexicographic order; stops when fn returns false.
template <typename Fn>
void for_each_subset(Index n, Index k, Fn fn) {
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  std::fill(mask.begin(), mask.begin() + k, 1);
  do {
    IndexList s;
    for (Index i = 0; i < n; ++i)
      if (mask[static_cast<std::size_t>(i)]) s.push_back(i);
    if (!fn(s)) return;
  } while (std::prev_permutation(mask.begin(), mask.end()));
}

/// Lexicographically first column subset of size rank(X) with full rank.
inline IndexList first_independent_subset(const Matrix& x) {
  const Index r = rank(x);
  IndexList found;
  for_each_subset(x.cols(), r, [&](const IndexList& s) {
    if (rank(cols_of(x, s)) == r) {
      found = s;
      return false;
    }
    return true;
  });
  return found;
}

/// Greedy max-σ_min with a fresh SVD per candidate; lowest index wins ties.
inline IndexList naive_greedy(const Matrix& a, Index budget) {
  IndexList chosen;
  for (Index step = 0; step < budget; ++step) {
    Index best = -1;
    double best_val = -1.0;
    for (Index i = 0; i < a.rows(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      IndexList trial = chosen;
      trial.push_back(i);
      const double v = sigma_min(rows_of(a, trial));
      if (v > best_val + 1e-12) {
        best_val = v;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

/// Largest principal angle (radians) between the column spaces of a and b,
/// computed from the sine side so that tiny angles keep their accuracy.
inline double max_principal_angle(const Matrix& a, const Matrix& b) {
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Matrix resid = qb - qa * (qa.transpose() * qb);
  const double s = svals(resid)(0);
  return std::asin(std::min(1.0, s));
}

/// Thin QR by Householder reflections: x = q r with q (n×m), r (m×m) upper.
struct ThinQr {
  Matrix q, r;
};
inline ThinQr householder_qr(const Matrix& x) {
  Eigen::HouseholderQR<Matrix> qr(x);
  ThinQr out;
  out.q = qr.householderQ() * Matrix::Identity(x.rows(), x.cols());
  out.r = qr.matrixQR().topRows(x.cols()).triangularView<Eigen::Upper>();
  return out;
}

/// Orthonormal basis of the Krylov space span{B, T B, T² B, …} up to `depth` powers.
inline Index krylov_dimension(const Matrix& t, const Matrix& b, Index depth) {
  Matrix k(b.rows(), b.cols() * depth);
  Matrix block = b;
  for (Index d = 0; d < depth; ++d) {
    k.middleCols(d * b.cols(), b.cols()) = block;
    block = t * block;
  }
  return rank(k);
}

/// Orthonormal DCT-II entry.
inline double dct_entry(Index n, Index i, Index k) {
  const double pi = std::acos(-1.0);
  const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
  return alpha * std::cos(pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) /
                          (2.0 * static_cast<double>(n)));
}

/// δ over every support of size t: max |σ²(A_T) − 1|.
inline double rip_exhaustive(const Matrix& a, Index t) {
  double delta = 0.0;
  for_each_subset(a.cols(), t, [&](const IndexList& s) {
    const Vector sv = svals(cols_of(a, s));
    // A_T has at least as many columns as rows when |S| < t: missing singular values are 0.
    const double lo = sv.size() < t ? 0.0 : sv(sv.size() - 1);
    delta = std::max({delta, std::abs(sv(0) * sv(0) - 1.0), std::abs(lo * lo - 1.0)});
    return true;
  });
  return delta;
}

}  // namespace oracle
