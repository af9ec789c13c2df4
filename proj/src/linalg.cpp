#include "fsmap/linalg.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "fsmap/errors.hpp"

namespace fsmap {

namespace {

[[noreturn]] void throw_singular(int nulls) {
  throw SingularityError("log-determinant of a singular matrix with zero jitter (" + std::to_string(nulls) +
                             " null directions)",
                         nulls);
}

}  // namespace

Vector padded_singular_values(const Matrix& stacked) {
  Vector s = Vector::Zero(stacked.cols());
  if (stacked.rows() == 0 || stacked.cols() == 0) return s;
  Eigen::BDCSVD<Matrix> svd(stacked);
  const Vector& sv = svd.singularValues();
  s.head(sv.size()) = sv;
  return s;
}

int null_direction_count(const Matrix& stacked) {
  const Vector s = padded_singular_values(stacked);
  const double cut = kPseudoDetRelTol * (s.size() ? s.maxCoeff() : 0.0);
  int n = 0;
  for (double v : s)
    if (!(v > cut)) ++n;
  return n;
}

double logdet_jittered_stacked(const Matrix& stacked, double scale, double eps) {
  if (!(eps >= 0)) throw std::invalid_argument("jitter must be >= 0");
  if (!(scale > 0)) throw std::invalid_argument("scale must be positive");
  const Vector s = padded_singular_values(stacked);
  const double cut = kPseudoDetRelTol * (s.size() ? s.maxCoeff() : 0.0);
  double total = 0.0;
  int nulls = 0;
  for (double v : s) {
    const double sv = v > cut ? v : 0.0;
    if (sv == 0.0) ++nulls;
    total += std::log(sv * sv * scale + eps);
  }
  if (eps == 0.0 && nulls > 0) throw_singular(nulls);
  return total;
}

double pseudo_logdet_stacked(const Matrix& stacked, double scale) {
  const Vector s = padded_singular_values(stacked);
  const double cut = kPseudoDetRelTol * (s.size() ? s.maxCoeff() : 0.0);
  double total = 0.0;
  for (double v : s)
    if (v > cut) total += std::log(v * v * scale);
  return total;
}

double logdet_jittered_gram(const Matrix& gram, double eps) {
  if (!(eps >= 0)) throw std::invalid_argument("jitter must be >= 0");
  if (gram.rows() != gram.cols()) throw DimensionError("Gram matrix must be square");
  const Eigen::Index n = gram.rows();
  // With no jitter, factor out the diagonal so that badly scaled coordinates
  // do not masquerade as null directions: log det G = log det C + Σ log G_ii.
  Vector scale = Vector::Ones(n);
  double offset = 0.0;
  int nulls = 0;
  if (eps == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (gram(i, i) > 0.0) {
        scale(i) = 1.0 / std::sqrt(gram(i, i));
        offset += std::log(gram(i, i));
      } else {
        scale(i) = 0.0;
      }
    }
  }
  const Matrix c = scale.asDiagonal() * gram * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double top = ev.size() ? std::max(ev.maxCoeff(), 0.0) : 0.0;
  const double cut = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * top;
  double total = offset;
  for (double v : ev) {
    const double lam = v > cut ? v : 0.0;
    if (lam == 0.0) ++nulls;
    total += std::log(lam + eps);
  }
  if (eps == 0.0 && nulls > 0) throw_singular(nulls);
  return total;
}

LogDetWithWeights logdet_jittered_fast(const Matrix& stacked, double scale, double eps, bool want_weights) {
  if (!(eps >= 0)) throw std::invalid_argument("jitter must be >= 0");
  const Eigen::Index n = stacked.rows(), p = stacked.cols();
  const bool row_side = n < p;
  if (eps == 0.0) {
    if (row_side) throw_singular(null_direction_count(stacked));
    // Rank test on unit-norm columns, which is insensitive to coordinate scaling.
    Matrix unit = stacked;
    for (Eigen::Index c = 0; c < p; ++c) {
      const double norm = unit.col(c).norm();
      if (norm > 0.0) unit.col(c) /= norm;
    }
    const int nulls = null_direction_count(unit);
    if (nulls > 0) throw_singular(nulls);
  }
  const Eigen::Index m = row_side ? n : p;
  Matrix a(m, m);
  if (row_side) {
    a.setZero();
    a.selfadjointView<Eigen::Lower>().rankUpdate(stacked, scale);
  } else {
    a.setZero();
    a.selfadjointView<Eigen::Lower>().rankUpdate(stacked.transpose(), scale);
  }
  a.diagonal().array() += eps;
  LogDetWithWeights out;
  Eigen::LLT<Matrix, Eigen::Lower> llt(a);
  if (llt.info() != Eigen::Success && eps == 0.0) throw_singular(null_direction_count(stacked));
  if (llt.info() == Eigen::Success) {
    out.value = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (row_side) out.value += static_cast<double>(p - n) * std::log(eps);
    if (want_weights) {
      if (row_side) {
        out.weights = llt.solve(stacked) * scale;
      } else {
        out.weights = llt.solve(stacked.transpose()).transpose() * scale;
      }
    }
    return out;
  }
  // Rounding made the Gram indefinite; fall back to a clipped eigendecomposition.
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.selfadjointView<Eigen::Lower>());
  Vector lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = std::max(lam(i) - eps, 0.0) + eps;
  if (eps == 0.0 && (lam.array() <= 0.0).any()) throw_singular(static_cast<int>((lam.array() <= 0.0).count()));
  out.value = lam.array().log().sum();
  if (row_side) out.value += static_cast<double>(p - n) * std::log(eps);
  if (want_weights) {
    const Matrix inv = es.eigenvectors() * lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    out.weights = row_side ? Matrix(inv * stacked * scale) : Matrix(stacked * inv * scale);
  }
  return out;
}

}  // namespace fsmap
