#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/LU>

#include "fsmap/errors.hpp"
#include "fsmap/linalg.hpp"
#include "fsmap/objectives.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed, 5);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

double lu_logdet(const Matrix& a) {
  const Eigen::FullPivLU<Matrix> lu(a);
  const Matrix u = lu.matrixLU().triangularView<Eigen::Upper>();
  double s = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(std::abs(u(i, i)));
  return s;
}

GramMatrix gram(const Matrix& m) { return GramMatrix{m, GramMatrix::Provenance::Exact, 0, 0}; }

TEST(LogDet, IdentityZeroJitter) {
  EXPECT_EQ(logdet_jittered(gram(Matrix::Identity(2, 2)), 0.0), 0.0);
  EXPECT_EQ(logdet_jittered(Matrix::Identity(2, 2), 1, 0.0), 0.0);
}

TEST(LogDet, ZeroMatrixWithJitter) {
  EXPECT_DOUBLE_EQ(logdet_jittered(gram(Matrix::Zero(3, 3)), 0.5), 3 * std::log(0.5));
  EXPECT_DOUBLE_EQ(logdet_jittered(Matrix::Zero(4, 3), 4, 0.5), 3 * std::log(0.5));
}

TEST(LogDet, RandomPsdMatchesLu) {
  for (int s = 0; s < 10; ++s) {
    const Matrix b = random_matrix(5, 5, s);
    const Matrix a = b.transpose() * b;
    const double oracle = lu_logdet(a);
    EXPECT_LT(std::abs(logdet_jittered(gram(a), 0.0) - oracle), 1e-8 * std::abs(oracle));
    EXPECT_LT(std::abs(logdet_jittered_stacked(b, 1.0, 0.0) - oracle), 1e-8 * std::abs(oracle));
    const Matrix j = a + 0.3 * Matrix::Identity(5, 5);
    EXPECT_NEAR(logdet_jittered(gram(a), 0.3), lu_logdet(j), 1e-8 * std::abs(lu_logdet(j)) + 1e-12);
  }
}

TEST(LogDet, StackedUsesSampleScale) {
  const Matrix j = random_matrix(40, 6, 3);
  const double oracle = lu_logdet(j.transpose() * j / 40 + 1e-3 * Matrix::Identity(6, 6));
  EXPECT_NEAR(logdet_jittered(j, 40, 1e-3), oracle, 1e-9);
}

TEST(LogDet, WideStackedPadsZeros) {
  const Matrix j = random_matrix(3, 8, 4);
  const double eps = 0.01;
  const double oracle = lu_logdet(j.transpose() * j / 3 + eps * Matrix::Identity(8, 8));
  EXPECT_NEAR(logdet_jittered(j, 3, eps), oracle, 1e-9);
  EXPECT_NEAR(logdet_jittered_fast(j, 1.0 / 3, eps, false).value, oracle, 1e-9);
}

TEST(LogDet, FastRouteMatchesSvd) {
  for (auto [r, c] : {std::pair{30, 7}, std::pair{7, 30}, std::pair{12, 12}}) {
    const Matrix j = random_matrix(r, c, r * 31 + c);
    for (double eps : {1e-6, 1e-2, 1.0}) {
      const double svd = logdet_jittered_stacked(j, 0.5, eps);
      EXPECT_NEAR(logdet_jittered_fast(j, 0.5, eps, false).value, svd, 1e-9 * std::abs(svd) + 1e-9);
    }
  }
}

TEST(LogDet, FastRouteWeightsAreDerivative) {
  // d/dJ ½ log det(s JᵀJ + εI) = s J (s JᵀJ + εI)⁻¹.
  for (auto [r, c] : {std::pair{9, 4}, std::pair{4, 9}}) {
    const Matrix j = random_matrix(r, c, 77 + r);
    const double s = 0.25, eps = 0.1;
    const Matrix w = logdet_jittered_fast(j, s, eps, true).weights;
    ASSERT_EQ(w.rows(), r);
    ASSERT_EQ(w.cols(), c);
    for (Eigen::Index i = 0; i < j.size(); ++i) {
      Matrix up = j, down = j;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      const double fd = 0.5 * (logdet_jittered_stacked(up, s, eps) - logdet_jittered_stacked(down, s, eps)) / 2e-6;
      EXPECT_NEAR(w.data()[i], fd, 1e-6);
    }
  }
}

TEST(LogDet, SingularZeroJitterNamesNullDirections) {
  Matrix j = random_matrix(10, 4, 5);
  j.col(3) = j.col(0) + j.col(1);
  try {
    logdet_jittered_stacked(j, 1.0, 0.0);
    FAIL();
  } catch (const SingularityError& e) {
    EXPECT_EQ(e.null_directions(), 1);
  }
  try {
    logdet_jittered(gram(Matrix::Zero(3, 3)), 0.0);
    FAIL();
  } catch (const SingularityError& e) {
    EXPECT_EQ(e.null_directions(), 3);
  }
  EXPECT_THROW(logdet_jittered_fast(random_matrix(2, 5, 1), 1.0, 0.0, false), SingularityError);
  EXPECT_THROW(logdet_jittered_fast(j, 1.0, 0.0, false), SingularityError);
}

TEST(LogDet, StrictlyIncreasingInJitter) {
  const Matrix j = random_matrix(5, 12, 6);
  double prev = -INFINITY;
  for (double eps : {1e-9, 1e-6, 1e-3, 1.0, 1e3}) {
    const double v = logdet_jittered(j, 5, eps);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(LogDet, NegativeJitterRejected) {
  EXPECT_THROW(logdet_jittered(Matrix::Identity(2, 2), 1, -1.0), std::invalid_argument);
}

TEST(PseudoDet, IgnoresNullDirections) {
  Matrix j = Matrix::Zero(3, 3);
  j(0, 0) = 2.0;
  j(1, 1) = 3.0;
  EXPECT_NEAR(pseudo_logdet_stacked(j, 1.0), std::log(4.0) + std::log(9.0), 1e-14);
  EXPECT_EQ(null_direction_count(j), 1);
  j(2, 2) = 1e-14;
  EXPECT_EQ(null_direction_count(j), 1);
}

TEST(SingularValues, PaddedDescending) {
  const Vector s = padded_singular_values(random_matrix(2, 5, 8));
  ASSERT_EQ(s.size(), 5);
  EXPECT_GE(s(0), s(1));
  EXPECT_GT(s(1), 0.0);
  EXPECT_EQ(s.tail(3).cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace fsmap
