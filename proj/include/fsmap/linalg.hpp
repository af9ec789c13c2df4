#pragma once

#include "fsmap/diffmodel.hpp"

namespace fsmap {

// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kPseudoDetRelTol = 1e-12;

// Singular values of `stacked` (descending), zero-padded to stacked.cols().
Vector padded_singular_values(const Matrix& stacked);

// log det(scale·JᵀJ + εI) from the singular values of J (never forms JᵀJ).
// With ε = 0 a rank-deficient J raises SingularityError naming the number of
// null directions.
double logdet_jittered_stacked(const Matrix& stacked, double scale, double eps);

// log det(G + εI) for a symmetric PSD matrix G, from its eigenvalues.
double logdet_jittered_gram(const Matrix& gram, double eps);

// log of the product of nonzero values of scale·s_i² (pseudo-determinant).
double pseudo_logdet_stacked(const Matrix& stacked, double scale);

// Number of singular values of J treated as zero, counting padding.
int null_direction_count(const Matrix& stacked);

struct LogDetWithWeights {
  double value = 0.0;
  // scale·J(scale·JᵀJ + εI)⁻¹: the derivative of ½·value with respect to J.
  Matrix weights;
};

// Same value as logdet_jittered_stacked, computed by Cholesky on the smaller
// of JJᵀ and JᵀJ; optionally also returns the derivative weights.
LogDetWithWeights logdet_jittered_fast(const Matrix& stacked, double scale, double eps, bool want_weights);

}  // namespace fsmap
