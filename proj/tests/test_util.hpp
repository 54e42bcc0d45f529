#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "fopaeq/rng.hpp"
#include "fopaeq/types.hpp"

namespace fopaeq::testing {

inline Eigen::VectorXd random_point(Rng& rng, Eigen::Index dim, double spread = 1.0, double offset = 0.0) {
  std::normal_distribution<double> n(0.0, spread);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = offset + n(rng);
  return v;
}

inline cdouble random_complex(Rng& rng, double spread = 1.0) {
  std::normal_distribution<double> n(0.0, spread);
  return {n(rng), n(rng)};
}

// Relative Frobenius distance |a - b| / |b|.
template <typename A, typename B>
double rel_frobenius(const A& a, const B& b) {
  return (a - b).norm() / b.norm();
}

// Direct (K + lambda I) built with plain loops, independent of the library.
inline Eigen::MatrixXd dense_regularized_kernel(const Eigen::MatrixXd& rows, double sigma, double lambda) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < rows.cols(); ++c) d2 += (rows(i, c) - rows(j, c)) * (rows(i, c) - rows(j, c));
      k(i, j) = std::exp(-d2 / (2.0 * sigma * sigma)) + (i == j ? lambda : 0.0);
    }
  return k;
}

}  // namespace fopaeq::testing
