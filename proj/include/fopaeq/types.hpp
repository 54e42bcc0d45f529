#pragma once

#include <complex>

#include <Eigen/Core>

namespace fopaeq {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using VectorX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using MatrixX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using ComplexVectorX = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

// Complex baseband samples or symbols, in time order.
using ComplexSeq = ComplexVectorX<double>;
using RealSeq = VectorX<double>;
using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s

}  // namespace fopaeq
