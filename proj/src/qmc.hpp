#pragma once

#include "common.hpp"

#include <span>
#include <vector>

namespace podnn::qmc {

enum class Sequence { halton };

/// Settings for a deterministic low-discrepancy point set on [0,1)^s.
struct QmcConfig {
  int s = 1;                 ///< dimension (one prime base per coordinate)
  long n_points = 1;         ///< number of points N
  long start_index = 1;      ///< first sequence index; index 0 is the origin
  Sequence sequence = Sequence::halton;

  void validate() const;
};

/// Convergence exponents entering the a-priori rank and network-size rules.
struct RateConfig {
  double alpha = 1.0;        ///< sampling-error exponent (N^-alpha)
  double p = 4.0 / 9.0;      ///< coefficient summability exponent, in (0,1)

  void validate() const;
};

/// First `count` primes in increasing order (2, 3, 5, ...).
std::vector<int> first_primes(int count);

/// Digit-reversal of `index` in the given prime base, mapped into [0,1).
/// Exact in double precision for indices below 2^52.
double radical_inverse(std::uint64_t index, int base);

/// N x s matrix of Halton points; row k is the point with sequence index
/// start_index + k. Deterministic for a fixed config.
Mat halton_points(const QmcConfig& cfg);

/// Componentwise affine map x -> 2x - 1 from [0,1)^s onto [-1,1)^s.
Mat to_parameter_cube(const Mat& unit_points);

/// Equal-weight quadrature estimate: the arithmetic mean of the samples.
double qmc_mean(std::span<const double> values);

}  // namespace podnn::qmc
