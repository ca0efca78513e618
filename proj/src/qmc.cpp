#include "qmc.hpp"

namespace podnn::qmc {

void QmcConfig::validate() const {
  require(s >= 1, Error::Code::config, "qmc: s must be >= 1");
  require(n_points >= 1, Error::Code::config, "qmc: n_points must be >= 1");
  require(start_index >= 0, Error::Code::config, "qmc: start_index must be >= 0");
}

void RateConfig::validate() const {
  require(alpha > 0.0, Error::Code::config, "rates: alpha must be > 0");
  require(p > 0.0 && p < 1.0, Error::Code::config, "rates: p must lie in (0,1)");
}

std::vector<int> first_primes(int count) {
  require(count >= 0, Error::Code::invalid_argument, "first_primes: negative count");
  std::vector<int> primes;
  primes.reserve(static_cast<std::size_t>(count));
  int candidate = 2;
  while (static_cast<int>(primes.size()) < count) {
    bool is_prime = true;
    for (int p : primes) {
      if (static_cast<long>(p) * p > candidate) break;
      if (candidate % p == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes.push_back(candidate);
    ++candidate;
  }
  return primes;
}

double radical_inverse(std::uint64_t index, int base) {
  require(base >= 2, Error::Code::invalid_argument, "radical_inverse: base must be >= 2");
  double result = 0.0;
  double digit_weight = 1.0 / base;
  while (index != 0) {
    result += static_cast<double>(index % static_cast<std::uint64_t>(base)) * digit_weight;
    index /= static_cast<std::uint64_t>(base);
    digit_weight /= base;
  }
  return result;
}

Mat halton_points(const QmcConfig& cfg) {
  cfg.validate();
  const std::vector<int> bases = first_primes(cfg.s);
  Mat points(cfg.n_points, cfg.s);
  for (long k = 0; k < cfg.n_points; ++k) {
    const auto index = static_cast<std::uint64_t>(cfg.start_index + k);
    for (int j = 0; j < cfg.s; ++j) {
      points(k, j) = radical_inverse(index, bases[static_cast<std::size_t>(j)]);
    }
  }
  return points;
}

Mat to_parameter_cube(const Mat& unit_points) {
  require((unit_points.array() >= 0.0).all() && (unit_points.array() < 1.0).all(),
          Error::Code::invalid_argument, "to_parameter_cube: inputs must lie in [0,1)");
  return (2.0 * unit_points.array() - 1.0).matrix();
}

double qmc_mean(std::span<const double> values) {
  require(!values.empty(), Error::Code::invalid_argument, "qmc_mean: empty sample set");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace podnn::qmc
