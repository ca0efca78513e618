#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace podnn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Library-wide exception. The category maps 1:1 onto the C API status codes.
class Error : public std::runtime_error {
public:
  enum class Code {
    invalid_argument,
    config,
    io,
    format,
    numeric,
    internal,
  };

  Error(Code code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Code code() const { return code_; }

private:
  Code code_;
};

inline void require(bool condition, Error::Code code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

/// Number of workers to use when the caller passes 0 ("use all cores").
unsigned resolve_threads(unsigned requested);

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker, so each index is processed exactly once and results written to
/// preassigned slots are identical for any thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace podnn
