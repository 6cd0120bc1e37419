#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dnmap {

using Real = double;
using Complex = std::complex<double>;
using VectorX = Eigen::VectorXd;
using VectorXc = Eigen::VectorXcd;
using MatrixX = Eigen::MatrixXd;

inline constexpr Real kPi = 3.14159265358979323846;

/// Thrown for every contract violation in the library. The message is the
/// diagnostic shown to the user, so keep it specific.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::int64_t edge_key(int a, int b, int n) {
  if (a > b) std::swap(a, b);
  return static_cast<std::int64_t>(a) * n + b;
}

}  // namespace detail
}  // namespace dnmap
