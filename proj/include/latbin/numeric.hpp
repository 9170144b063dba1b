#ifndef LATBIN_NUMERIC_HPP
#define LATBIN_NUMERIC_HPP

// Scalar special functions shared by the likelihood, information and
// estimation code. Only positive real arguments are supported.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace latbin {

/// Stopping rule for truncated series and sums.
struct Tolerance {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::size_t max_terms = 1'000'000;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_terms < 1)
      throw std::invalid_argument("Tolerance: abs_tol, rel_tol must be > 0 and max_terms >= 1");
  }
};

namespace detail {

inline void require_positive(double z, const char* fn) {
  if (!std::isfinite(z) || z <= 0.0)
    throw std::domain_error(std::string(fn) + ": argument must be finite and > 0, got " +
                            std::to_string(z));
}

// The asymptotic expansions below are accurate to well under 1e-15 once the
// argument is shifted past this point.
inline constexpr double kAsymptoticThreshold = 10.0;

}  // namespace detail

/// log Γ(z) for z > 0. Stirling series above 10, upward shift below.
inline double log_gamma(double z) {
  detail::require_positive(z, "log_gamma");

  double shift_product = 1.0;
  double w = z;
  while (w < detail::kAsymptoticThreshold) {
    shift_product *= w;
    w += 1.0;
  }

  const double inv = 1.0 / w;
  const double inv2 = inv * inv;
  // B_{2k} / (2k (2k-1)) for k = 1..8
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 +
                                                     inv2 * (1.0 / 156.0 +
                                                             inv2 * (-3617.0 / 122400.0))))))));
  const double half_log_two_pi = 0.91893853320467274178032973640562;
  const double stirling = (w - 0.5) * std::log(w) - w + half_log_two_pi + series;
  return shift_product == 1.0 ? stirling : stirling - std::log(shift_product);
}

/// d/dz log Γ(z).
inline double digamma(double z) {
  detail::require_positive(z, "digamma");

  double acc = 0.0;
  double w = z;
  while (w < detail::kAsymptoticThreshold) {
    acc -= 1.0 / w;
    w += 1.0;
  }
  const double inv2 = 1.0 / (w * w);
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
  return acc + std::log(w) - 0.5 / w - series;
}

/// d²/dz² log Γ(z).
inline double trigamma(double z) {
  detail::require_positive(z, "trigamma");

  double acc = 0.0;
  double w = z;
  while (w < detail::kAsymptoticThreshold) {
    acc += 1.0 / (w * w);
    w += 1.0;
  }
  const double inv = 1.0 / w;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 +
             inv * (0.5 +
                    inv * (1.0 / 6.0 -
                           inv2 * (1.0 / 30.0 -
                                   inv2 * (1.0 / 42.0 -
                                           inv2 * (1.0 / 30.0 -
                                                   inv2 * (5.0 / 66.0 -
                                                           inv2 * (691.0 / 2730.0 -
                                                                   inv2 * (7.0 / 6.0)))))))));
  return acc + series;
}

/// log Γ(a + n) − log Γ(a) for integer n ≥ 0. Exact product form for moderate
/// n, which avoids cancelling two large log-gamma values when a is large.
inline double log_rising_factorial(double a, long long n) {
  detail::require_positive(a, "log_rising_factorial");
  if (n < 0) throw std::domain_error("log_rising_factorial: n must be >= 0");
  if (n > 256) return log_gamma(a + static_cast<double>(n)) - log_gamma(a);
  double total = 0.0;
  for (long long k = 0; k < n; ++k) total += std::log(a + static_cast<double>(k));
  return total;
}

/// Σ_{k<n} 1/(a+k) = ψ(a+n) − ψ(a).
inline double digamma_difference(double a, long long n) {
  detail::require_positive(a, "digamma_difference");
  if (n > 4096) return digamma(a + static_cast<double>(n)) - digamma(a);
  double total = 0.0;
  for (long long k = 0; k < n; ++k) total += 1.0 / (a + static_cast<double>(k));
  return total;
}

/// Σ_{k<n} 1/(a+k)² = ψ'(a) − ψ'(a+n).
inline double trigamma_difference(double a, long long n) {
  detail::require_positive(a, "trigamma_difference");
  if (n > 4096) return trigamma(a) - trigamma(a + static_cast<double>(n));
  double total = 0.0;
  for (long long k = 0; k < n; ++k) {
    const double w = a + static_cast<double>(k);
    total += 1.0 / (w * w);
  }
  return total;
}

/// Standard normal quantile.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// P(χ²₁ > x).
inline double chi_square1_sf(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(0.5 * x));
}

}  // namespace latbin

#endif  // LATBIN_NUMERIC_HPP
