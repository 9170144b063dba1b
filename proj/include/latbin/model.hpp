#ifndef LATBIN_MODEL_HPP
#define LATBIN_MODEL_HPP

// Binomial regression with latent Poisson-gamma sizes.
//
//   y | n  ~ Binomial(n, h(x'β))     h = logistic
//   n | λ  ~ Poisson(λ)
//   λ      ~ Gamma(shape α, mean μ)
//
// Marginally y is negative binomial with mean μ h and shape α. The
// degenerate α = ∞ case is the Poisson(μ h) submodel.
//
// Parameter vectors are always ordered (β₀ … β_{d−1}, μ, α).

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "latbin/numeric.hpp"

namespace latbin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Gamma shape α, or the distinguished infinite value selecting the
/// Poisson-size submodel.
class Shape {
 public:
  static Shape finite(double alpha) {
    if (!std::isfinite(alpha) || alpha <= 0.0)
      throw std::invalid_argument("Shape: alpha must be finite and > 0");
    return Shape(alpha);
  }
  static Shape infinite() { return Shape(std::numeric_limits<double>::infinity()); }

  bool is_infinite() const { return std::isinf(value_); }
  bool is_finite() const { return !is_infinite(); }

  /// Throws for the infinite shape.
  double value() const {
    if (is_infinite()) throw std::logic_error("Shape: value() called on infinite shape");
    return value_;
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  explicit Shape(double v) : value_(v) {}
  double value_;
};

struct ModelParams {
  Vector beta;
  double mu = 1.0;
  Shape alpha = Shape::infinite();

  ModelParams() = default;
  ModelParams(Vector b, double m, Shape a) : beta(std::move(b)), mu(m), alpha(a) {}

  std::size_t dim() const { return static_cast<std::size_t>(beta.size()); }

  /// Gamma rate η = α/μ.
  double rate() const { return alpha.value() / mu; }
  /// Variance of λ, μ²/α (zero for the Poisson-size submodel).
  double size_mean_variance() const { return alpha.is_infinite() ? 0.0 : mu * mu / alpha.value(); }

  void validate() const {
    if (beta.size() < 1) throw std::invalid_argument("ModelParams: beta must be non-empty");
    if (!beta.allFinite()) throw std::invalid_argument("ModelParams: beta must be finite");
    if (!std::isfinite(mu) || mu <= 0.0) throw std::invalid_argument("ModelParams: mu must be > 0");
  }
};

struct Observation {
  std::int64_t y = 0;
  Vector x;
};

/// Immutable collection of observations sharing one covariate dimension.
class Dataset {
 public:
  explicit Dataset(std::vector<Observation> obs) : obs_(std::move(obs)) {
    if (obs_.empty()) throw std::invalid_argument("Dataset: no observations");
    const auto d = obs_.front().x.size();
    if (d < 1) throw std::invalid_argument("Dataset: covariate dimension must be >= 1");
    for (const auto& o : obs_) {
      if (o.x.size() != d) throw std::invalid_argument("Dataset: covariate rows differ in length");
      if (o.y < 0) throw std::invalid_argument("Dataset: negative count");
      if (!o.x.allFinite()) throw std::invalid_argument("Dataset: non-finite covariate");
    }
    dim_ = static_cast<std::size_t>(d);
  }

  std::size_t size() const { return obs_.size(); }
  std::size_t dim() const { return dim_; }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  auto begin() const { return obs_.begin(); }
  auto end() const { return obs_.end(); }
  const std::vector<Observation>& observations() const { return obs_; }

  /// Number of distinct covariate rows.
  std::size_t distinct_rows() const {
    std::vector<const Vector*> seen;
    for (const auto& o : obs_) {
      bool found = false;
      for (const auto* s : seen)
        if (*s == o.x) {
          found = true;
          break;
        }
      if (!found) seen.push_back(&o.x);
    }
    return seen.size();
  }

  std::int64_t total_count() const {
    std::int64_t t = 0;
    for (const auto& o : obs_) t += o.y;
    return t;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].y != b[i].y || a[i].x != b[i].x) return false;
    return true;
  }

 private:
  std::vector<Observation> obs_;
  std::size_t dim_ = 0;
};

namespace detail {

inline double linear_predictor(const Vector& x, const Vector& beta) {
  if (x.size() != beta.size())
    throw std::invalid_argument("covariate/coefficient dimension mismatch: " +
                                std::to_string(x.size()) + " vs " + std::to_string(beta.size()));
  return x.dot(beta);
}

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log h and log(1-h) without forming h.
inline double log_logistic(double eta) {
  return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

// Per-observation quantities reused by the score and Hessian.
struct LinkTerms {
  double h;  // h(x'β)
  double q;  // 1 - h, computed without cancellation
};

inline LinkTerms link_terms(const Vector& x, const Vector& beta) {
  const double eta = linear_predictor(x, beta);
  return {logistic(eta), logistic(-eta)};
}

}  // namespace detail

/// Logistic success probability h(x, β).
inline double link_h(const Vector& x, const Vector& beta) {
  return detail::logistic(detail::linear_predictor(x, beta));
}

/// ∇_β h = h(1−h)·x.
inline Vector link_grad(const Vector& x, const Vector& beta) {
  const auto t = detail::link_terms(x, beta);
  return (t.h * t.q) * x;
}

/// log f(y; x, θ). Negative binomial for finite α, Poisson(μh) for α = ∞.
inline double log_pmf(std::int64_t y, const Vector& x, const ModelParams& params) {
  params.validate();
  if (y < 0) throw std::invalid_argument("log_pmf: y must be >= 0");
  const double eta = detail::linear_predictor(x, params.beta);
  const double log_m = std::log(params.mu) + detail::log_logistic(eta);
  const double m = std::exp(log_m);
  const double yd = static_cast<double>(y);
  const double log_y_factorial = log_gamma(yd + 1.0);

  if (params.alpha.is_infinite()) {
    return (y == 0 ? 0.0 : yd * log_m) - m - log_y_factorial;
  }
  const double a = params.alpha.value();
  // α log α − (α+y) log(α+m) rewritten as −α log1p(m/α) − y log(α+m)
  double lp = log_rising_factorial(a, y) - log_y_factorial - a * std::log1p(m / a);
  if (y > 0) lp += yd * (log_m - std::log(a + m));
  return lp;
}

inline double log_likelihood(const Dataset& data, const ModelParams& params) {
  if (data.dim() != params.dim())
    throw std::invalid_argument("log_likelihood: dataset/params dimension mismatch");
  double total = 0.0;
  for (const auto& o : data) total += log_pmf(o.y, o.x, params);
  return total;
}

/// Analytic gradient of the log-likelihood, ordered (β, μ, α). For the
/// Poisson-size submodel the α component is dropped (length d+1).
inline Vector score(const Dataset& data, const ModelParams& params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(data.dim());
  if (static_cast<std::size_t>(d) != params.dim())
    throw std::invalid_argument("score: dataset/params dimension mismatch");
  const bool poisson = params.alpha.is_infinite();
  Vector g = Vector::Zero(d + (poisson ? 1 : 2));
  const double mu = params.mu;

  for (const auto& o : data) {
    const auto [h, q] = detail::link_terms(o.x, params.beta);
    const double m = mu * h;
    const double y = static_cast<double>(o.y);
    if (poisson) {
      g.head(d) += (q * (y - m)) * o.x;
      g[d] += y / mu - h;
      continue;
    }
    const double a = params.alpha.value();
    const double ratio = (a + y) / (a + m);
    // [y/h − (α+y)μ/(α+m)]·h(1−h)x, with the h factor cancelled
    g.head(d) += (q * (y - ratio * m)) * o.x;
    g[d] += y / mu - ratio * h;
    g[d + 1] += digamma_difference(a, o.y) - std::log1p(m / a) + (m - y) / (a + m);
  }
  return g;
}

/// Analytic observed Hessian of the log-likelihood, same ordering as score().
inline Matrix hessian(const Dataset& data, const ModelParams& params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(data.dim());
  if (static_cast<std::size_t>(d) != params.dim())
    throw std::invalid_argument("hessian: dataset/params dimension mismatch");
  const bool poisson = params.alpha.is_infinite();
  const Eigen::Index n = d + (poisson ? 1 : 2);
  Matrix H = Matrix::Zero(n, n);
  const double mu = params.mu;

  for (const auto& o : data) {
    const auto [h, q] = detail::link_terms(o.x, params.beta);
    const double m = mu * h;
    const double y = static_cast<double>(o.y);
    const Matrix xx = o.x * o.x.transpose();

    double c_bb, c_mm, c_mb;
    if (poisson) {
      c_bb = q * (-h * (y - m) - m * q);
      c_mm = -y / (mu * mu);
      c_mb = -h * q;
    } else {
      const double a = params.alpha.value();
      const double s = a + m;
      const double s2 = s * s;
      const double w = y - (a + y) * m / s;  // h·[y/h − (α+y)μ/(α+m)]
      // w·∂²h/∂β∂β' + [(α+y)μ²/(α+m)² − y/h²]·∇h∇h', h factors cancelled
      c_bb = q * (1.0 - 2.0 * h) * w + q * q * ((a + y) * m * m / s2 - y);
      c_mm = -y / (mu * mu) + (a + y) * h * h / s2;
      c_mb = -(a + y) * a * h * q / s2;

      const double c_aa = -trigamma_difference(a, o.y) + m / (a * s) + (y - m) / s2;
      const double c_am = h * (y - m) / s2;
      const double c_ab = m * q * (y - m) / s2;
      H(d + 1, d + 1) += c_aa;
      H(d + 1, d) += c_am;
      H.block(d + 1, 0, 1, d) += c_ab * o.x.transpose();
    }
    H.topLeftCorner(d, d) += c_bb * xx;
    H(d, d) += c_mm;
    H.block(d, 0, 1, d) += c_mb * o.x.transpose();
  }
  // mirror the lower triangle
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) H(i, j) = H(j, i);
  return H;
}

/// Labels for the parameter vector (β₀ … β_{d−1}, μ[, α]).
inline std::vector<std::string> parameter_labels(std::size_t d, bool with_alpha) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < d; ++j) out.push_back("beta" + std::to_string(j));
  out.emplace_back("mu");
  if (with_alpha) out.emplace_back("alpha");
  return out;
}

}  // namespace latbin

#endif  // LATBIN_MODEL_HPP
