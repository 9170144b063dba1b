#ifndef LATBIN_ESTIMATION_HPP
#define LATBIN_ESTIMATION_HPP

// Maximum likelihood for the full latent-size model and the Poisson-size
// submodel. Standard errors come from the expected information evaluated at
// the estimate.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "latbin/information.hpp"
#include "latbin/model.hpp"
#include "latbin/numeric.hpp"
#include "latbin/optimize.hpp"

namespace latbin {

enum class ModelVariant { Full, PoissonSize };

inline const char* to_string(ModelVariant v) {
  return v == ModelVariant::Full ? "full" : "poisson";
}

struct FitOptions {
  double grad_tol = 1e-8;  // max-norm, optimizer coordinates (β, log μ, log α)
  int max_iter = 500;
  Tolerance series_tol{};
};

struct FitResult {
  ModelParams params;
  std::vector<std::optional<double>> std_errors;  // ordered like labels
  std::vector<std::string> labels;
  double loglik = 0.0;
  bool converged = false;
  int n_iterations = 0;
  double info_condition = 0.0;
  ModelVariant model_variant = ModelVariant::PoissonSize;

  double gradient_max_norm = 0.0;  // optimizer coordinates
  bool alpha_flat = false;
  bool boundary = false;
  std::string diagnostic;

  /// (β, μ[, α]) with α present only for the full model.
  Vector estimates() const {
    const auto d = static_cast<Eigen::Index>(params.dim());
    const bool full = model_variant == ModelVariant::Full;
    Vector v(d + (full ? 2 : 1));
    v.head(d) = params.beta;
    v[d] = params.mu;
    if (full) v[d + 1] = params.alpha.value();
    return v;
  }
};

struct LrtResult {
  double statistic = 0.0;  // 2(ℓ_full − ℓ_poisson), clamped at 0
  double raw_statistic = 0.0;
  double p_value = 1.0;
  bool reject_poisson = false;
  double significance_level = 0.05;
  FitResult poisson_fit;
  FitResult full_fit;
};

using Interval = std::pair<double, double>;

namespace detail {

inline void require_identifiable(const Dataset& data) {
  if (data.distinct_rows() < data.dim() + 1)
    throw std::invalid_argument("fit: need at least d+1 = " + std::to_string(data.dim() + 1) +
                                " distinct covariate rows, got " +
                                std::to_string(data.distinct_rows()));
}

// Least squares of logit((y+0.5)/(y_ref+1)) on x, where y_ref is the largest
// count among rows with the smallest first non-intercept covariate.
inline ModelParams default_poisson_init(const Dataset& data) {
  const auto d = static_cast<Eigen::Index>(data.dim());
  const Eigen::Index dose_col = d >= 2 ? 1 : 0;
  double min_dose = data[0].x[dose_col];
  for (const auto& o : data) min_dose = std::min(min_dose, o.x[dose_col]);
  std::int64_t y_ref = 0;
  for (const auto& o : data)
    if (o.x[dose_col] == min_dose) y_ref = std::max(y_ref, o.y);
  const double denom = static_cast<double>(y_ref) + 1.0;

  const auto n = static_cast<Eigen::Index>(data.size());
  Matrix X(n, d);
  Vector z(n);
  std::int64_t y_max = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = data[static_cast<std::size_t>(i)];
    X.row(i) = o.x.transpose();
    const double p = std::clamp((static_cast<double>(o.y) + 0.5) / denom, 0.5 / denom, 1.0 - 0.5 / denom);
    z[i] = std::log(p / (1.0 - p));
    y_max = std::max(y_max, o.y);
  }
  Vector beta = X.colPivHouseholderQr().solve(z);
  if (!beta.allFinite()) beta = Vector::Zero(d);

  double h_max = 0.0;
  for (const auto& o : data) h_max = std::max(h_max, link_h(o.x, beta));
  const double mu = std::max(1.0, static_cast<double>(y_max)) / std::max(h_max, 1e-12);
  return ModelParams(std::move(beta), mu, Shape::infinite());
}

inline std::optional<double> se_from(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) return std::nullopt;
  return std::sqrt(variance);
}

inline FitResult boundary_result(const Dataset& data, ModelParams at, ModelVariant variant) {
  FitResult r;
  r.params = std::move(at);
  r.model_variant = variant;
  r.labels = parameter_labels(data.dim(), variant == ModelVariant::Full);
  r.std_errors.assign(r.labels.size(), std::nullopt);
  r.loglik = log_likelihood(data, r.params);
  r.converged = false;
  r.boundary = true;
  r.diagnostic =
      "boundary: all counts are zero, the likelihood increases without bound as the intercept "
      "decreases; no finite MLE";
  return r;
}

}  // namespace detail

/// ML fit of the Poisson-size submodel (α = ∞), optimizing over (β, log μ).
inline FitResult fit_poisson_size(const Dataset& data, std::optional<ModelParams> init = {},
                                  const FitOptions& options = {}) {
  detail::require_identifiable(data);
  ModelParams start = init ? *init : detail::default_poisson_init(data);
  start.alpha = Shape::infinite();
  start.validate();
  if (start.dim() != data.dim()) throw std::invalid_argument("fit_poisson_size: init dimension mismatch");
  if (data.total_count() == 0) return detail::boundary_result(data, start, ModelVariant::PoissonSize);

  const auto d = static_cast<Eigen::Index>(data.dim());
  auto unpack = [d](const Vector& u) {
    return ModelParams(u.head(d), std::exp(u[d]), Shape::infinite());
  };
  auto objective = [&](const Vector& u, Vector& grad) {
    const double mu = std::exp(u[d]);
    if (!std::isfinite(mu) || mu <= 0.0 || !u.allFinite()) return std::numeric_limits<double>::infinity();
    const ModelParams p = unpack(u);
    const Vector s = score(data, p);
    grad.head(d) = -s.head(d);
    grad[d] = -mu * s[d];
    return -log_likelihood(data, p);
  };

  Vector u0(d + 1);
  u0.head(d) = start.beta;
  u0[d] = std::log(start.mu);
  MinimizeOptions mo;
  mo.grad_tol = options.grad_tol;
  mo.max_iter = options.max_iter;
  const auto opt = minimize_bfgs(objective, u0, mo);

  FitResult r;
  r.model_variant = ModelVariant::PoissonSize;
  r.params = unpack(opt.x);
  r.loglik = -opt.value;
  r.converged = opt.converged;
  r.n_iterations = opt.iterations;
  r.gradient_max_norm = opt.gradient.lpNorm<Eigen::Infinity>();
  r.labels = parameter_labels(data.dim(), false);
  r.diagnostic = opt.message;

  const auto info = info_poisson_size(design_from_dataset(data), r.params);
  const auto inv = invert_information(info.matrix);
  r.info_condition = inv.condition;
  for (Eigen::Index j = 0; j < info.size(); ++j)
    r.std_errors.push_back(inv.positive_definite ? detail::se_from(inv.covariance(j, j)) : std::nullopt);
  return r;
}

/// ML fit of the full model over (β, log μ, log α). Without `init`, starts at
/// the Poisson-size estimate with α = 100. When the α direction is flat the
/// α standard error is left empty and `alpha_flat` is set.
inline FitResult fit_full(const Dataset& data, std::optional<ModelParams> init = {},
                          const FitOptions& options = {}) {
  detail::require_identifiable(data);
  ModelParams start;
  if (init) {
    start = *init;
    if (start.alpha.is_infinite()) start.alpha = Shape::finite(100.0);
  } else {
    const auto pois = fit_poisson_size(data, std::nullopt, options);
    start = pois.params;
    start.alpha = Shape::finite(100.0);
  }
  start.validate();
  if (start.dim() != data.dim()) throw std::invalid_argument("fit_full: init dimension mismatch");
  if (data.total_count() == 0) return detail::boundary_result(data, start, ModelVariant::Full);

  const auto d = static_cast<Eigen::Index>(data.dim());
  auto in_range = [](double v) { return std::isfinite(v) && v > 0.0; };
  auto unpack = [d](const Vector& u) {
    return ModelParams(u.head(d), std::exp(u[d]), Shape::finite(std::exp(u[d + 1])));
  };
  auto objective = [&](const Vector& u, Vector& grad) {
    const double mu = std::exp(u[d]);
    const double a = std::exp(u[d + 1]);
    if (!u.allFinite() || !in_range(mu) || !in_range(a)) return std::numeric_limits<double>::infinity();
    const ModelParams p = unpack(u);
    const Vector s = score(data, p);
    grad.head(d) = -s.head(d);
    grad[d] = -mu * s[d];
    grad[d + 1] = -a * s[d + 1];
    return -log_likelihood(data, p);
  };

  Vector u0(d + 2);
  u0.head(d) = start.beta;
  u0[d] = std::log(start.mu);
  u0[d + 1] = std::log(start.alpha.value());
  MinimizeOptions mo;
  mo.grad_tol = options.grad_tol;
  mo.max_iter = options.max_iter;
  const auto opt = minimize_bfgs(objective, u0, mo);

  FitResult r;
  r.model_variant = ModelVariant::Full;
  r.params = unpack(opt.x);
  r.loglik = -opt.value;
  r.converged = opt.converged;
  r.n_iterations = opt.iterations;
  r.gradient_max_norm = opt.gradient.lpNorm<Eigen::Infinity>();
  r.labels = parameter_labels(data.dim(), true);
  r.diagnostic = opt.message;

  const auto info = info_full(design_from_dataset(data), r.params, options.series_tol);
  const auto inv = invert_information(info.matrix);
  r.info_condition = inv.condition;
  for (Eigen::Index j = 0; j < info.size(); ++j)
    r.std_errors.push_back(inv.positive_definite ? detail::se_from(inv.covariance(j, j)) : std::nullopt);

  const double a_hat = r.params.alpha.value();
  const double var_alpha = inv.covariance(d + 1, d + 1);
  if (!(var_alpha <= (10.0 * a_hat) * (10.0 * a_hat)) || r.info_condition > kNearSingularCondition) {
    r.alpha_flat = true;
    r.std_errors.back() = std::nullopt;
  }
  return r;
}

/// LRT of the Poisson-size submodel against the full model. α = ∞ sits on the
/// boundary, so the null is the ½χ²₀ + ½χ²₁ mixture.
inline LrtResult likelihood_ratio_test(const Dataset& data, double level = 0.05,
                                       const FitOptions& options = {}) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("likelihood_ratio_test: level must be in (0,1)");
  LrtResult r;
  r.significance_level = level;
  r.poisson_fit = fit_poisson_size(data, std::nullopt, options);
  if (!r.poisson_fit.converged)
    throw std::runtime_error("likelihood_ratio_test: Poisson-size fit did not converge (" +
                             r.poisson_fit.diagnostic + ")");
  ModelParams start = r.poisson_fit.params;
  start.alpha = Shape::finite(100.0);
  r.full_fit = fit_full(data, start, options);
  if (!r.full_fit.converged)
    throw std::runtime_error("likelihood_ratio_test: full fit did not converge (" +
                             r.full_fit.diagnostic + ")");

  r.raw_statistic = 2.0 * (r.full_fit.loglik - r.poisson_fit.loglik);
  r.statistic = std::max(0.0, r.raw_statistic);
  r.p_value = r.statistic > 0.0 ? 0.5 * chi_square1_sf(r.statistic) : 1.0;
  r.reject_poisson = r.p_value < level;
  return r;
}

/// estimate ± z_{1−level/2}·SE per parameter; empty where the SE is absent.
inline std::vector<std::optional<Interval>> wald_ci(const FitResult& fit, double level = 0.05) {
  if (!fit.converged) throw std::invalid_argument("wald_ci: fit did not converge");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("wald_ci: level must be in (0,1)");
  const double z = normal_quantile(1.0 - 0.5 * level);
  const Vector est = fit.estimates();
  std::vector<std::optional<Interval>> out;
  for (std::size_t j = 0; j < fit.std_errors.size(); ++j) {
    const auto& se = fit.std_errors[j];
    if (!se) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const double e = est[static_cast<Eigen::Index>(j)];
    out.emplace_back(Interval{e - z * *se, e + z * *se});
  }
  return out;
}

/// Standard errors from the inverse of the negative observed Hessian
/// (natural coordinates). Used for diagnostics, not for the reported SEs.
inline std::vector<std::optional<double>> observed_std_errors(const Dataset& data, const FitResult& fit) {
  const Matrix H = hessian(data, fit.params);
  const auto inv = invert_information(-H);
  std::vector<std::optional<double>> out;
  for (Eigen::Index j = 0; j < H.rows(); ++j)
    out.push_back(inv.positive_definite ? detail::se_from(inv.covariance(j, j)) : std::nullopt);
  return out;
}

}  // namespace latbin

#endif  // LATBIN_ESTIMATION_HPP
