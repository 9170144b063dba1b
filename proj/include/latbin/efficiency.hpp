#ifndef LATBIN_EFFICIENCY_HPP
#define LATBIN_EFFICIENCY_HPP

// Efficiency-loss measures for the slope of a logistic dose-response when
// the binomial sizes are unknown (ρ) and over-dispersed (γ), and the
// standard-deviation-versus-μ curves.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "latbin/information.hpp"
#include "latbin/model.hpp"

namespace latbin {

struct EffSetting {
  std::vector<DesignPoint> design;
  Vector beta;
  double mu = 100.0;
  double alpha = 25.0;
  Eigen::Index coefficient = 1;  // which β the measures refer to

  ModelParams params() const { return ModelParams(beta, mu, Shape::finite(alpha)); }

  void validate() const {
    if (design.empty()) throw std::invalid_argument("EffSetting: empty design");
    if (!(mu > 0.0) || !(alpha > 0.0)) throw std::invalid_argument("EffSetting: mu and alpha must be > 0");
    if (coefficient < 0 || coefficient >= beta.size())
      throw std::invalid_argument("EffSetting: coefficient index out of range");
  }
};

/// ρ, γ and their product, all in (0, 1].
struct EffResult {
  double rho = 0.0;
  double gamma = 0.0;
  double rho_gamma = 0.0;
};

struct BuiltinDesigns {
  std::vector<double> x1;
  std::vector<double> x2;
};

/// X1 = integers in [−5, 5]; X2 = eleven fixed N(0, 25) draws.
inline BuiltinDesigns builtin_designs() {
  BuiltinDesigns d;
  for (int v = -5; v <= 5; ++v) d.x1.push_back(v);
  d.x2 = {-0.63, 1.59, -3.01, -6.85, -4.97, 1.86, -7.54, -3.45, -4.45, -1.87, 6.49};
  return d;
}

/// Intercept-plus-slope design with uniform replication.
inline std::vector<DesignPoint> make_design(const std::vector<double>& xs, int replications) {
  std::vector<DesignPoint> out;
  out.reserve(xs.size());
  for (double x : xs) {
    Vector row(2);
    row << 1.0, x;
    out.push_back({std::move(row), replications});
  }
  return out;
}

struct NumberedSetting {
  int number = 0;
  std::string design_name;
  EffSetting setting;
};

/// The 2⁴ grid: design × β₁ ∈ {1,2} × μ ∈ {100,300} × α ∈ {25,49}, β₀ = 1.
/// Settings 1-8 use X1 and 9-16 use X2; β₁ varies fastest, then μ, then α.
inline std::vector<NumberedSetting> table_settings(int replications = 10) {
  const auto designs = builtin_designs();
  std::vector<NumberedSetting> out;
  int n = 1;
  for (int di = 0; di < 2; ++di) {
    const auto& xs = di == 0 ? designs.x1 : designs.x2;
    for (double alpha : {25.0, 49.0})
      for (double mu : {100.0, 300.0})
        for (double b1 : {1.0, 2.0}) {
          Vector beta(2);
          beta << 1.0, b1;
          out.push_back({n++, di == 0 ? "X1" : "X2", EffSetting{make_design(xs, replications), beta, mu, alpha, 1}});
        }
  }
  return out;
}

namespace detail {

inline double coefficient_variance(const InfoMatrix& info, Eigen::Index j) {
  const auto inv = invert_information(info.matrix);
  if (!inv.positive_definite)
    throw std::domain_error(std::string("singular ") + to_string(info.variant) + " information");
  return inv.covariance(j, j);
}

// Loss ratio between a less and a more informative variance, reported as
// (v_more / v_less)^(1/4), i.e. the square root of the SD ratio.
inline double loss_ratio(double v_more_info, double v_less_info) {
  return std::sqrt(std::sqrt(v_more_info / v_less_info));
}

}  // namespace detail

/// ρ compares known sizes (averaged over Poisson(μ)) against unknown
/// Poisson sizes; γ compares Poisson sizes against gamma-mixed sizes. Each is
/// computed from marginal variances of the chosen β (full inverse of each
/// information matrix) and reported on the square-root-of-SD-ratio scale.
inline EffResult efficiency_measures(const EffSetting& setting) {
  setting.validate();
  const ModelParams p = setting.params();
  const auto j = setting.coefficient;
  const double v_known = detail::coefficient_variance(info_known_mean(setting.design, p), j);
  const double v_poisson = detail::coefficient_variance(info_poisson_size(setting.design, p), j);
  const double v_full = detail::coefficient_variance(info_full(setting.design, p), j);
  EffResult r;
  r.rho = detail::loss_ratio(v_known, v_poisson);
  r.gamma = detail::loss_ratio(v_poisson, v_full);
  r.rho_gamma = r.rho * r.gamma;
  return r;
}

/// γ over an ascending α grid, other parameters from `setting`.
inline std::vector<std::pair<double, double>> gamma_curve(const EffSetting& setting,
                                                          const std::vector<double>& alpha_grid) {
  setting.validate();
  for (std::size_t i = 1; i < alpha_grid.size(); ++i)
    if (!(alpha_grid[i] >= alpha_grid[i - 1])) throw std::invalid_argument("gamma_curve: grid must be ascending");
  const ModelParams base = setting.params();
  const double v_poisson =
      detail::coefficient_variance(info_poisson_size(setting.design, base), setting.coefficient);
  std::vector<std::pair<double, double>> out;
  out.reserve(alpha_grid.size());
  for (double a : alpha_grid) {
    ModelParams p = base;
    p.alpha = Shape::finite(a);
    const double v_full = detail::coefficient_variance(info_full(setting.design, p), setting.coefficient);
    out.emplace_back(a, detail::loss_ratio(v_poisson, v_full));
  }
  return out;
}

/// n log-spaced points on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double step = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  g.back() = hi;
  return g;
}

/// Default α grid for γ curves: 50 log-spaced points on [5, 500].
inline std::vector<double> default_alpha_grid() { return log_grid(5.0, 500.0, 50); }

struct SdRow {
  double mu = 0.0;
  std::vector<double> sd_beta;
  double sd_mu = 0.0;
};

enum class SdModel { Full, PoissonSize };

/// Asymptotic SDs of (β, μ) along an ascending μ grid.
inline std::vector<SdRow> sd_vs_mu_curves(const EffSetting& setting, const std::vector<double>& mu_grid,
                                          SdModel model = SdModel::Full) {
  setting.validate();
  for (std::size_t i = 1; i < mu_grid.size(); ++i)
    if (!(mu_grid[i] >= mu_grid[i - 1])) throw std::invalid_argument("sd_vs_mu_curves: grid must be ascending");
  const auto d = setting.beta.size();
  std::vector<SdRow> out;
  for (double mu : mu_grid) {
    ModelParams p = setting.params();
    p.mu = mu;
    const InfoMatrix info =
        model == SdModel::Full ? info_full(setting.design, p) : info_poisson_size(setting.design, p);
    const auto inv = invert_information(info.matrix);
    if (!inv.positive_definite) throw std::domain_error("sd_vs_mu_curves: singular information");
    SdRow row;
    row.mu = mu;
    for (Eigen::Index j = 0; j < d; ++j) row.sd_beta.push_back(std::sqrt(inv.covariance(j, j)));
    row.sd_mu = std::sqrt(inv.covariance(d, d));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace latbin

#endif  // LATBIN_EFFICIENCY_HPP
