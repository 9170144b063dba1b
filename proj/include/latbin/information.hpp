#ifndef LATBIN_INFORMATION_HPP
#define LATBIN_INFORMATION_HPP

// Expected Fisher information for the latent-size model and its nested
// variants, plus closed-form block inversion for the Poisson-size case.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "latbin/model.hpp"
#include "latbin/numeric.hpp"

namespace latbin {

struct DesignPoint {
  Vector x;
  int replications = 1;
};

enum class InfoVariant {
  Full,         // β, μ, α with gamma-distributed size means
  PoissonSize,  // β, μ with α = ∞
  KnownMean,    // β only, sizes averaged over Poisson(μ)
  KnownSizes,   // β only, sizes observed
};

inline const char* to_string(InfoVariant v) {
  switch (v) {
    case InfoVariant::Full: return "full";
    case InfoVariant::PoissonSize: return "poisson_size";
    case InfoVariant::KnownMean: return "known_mean";
    case InfoVariant::KnownSizes: return "known_sizes";
  }
  return "?";
}

struct InfoMatrix {
  Matrix matrix;
  InfoVariant variant;
  std::vector<std::string> labels;

  Eigen::Index size() const { return matrix.rows(); }
};

/// Inverse of an information matrix with its spectral condition number.
struct InverseInfo {
  Matrix covariance;
  double condition = 1.0;
  bool near_singular = false;
  bool positive_definite = true;
};

inline constexpr double kNearSingularCondition = 1e12;

/// Inverts a symmetric information matrix by pivoted LDLᵀ. Never throws on
/// ill-conditioning; the result is flagged instead.
inline InverseInfo invert_information(const Matrix& info) {
  if (info.rows() != info.cols() || info.rows() == 0)
    throw std::invalid_argument("invert_information: matrix must be square and non-empty");
  InverseInfo out;
  const Eigen::JacobiSVD<Matrix> svd(info);
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  const double smin = sv.minCoeff();
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  out.near_singular = !(out.condition <= kNearSingularCondition);

  const Eigen::LDLT<Matrix> ldlt(info);
  const auto& dvals = ldlt.vectorD();
  out.positive_definite = ldlt.info() == Eigen::Success && (dvals.array() > 0.0).all();
  if (out.positive_definite) {
    out.covariance = ldlt.solve(Matrix::Identity(info.rows(), info.cols()));
  } else {
    const Eigen::JacobiSVD<Matrix> full_svd(info, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.covariance = full_svd.solve(Matrix::Identity(info.rows(), info.cols()));
  }
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

/// Diagonal entry of the inverse information.
inline double marginal_variance(const InfoMatrix& info, Eigen::Index index) {
  if (index < 0 || index >= info.size())
    throw std::out_of_range("marginal_variance: index out of range");
  return invert_information(info.matrix).covariance(index, index);
}

/// True when every eigenvalue is ≥ −1e-8·trace.
inline bool is_positive_semidefinite(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double tr = std::abs(m.trace());
  return es.eigenvalues().minCoeff() >= -1e-8 * std::max(tr, std::numeric_limits<double>::min());
}

namespace detail {

inline void validate_design(const std::vector<DesignPoint>& design, std::size_t d) {
  if (design.empty()) throw std::invalid_argument("design must contain at least one point");
  for (const auto& p : design) {
    if (p.replications < 1) throw std::invalid_argument("design point replications must be >= 1");
    if (static_cast<std::size_t>(p.x.size()) != d)
      throw std::invalid_argument("design point dimension does not match beta");
  }
}

}  // namespace detail

/// −E[∂²ℓ/∂α²] for a single observation at covariate x.
///
/// Uses ψ'(α) − E ψ'(α+y) = Σ_k P(Y>k)/(α+k)² and folds the m/(α(α+m))
/// term into each summand, leaving the O(m²/α⁴) result with a milder
/// cancellation than subtracting two O(m/α²) sums. Tail probabilities are
/// accumulated from the truncation point downward.
inline double expected_alpha_info(const Vector& x, const ModelParams& params,
                                  const Tolerance& tol = {}) {
  params.validate();
  tol.validate();
  const double a = params.alpha.value();
  const double m = params.mu * link_h(x, params.beta);

  const double log_ratio = std::log(m / (a + m));
  std::vector<double> pmf;
  pmf.reserve(static_cast<std::size_t>(m + 50.0 * std::sqrt(m + m * m / a)) + 16);
  double log_p = -a * std::log1p(m / a);
  for (std::size_t y = 0;; ++y) {
    if (y >= tol.max_terms)
      throw std::runtime_error("expected_alpha_info: tail mass not exhausted within max_terms");
    const double p = std::exp(log_p);
    pmf.push_back(p);
    const double yd = static_cast<double>(y);
    const double step = std::log((a + yd) / (yd + 1.0)) + log_ratio;
    if (yd >= m) {
      // past the mode the pmf ratio decreases, so the tail is below a geometric series
      const double r = std::exp(step);
      if (r < 1.0 && p * r / (1.0 - r) < 1e-4 * tol.abs_tol) break;
    }
    log_p += step;
  }

  // pmf.size() = K+1 entries for y = 0..K; P(Y>k) for k = 0..K-1.
  const double am = a * (a + m);
  double tail = 0.0;
  double total = 0.0;
  for (std::size_t k = pmf.size() - 1; k-- > 0;) {
    tail += pmf[k + 1];
    const double kd = static_cast<double>(k);
    const double w = a + kd;
    // 1/(α+k)² − 1/(α(α+m))
    const double c = (a * (m - 2.0 * kd) - kd * kd) / (w * w * am);
    total += tail * c;
  }
  // Σ_k P(Y>k) over the truncated range falls short of E[Y] = m only by the
  // neglected tail, below 1e-4·tol.abs_tol in mass.
  return total;
}

/// Full information over (β, μ, α). The α row and column are zero off the
/// diagonal.
inline InfoMatrix info_full(const std::vector<DesignPoint>& design, const ModelParams& params,
                            const Tolerance& tol = {}) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(params.dim());
  detail::validate_design(design, params.dim());
  const double a = params.alpha.value();
  const double mu = params.mu;

  Matrix I = Matrix::Zero(d + 2, d + 2);
  for (const auto& p : design) {
    const auto [h, q] = detail::link_terms(p.x, params.beta);
    const double r = static_cast<double>(p.replications);
    const double c = 1.0 + mu * h / a;
    // μ∇h∇h'/(h c) = μ h q² x x' / c
    I.topLeftCorner(d, d) += (r * mu * h * q * q / c) * (p.x * p.x.transpose());
    I.block(0, d, d, 1) += (r * h * q / c) * p.x;
    I(d, d) += r * h / (mu * c);
    I(d + 1, d + 1) += r * expected_alpha_info(p.x, params, tol);
  }
  I.block(d, 0, 1, d) = I.block(0, d, d, 1).transpose();
  return {std::move(I), InfoVariant::Full, parameter_labels(params.dim(), true)};
}

/// Information over (β, μ) when sizes are Poisson(μ); α is ignored.
inline InfoMatrix info_poisson_size(const std::vector<DesignPoint>& design,
                                    const ModelParams& params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(params.dim());
  detail::validate_design(design, params.dim());
  const double mu = params.mu;

  Matrix I = Matrix::Zero(d + 1, d + 1);
  for (const auto& p : design) {
    const auto [h, q] = detail::link_terms(p.x, params.beta);
    const double r = static_cast<double>(p.replications);
    I.topLeftCorner(d, d) += (r * mu * h * q * q) * (p.x * p.x.transpose());
    I.block(0, d, d, 1) += (r * h * q) * p.x;
    I(d, d) += r * h / mu;
  }
  I.block(d, 0, 1, d) = I.block(0, d, d, 1).transpose();
  return {std::move(I), InfoVariant::PoissonSize, parameter_labels(params.dim(), false)};
}

/// Known-sizes information averaged over n ~ Poisson(μ): Σ μ∇h∇h'/[h(1−h)].
inline InfoMatrix info_known_mean(const std::vector<DesignPoint>& design,
                                  const ModelParams& params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(params.dim());
  detail::validate_design(design, params.dim());

  Matrix I = Matrix::Zero(d, d);
  for (const auto& p : design) {
    const auto [h, q] = detail::link_terms(p.x, params.beta);
    I += (static_cast<double>(p.replications) * params.mu * h * q) * (p.x * p.x.transpose());
  }
  auto labels = parameter_labels(params.dim(), false);
  labels.pop_back();
  return {std::move(I), InfoVariant::KnownMean, std::move(labels)};
}

/// Binomial information with observed sizes, one size per expanded
/// observation (design points repeated by their replication count, in order).
inline InfoMatrix info_known_sizes(const std::vector<DesignPoint>& design,
                                   const std::vector<std::int64_t>& sizes,
                                   const ModelParams& params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(params.dim());
  detail::validate_design(design, params.dim());
  std::size_t expected = 0;
  for (const auto& p : design) expected += static_cast<std::size_t>(p.replications);
  if (sizes.size() != expected)
    throw std::invalid_argument("info_known_sizes: got " + std::to_string(sizes.size()) +
                                " sizes for " + std::to_string(expected) + " observations");

  Matrix I = Matrix::Zero(d, d);
  std::size_t i = 0;
  for (const auto& p : design) {
    const auto [h, q] = detail::link_terms(p.x, params.beta);
    const Matrix xx = p.x * p.x.transpose();
    for (int k = 0; k < p.replications; ++k, ++i) {
      if (sizes[i] < 0) throw std::invalid_argument("info_known_sizes: negative size");
      I += (static_cast<double>(sizes[i]) * h * q) * xx;
    }
  }
  auto labels = parameter_labels(params.dim(), false);
  labels.pop_back();
  return {std::move(I), InfoVariant::KnownSizes, std::move(labels)};
}

struct VariancePartition {
  Matrix v11;  // β block of the inverse Poisson-size information
  double v22;  // μ entry
};

/// Closed-form blocks of the inverse Poisson-size information:
///   V₁₁ = μ⁻¹ {A − b bᵀ / c}⁻¹,  V₂₂ = μ {c − bᵀ A⁻¹ b}⁻¹
/// with A = Σ ∇h∇hᵀ/h, b = Σ ∇h, c = Σ h.
inline VariancePartition block_variance_partition(const std::vector<DesignPoint>& design,
                                                  const ModelParams& params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(params.dim());
  detail::validate_design(design, params.dim());

  Matrix A = Matrix::Zero(d, d);
  Vector b = Vector::Zero(d);
  double c = 0.0;
  for (const auto& p : design) {
    const auto [h, q] = detail::link_terms(p.x, params.beta);
    const double r = static_cast<double>(p.replications);
    A += (r * h * q * q) * (p.x * p.x.transpose());
    b += (r * h * q) * p.x;
    c += r * h;
  }

  const Matrix schur_beta = A - (b * b.transpose()) / c;
  const Eigen::LDLT<Matrix> schur_fact(schur_beta);
  const Eigen::LDLT<Matrix> a_fact(A);
  auto singular = [](const Eigen::LDLT<Matrix>& f) {
    return f.info() != Eigen::Success || !(f.vectorD().array() > 0.0).all() ||
           f.rcond() < 1e-14;
  };
  if (singular(schur_fact) || singular(a_fact))
    throw std::domain_error("block_variance_partition: singular block (need >= d+1 distinct x)");

  const double schur_mu = c - b.dot(a_fact.solve(b));
  if (!(schur_mu > 0.0)) throw std::domain_error("block_variance_partition: singular mu block");

  VariancePartition out;
  out.v11 = schur_fact.solve(Matrix::Identity(d, d)) / params.mu;
  out.v22 = params.mu / schur_mu;
  return out;
}

/// Design points built from a dataset, collapsing identical covariate rows
/// into replications.
inline std::vector<DesignPoint> design_from_dataset(const Dataset& data) {
  std::vector<DesignPoint> out;
  for (const auto& o : data) {
    auto it = std::find_if(out.begin(), out.end(), [&](const DesignPoint& p) { return p.x == o.x; });
    if (it == out.end())
      out.push_back({o.x, 1});
    else
      ++it->replications;
  }
  return out;
}

}  // namespace latbin

#endif  // LATBIN_INFORMATION_HPP
