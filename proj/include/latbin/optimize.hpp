#ifndef LATBIN_OPTIMIZE_HPP
#define LATBIN_OPTIMIZE_HPP

// BFGS with a strong-Wolfe line search. Near the optimum the objective
// differences fall below rounding noise, so a step is also accepted under
// the approximate Wolfe conditions (Hager-Zhang), which only need the
// directional derivative once f has stopped moving.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace latbin {

struct MinimizeOptions {
  double grad_tol = 1e-8;  // max-norm of the gradient
  int max_iter = 500;
  int max_line_search = 60;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double approx_wolfe_eps = 1e-10;  // relative slack on f for approximate Wolfe
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

namespace detail {

struct LinePoint {
  double t = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

// Minimizer of the cubic interpolating (t0,f0,d0),(t1,f1,d1), safeguarded to
// the interior of the bracket.
inline double cubic_step(const LinePoint& a, const LinePoint& b) {
  const double lo = std::min(a.t, b.t);
  const double hi = std::max(a.t, b.t);
  const double d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.t - b.t);
  const double disc = d1 * d1 - a.d * b.d;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.t - a.t);
    const double cand = b.t - (b.t - a.t) * (b.d + d2 - d1) / (b.d - a.d + 2.0 * d2);
    if (std::isfinite(cand)) t = cand;
  }
  const double margin = 0.1 * (hi - lo);
  if (!(t > lo + margin && t < hi - margin)) t = 0.5 * (lo + hi);
  return t;
}

}  // namespace detail

/// Minimizes f. `fg(x, grad)` returns f(x) and writes ∇f; it may return a
/// non-finite value to reject x.
template <class Objective>
MinimizeResult minimize_bfgs(Objective&& fg, Eigen::VectorXd x0, const MinimizeOptions& opt = {}) {
  using Eigen::VectorXd;
  const auto n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  res.gradient = VectorXd::Zero(n);
  res.value = fg(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.value) || !res.gradient.allFinite()) {
    res.message = "objective not finite at the initial point";
    return res;
  }

  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  auto evaluate = [&](const VectorXd& base, const VectorXd& p, double t) {
    detail::LinePoint lp;
    lp.t = t;
    lp.x = base + t * p;
    lp.g = VectorXd::Zero(n);
    lp.f = fg(lp.x, lp.g);
    ++res.evaluations;
    if (!std::isfinite(lp.f) || !lp.g.allFinite()) {
      lp.f = std::numeric_limits<double>::infinity();
      lp.d = std::numeric_limits<double>::quiet_NaN();
    } else {
      lp.d = lp.g.dot(p);
    }
    return lp;
  };

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    if (res.gradient.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      return res;
    }

    VectorXd p = -Hinv * res.gradient;
    double d0 = res.gradient.dot(p);
    if (!(d0 < 0.0)) {
      Hinv.setIdentity();
      scaled = false;
      p = -res.gradient;
      d0 = res.gradient.dot(p);
    }

    const detail::LinePoint origin{0.0, res.value, d0, res.x, res.gradient};
    const double f0 = res.value;
    const double slack = opt.approx_wolfe_eps * std::abs(f0);

    auto armijo = [&](const detail::LinePoint& lp) {
      return lp.f <= f0 + opt.wolfe_c1 * lp.t * d0;
    };
    auto acceptable = [&](const detail::LinePoint& lp) {
      if (!std::isfinite(lp.f)) return false;
      if (armijo(lp) && std::abs(lp.d) <= -opt.wolfe_c2 * d0) return true;
      return lp.f <= f0 + slack && lp.d >= opt.wolfe_c2 * d0 &&
             lp.d <= (2.0 * opt.wolfe_c1 - 1.0) * d0;
    };

    double t = 1.0;
    if (!scaled) t = std::min(1.0, 1.0 / std::max(1e-300, res.gradient.lpNorm<Eigen::Infinity>()));

    bool found = false;
    detail::LinePoint accepted;
    detail::LinePoint prev = origin;
    int budget = opt.max_line_search;

    auto zoom = [&](detail::LinePoint lo, detail::LinePoint hi) {
      while (budget-- > 0) {
        const double tz = (std::isfinite(hi.f) && std::isfinite(hi.d))
                              ? detail::cubic_step(lo, hi)
                              : 0.5 * (lo.t + hi.t);
        auto lp = evaluate(res.x, p, tz);
        if (acceptable(lp)) {
          accepted = std::move(lp);
          return true;
        }
        if (!std::isfinite(lp.f) || !armijo(lp) || lp.f >= lo.f) {
          hi = std::move(lp);
        } else {
          if (lp.d * (hi.t - lo.t) >= 0.0) hi = lo;
          lo = std::move(lp);
        }
        if (std::abs(hi.t - lo.t) <= 1e-16 * std::max(1.0, std::abs(lo.t))) break;
      }
      if (lo.t > 0.0 && lo.f < f0) {
        accepted = std::move(lo);
        return true;
      }
      return false;
    };

    for (int i = 0; budget-- > 0; ++i) {
      auto lp = evaluate(res.x, p, t);
      if (acceptable(lp)) {
        accepted = std::move(lp);
        found = true;
        break;
      }
      if (!std::isfinite(lp.f) || !armijo(lp) || (i > 0 && lp.f >= prev.f)) {
        found = zoom(prev, std::move(lp));
        break;
      }
      if (lp.d >= 0.0) {
        found = zoom(std::move(lp), prev);
        break;
      }
      prev = std::move(lp);
      t *= 2.0;
    }

    if (!found) {
      if (!Hinv.isIdentity()) {
        Hinv.setIdentity();
        scaled = false;
        continue;
      }
      res.message = "line search failed";
      return res;
    }

    const VectorXd s = accepted.x - res.x;
    const VectorXd y = accepted.g - res.gradient;
    res.x = std::move(accepted.x);
    res.value = accepted.f;
    res.gradient = std::move(accepted.g);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        Hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const VectorXd Hy = Hinv * y;
      const double yHy = y.dot(Hy);
      Hinv += ((sy + yHy) * rho * rho) * (s * s.transpose()) -
              rho * (Hy * s.transpose() + s * Hy.transpose());
    }
  }

  res.converged = res.gradient.lpNorm<Eigen::Infinity>() < opt.grad_tol;
  res.message = res.converged ? "gradient tolerance reached" : "iteration limit reached";
  return res;
}

}  // namespace latbin

#endif  // LATBIN_OPTIMIZE_HPP
