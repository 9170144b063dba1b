#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "latbin/data_io.hpp"
#include "latbin/model.hpp"
#include "test_support.hpp"

using namespace latbin;
using latbin::testing::params_from;
using latbin::testing::theta_of;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out[i++] = e;
  return out;
}

ModelParams ref_params(Shape a) { return ModelParams(vec({6.705, -1.124}), 196.2, a); }

}  // namespace

TEST(Shape, FiniteAndInfinite) {
  EXPECT_TRUE(Shape::infinite().is_infinite());
  EXPECT_DOUBLE_EQ(Shape::finite(3.5).value(), 3.5);
  EXPECT_THROW(Shape::finite(0.0), std::invalid_argument);
  EXPECT_THROW(Shape::finite(-1.0), std::invalid_argument);
  EXPECT_THROW(Shape::finite(INFINITY), std::invalid_argument);
  EXPECT_THROW(Shape::infinite().value(), std::logic_error);
}

TEST(ModelParamsType, DerivedQuantities) {
  ModelParams p(vec({1.0, 2.0}), 100.0, Shape::finite(25.0));
  EXPECT_DOUBLE_EQ(p.rate(), 0.25);
  EXPECT_DOUBLE_EQ(p.size_mean_variance(), 400.0);
  p.alpha = Shape::infinite();
  EXPECT_EQ(p.size_mean_variance(), 0.0);
  p.mu = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(DatasetType, Validation) {
  EXPECT_THROW(Dataset({}), std::invalid_argument);
  EXPECT_THROW(Dataset({{1, vec({1.0})}, {1, vec({1.0, 2.0})}}), std::invalid_argument);
  EXPECT_THROW(Dataset({{-1, vec({1.0})}}), std::invalid_argument);
  EXPECT_THROW(Dataset({{1, vec({NAN})}}), std::invalid_argument);
  Dataset d({{3, vec({1.0, 2.0})}, {4, vec({1.0, 2.0})}, {5, vec({1.0, 3.0})}});
  EXPECT_EQ(d.distinct_rows(), 2u);
  EXPECT_EQ(d.total_count(), 12);
}

TEST(Link, LogisticAndGradient) {
  const Vector beta = vec({0.3, -0.7});
  const Vector x = vec({1.0, 2.0});
  const double eta = 0.3 - 1.4;
  const double h = 1.0 / (1.0 + std::exp(-eta));
  EXPECT_NEAR(link_h(x, beta), h, 1e-15);
  const Vector g = link_grad(x, beta);
  for (Eigen::Index j = 0; j < 2; ++j) {
    Vector up = beta, dn = beta;
    up[j] += 1e-6;
    dn[j] -= 1e-6;
    EXPECT_NEAR(g[j], (link_h(x, up) - link_h(x, dn)) / 2e-6, 1e-9);
  }
  // stays in (0,1) for extreme predictors
  EXPECT_GT(link_h(vec({1.0}), vec({-800.0})), -1e-300);
  EXPECT_LE(link_h(vec({1.0}), vec({800.0})), 1.0);
}

TEST(LogPmf, ArbitraryPrecisionOracle) {
  EXPECT_NEAR(log_pmf(76, vec({1.0, 6.25}), ref_params(Shape::finite(1000.0))), -3.368211575959542046512275, 1e-12);
}

TEST(LogPmf, PoissonClosedForm) {
  const ModelParams p = ref_params(Shape::infinite());
  const Vector x = vec({1.0, 7.25});
  const double m = p.mu * link_h(x, p.beta);
  for (std::int64_t y : {0, 1, 30, 200}) {
    const double want = -m + static_cast<double>(y) * std::log(m) - std::lgamma(static_cast<double>(y) + 1.0);
    EXPECT_NEAR(log_pmf(y, x, p), want, 1e-11);
  }
}

TEST(LogPmf, SumsToOneAndHasNegativeBinomialMoments) {
  for (double a : {0.5, 3.0, 25.0, 1e4}) {
    const ModelParams p(vec({0.4}), 40.0, Shape::finite(a));
    const Vector x = vec({1.0});
    const double m = 40.0 * link_h(x, p.beta);
    double total = 0.0, mean = 0.0, second = 0.0;
    for (std::int64_t y = 0; y < 20000; ++y) {
      const double pr = std::exp(log_pmf(y, x, p));
      total += pr;
      mean += pr * static_cast<double>(y);
      second += pr * static_cast<double>(y) * static_cast<double>(y);
    }
    EXPECT_NEAR(total, 1.0, 1e-10) << a;
    EXPECT_NEAR(mean, m, 1e-8 * m) << a;
    EXPECT_NEAR(second - mean * mean, m + m * m / a, 1e-7 * (m + m * m / a)) << a;
  }
}

TEST(LogPmf, PoissonLimit) {
  const Vector x = vec({1.0, 6.5});
  for (std::int64_t y : {0, 5, 80}) {
    const double pois = log_pmf(y, x, ref_params(Shape::infinite()));
    EXPECT_NEAR(log_pmf(y, x, ref_params(Shape::finite(1e12))), pois, 1e-7);
  }
}

TEST(LogPmf, Errors) {
  EXPECT_THROW(log_pmf(-1, vec({1.0}), ModelParams(vec({0.0}), 1.0, Shape::infinite())), std::invalid_argument);
  EXPECT_THROW(log_pmf(1, vec({1.0}), ModelParams(vec({0.0}), 0.0, Shape::infinite())), std::invalid_argument);
}

TEST(LogLikelihood, JejunalOracle) {
  const Dataset data = jejunal_dataset();
  EXPECT_NEAR(log_likelihood(data, ref_params(Shape::infinite())), -354.8403100704965073283601, 1e-9);
  EXPECT_NEAR(log_likelihood(data, ref_params(Shape::finite(1000.0))), -354.8722911490258121738413, 1e-9);
}

TEST(LogLikelihood, DimensionMismatchThrows) {
  const Dataset data = jejunal_dataset();
  EXPECT_THROW(log_likelihood(data, ModelParams(vec({1.0}), 10.0, Shape::infinite())), std::invalid_argument);
}

TEST(Score, MatchesFiniteDifferencesOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = latbin::testing::random_instance(rng);
    for (bool with_alpha : {true, false}) {
      ModelParams p = inst.params;
      if (!with_alpha) p.alpha = Shape::infinite();
      const Vector theta = theta_of(p);
      auto ll = [&](const Vector& t) { return log_likelihood(inst.data, params_from(t, 2, with_alpha)); };
      const Vector s = score(inst.data, p);
      ASSERT_EQ(s.size(), theta.size());
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double step = 1e-3 * std::max(1.0, std::abs(theta[j]));
        const double fd = latbin::testing::five_point(ll, theta, j, step);
        EXPECT_NEAR(s[j], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "trial " << trial << " j " << j;
      }
    }
  }
}

TEST(Hessian, MatchesFiniteDifferencesOfScore) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = latbin::testing::random_instance(rng);
    for (bool with_alpha : {true, false}) {
      ModelParams p = inst.params;
      if (!with_alpha) p.alpha = Shape::infinite();
      const Vector theta = theta_of(p);
      const Matrix H = hessian(inst.data, p);
      EXPECT_TRUE(H.isApprox(H.transpose(), 1e-14));
      for (Eigen::Index k = 0; k < theta.size(); ++k) {
        auto sk = [&](const Vector& t) { return score(inst.data, params_from(t, 2, with_alpha))[k]; };
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
          const double step = 1e-3 * std::max(1.0, std::abs(theta[j]));
          const double fd = latbin::testing::five_point(sk, theta, j, step);
          EXPECT_NEAR(H(k, j), fd, 1e-5 * std::max(1.0, std::abs(fd))) << trial << " " << k << "," << j;
        }
      }
    }
  }
}

TEST(Labels, Ordering) {
  EXPECT_EQ(parameter_labels(2, true), (std::vector<std::string>{"beta0", "beta1", "mu", "alpha"}));
  EXPECT_EQ(parameter_labels(3, false), (std::vector<std::string>{"beta0", "beta1", "beta2", "mu"}));
}
