#ifndef LATBIN_SIMULATION_HPP
#define LATBIN_SIMULATION_HPP

// Data generation under the latent-size model and the Monte Carlo study of
// the slope estimator (bias, MSE, Wald coverage).

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "latbin/efficiency.hpp"
#include "latbin/estimation.hpp"
#include "latbin/model.hpp"

namespace latbin {

/// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

/// Independent engine for one sample, a pure function of (seed, index).
inline Engine stream_engine(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
  return Engine(seq);
}

struct SimulatedData {
  Dataset data;
  std::vector<double> lambda;       // latent size means
  std::vector<std::int64_t> sizes;  // latent binomial sizes
};

/// λ ~ Gamma(α, μ/α) (λ ≡ μ for infinite α), n ~ Poisson(λ), y ~ Bin(n, h).
/// Each design point contributes `replications` observations; the points' own
/// replication counts are not used.
inline SimulatedData generate_dataset(const std::vector<DesignPoint>& design, const ModelParams& params,
                                      int replications, Engine& rng) {
  params.validate();
  if (replications < 1) throw std::invalid_argument("generate_dataset: replications must be >= 1");
  std::vector<Observation> obs;
  std::vector<double> lambdas;
  std::vector<std::int64_t> sizes;
  const bool degenerate = params.alpha.is_infinite();
  std::gamma_distribution<double> gamma(degenerate ? 1.0 : params.alpha.value(),
                                        degenerate ? 1.0 : params.mu / params.alpha.value());
  for (const auto& p : design) {
    const double h = link_h(p.x, params.beta);
    for (int k = 0; k < replications; ++k) {
      const double lambda = degenerate ? params.mu : gamma(rng);
      std::int64_t n = 0;
      if (lambda > 0.0) n = std::poisson_distribution<std::int64_t>(lambda)(rng);
      std::int64_t y = 0;
      if (n > 0) y = std::binomial_distribution<std::int64_t>(n, h)(rng);
      obs.push_back({y, p.x});
      lambdas.push_back(lambda);
      sizes.push_back(n);
    }
  }
  return {Dataset(std::move(obs)), std::move(lambdas), std::move(sizes)};
}

inline SimulatedData generate_dataset(const EffSetting& setting, int replications, Engine& rng) {
  return generate_dataset(setting.design, setting.params(), replications, rng);
}

struct SimConfig {
  EffSetting setting;
  int replications_per_x = 10;
  int n_samples = 1000;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  unsigned threads = 1;

  void validate() const {
    setting.validate();
    if (replications_per_x < 1) throw std::invalid_argument("SimConfig: replications_per_x must be >= 1");
    if (n_samples < 1) throw std::invalid_argument("SimConfig: n_samples must be >= 1");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("SimConfig: ci_level must be in (0,1)");
  }
};

/// Per-sample outcome for the tracked coefficient.
struct SampleOutcome {
  bool converged = false;
  double estimate = 0.0;
  double std_error = 0.0;
  bool covered = false;
};

struct SimSummary {
  double bias = 0.0;
  double mse = 0.0;
  double coverage = 0.0;
  int n_converged = 0;
  int n_samples = 0;
};

inline SampleOutcome run_sample(const SimConfig& config, std::uint64_t index) {
  Engine rng = stream_engine(config.seed, index);
  const auto sim = generate_dataset(config.setting, config.replications_per_x, rng);
  SampleOutcome out;
  const auto j = config.setting.coefficient;
  try {
    const auto fit = fit_full(sim.data);
    if (!fit.converged || !fit.std_errors[static_cast<std::size_t>(j)]) return out;
    const auto ci = wald_ci(fit, 1.0 - config.ci_level)[static_cast<std::size_t>(j)];
    const double truth = config.setting.beta[j];
    out.converged = true;
    out.estimate = fit.params.beta[j];
    out.std_error = *fit.std_errors[static_cast<std::size_t>(j)];
    out.covered = ci && ci->first <= truth && truth <= ci->second;
  } catch (const std::exception&) {
    // degenerate samples (e.g. too few distinct non-zero rows) count as non-converged
  }
  return out;
}

/// Runs every sample and aggregates in sample-index order, so the summary is
/// identical for any thread count.
inline std::vector<SampleOutcome> run_samples(const SimConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.n_samples);
  std::vector<SampleOutcome> outcomes(n);
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) outcomes[i] = run_sample(config, i);
    return outcomes;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) outcomes[i] = run_sample(config, i);
    });
  for (auto& th : pool) th.join();
  return outcomes;
}

inline SimSummary summarize(const std::vector<SampleOutcome>& outcomes, double truth) {
  SimSummary s;
  s.n_samples = static_cast<int>(outcomes.size());
  double sum = 0.0, sum_sq = 0.0;
  int covered = 0;
  for (const auto& o : outcomes) {
    if (!o.converged) continue;
    ++s.n_converged;
    const double e = o.estimate - truth;
    sum += e;
    sum_sq += e * e;
    covered += o.covered ? 1 : 0;
  }
  if (s.n_converged > 0) {
    s.bias = sum / s.n_converged;
    s.mse = sum_sq / s.n_converged;
    s.coverage = static_cast<double>(covered) / s.n_converged;
  }
  return s;
}

inline SimSummary run_study(const SimConfig& config) {
  return summarize(run_samples(config), config.setting.beta[config.setting.coefficient]);
}

}  // namespace latbin

#endif  // LATBIN_SIMULATION_HPP
