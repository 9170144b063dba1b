// latbin command-line front end.
//
//   latbin fit        --input data.csv | --builtin jejunal  [--model auto|poisson|full]
//   latbin test       likelihood ratio test of Poisson sizes against gamma-mixed sizes
//   latbin efficiency efficiency-loss table over the 16 built-in settings (or --settings file)
//   latbin curves     gamma-vs-alpha and sd-vs-mu tables
//   latbin simulate   Monte Carlo bias / MSE / coverage of the slope
//
// Exit status: 0 success, 1 usage or I/O error, 2 numerical non-convergence.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "latbin/latbin.hpp"

using namespace latbin;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNoConvergence = 2;

struct Config {
  std::string input;
  std::string builtin;
  bool general = false;
  bool no_intercept = false;
  std::string output;
  std::string format = "csv";
  bool full_precision = false;
  double level = 0.05;
  std::string model = "auto";
  std::uint64_t seed = 0;
  std::string settings_path;
  std::vector<std::string> settings_filter;
  int samples = 1000;
  int replications = 10;
  unsigned threads = 0;
  std::string figure = "all";
};

// Thrown for conditions that map to exit status 2.
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Dataset load_dataset(const Config& c) {
  if (!c.builtin.empty()) {
    if (!c.input.empty()) throw std::invalid_argument("--input and --builtin are mutually exclusive");
    if (c.builtin != "jejunal") throw std::invalid_argument("unknown builtin dataset '" + c.builtin + "'");
    return dataset_from_records(jejunal_records(), !c.no_intercept);
  }
  if (c.input.empty()) throw std::invalid_argument("no dataset: pass --input FILE or --builtin jejunal");
  CsvOptions o;
  o.general = c.general;
  o.intercept = !c.no_intercept;
  return read_csv(c.input, o);
}

void emit(const Config& c, const RecordTable& table) {
  WriteOptions w;
  w.format = c.format == "structured" ? RecordFormat::Structured : RecordFormat::Csv;
  w.full_precision = c.full_precision;
  if (c.output.empty() || c.output == "-") {
    write_records(std::cout, table, w);
    std::cout.flush();
  } else {
    write_records(c.output, table, w);
  }
}

Cell opt_cell(const std::optional<double>& v) {
  if (v) return *v;
  return std::monostate{};
}

// ---------------------------------------------------------------------------
// fit / test

void add_param_rows(RecordTable& t, const FitResult& fit, double level) {
  const Vector est = fit.estimates();
  std::vector<std::optional<Interval>> ci(fit.labels.size());
  if (fit.converged) ci = wald_ci(fit, level);
  for (std::size_t j = 0; j < fit.labels.size(); ++j) {
    Cell lo = std::monostate{}, hi = std::monostate{};
    if (ci[j]) {
      lo = ci[j]->first;
      hi = ci[j]->second;
    }
    t.add_row({std::string("param"), fit.labels[j], est[static_cast<Eigen::Index>(j)], opt_cell(fit.std_errors[j]),
               lo, hi});
  }
}

void add_summary(RecordTable& t, const std::string& name, Cell value) {
  t.add_row({std::string("summary"), name, std::move(value), std::monostate{}, std::monostate{}, std::monostate{}});
}

int cmd_fit(const Config& c) {
  const Dataset data = load_dataset(c);
  FitResult fit;
  std::optional<LrtResult> lrt;
  if (c.model == "poisson") {
    fit = fit_poisson_size(data);
  } else if (c.model == "full") {
    fit = fit_full(data);
  } else {
    try {
      lrt = likelihood_ratio_test(data, c.level);
    } catch (const std::runtime_error& e) {
      throw NonConvergence(e.what());
    }
    fit = lrt->reject_poisson ? lrt->full_fit : lrt->poisson_fit;
  }

  RecordTable t{{"kind", "name", "estimate", "std_error", "ci_lower", "ci_upper"}, {}};
  add_param_rows(t, fit, c.level);
  add_summary(t, "model", std::string(to_string(fit.model_variant)));
  add_summary(t, "converged", fit.converged);
  add_summary(t, "loglik", fit.loglik);
  add_summary(t, "n_iterations", static_cast<std::int64_t>(fit.n_iterations));
  add_summary(t, "gradient_max_norm", fit.gradient_max_norm);
  add_summary(t, "info_condition", fit.info_condition);
  add_summary(t, "ci_level", 1.0 - c.level);
  if (lrt) {
    add_summary(t, "lrt_statistic", lrt->statistic);
    add_summary(t, "lrt_p_value", lrt->p_value);
    add_summary(t, "reject_poisson", lrt->reject_poisson);
  }
  if (fit.model_variant == ModelVariant::Full) {
    add_summary(t, "alpha_flat", fit.alpha_flat);
    if (fit.alpha_flat) {
      const std::string msg = "likelihood is flat in alpha (information nearly singular, condition " +
                              format_real(fit.info_condition, false) + "); alpha estimate is unstable";
      t.add_row({std::string("warning"), std::string("alpha_flat"), msg, std::monostate{}, std::monostate{},
                 std::monostate{}});
      std::cerr << "warning: " << msg << '\n';
    }
  }
  emit(c, t);
  if (!fit.converged) {
    std::cerr << "error: fit did not converge: " << fit.diagnostic << '\n';
    return kNoConvergence;
  }
  return kOk;
}

int cmd_test(const Config& c) {
  const Dataset data = load_dataset(c);
  LrtResult r;
  try {
    r = likelihood_ratio_test(data, c.level);
  } catch (const std::runtime_error& e) {
    throw NonConvergence(e.what());
  }
  RecordTable t{{"statistic", "p_value", "level", "reject_poisson", "selected_model", "loglik_poisson",
                 "loglik_full", "alpha_hat"},
                {}};
  t.add_row({r.statistic, r.p_value, r.significance_level, r.reject_poisson,
             std::string(r.reject_poisson ? "full" : "poisson"), r.poisson_fit.loglik, r.full_fit.loglik,
             r.full_fit.params.alpha.value()});
  emit(c, t);
  return kOk;
}

// ---------------------------------------------------------------------------
// settings

std::vector<NumberedSetting> read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  const RecordTable raw = read_records_csv(in);
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < raw.columns.size(); ++j) col[raw.columns[j]] = j;
  for (const char* need : {"setting", "design", "beta1", "mu", "alpha"})
    if (!col.count(need)) throw std::runtime_error(path + ": missing column '" + need + "'");

  const auto designs = builtin_designs();
  std::vector<NumberedSetting> out;
  std::size_t line = 1;
  for (const auto& row : raw.rows) {
    ++line;
    auto text = [&](const std::string& name) { return std::get<std::string>(row[col.at(name)]); };
    auto number = [&](const std::string& name) {
      const std::string s = text(name);
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ParseError(line, "non-numeric value '" + s + "' in column " + name);
      }
    };
    NumberedSetting ns;
    ns.number = static_cast<int>(number("setting"));
    ns.design_name = text("design");
    if (ns.design_name != "X1" && ns.design_name != "X2")
      throw ParseError(line, "design must be X1 or X2, got '" + ns.design_name + "'");
    const int reps = col.count("replications") ? static_cast<int>(number("replications")) : 10;
    const double b0 = col.count("beta0") ? number("beta0") : 1.0;
    ns.setting.design = make_design(ns.design_name == "X1" ? designs.x1 : designs.x2, reps);
    ns.setting.beta = Vector(2);
    ns.setting.beta << b0, number("beta1");
    ns.setting.mu = number("mu");
    ns.setting.alpha = number("alpha");
    ns.setting.validate();
    out.push_back(std::move(ns));
  }
  if (out.empty()) throw std::runtime_error(path + ": no settings");
  return out;
}

std::vector<NumberedSetting> selected_settings(const Config& c) {
  std::vector<NumberedSetting> all =
      c.settings_path.empty() ? table_settings(c.replications) : read_settings_file(c.settings_path);
  if (c.settings_filter.empty()) return all;
  std::vector<NumberedSetting> out;
  for (const auto& f : c.settings_filter) {
    if (f == "all") return all;
    int n = 0;
    try {
      n = std::stoi(f);
    } catch (const std::exception&) {
      throw std::invalid_argument("--setting expects a number or 'all', got '" + f + "'");
    }
    bool found = false;
    for (const auto& s : all)
      if (s.number == n) {
        out.push_back(s);
        found = true;
      }
    if (!found) throw std::invalid_argument("no setting numbered " + f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// efficiency / curves / simulate

int cmd_efficiency(const Config& c) {
  RecordTable t{{"setting", "beta1", "mu", "alpha", "rho", "gamma", "rho_gamma"}, {}};
  for (const auto& ns : selected_settings(c)) {
    const auto r = efficiency_measures(ns.setting);
    t.add_row({static_cast<std::int64_t>(ns.number), ns.setting.beta[1], ns.setting.mu, ns.setting.alpha, r.rho,
               r.gamma, r.rho_gamma});
  }
  emit(c, t);
  return kOk;
}

int cmd_curves(const Config& c) {
  if (c.figure != "all" && c.figure != "gamma" && c.figure != "sd")
    throw std::invalid_argument("--figure must be gamma, sd or all");
  const auto x1 = make_design(builtin_designs().x1, c.replications);
  auto setting = [&](double b1, double mu, double alpha) {
    Vector beta(2);
    beta << 1.0, b1;
    return EffSetting{x1, beta, mu, alpha, 1};
  };
  RecordTable t{{"curve", "panel", "beta1", "mu", "alpha", "gamma", "sd_beta0", "sd_beta1", "sd_mu"}, {}};
  const std::monostate none;
  if (c.figure != "sd") {
    // table alphas are added so the curves can be read against the efficiency table
    std::vector<double> grid = default_alpha_grid();
    grid.insert(grid.end(), {25.0, 49.0});
    std::sort(grid.begin(), grid.end());
    const std::pair<double, double> panels[] = {{1, 100}, {2, 100}, {1, 300}, {2, 300}};
    std::int64_t panel = 1;
    for (const auto& [b1, mu] : panels) {
      for (const auto& [a, g] : gamma_curve(setting(b1, mu, 25.0), grid))
        t.add_row({std::string("gamma_vs_alpha"), panel, b1, mu, a, g, none, none, none});
      ++panel;
    }
  }
  if (c.figure != "gamma") {
    std::vector<double> mu_grid;
    for (int m = 10; m <= 500; m += 10) mu_grid.push_back(m);
    const std::pair<double, double> panels[] = {{1, 25}, {2, 49}};
    std::int64_t panel = 1;
    for (const auto& [b1, a] : panels) {
      for (const auto& row : sd_vs_mu_curves(setting(b1, 100.0, a), mu_grid))
        t.add_row({std::string("sd_vs_mu"), panel, b1, row.mu, a, none, row.sd_beta[0], row.sd_beta[1], row.sd_mu});
      ++panel;
    }
  }
  emit(c, t);
  return kOk;
}

int cmd_simulate(const Config& c) {
  if (c.samples < 1) throw std::invalid_argument("--samples must be >= 1");
  const unsigned threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  std::cerr << "seed: " << c.seed << '\n';
  RecordTable t{{"setting", "beta1", "mu", "alpha", "bias", "mse", "coverage", "n_converged", "n_samples", "seed"},
                {}};
  bool any_empty = false;
  for (const auto& ns : selected_settings(c)) {
    SimConfig sc;
    sc.setting = ns.setting;
    sc.replications_per_x = ns.setting.design.front().replications;
    sc.n_samples = c.samples;
    sc.seed = c.seed;
    sc.ci_level = 1.0 - c.level;
    sc.threads = threads;
    const auto s = run_study(sc);
    if (s.n_converged == 0) any_empty = true;
    t.add_row({static_cast<std::int64_t>(ns.number), ns.setting.beta[1], ns.setting.mu, ns.setting.alpha, s.bias,
               s.mse, s.coverage, static_cast<std::int64_t>(s.n_converged),
               static_cast<std::int64_t>(s.n_samples), static_cast<std::int64_t>(c.seed)});
  }
  emit(c, t);
  if (any_empty) {
    std::cerr << "error: no sample converged for at least one setting\n";
    return kNoConvergence;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binomial regression with unknown Poisson-gamma sizes"};
  app.require_subcommand(1, 1);
  Config c;

  auto output_opts = [&](CLI::App* s) {
    s->add_option("-o,--output", c.output, "Output file (default: standard output)");
    s->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "structured"}));
    s->add_flag("--full-precision", c.full_precision, "Print 17 significant digits");
  };
  auto data_opts = [&](CLI::App* s) {
    s->add_option("-i,--input", c.input, "CSV file with a dose,count header");
    s->add_option("--builtin", c.builtin, "Embedded dataset (jejunal)");
    s->add_flag("--general", c.general, "Input columns are x1,...,xk,count");
    s->add_flag("--no-intercept", c.no_intercept, "Do not prepend a constant column");
    s->add_option("--level", c.level, "Significance level (CIs use 1 - level)")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  };
  auto settings_opts = [&](CLI::App* s) {
    s->add_option("--settings", c.settings_path, "CSV of settings (setting,design,beta1,mu,alpha[,beta0,replications])");
    s->add_option("--setting", c.settings_filter, "Setting number(s) to run, or 'all'");
    s->add_option("--replications", c.replications, "Replications per x for built-in settings")
        ->check(CLI::PositiveNumber);
  };

  auto* fit = app.add_subcommand("fit", "Fit the model to a dataset");
  data_opts(fit);
  output_opts(fit);
  fit->add_option("--model", c.model, "full, poisson, or auto (LRT selects)")
      ->check(CLI::IsMember({"full", "poisson", "auto"}));

  auto* test = app.add_subcommand("test", "Likelihood ratio test of the Poisson-size submodel");
  data_opts(test);
  output_opts(test);

  auto* eff = app.add_subcommand("efficiency", "Efficiency-loss measures");
  settings_opts(eff);
  output_opts(eff);

  auto* curves = app.add_subcommand("curves", "Gamma-vs-alpha and sd-vs-mu tables");
  curves->add_option("--figure", c.figure, "gamma, sd, or all")->check(CLI::IsMember({"gamma", "sd", "all"}));
  curves->add_option("--replications", c.replications, "Replications per x")->check(CLI::PositiveNumber);
  output_opts(curves);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of the slope estimator");
  settings_opts(sim);
  output_opts(sim);
  sim->add_option("--samples", c.samples, "Samples per setting")->check(CLI::PositiveNumber);
  sim->add_option("--seed", c.seed, "Base seed (default 0)");
  sim->add_option("--threads", c.threads, "Worker threads (default: all cores)");
  sim->add_option("--level", c.level, "CI significance level")->check(CLI::Range(1e-12, 1.0 - 1e-12));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) return cmd_fit(c);
    if (*test) return cmd_test(c);
    if (*eff) return cmd_efficiency(c);
    if (*curves) return cmd_curves(c);
    if (*sim) return cmd_simulate(c);
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
