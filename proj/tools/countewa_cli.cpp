#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "countewa/errors.hpp"
#include "countewa/harness.hpp"
#include "countewa/metrics.hpp"
#include "countewa/simulate.hpp"
#include "countewa/theory.hpp"

using namespace countewa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDiverged = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::optional<std::size_t> threads;
};

std::string config_text(const Globals& g) { return g.config.empty() ? "" : read_text_file(g.config); }

void write_output(const ResultsTable& table, const Globals& g) {
  const TableFormat fmt = parse_table_format(g.format);
  if (g.out.empty() || g.out == "-") {
    std::cout << format_table(table, fmt);
  } else {
    emit_table(table, fmt, g.out);
  }
}

int divergence_status(std::size_t diverged, const char* what) {
  if (diverged == 0) return kExitOk;
  std::fprintf(stderr, "warning: %zu %s diverged and were excluded\n", diverged, what);
  return kExitDiverged;
}

// Built-in scenario used when --config is absent.
struct ScenarioFlags {
  std::size_t n = 50;
  std::size_t d = 100;
  std::size_t s_star = 5;
  std::string family = "poisson";
  double alpha = 2.0;
  bool noisy = false;
  std::size_t replications = 100;
  std::string methods = "LMC,MALA,LASSO";

  void add_to(CLI::App* app) {
    app->add_option("--n", n, "Sample size")->capture_default_str();
    app->add_option("--d", d, "Dimension")->capture_default_str();
    app->add_option("--s-star", s_star, "Number of nonzero true coefficients")
        ->capture_default_str();
    app->add_option("--family", family, "poisson or negbin")->capture_default_str();
    app->add_option("--alpha", alpha, "Negative binomial dispersion")->capture_default_str();
    app->add_flag("--noisy", noisy, "Add N(0,1) noise to the log-mean");
    app->add_option("--replications", replications, "Replications")->capture_default_str();
    app->add_option("--methods", methods, "Comma-separated subset of LMC,MALA,LASSO")
        ->capture_default_str();
  }

  Scenario scenario() const {
    Scenario s;
    s.id = family + "_n" + std::to_string(n) + "_d" + std::to_string(d) + "_s" +
           std::to_string(s_star) + (noisy ? "_noisy" : "");
    s.n = n;
    s.d = d;
    s.s_star = s_star;
    s.family = Family::parse(family, family == "negbin" ? alpha : 0.0);
    s.noisy = noisy;
    s.replications = replications;
    s.methods.clear();
    std::size_t start = 0;
    while (start <= methods.size()) {
      const std::size_t comma = std::min(methods.find(',', start), methods.size());
      s.methods.push_back(parse_method_id(methods.substr(start, comma - start)));
      start = comma + 1;
    }
    return s;
  }
};

ExperimentSpec experiment_spec(const Globals& g, const ScenarioFlags& flags) {
  ExperimentSpec spec;
  if (!g.config.empty()) {
    spec = parse_experiment_spec(config_text(g));
  } else {
    spec.scenarios.push_back(flags.scenario());
  }
  if (g.seed) {
    for (auto& s : spec.scenarios) s.base_seed = *g.seed;
  }
  if (g.threads) spec.threads = *g.threads;
  spec.validate();
  return spec;
}

int run_simulate(const Globals& g, const ScenarioFlags& flags) {
  const ExperimentSpec spec = experiment_spec(g, flags);
  if (g.out.empty()) throw ValidationError("simulate needs --out <directory>");
  std::filesystem::create_directories(g.out);
  for (const auto& s : spec.scenarios) {
    for (std::size_t r = 0; r < s.replications; ++r) {
      const auto sim = simulate_dataset(static_cast<Eigen::Index>(s.n),
                                        static_cast<Eigen::Index>(s.d), s.s_star, s.family,
                                        s.noisy, s.base_seed + r);
      const std::string stem = (std::filesystem::path(g.out) / (s.id + "_rep" + std::to_string(r)))
                                   .string();
      write_dataset_csv(stem + ".csv", sim.data);
      std::FILE* f = std::fopen((stem + "_theta.csv").c_str(), "w");
      if (!f) throw ValidationError("cannot open '" + stem + "_theta.csv' for writing");
      std::fprintf(f, "theta_star\n");
      for (const double v : sim.model.theta_star) std::fprintf(f, "%.17g\n", v);
      std::fclose(f);
    }
  }
  return kExitOk;
}

int run_bench(const Globals& g, const ScenarioFlags& flags) {
  const ResultsTable table = run_simulation_study(experiment_spec(g, flags));
  write_output(table, g);
  return divergence_status(table.total_diverged(), "method-replications");
}

RealDataSpec real_data_spec(const Globals& g) {
  RealDataSpec spec = g.config.empty() ? RealDataSpec{} : parse_real_data_spec(config_text(g));
  if (g.seed) spec.base_seed = *g.seed;
  if (g.threads) spec.threads = *g.threads;
  return spec;
}

int run_realdata(const Globals& g, const std::string& data, const std::string& response,
                 std::optional<std::size_t> repeats) {
  RealDataSpec spec = real_data_spec(g);
  if (!response.empty()) spec.response_column = response;
  if (repeats) spec.repeats = *repeats;
  const ResultsTable table = run_real_data(data, spec);
  write_output(table, g);
  return divergence_status(table.total_diverged(), "method-splits");
}

int run_rate(const Globals& g, std::optional<std::size_t> replications) {
  RateStudySpec spec = g.config.empty() ? RateStudySpec{} : parse_rate_study_spec(config_text(g));
  if (replications) spec.replications = *replications;
  if (g.threads) spec.threads = *g.threads;
  spec.validate();
  const RateTable rate = run_rate_study(spec, g.seed.value_or(0));
  const std::string text = format_rate_table(rate, parse_table_format(g.format));
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
  } else {
    std::FILE* f = std::fopen(g.out.c_str(), "wb");
    if (!f) throw ValidationError("cannot open '" + g.out + "' for writing");
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  std::size_t diverged = 0;
  for (const auto& r : rate.rows) diverged += r.diverged;
  return divergence_status(diverged, "replications");
}

int run_check(const Globals& g, std::size_t instances, std::size_t max_grid, std::size_t trials) {
  if (instances < 1 || max_grid < 2 || trials < 1) {
    throw ValidationError("check needs --instances >= 1, --max-grid >= 2, --trials >= 1");
  }
  std::mt19937_64 rng(g.seed.value_or(0));
  std::uniform_int_distribution<Eigen::Index> size(2, static_cast<Eigen::Index>(max_grid));
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  std::uniform_real_distribution<double> lam(0.0, 50.0);
  std::gamma_distribution<double> gam(1.0, 1.0);
  double worst_gap = 0.0;
  std::size_t dv_fail = 0;
  std::size_t gibbs_fail = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    const Eigen::Index k = size(rng);
    FiniteGrid grid;
    grid.prior_weights.resize(k);
    for (auto& w : grid.prior_weights) w = gam(rng) + 1e-300;
    grid.prior_weights /= grid.prior_weights.sum();
    Vector h(k);
    for (auto& v : h) v = unif(rng);
    const DvReport rep = dv_check(grid, h);
    worst_gap = std::max(worst_gap, rep.gap);
    if (!(rep.gap < 1e-10) || !dv_sup_check(grid, h, rng(), trials)) ++dv_fail;
    const Vector risks = (h.array() + 5.0) / 5.0;
    if (!gibbs_minimizer_check(grid, risks, lam(rng), rng(), trials)) ++gibbs_fail;
  }
  std::printf("dv: %zu instances, max gap %.3e, failures %zu\n", instances, worst_gap, dv_fail);
  std::printf("gibbs minimizer: %zu instances, %zu competitors each, failures %zu\n", instances,
              trials, gibbs_fail);
  return dv_fail + gibbs_fail == 0 ? kExitOk : kExitFailure;
}

int run_fit(const Globals& g, const std::string& data_path, const std::string& response,
            const std::string& method_name) {
  RealDataSpec spec = real_data_spec(g);
  if (!response.empty()) spec.response_column = response;
  spec.validate();
  const MethodId method = parse_method_id(method_name);
  const CsvDataset csv = load_csv_named(data_path, spec.response_column, spec.add_intercept);
  LassoConfig lc = spec.lasso;
  lc.seed = derive_seed(spec.base_seed, 7);
  const Theta lasso_theta = fold_intercept(cv_select(csv.data, lc), csv.data);
  Theta theta = lasso_theta;
  bool diverged = false;
  if (method != MethodId::lasso) {
    ChainConfig cc = spec.chain;
    cc.seed = derive_seed(spec.base_seed + kChainSeedOffset, method == MethodId::lmc ? 1 : 2);
    const ChainResult res = fit_ewa(csv.data, spec.gibbs, cc, lasso_theta,
                                    method == MethodId::lmc ? Method::lmc : Method::mala);
    theta = res.posterior_mean;
    diverged = res.diverged;
    std::fprintf(stderr, "acceptance rate %.4f, final step %.4g, restarts %zu\n",
                 res.acceptance_rate, res.final_step_size, res.restarts);
  }
  std::printf("feature,estimate\n");
  for (std::size_t j = 0; j < csv.feature_names.size(); ++j) {
    std::printf("%s,%.10g\n", csv.feature_names[j].c_str(), theta[static_cast<Eigen::Index>(j)]);
  }
  ResultsTable table;
  const std::string id = std::filesystem::path(data_path).stem().string();
  double nsp_value = std::nan("");
  try {
    nsp_value = nsp(csv.data, theta, spec.gibbs.eta_cap);
  } catch (const DegenerateError&) {
  }
  for (const auto& [metric, value] :
       {std::pair<const char*, double>{"nsp", nsp_value},
        std::pair<const char*, double>{"mde", mde(csv.data, theta, spec.gibbs.eta_cap)}}) {
    ResultRow row;
    row.scenario = id;
    row.method = std::string(method_id_name(method));
    row.metric = metric;
    row.mean = value;
    row.used = 1;
    table.rows.push_back(row);
  }
  std::printf("\n");
  std::fflush(stdout);
  write_output(table, g);
  return diverged ? divergence_status(1, "chains") : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse exponential-weights aggregation for count regression"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Base seed");
  app.add_option("--out", g.out, "Output file (directory for simulate); stdout when omitted");
  app.add_option("--format", g.format, "csv or markdown")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  ScenarioFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "Write synthetic datasets as CSV");
  sim_flags.add_to(simulate);

  ScenarioFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "Run the simulation study and print the table");
  bench_flags.add_to(bench);

  std::string data_path;
  std::string response;
  std::optional<std::size_t> repeats;
  auto* realdata = app.add_subcommand("realdata", "Repeated train/test splits on a CSV dataset");
  realdata->add_option("--data", data_path, "CSV file")->required()->check(CLI::ExistingFile);
  realdata->add_option("--response", response, "Response column (default naffairs)");
  realdata->add_option("--repeats", repeats, "Number of random splits");

  std::optional<std::size_t> rate_reps;
  auto* rate = app.add_subcommand("rate", "Excess-risk rate study");
  rate->add_option("--replications", rate_reps, "Replications per n");

  std::size_t instances = 100;
  std::size_t max_grid = 1000;
  std::size_t trials = 1000;
  auto* check = app.add_subcommand("check", "Variational identity and Gibbs minimizer suites");
  check->add_option("--instances", instances, "Random grids")->capture_default_str();
  check->add_option("--max-grid", max_grid, "Largest grid size")->capture_default_str();
  check->add_option("--trials", trials, "Competitor distributions per grid")
      ->capture_default_str();

  std::string fit_data;
  std::string fit_response;
  std::string fit_method = "MALA";
  auto* fit = app.add_subcommand("fit", "Fit one dataset and print the estimate and metrics");
  fit->add_option("--data", fit_data, "CSV file")->required()->check(CLI::ExistingFile);
  fit->add_option("--response", fit_response, "Response column (default naffairs)");
  fit->add_option("--method", fit_method, "LMC, MALA or LASSO")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) return run_simulate(g, sim_flags);
    if (*bench) return run_bench(g, bench_flags);
    if (*realdata) return run_realdata(g, data_path, response, repeats);
    if (*rate) return run_rate(g, rate_reps);
    if (*check) return run_check(g, instances, max_grid, trials);
    if (*fit) return run_fit(g, fit_data, fit_response, fit_method);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const DegenerateError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
