#include "countewa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "countewa/errors.hpp"
#include "countewa/metrics.hpp"
#include "countewa/random.hpp"
#include "countewa/simulate.hpp"
#include "countewa/theory.hpp"
#include "parallel.hpp"

namespace countewa {

namespace {

constexpr std::uint64_t kFoldStream = 7;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Metric values for one method on one replication; NaN marks "excluded".
struct MethodScores {
  double mse = kNaN;
  double nsp = kNaN;
  double mde = kNaN;
  bool diverged = false;
};

using ReplicationScores = std::vector<MethodScores>;  // indexed like methods

double safe_metric(auto&& f) {
  try {
    return f();
  } catch (const DegenerateError&) {
    return kNaN;
  }
}

Theta estimate(MethodId m, const Dataset& data, const GibbsConfig& gibbs,
               const ChainConfig& chain, const Theta& lasso_theta, std::uint64_t chain_seed,
               bool& diverged) {
  diverged = false;
  if (m == MethodId::lasso) return lasso_theta;
  ChainConfig cfg = chain;
  const Method sampler = m == MethodId::lmc ? Method::lmc : Method::mala;
  cfg.seed = derive_seed(chain_seed, m == MethodId::lmc ? 1 : 2);
  const ChainResult res = fit_ewa(data, gibbs, cfg, lasso_theta, sampler);
  diverged = res.diverged;
  return res.posterior_mean;
}

void aggregate(const std::string& scenario, const std::vector<MethodId>& methods,
               const std::vector<ReplicationScores>& reps, const DisplayScale& display,
               bool with_mse, ResultsTable& table) {
  for (std::size_t k = 0; k < methods.size(); ++k) {
    struct MetricSpec {
      const char* name;
      double MethodScores::*field;
      double scale;
    };
    std::vector<MetricSpec> metrics;
    if (with_mse) metrics.push_back({"mse", &MethodScores::mse, display.mse});
    metrics.push_back({"nsp", &MethodScores::nsp, display.nsp});
    metrics.push_back({"mde", &MethodScores::mde, display.mde});
    for (const auto& ms : metrics) {
      std::vector<double> vals;
      std::size_t excluded = 0;
      std::size_t diverged = 0;
      for (const auto& rep : reps) {
        const MethodScores& s = rep[k];
        const double v = s.*(ms.field);
        if (s.diverged) ++diverged;
        if (s.diverged || !std::isfinite(v)) {
          ++excluded;
        } else {
          vals.push_back(v);
        }
      }
      ResultRow row;
      row.scenario = scenario;
      row.method = std::string(method_id_name(methods[k]));
      row.metric = ms.name;
      row.scale_hint = ms.scale;
      row.used = vals.size();
      row.excluded = excluded;
      row.diverged = diverged;
      if (vals.empty()) {
        row.mean = row.sd = kNaN;
      } else {
        const double cnt = static_cast<double>(vals.size());
        row.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / cnt;
        double ss = 0.0;
        for (const double v : vals) ss += (v - row.mean) * (v - row.mean);
        row.sd = vals.size() > 1 ? std::sqrt(ss / (cnt - 1.0)) : 0.0;
      }
      table.rows.push_back(std::move(row));
    }
  }
}

void validate_methods(const std::vector<MethodId>& methods) {
  if (methods.empty()) throw ValidationError("methods must be nonempty");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      if (methods[i] == methods[j]) throw ValidationError("methods contains a duplicate");
    }
  }
}

std::string fmt_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string scale_label(double scale) {
  if (scale == 1.0) return "";
  const double e = std::log10(scale);
  if (std::abs(e - std::round(e)) < 1e-12) {
    const long p = std::lround(e);
    if (p == 1) return " x10";
    return " x10^" + std::to_string(p);
  }
  return " x" + fmt_number(scale);
}

}  // namespace

std::string_view method_id_name(MethodId m) {
  switch (m) {
    case MethodId::lmc:
      return "LMC";
    case MethodId::mala:
      return "MALA";
    case MethodId::lasso:
      return "LASSO";
  }
  return "?";
}

MethodId parse_method_id(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "LMC") return MethodId::lmc;
  if (up == "MALA") return MethodId::mala;
  if (up == "LASSO") return MethodId::lasso;
  throw ValidationError("unknown method '" + std::string(name) + "' (expected LMC|MALA|LASSO)");
}

std::size_t ResultsTable::total_excluded() const {
  std::size_t total = 0;
  for (const auto& r : rows) total += r.excluded;
  return total;
}

std::size_t ResultsTable::total_diverged() const {
  // Every metric row of a method carries the same count.
  std::map<std::pair<std::string, std::string>, std::size_t> per_method;
  for (const auto& r : rows) {
    auto& v = per_method[{r.scenario, r.method}];
    v = std::max(v, r.diverged);
  }
  std::size_t total = 0;
  for (const auto& [key, v] : per_method) total += v;
  return total;
}

void Scenario::validate() const {
  const std::string where = "scenario '" + id + "': ";
  if (n < 1 || d < 1) throw ValidationError(where + "n and d must be positive");
  if (s_star > d) throw ValidationError(where + "s_star exceeds d");
  if (replications < 1) throw ValidationError(where + "replications must be >= 1");
  if (lasso.k_folds > n) throw ValidationError(where + "lasso.k_folds exceeds n");
  if (lasso.intercept) {
    throw ValidationError(where + "simulated designs have no constant column; lasso.intercept "
                                  "must be false");
  }
  validate_methods(methods);
  try {
    gibbs.validate();
    chain.validate();
    lasso.validate();
    if (family.kind == Family::Kind::negbin && !(family.alpha > 0.0)) {
      throw ContractViolation("negbin family needs alpha > 0");
    }
  } catch (const ContractViolation& e) {
    throw ValidationError(where + e.what());
  }
}

void ExperimentSpec::validate() const {
  if (scenarios.empty()) throw ValidationError("experiment has no scenarios");
  for (const auto& s : scenarios) s.validate();
}

ResultsTable run_simulation_study(const ExperimentSpec& spec) {
  spec.validate();
  ResultsTable table;
  for (const Scenario& sc : spec.scenarios) {
    std::vector<ReplicationScores> reps(sc.replications);
    detail::parallel_for(sc.replications, spec.threads, [&](std::size_t r) {
      const std::uint64_t data_seed = sc.base_seed + r;
      const std::uint64_t chain_seed = sc.base_seed + kChainSeedOffset + r;
      const auto sim = simulate_dataset(static_cast<Eigen::Index>(sc.n),
                                        static_cast<Eigen::Index>(sc.d), sc.s_star, sc.family,
                                        sc.noisy, data_seed);
      LassoConfig lc = sc.lasso;
      lc.seed = derive_seed(data_seed, kFoldStream);
      const Theta lasso_theta = fold_intercept(cv_select(sim.data, lc), sim.data);

      ReplicationScores scores(sc.methods.size());
      for (std::size_t k = 0; k < sc.methods.size(); ++k) {
        bool diverged = false;
        const Theta th =
            estimate(sc.methods[k], sim.data, sc.gibbs, sc.chain, lasso_theta, chain_seed, diverged);
        MethodScores& s = scores[k];
        s.diverged = diverged;
        if (diverged) continue;
        s.mse = mse(th, sim.model.theta_star);
        s.nsp = safe_metric([&] { return nsp(sim.data, th, sc.gibbs.eta_cap); });
        s.mde = mde(sim.data, th, sc.gibbs.eta_cap);
      }
      reps[r] = std::move(scores);
    });
    aggregate(sc.id, sc.methods, reps, sc.display, true, table);
  }
  return table;
}

std::size_t RealDataSpec::train_rows(std::size_t n) const {
  if (train_size) return *train_size;
  return static_cast<std::size_t>(std::lround(static_cast<double>(n) * (1.0 - test_fraction)));
}

void RealDataSpec::validate() const {
  if (response_column.empty()) throw ValidationError("response_column is empty");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie in (0, 1)");
  }
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (lasso.intercept && !add_intercept) {
    throw ValidationError("lasso.intercept requires add_intercept so samplers can use the fit");
  }
  validate_methods(methods);
  try {
    gibbs.validate();
    chain.validate();
    lasso.validate();
  } catch (const ContractViolation& e) {
    throw ValidationError(e.what());
  }
}

ResultsTable run_real_data(const Dataset& data, const RealDataSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(data.n());
  const std::size_t n_train = spec.train_rows(n);
  if (n_train < spec.lasso.k_folds || n_train >= n) {
    throw ValidationError("train split of " + std::to_string(n_train) + " rows out of " +
                          std::to_string(n) + " is unusable");
  }

  std::vector<ReplicationScores> reps(spec.repeats);
  detail::parallel_for(spec.repeats, spec.threads, [&](std::size_t r) {
    const std::uint64_t split_seed = spec.base_seed + r;
    const std::uint64_t chain_seed = spec.base_seed + kChainSeedOffset + r;
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(split_seed);
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    std::vector<Eigen::Index> train(order.begin(), order.begin() + static_cast<long>(n_train));
    std::vector<Eigen::Index> test(order.begin() + static_cast<long>(n_train), order.end());
    const Dataset tr = data.subset(train);
    const Dataset te = data.subset(test);

    LassoConfig lc = spec.lasso;
    lc.seed = derive_seed(split_seed, kFoldStream);
    const Theta lasso_theta = fold_intercept(cv_select(tr, lc), tr);

    ReplicationScores scores(spec.methods.size());
    for (std::size_t k = 0; k < spec.methods.size(); ++k) {
      bool diverged = false;
      const Theta th =
          estimate(spec.methods[k], tr, spec.gibbs, spec.chain, lasso_theta, chain_seed, diverged);
      MethodScores& s = scores[k];
      s.diverged = diverged;
      if (diverged) continue;
      s.nsp = safe_metric([&] { return nsp(te, th, spec.gibbs.eta_cap); });
      s.mde = mde(te, th, spec.gibbs.eta_cap);
    }
    reps[r] = std::move(scores);
  });

  ResultsTable table;
  aggregate(spec.scenario_id, spec.methods, reps, DisplayScale{}, false, table);
  return table;
}

ResultsTable run_real_data(const std::string& path, const RealDataSpec& spec) {
  spec.validate();
  const Dataset data = load_csv(path, spec.response_column, spec.add_intercept);
  return run_real_data(data, spec);
}

TableFormat parse_table_format(std::string_view name) {
  if (name == "csv") return TableFormat::csv;
  if (name == "markdown" || name == "md") return TableFormat::markdown;
  throw ValidationError("unknown format '" + std::string(name) + "' (expected csv|markdown)");
}

std::string format_cell(double mean, double sd, double scale) {
  if (std::isnan(mean)) return "n/a";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.3f (%.3f)", mean * scale, sd * scale);
  return buf;
}

std::string format_table(const ResultsTable& table, TableFormat format) {
  if (table.rows.empty()) throw ValidationError("cannot emit an empty results table");
  std::ostringstream out;
  if (format == TableFormat::csv) {
    out << "scenario,method,metric,mean,sd\n";
    for (const auto& r : table.rows) {
      out << r.scenario << ',' << r.method << ',' << r.metric << ',' << fmt_number(r.mean) << ','
          << fmt_number(r.sd) << '\n';
    }
    return out.str();
  }

  // Markdown: one block per scenario, metrics as rows and methods as columns.
  std::vector<std::string> scenarios;
  for (const auto& r : table.rows) {
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) {
      scenarios.push_back(r.scenario);
    }
  }
  bool first = true;
  for (const auto& sc : scenarios) {
    std::vector<std::string> methods, metrics;
    std::map<std::pair<std::string, std::string>, const ResultRow*> cell;
    for (const auto& r : table.rows) {
      if (r.scenario != sc) continue;
      if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
        methods.push_back(r.method);
      }
      if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) {
        metrics.push_back(r.metric);
      }
      cell[{r.metric, r.method}] = &r;
    }
    if (!first) out << '\n';
    first = false;
    out << "### " << sc << "\n\n| error |";
    for (const auto& m : methods) out << ' ' << m << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < methods.size(); ++i) out << "---|";
    out << '\n';
    std::vector<std::string> notes;
    for (const auto& metric : metrics) {
      double scale = 1.0;
      for (const auto& m : methods) {
        if (auto it = cell.find({metric, m}); it != cell.end()) scale = it->second->scale_hint;
      }
      out << "| " << metric << scale_label(scale) << " |";
      for (const auto& m : methods) {
        auto it = cell.find({metric, m});
        if (it == cell.end()) {
          out << " |";
          continue;
        }
        const ResultRow& r = *it->second;
        out << ' ' << format_cell(r.mean, r.sd, r.scale_hint) << " |";
        if (r.excluded > 0) {
          notes.push_back(r.method + " " + r.metric + ": " + std::to_string(r.excluded) + " of " +
                          std::to_string(r.excluded + r.used) + " replications excluded");
        }
      }
      out << '\n';
    }
    for (const auto& note : notes) out << "\n_" << note << "_\n";
  }
  return out.str();
}

std::string format_rate_table(const RateTable& table, TableFormat format) {
  if (table.rows.empty()) throw ValidationError("cannot emit an empty rate table");
  std::ostringstream out;
  if (format == TableFormat::csv) {
    out << "n,d,mean_excess,sd,slope_so_far\n";
    for (const auto& r : table.rows) {
      out << r.n << ',' << r.d << ',' << fmt_number(r.mean_excess) << ',' << fmt_number(r.sd)
          << ',' << fmt_number(r.slope_so_far) << '\n';
    }
    return out.str();
  }
  out << "| n | d | mean_excess | sd | slope_so_far |\n|---|---|---|---|---|\n";
  for (const auto& r : table.rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "| %zu | %zu | %.4f | %.4f | %.4f |\n", r.n, r.d,
                  r.mean_excess, r.sd, r.slope_so_far);
    out << buf;
  }
  return out.str();
}

void emit_table(const ResultsTable& table, TableFormat format, const std::string& path) {
  const std::string text = format_table(table, format);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace countewa
