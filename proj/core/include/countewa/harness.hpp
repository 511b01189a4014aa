#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "countewa/lasso.hpp"
#include "countewa/samplers.hpp"
#include "countewa/types.hpp"

namespace countewa {

enum class MethodId { lmc, mala, lasso };

std::string_view method_id_name(MethodId m);
MethodId parse_method_id(std::string_view name);

// Display multipliers for the markdown report (x10, x10^2, ...). Stored
// values are always raw.
struct DisplayScale {
  double mse = 1.0;
  double nsp = 1.0;
  double mde = 1.0;
};

struct Scenario {
  std::string id;
  std::size_t n = 50;
  std::size_t d = 100;
  std::size_t s_star = 5;
  Family family;
  bool noisy = false;
  std::size_t replications = 100;
  std::vector<MethodId> methods{MethodId::lmc, MethodId::mala, MethodId::lasso};
  GibbsConfig gibbs;
  ChainConfig chain;
  LassoConfig lasso;
  std::uint64_t base_seed = 0;
  DisplayScale display;

  void validate() const;
};

struct ExperimentSpec {
  std::vector<Scenario> scenarios;
  std::size_t threads = 1;

  void validate() const;
};

struct ResultRow {
  std::string scenario;
  std::string method;
  std::string metric;  // mse | nsp | mde
  double mean = 0.0;
  double sd = 0.0;
  double scale_hint = 1.0;
  std::size_t used = 0;
  // Replications left out because the chain diverged or the metric was
  // undefined on that replication.
  std::size_t excluded = 0;
  // The part of `excluded` caused by chain divergence.
  std::size_t diverged = 0;
};

struct ResultsTable {
  std::vector<ResultRow> rows;

  std::size_t total_excluded() const;
  // Diverged chains, counted once per scenario and method.
  std::size_t total_diverged() const;
};

// Seeds: replication r draws its data from base_seed + r and its chains
// from base_seed + 1'000'000 + r.
constexpr std::uint64_t kChainSeedOffset = 1'000'000;

// Per replication: simulate (theta*, X, Y), fit the cross-validated lasso,
// start LMC/MALA from it, score every requested method in-sample and
// aggregate mean / sd across replications.
ResultsTable run_simulation_study(const ExperimentSpec& spec);

struct RealDataSpec {
  std::string response_column = "naffairs";
  double test_fraction = 180.0 / 601.0;
  // Overrides round(n (1 - test_fraction)) when set.
  std::optional<std::size_t> train_size;
  std::size_t repeats = 100;
  std::vector<MethodId> methods{MethodId::lmc, MethodId::mala, MethodId::lasso};
  bool add_intercept = true;
  GibbsConfig gibbs;
  ChainConfig chain;
  LassoConfig lasso = [] {
    LassoConfig c;
    c.intercept = true;
    return c;
  }();
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
  std::string scenario_id = "realdata";

  std::size_t train_rows(std::size_t n) const;
  void validate() const;
};

// Repeated random train/test splits; fit on train, score nsp and mde on
// test. `data` must already carry the intercept column when requested.
ResultsTable run_real_data(const Dataset& data, const RealDataSpec& spec);

// Loads `path` and runs the protocol above.
ResultsTable run_real_data(const std::string& path, const RealDataSpec& spec);

struct CsvDataset {
  Dataset data;
  std::vector<std::string> feature_names;
};

// Header-row, comma-separated, period-decimal CSV. Every non-response column
// becomes a feature in header order; add_intercept appends a column of ones
// named "(intercept)". Throws ValidationError naming the offending line and
// column.
CsvDataset load_csv_named(const std::string& path, const std::string& response_column,
                          bool add_intercept);
Dataset load_csv(const std::string& path, const std::string& response_column,
                 bool add_intercept);
CsvDataset parse_csv(std::string_view text, const std::string& response_column,
                     bool add_intercept);

// Writes x1..xd then the response column "y".
void write_dataset_csv(const std::string& path, const Dataset& data);

enum class TableFormat { csv, markdown };
TableFormat parse_table_format(std::string_view name);

// CSV: "scenario,method,metric,mean,sd" rows; markdown: "mean (sd)" cells
// with the display scale applied, three decimals.
std::string format_table(const ResultsTable& table, TableFormat format);
void emit_table(const ResultsTable& table, TableFormat format, const std::string& path);

// "mean (sd)" after multiplying both by scale, three decimals.
std::string format_cell(double mean, double sd, double scale);

// JSON documents mirroring the spec structs field for field. Unknown keys
// are rejected with ValidationError.
ExperimentSpec parse_experiment_spec(std::string_view json_text);
RealDataSpec parse_real_data_spec(std::string_view json_text);

struct RateStudySpec;
RateStudySpec parse_rate_study_spec(std::string_view json_text);

// CSV columns n,d,mean_excess,sd,slope_so_far; markdown uses the same
// columns with four decimals.
struct RateTable;
std::string format_rate_table(const RateTable& table, TableFormat format);

std::string read_text_file(const std::string& path);

}  // namespace countewa
