#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "countewa/errors.hpp"
#include "countewa/harness.hpp"
#include "countewa/theory.hpp"

namespace countewa {

namespace {

using json = nlohmann::json;

// Reads fields out of a JSON object and rejects any key nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    allowed_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    allowed_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!allowed_.count(item.key())) {
        throw ValidationError(where_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> allowed_;
};

json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
}

// A positive number or one of the given keywords meaning "unset".
std::optional<double> number_or_keyword(const json& v, const std::string& where,
                                        std::initializer_list<const char*> keywords) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    for (const char* k : keywords) {
      if (v.get<std::string>() == k) return std::nullopt;
    }
  }
  throw ValidationError(where + ": expected a number or \"" + *keywords.begin() + "\"");
}

GibbsConfig parse_gibbs(const json& j, const std::string& where) {
  GibbsConfig g;
  Fields f(j, where);
  f.get("lambda", g.lambda);
  f.get("varsigma", g.varsigma);
  f.get("eta_cap", g.eta_cap);
  if (const json* c1 = f.sub("c1")) {
    g.c1 = number_or_keyword(*c1, f.path("c1"), {"unbounded"})
               .value_or(std::numeric_limits<double>::infinity());
  }
  f.finish();
  return g;
}

ChainConfig parse_chain(const json& j, const std::string& where) {
  ChainConfig c;
  Fields f(j, where);
  f.get("n_iter", c.n_iter);
  f.get("burn_in", c.burn_in);
  f.get("adapt_target", c.adapt_target);
  f.get("store_trajectory", c.store_trajectory);
  f.get("prerun_iter", c.prerun_iter);
  f.get("max_restarts", c.max_restarts);
  if (const json* s = f.sub("step_size")) c.step_size = number_or_keyword(*s, f.path("step_size"), {"auto"});
  if (const json* s = f.sub("initial_step_size")) {
    c.initial_step_size = number_or_keyword(*s, f.path("initial_step_size"), {"auto"});
  }
  f.finish();
  return c;
}

LassoConfig parse_lasso(const json& j, const std::string& where, LassoConfig c) {
  Fields f(j, where);
  f.get("n_lambda", c.n_lambda);
  f.get("lambda_min_ratio", c.lambda_min_ratio);
  f.get("k_folds", c.k_folds);
  f.get("intercept", c.intercept);
  f.get("standardize", c.standardize);
  f.get("max_irls", c.max_irls);
  f.get("cd_tol", c.cd_tol);
  f.get("max_cd_sweeps", c.max_cd_sweeps);
  std::string rule = c.cv_rule == CvRule::min ? "min" : "1se";
  f.get("cv_rule", rule);
  if (rule == "min") {
    c.cv_rule = CvRule::min;
  } else if (rule == "1se") {
    c.cv_rule = CvRule::one_se;
  } else {
    throw ValidationError(f.path("cv_rule") + ": expected \"min\" or \"1se\"");
  }
  f.finish();
  return c;
}

std::vector<MethodId> parse_methods(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected an array of method names");
  std::vector<MethodId> out;
  for (const auto& m : j) {
    if (!m.is_string()) throw ValidationError(where + ": method names must be strings");
    out.push_back(parse_method_id(m.get<std::string>()));
  }
  return out;
}

DisplayScale parse_display(const json& j, const std::string& where) {
  DisplayScale s;
  Fields f(j, where);
  f.get("mse", s.mse);
  f.get("nsp", s.nsp);
  f.get("mde", s.mde);
  f.finish();
  return s;
}

Scenario parse_scenario(const json& j, std::size_t index) {
  Scenario s;
  s.id = "scenario" + std::to_string(index + 1);
  Fields f(j, "scenarios[" + std::to_string(index) + "]");
  f.get("id", s.id);
  f.get("n", s.n);
  f.get("d", s.d);
  f.get("s_star", s.s_star);
  std::string family = "poisson";
  double alpha = 0.0;
  f.get("family", family);
  f.get("alpha", alpha);
  s.family = Family::parse(family, alpha);
  f.get("noisy", s.noisy);
  f.get("replications", s.replications);
  f.get("base_seed", s.base_seed);
  if (const json* m = f.sub("methods")) s.methods = parse_methods(*m, f.path("methods"));
  if (const json* g = f.sub("gibbs")) s.gibbs = parse_gibbs(*g, f.path("gibbs"));
  if (const json* c = f.sub("chain")) s.chain = parse_chain(*c, f.path("chain"));
  if (const json* l = f.sub("lasso")) s.lasso = parse_lasso(*l, f.path("lasso"), s.lasso);
  if (const json* d = f.sub("display_scale")) s.display = parse_display(*d, f.path("display_scale"));
  f.finish();
  return s;
}

}  // namespace

ExperimentSpec parse_experiment_spec(std::string_view json_text) {
  const json doc = parse_document(json_text);
  ExperimentSpec spec;
  Fields f(doc, "experiment");
  f.get("threads", spec.threads);
  const json* scenarios = f.sub("scenarios");
  if (!scenarios || !scenarios->is_array()) {
    throw ValidationError("experiment: 'scenarios' must be an array");
  }
  for (std::size_t i = 0; i < scenarios->size(); ++i) {
    spec.scenarios.push_back(parse_scenario((*scenarios)[i], i));
  }
  f.finish();
  spec.validate();
  return spec;
}

RealDataSpec parse_real_data_spec(std::string_view json_text) {
  const json doc = parse_document(json_text);
  RealDataSpec spec;
  Fields f(doc, "realdata");
  f.get("response_column", spec.response_column);
  f.get("test_fraction", spec.test_fraction);
  if (const json* t = f.sub("train_size")) {
    if (!t->is_number_unsigned()) throw ValidationError("realdata.train_size: expected a count");
    spec.train_size = t->get<std::size_t>();
  }
  f.get("repeats", spec.repeats);
  f.get("add_intercept", spec.add_intercept);
  f.get("base_seed", spec.base_seed);
  f.get("threads", spec.threads);
  f.get("id", spec.scenario_id);
  if (const json* m = f.sub("methods")) spec.methods = parse_methods(*m, f.path("methods"));
  if (const json* g = f.sub("gibbs")) spec.gibbs = parse_gibbs(*g, f.path("gibbs"));
  if (const json* c = f.sub("chain")) spec.chain = parse_chain(*c, f.path("chain"));
  if (const json* l = f.sub("lasso")) spec.lasso = parse_lasso(*l, f.path("lasso"), spec.lasso);
  f.finish();
  spec.validate();
  return spec;
}

RateStudySpec parse_rate_study_spec(std::string_view json_text) {
  const json doc = parse_document(json_text);
  RateStudySpec spec;
  Fields f(doc, "rate");
  std::string family = "poisson";
  double alpha = 0.0;
  f.get("family", family);
  f.get("alpha", alpha);
  spec.family = Family::parse(family, alpha);
  f.get("s_star", spec.s_star);
  f.get("n_values", spec.n_values);
  f.get("d_per_n", spec.d_per_n);
  f.get("replications", spec.replications);
  f.get("mc_risk_samples", spec.mc_risk_samples);
  f.get("threads", spec.threads);
  std::string tuning = spec.tuning.name();
  f.get("tuning", tuning);
  spec.tuning = TuningRule::parse(tuning);
  f.get("tuning_lambda", spec.tuning.lambda);
  f.get("tuning_varsigma", spec.tuning.varsigma);
  f.get("fast_constant", spec.tuning.fast_constant);
  std::string init = "lasso";
  f.get("init", init);
  if (init == "lasso") {
    spec.init = InitPolicy::lasso;
  } else if (init == "zero") {
    spec.init = InitPolicy::zero;
  } else {
    throw ValidationError("rate.init: expected \"lasso\" or \"zero\"");
  }
  if (const json* c = f.sub("chain")) spec.chain = parse_chain(*c, f.path("chain"));
  if (const json* l = f.sub("lasso")) spec.lasso = parse_lasso(*l, f.path("lasso"), spec.lasso);
  f.finish();
  spec.validate();
  return spec;
}

}  // namespace countewa
