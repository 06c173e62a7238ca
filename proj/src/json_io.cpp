#include "semvb/json_io.hpp"

#include <algorithm>
#include <fstream>

#include "semvb/errors.hpp"

namespace semvb {

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Ragged per-(j,h) block from an M x max(H) matrix.
json ragged_to_json(const Eigen::MatrixXd& m, const std::vector<int>& H) {
  json out = json::array();
  for (size_t j = 0; j < H.size(); ++j) {
    json row = json::array();
    for (int h = 0; h < H[j]; ++h) {
      row.push_back(m(static_cast<Eigen::Index>(j), h));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array()) {
    throw ConfigError(ctx + ": expected an array");
  }
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ConfigError(ctx + "[" + std::to_string(i) + "]: expected a number");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(ctx + ": expected a non-empty array of rows");
  }
  const size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(ctx + ": ragged or non-array row " + std::to_string(r));
    }
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
    }
  }
  return m;
}

Eigen::MatrixXd ragged_from_json(const json& j, const std::vector<int>& H,
                                 const std::string& ctx) {
  int hmax = 1;
  for (int h : H) {
    hmax = std::max(hmax, h);
  }
  if (!j.is_array() || j.size() != H.size()) {
    throw ConfigError(ctx + ": expected " + std::to_string(H.size()) + " rows");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(H.size()), hmax);
  for (size_t r = 0; r < H.size(); ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != H[r]) {
      throw ConfigError(ctx + ": row " + std::to_string(r + 1) + " must list " +
                        std::to_string(H[r]) + " values");
    }
    for (int h = 0; h < H[r]; ++h) {
      m(static_cast<Eigen::Index>(r), h) = j[r][h].get<double>();
    }
  }
  return m;
}

std::vector<std::string> string_list(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(ctx + ": expected a non-empty array of strings");
  }
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) {
      throw ConfigError(ctx + ": expected strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

/// Scalar broadcast to a ragged M x max(H) matrix, or explicit ragged rows.
Eigen::MatrixXd scalar_or_ragged(const json& j, const std::vector<int>& H,
                                 const std::string& ctx) {
  int hmax = 1;
  for (int h : H) {
    hmax = std::max(hmax, h);
  }
  if (j.is_number()) {
    return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(H.size()), hmax,
                                     j.get<double>());
  }
  return ragged_from_json(j, H, ctx);
}

}  // namespace

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) {
    throw ConfigError(context + ": expected an object");
  }
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(context + ": unknown key '" + item.key() + "'");
    }
  }
}

const json& require_key(const json& j, const std::string& key,
                        const std::string& context) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(context + ": missing required key '" + key + "'");
  }
  return j.at(key);
}

double require_number(const json& j, const std::string& key,
                      const std::string& context) {
  const json& v = require_key(j, key, context);
  if (!v.is_number()) {
    throw ConfigError(context + ": key '" + key + "' must be a number");
  }
  return v.get<double>();
}

int require_int(const json& j, const std::string& key, const std::string& context) {
  const json& v = require_key(j, key, context);
  if (!v.is_number_integer()) {
    throw ConfigError(context + ": key '" + key + "' must be an integer");
  }
  return v.get<int>();
}

ModelConfig parse_model_config(const json& j, const std::string& context) {
  check_keys(j, {"schema_version", "model", "outcomes", "covariates", "H", "K",
                 "priors", "init"},
             context);
  if (require_int(j, "schema_version", context) != 1) {
    throw ConfigError(context + ": unsupported schema_version");
  }
  ModelConfig config;
  const std::string model = require_key(j, "model", context).get<std::string>();
  config.outcomes = string_list(require_key(j, "outcomes", context), context + ".outcomes");
  config.covariates = j.contains("covariates")
                          ? string_list(j.at("covariates"), context + ".covariates")
                          : std::vector<std::string>{};
  const int M = static_cast<int>(config.outcomes.size());
  const int p = static_cast<int>(config.covariates.size());
  const json& priors = require_key(j, "priors", context);

  auto beta_priors = [&](Eigen::VectorXd& mu_beta, Eigen::MatrixXd& Sigma_beta) {
    const json& mb = require_key(priors, "mu_beta", context + ".priors");
    mu_beta = mb.is_number() ? Eigen::VectorXd::Constant(p, mb.get<double>())
                             : vector_from_json(mb, context + ".priors.mu_beta");
    if (mu_beta.size() != p) {
      throw ConfigError(context + ".priors.mu_beta: expected " + std::to_string(p) +
                        " entries");
    }
    if (priors.contains("Sigma_beta")) {
      Sigma_beta = matrix_from_json(priors.at("Sigma_beta"),
                                    context + ".priors.Sigma_beta");
    } else {
      const double d = require_number(priors, "sigma2_beta", context + ".priors");
      Sigma_beta = d * Eigen::MatrixXd::Identity(p, p);
    }
  };

  if (model == "outcome-mixture") {
    OutcomeMixtureSpec spec;
    const json& hj = require_key(j, "H", context);
    if (!hj.is_array() || static_cast<int>(hj.size()) != M) {
      throw ConfigError(context + ": H must list one component count per outcome");
    }
    for (const auto& e : hj) {
      spec.H.push_back(e.get<int>());
    }
    check_keys(priors,
               {"mu_lambda", "sigma2_lambda", "mu_mu", "sigma2_mu", "alpha_psi2",
                "beta_psi2", "alpha_sigma2", "beta_sigma2", "alpha_w", "mu_beta",
                "sigma2_beta", "Sigma_beta"},
               context + ".priors");
    spec.mu_lambda = require_number(priors, "mu_lambda", context + ".priors");
    spec.sigma2_lambda = require_number(priors, "sigma2_lambda", context + ".priors");
    const json& mm = require_key(priors, "mu_mu", context + ".priors");
    if (mm.is_string()) {
      if (mm.get<std::string>() != "mixreg-intercepts") {
        throw ConfigError(context +
                          ".priors.mu_mu: only the string 'mixreg-intercepts' is allowed");
      }
      config.mu_mu_from_mixreg = true;
      spec.mu_mu = Eigen::MatrixXd::Zero(M, spec.max_h());
    } else {
      spec.mu_mu = scalar_or_ragged(mm, spec.H, context + ".priors.mu_mu");
    }
    spec.sigma2_mu = scalar_or_ragged(require_key(priors, "sigma2_mu", context + ".priors"),
                                      spec.H, context + ".priors.sigma2_mu");
    spec.alpha_psi2 = require_number(priors, "alpha_psi2", context + ".priors");
    spec.beta_psi2 = require_number(priors, "beta_psi2", context + ".priors");
    spec.alpha_sigma2 = require_number(priors, "alpha_sigma2", context + ".priors");
    spec.beta_sigma2 = require_number(priors, "beta_sigma2", context + ".priors");
    spec.alpha_w = require_number(priors, "alpha_w", context + ".priors");
    beta_priors(spec.mu_beta, spec.Sigma_beta);
    if (j.contains("init")) {
      const json& init = j.at("init");
      check_keys(init, {"intercept_spread", "jitter_sd", "intercept_means"},
                 context + ".init");
      if (init.contains("intercept_spread")) {
        config.outcome_init.intercept_spread = init.at("intercept_spread").get<double>();
      }
      if (init.contains("jitter_sd")) {
        config.outcome_init.jitter_sd = init.at("jitter_sd").get<double>();
      }
      if (init.contains("intercept_means")) {
        config.outcome_init.intercept_means =
            ragged_from_json(init.at("intercept_means"), spec.H,
                             context + ".init.intercept_means");
      }
    }
    spec.validate(M, p);
    config.spec = std::move(spec);
  } else if (model == "latent-mixture") {
    LatentMixtureSpec spec;
    spec.K = require_int(j, "K", context);
    check_keys(priors,
               {"mu_nu", "sigma2_nu", "mu_lambda", "sigma2_lambda", "alpha_psi2",
                "beta_psi2", "alpha_sigma2", "beta_sigma2", "alpha_w", "mu_beta",
                "sigma2_beta", "Sigma_beta", "pin_nu1"},
               context + ".priors");
    spec.mu_nu = require_number(priors, "mu_nu", context + ".priors");
    spec.sigma2_nu = require_number(priors, "sigma2_nu", context + ".priors");
    spec.mu_lambda = require_number(priors, "mu_lambda", context + ".priors");
    spec.sigma2_lambda = require_number(priors, "sigma2_lambda", context + ".priors");
    spec.alpha_psi2 = require_number(priors, "alpha_psi2", context + ".priors");
    spec.beta_psi2 = require_number(priors, "beta_psi2", context + ".priors");
    spec.alpha_sigma2 = require_number(priors, "alpha_sigma2", context + ".priors");
    spec.beta_sigma2 = require_number(priors, "beta_sigma2", context + ".priors");
    spec.alpha_w = require_number(priors, "alpha_w", context + ".priors");
    if (priors.contains("pin_nu1")) {
      spec.pin_nu1 = priors.at("pin_nu1").get<double>();
    }
    beta_priors(spec.mu_beta, spec.Sigma_beta);
    if (j.contains("init")) {
      const json& init = j.at("init");
      check_keys(init, {"mixreg", "mixreg_restarts"}, context + ".init");
      if (init.contains("mixreg")) {
        config.latent_init.mixreg = init.at("mixreg").get<bool>();
      }
      if (init.contains("mixreg_restarts")) {
        config.latent_init.mixreg_restarts = init.at("mixreg_restarts").get<int>();
      }
    }
    spec.validate(p);
    config.spec = std::move(spec);
  } else {
    throw ConfigError(context + ": model must be 'outcome-mixture' or 'latent-mixture'");
  }
  return config;
}

json model_config_to_json(const ModelConfig& config) {
  json j;
  j["schema_version"] = 1;
  j["model"] = config.is_outcome() ? "outcome-mixture" : "latent-mixture";
  j["outcomes"] = config.outcomes;
  j["covariates"] = config.covariates;
  json priors;
  if (config.is_outcome()) {
    const auto& spec = std::get<OutcomeMixtureSpec>(config.spec);
    j["H"] = spec.H;
    priors["mu_lambda"] = spec.mu_lambda;
    priors["sigma2_lambda"] = spec.sigma2_lambda;
    priors["mu_mu"] = ragged_to_json(spec.mu_mu, spec.H);
    priors["sigma2_mu"] = ragged_to_json(spec.sigma2_mu, spec.H);
    priors["alpha_psi2"] = spec.alpha_psi2;
    priors["beta_psi2"] = spec.beta_psi2;
    priors["alpha_sigma2"] = spec.alpha_sigma2;
    priors["beta_sigma2"] = spec.beta_sigma2;
    priors["alpha_w"] = spec.alpha_w;
    priors["mu_beta"] = vector_to_json(spec.mu_beta);
    priors["Sigma_beta"] = matrix_to_json(spec.Sigma_beta);
  } else {
    const auto& spec = std::get<LatentMixtureSpec>(config.spec);
    j["K"] = spec.K;
    priors["mu_nu"] = spec.mu_nu;
    priors["sigma2_nu"] = spec.sigma2_nu;
    priors["mu_lambda"] = spec.mu_lambda;
    priors["sigma2_lambda"] = spec.sigma2_lambda;
    priors["alpha_psi2"] = spec.alpha_psi2;
    priors["beta_psi2"] = spec.beta_psi2;
    priors["alpha_sigma2"] = spec.alpha_sigma2;
    priors["beta_sigma2"] = spec.beta_sigma2;
    priors["alpha_w"] = spec.alpha_w;
    if (spec.pin_nu1) {
      priors["pin_nu1"] = *spec.pin_nu1;
    }
    priors["mu_beta"] = vector_to_json(spec.mu_beta);
    priors["Sigma_beta"] = matrix_to_json(spec.Sigma_beta);
  }
  j["priors"] = std::move(priors);
  return j;
}

SimulationTruth parse_truth(const json& j, const std::string& context) {
  check_keys(j, {"beta", "lambda", "H", "mu", "psi2", "w", "sigma2", "covariates"},
             context);
  SimulationTruth t;
  t.beta = vector_from_json(require_key(j, "beta", context), context + ".beta");
  t.lambda = vector_from_json(require_key(j, "lambda", context), context + ".lambda");
  const json& hj = require_key(j, "H", context);
  for (const auto& e : hj) {
    t.H.push_back(e.get<int>());
  }
  auto blocks = [&](const char* key) {
    const json& b = require_key(j, key, context);
    if (!b.is_array() || b.size() != t.H.size()) {
      throw ConfigError(context + "." + key + ": expected one array per outcome");
    }
    std::vector<Eigen::VectorXd> out;
    for (size_t r = 0; r < b.size(); ++r) {
      out.push_back(vector_from_json(b[r], context + "." + key));
    }
    return out;
  };
  t.mu = blocks("mu");
  t.psi2 = blocks("psi2");
  t.w = blocks("w");
  t.sigma2 = require_number(j, "sigma2", context);
  const json& cov = require_key(j, "covariates", context);
  for (size_t k = 0; k < cov.size(); ++k) {
    const std::string ctx = context + ".covariates[" + std::to_string(k) + "]";
    const json& c = cov[k];
    const std::string type = require_key(c, "type", ctx).get<std::string>();
    CovariateLaw law;
    if (type == "normal") {
      check_keys(c, {"type", "mean", "variance"}, ctx);
      law.kind = CovariateLaw::Kind::normal;
      law.a = require_number(c, "mean", ctx);
      law.b = require_number(c, "variance", ctx);
    } else if (type == "uniform") {
      check_keys(c, {"type", "lo", "hi"}, ctx);
      law.kind = CovariateLaw::Kind::uniform;
      law.a = require_number(c, "lo", ctx);
      law.b = require_number(c, "hi", ctx);
    } else {
      throw ConfigError(ctx + ": type must be 'normal' or 'uniform'");
    }
    t.covariates.push_back(law);
  }
  t.validate();
  return t;
}

json truth_to_json(const SimulationTruth& t) {
  json j;
  j["beta"] = vector_to_json(t.beta);
  j["lambda"] = vector_to_json(t.lambda);
  j["H"] = t.H;
  auto blocks = [&](const std::vector<Eigen::VectorXd>& v) {
    json out = json::array();
    for (const auto& b : v) {
      out.push_back(vector_to_json(b));
    }
    return out;
  };
  j["mu"] = blocks(t.mu);
  j["psi2"] = blocks(t.psi2);
  j["w"] = blocks(t.w);
  j["sigma2"] = t.sigma2;
  json cov = json::array();
  for (const auto& law : t.covariates) {
    json c;
    if (law.kind == CovariateLaw::Kind::normal) {
      c["type"] = "normal";
      c["mean"] = law.a;
      c["variance"] = law.b;
    } else {
      c["type"] = "uniform";
      c["lo"] = law.a;
      c["hi"] = law.b;
    }
    cov.push_back(std::move(c));
  }
  j["covariates"] = std::move(cov);
  return j;
}

StudyConfig parse_study_config(const json& j, const std::string& context) {
  check_keys(j,
             {"schema_version", "n_datasets", "N", "missing_rate", "seed",
              "threads", "truth", "priors", "bootstrap", "criteria", "fit",
              "level"},
             context);
  if (require_int(j, "schema_version", context) != 1) {
    throw ConfigError(context + ": unsupported schema_version");
  }
  StudyConfig c;
  c.n_datasets = require_int(j, "n_datasets", context);
  c.N = require_int(j, "N", context);
  if (j.contains("missing_rate")) {
    c.missing_rate = j.at("missing_rate").get<double>();
  }
  if (j.contains("seed")) {
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    c.threads = j.at("threads").get<int>();
  }
  if (j.contains("level")) {
    c.level = j.at("level").get<double>();
  }
  c.truth = parse_truth(require_key(j, "truth", context), context + ".truth");
  const json& priors = require_key(j, "priors", context);
  check_keys(priors,
             {"mu_lambda", "sigma2_lambda", "mu_mu", "sigma2_mu", "alpha_psi2",
              "beta_psi2", "alpha_sigma2", "beta_sigma2", "alpha_w",
              "sigma2_beta", "mu_nu", "sigma2_nu", "latent_alpha_w", "latent_K"},
             context + ".priors");
  c.mu_lambda = require_number(priors, "mu_lambda", context + ".priors");
  c.sigma2_lambda = require_number(priors, "sigma2_lambda", context + ".priors");
  c.mu_mu = require_number(priors, "mu_mu", context + ".priors");
  c.sigma2_mu = require_number(priors, "sigma2_mu", context + ".priors");
  c.alpha_psi2 = require_number(priors, "alpha_psi2", context + ".priors");
  c.beta_psi2 = require_number(priors, "beta_psi2", context + ".priors");
  c.alpha_sigma2 = require_number(priors, "alpha_sigma2", context + ".priors");
  c.beta_sigma2 = require_number(priors, "beta_sigma2", context + ".priors");
  c.alpha_w = require_number(priors, "alpha_w", context + ".priors");
  c.sigma2_beta = require_number(priors, "sigma2_beta", context + ".priors");
  if (priors.contains("mu_nu")) {
    c.mu_nu = priors.at("mu_nu").get<double>();
  }
  if (priors.contains("sigma2_nu")) {
    c.sigma2_nu = priors.at("sigma2_nu").get<double>();
  }
  if (priors.contains("latent_alpha_w")) {
    c.latent_alpha_w = priors.at("latent_alpha_w").get<double>();
  }
  if (priors.contains("latent_K")) {
    c.latent_K = priors.at("latent_K").get<int>();
  }
  if (j.contains("bootstrap")) {
    const json& b = j.at("bootstrap");
    check_keys(b, {"replicates", "enabled"}, context + ".bootstrap");
    if (b.contains("replicates")) {
      c.B_bootstrap = b.at("replicates").get<int>();
    }
    if (b.contains("enabled")) {
      c.run_bootstrap = b.at("enabled").get<bool>();
    }
  }
  if (j.contains("criteria")) {
    const json& b = j.at("criteria");
    check_keys(b, {"draws", "enabled"}, context + ".criteria");
    if (b.contains("draws")) {
      c.R_criteria = b.at("draws").get<int>();
    }
    if (b.contains("enabled")) {
      c.run_criteria = b.at("enabled").get<bool>();
    }
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, {"tol", "max_iter"}, context + ".fit");
    if (f.contains("tol")) {
      c.tol = f.at("tol").get<double>();
    }
    if (f.contains("max_iter")) {
      c.max_iter = f.at("max_iter").get<int>();
    }
  }
  return c;
}

json fit_report_to_json(const FitReport& report) {
  json j;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["final_metric"] =
      report.metric_trace.empty() ? 0.0 : report.metric_trace.back();
  j["metric_trace"] = report.metric_trace;
  return j;
}

json outcome_state_to_json(const OutcomeQState& s, const OutcomeMixtureSpec& spec) {
  json j;
  j["mu_q_mu"] = ragged_to_json(s.mu_q_mu, spec.H);
  j["sigma2_q_mu"] = ragged_to_json(s.sigma2_q_mu, spec.H);
  j["mu_q_mu2"] = ragged_to_json(s.mu_q_mu2, spec.H);
  j["alpha_q_psi2"] = ragged_to_json(s.alpha_q_psi2, spec.H);
  j["beta_q_psi2"] = ragged_to_json(s.beta_q_psi2, spec.H);
  j["mu_q_inv_psi2"] = ragged_to_json(s.mu_q_inv_psi2, spec.H);
  j["mu_q_log_psi2"] = ragged_to_json(s.mu_q_log_psi2, spec.H);
  json aw = json::array();
  json lw = json::array();
  for (size_t jj = 0; jj < s.alpha_q_w.size(); ++jj) {
    aw.push_back(vector_to_json(s.alpha_q_w[jj]));
    lw.push_back(vector_to_json(s.mu_q_log_w[jj]));
  }
  j["alpha_q_w"] = std::move(aw);
  j["mu_q_log_w"] = std::move(lw);
  j["mu_q_lambda"] = vector_to_json(s.mu_q_lambda);
  j["sigma2_q_lambda"] = vector_to_json(s.sigma2_q_lambda);
  j["mu_q_lambda2"] = vector_to_json(s.mu_q_lambda2);
  j["mu_q_eta"] = vector_to_json(s.mu_q_eta);
  j["sigma2_q_eta"] = vector_to_json(s.sigma2_q_eta);
  j["mu_q_eta2"] = vector_to_json(s.mu_q_eta2);
  json resp = json::array();
  for (size_t jj = 0; jj < s.mu_q_a.size(); ++jj) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < s.mu_q_a[jj].rows(); ++i) {
      json row = json::array();
      for (int h = 0; h < spec.H[jj]; ++h) {
        row.push_back(s.mu_q_a[jj](i, h));
      }
      rows.push_back(std::move(row));
    }
    resp.push_back(std::move(rows));
  }
  j["mu_q_a"] = std::move(resp);
  j["mu_q_beta"] = vector_to_json(s.mu_q_beta);
  j["Sigma_q_beta"] = matrix_to_json(s.Sigma_q_beta);
  j["alpha_q_sigma2"] = s.alpha_q_sigma2;
  j["beta_q_sigma2"] = s.beta_q_sigma2;
  j["mu_q_inv_sigma2"] = s.mu_q_inv_sigma2;
  return j;
}

OutcomeQState outcome_state_from_json(const json& j, const OutcomeMixtureSpec& spec,
                                      const std::string& context) {
  OutcomeQState s;
  s.mu_q_mu = ragged_from_json(require_key(j, "mu_q_mu", context), spec.H, context);
  s.sigma2_q_mu =
      ragged_from_json(require_key(j, "sigma2_q_mu", context), spec.H, context);
  s.mu_q_mu2 = ragged_from_json(require_key(j, "mu_q_mu2", context), spec.H, context);
  s.alpha_q_psi2 =
      ragged_from_json(require_key(j, "alpha_q_psi2", context), spec.H, context);
  s.beta_q_psi2 =
      ragged_from_json(require_key(j, "beta_q_psi2", context), spec.H, context);
  s.mu_q_inv_psi2 =
      ragged_from_json(require_key(j, "mu_q_inv_psi2", context), spec.H, context);
  s.mu_q_log_psi2 =
      ragged_from_json(require_key(j, "mu_q_log_psi2", context), spec.H, context);
  const json& aw = require_key(j, "alpha_q_w", context);
  const json& lw = require_key(j, "mu_q_log_w", context);
  for (size_t jj = 0; jj < aw.size(); ++jj) {
    s.alpha_q_w.push_back(vector_from_json(aw[jj], context + ".alpha_q_w"));
    s.mu_q_log_w.push_back(vector_from_json(lw[jj], context + ".mu_q_log_w"));
  }
  s.mu_q_lambda = vector_from_json(require_key(j, "mu_q_lambda", context), context);
  s.sigma2_q_lambda =
      vector_from_json(require_key(j, "sigma2_q_lambda", context), context);
  s.mu_q_lambda2 = vector_from_json(require_key(j, "mu_q_lambda2", context), context);
  s.mu_q_eta = vector_from_json(require_key(j, "mu_q_eta", context), context);
  s.sigma2_q_eta = vector_from_json(require_key(j, "sigma2_q_eta", context), context);
  s.mu_q_eta2 = vector_from_json(require_key(j, "mu_q_eta2", context), context);
  const json& resp = require_key(j, "mu_q_a", context);
  const int N = static_cast<int>(s.mu_q_eta.size());
  for (size_t jj = 0; jj < resp.size(); ++jj) {
    Eigen::MatrixXd m(N, spec.H[jj]);
    for (int i = 0; i < N; ++i) {
      for (int h = 0; h < spec.H[jj]; ++h) {
        m(i, h) = resp[jj][i][h].get<double>();
      }
    }
    s.mu_q_a.push_back(std::move(m));
  }
  s.mu_q_beta = vector_from_json(require_key(j, "mu_q_beta", context), context);
  if (s.mu_q_beta.size() > 0) {
    s.Sigma_q_beta =
        matrix_from_json(require_key(j, "Sigma_q_beta", context), context);
  } else {
    s.Sigma_q_beta.resize(0, 0);
  }
  s.alpha_q_sigma2 = require_number(j, "alpha_q_sigma2", context);
  s.beta_q_sigma2 = require_number(j, "beta_q_sigma2", context);
  s.mu_q_inv_sigma2 = require_number(j, "mu_q_inv_sigma2", context);
  return s;
}

json latent_state_to_json(const LatentQState& s, const LatentMixtureSpec& spec) {
  json j;
  j["mu_q_nu"] = vector_to_json(s.mu_q_nu);
  j["sigma2_q_nu"] = vector_to_json(s.sigma2_q_nu);
  j["mu_q_nu2"] = vector_to_json(s.mu_q_nu2);
  j["alpha_q_psi2"] = vector_to_json(s.alpha_q_psi2);
  j["beta_q_psi2"] = vector_to_json(s.beta_q_psi2);
  j["mu_q_inv_psi2"] = vector_to_json(s.mu_q_inv_psi2);
  j["mu_q_lambda"] = vector_to_json(s.mu_q_lambda);
  j["sigma2_q_lambda"] = vector_to_json(s.sigma2_q_lambda);
  j["mu_q_lambda2"] = vector_to_json(s.mu_q_lambda2);
  j["mu_q_eta"] = vector_to_json(s.mu_q_eta);
  j["sigma2_q_eta"] = vector_to_json(s.sigma2_q_eta);
  j["mu_q_eta2"] = vector_to_json(s.mu_q_eta2);
  j["mu_q_a"] = matrix_to_json(s.mu_q_a);
  json bk = json::array();
  json sk = json::array();
  for (int k = 0; k < spec.K; ++k) {
    bk.push_back(vector_to_json(s.mu_q_beta_k[k]));
    sk.push_back(matrix_to_json(s.Sigma_q_beta_k[k]));
  }
  j["mu_q_beta_k"] = std::move(bk);
  j["Sigma_q_beta_k"] = std::move(sk);
  j["alpha_q_sigma2_k"] = vector_to_json(s.alpha_q_sigma2_k);
  j["beta_q_sigma2_k"] = vector_to_json(s.beta_q_sigma2_k);
  j["mu_q_inv_sigma2_k"] = vector_to_json(s.mu_q_inv_sigma2_k);
  j["mu_q_log_sigma2_k"] = vector_to_json(s.mu_q_log_sigma2_k);
  j["alpha_q_w"] = vector_to_json(s.alpha_q_w);
  j["mu_q_log_w"] = vector_to_json(s.mu_q_log_w);
  return j;
}

LatentQState latent_state_from_json(const json& j, const LatentMixtureSpec& spec,
                                    const std::string& context) {
  LatentQState s;
  s.mu_q_nu = vector_from_json(require_key(j, "mu_q_nu", context), context);
  s.sigma2_q_nu = vector_from_json(require_key(j, "sigma2_q_nu", context), context);
  s.mu_q_nu2 = vector_from_json(require_key(j, "mu_q_nu2", context), context);
  s.alpha_q_psi2 = vector_from_json(require_key(j, "alpha_q_psi2", context), context);
  s.beta_q_psi2 = vector_from_json(require_key(j, "beta_q_psi2", context), context);
  s.mu_q_inv_psi2 =
      vector_from_json(require_key(j, "mu_q_inv_psi2", context), context);
  s.mu_q_lambda = vector_from_json(require_key(j, "mu_q_lambda", context), context);
  s.sigma2_q_lambda =
      vector_from_json(require_key(j, "sigma2_q_lambda", context), context);
  s.mu_q_lambda2 = vector_from_json(require_key(j, "mu_q_lambda2", context), context);
  s.mu_q_eta = vector_from_json(require_key(j, "mu_q_eta", context), context);
  s.sigma2_q_eta = vector_from_json(require_key(j, "sigma2_q_eta", context), context);
  s.mu_q_eta2 = vector_from_json(require_key(j, "mu_q_eta2", context), context);
  s.mu_q_a = matrix_from_json(require_key(j, "mu_q_a", context), context);
  const json& bk = require_key(j, "mu_q_beta_k", context);
  const json& sk = require_key(j, "Sigma_q_beta_k", context);
  for (int k = 0; k < spec.K; ++k) {
    s.mu_q_beta_k.push_back(vector_from_json(bk[k], context + ".mu_q_beta_k"));
    if (s.mu_q_beta_k.back().size() > 0) {
      s.Sigma_q_beta_k.push_back(matrix_from_json(sk[k], context + ".Sigma_q_beta_k"));
    } else {
      s.Sigma_q_beta_k.emplace_back(0, 0);
    }
  }
  s.alpha_q_sigma2_k =
      vector_from_json(require_key(j, "alpha_q_sigma2_k", context), context);
  s.beta_q_sigma2_k =
      vector_from_json(require_key(j, "beta_q_sigma2_k", context), context);
  s.mu_q_inv_sigma2_k =
      vector_from_json(require_key(j, "mu_q_inv_sigma2_k", context), context);
  s.mu_q_log_sigma2_k =
      vector_from_json(require_key(j, "mu_q_log_sigma2_k", context), context);
  s.alpha_q_w = vector_from_json(require_key(j, "alpha_q_w", context), context);
  s.mu_q_log_w = vector_from_json(require_key(j, "mu_q_log_w", context), context);
  return s;
}

json criteria_to_json(const CriteriaReport& rep) {
  json j;
  j["vlppd"] = rep.vlppd;
  j["p_vwaic"] = rep.p_vwaic;
  j["vwaic"] = rep.vwaic;
  j["loglik_at_plugin"] = rep.loglik_at_plugin;
  j["p_vaic"] = rep.p_vaic;
  j["vaic"] = rep.vaic;
  j["mc_se_vlppd"] = rep.mc_se_vlppd;
  j["mc_se_p_vwaic"] = rep.mc_se_p_vwaic;
  j["mc_se_expected_loglik"] = rep.mc_se_expected_loglik;
  j["draws_R"] = rep.draws_R;
  j["seed"] = rep.seed;
  j["pointwise_unit"] = rep.pointwise_unit;
  return j;
}

namespace {

json fit_file_common(const ModelConfig& config, const FitReport& report) {
  json j;
  j["schema_version"] = 1;
  const json cfg = model_config_to_json(config);
  for (const auto& item : cfg.items()) {
    j[item.key()] = item.value();
  }
  j["fit_report"] = fit_report_to_json(report);
  return j;
}

}  // namespace

json fit_file_to_json(const ModelConfig& config, const OutcomeQState& s,
                      const FitReport& report) {
  json j = fit_file_common(config, report);
  json signs = json::array();
  for (Eigen::Index k = 0; k < s.mu_q_lambda.size(); ++k) {
    signs.push_back(s.mu_q_lambda[k] >= 0.0 ? 1 : -1);
  }
  j["lambda_sign"] = std::move(signs);
  j["state"] = outcome_state_to_json(s, std::get<OutcomeMixtureSpec>(config.spec));
  return j;
}

json fit_file_to_json(const ModelConfig& config, const LatentQState& s,
                      const FitReport& report) {
  json j = fit_file_common(config, report);
  json signs = json::array();
  for (Eigen::Index k = 0; k < s.mu_q_lambda.size(); ++k) {
    signs.push_back(s.mu_q_lambda[k] >= 0.0 ? 1 : -1);
  }
  j["lambda_sign"] = std::move(signs);
  j["state"] = latent_state_to_json(s, std::get<LatentMixtureSpec>(config.spec));
  return j;
}

LoadedFit load_fit_file(const std::string& path) {
  const json j = load_json_file(path);
  json cfg = j;
  cfg.erase("fit_report");
  cfg.erase("state");
  cfg.erase("lambda_sign");
  LoadedFit out;
  out.config = parse_model_config(cfg, path);
  const json& state = require_key(j, "state", path);
  if (out.config.is_outcome()) {
    out.state = outcome_state_from_json(
        state, std::get<OutcomeMixtureSpec>(out.config.spec), path + ".state");
  } else {
    out.state = latent_state_from_json(
        state, std::get<LatentMixtureSpec>(out.config.spec), path + ".state");
  }
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open '" + path + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write '" + path + "'");
  }
  out << j.dump(2) << '\n';
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write '" + path + "'");
  }
  out << text;
}

}  // namespace semvb
