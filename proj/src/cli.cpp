#include "semvb/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

#include "semvb/criteria.hpp"
#include "semvb/dataset.hpp"
#include "semvb/errors.hpp"
#include "semvb/init_heuristics.hpp"
#include "semvb/json_io.hpp"
#include "semvb/latent_model.hpp"
#include "semvb/outcome_model.hpp"
#include "semvb/sim_study.hpp"
#include "semvb/uncertainty.hpp"

namespace semvb {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNonConverged = 3;
constexpr int kExitNumerical = 4;

Dataset load_data(const std::string& path, const std::vector<std::string>& outcomes,
                  const std::vector<std::string>& covariates,
                  const std::string& missing_token, double standardize_sd) {
  Dataset ds = load_csv(path, outcomes, covariates, missing_token);
  if (standardize_sd > 0.0) {
    ds = standardize_outcomes(ds, standardize_sd);
  }
  return ds;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

/// Per-outcome mixture-regression (or plain regression) intercepts used as
/// intercept prior means.
Eigen::MatrixXd mixreg_intercept_priors(const OutcomeMixtureSpec& spec,
                                        const Dataset& ds, std::uint64_t seed) {
  Eigen::MatrixXd mu_mu = Eigen::MatrixXd::Zero(ds.m(), spec.max_h());
  Rng rng = Rng(seed).substream(0x6d7265ULL);
  for (int j = 0; j < ds.m(); ++j) {
    std::vector<double> yv;
    std::vector<int> rows;
    for (int i = 0; i < ds.n(); ++i) {
      if (ds.observed(i, j)) {
        rows.push_back(i);
        yv.push_back(ds.y(i, j));
      }
    }
    const int n = static_cast<int>(rows.size());
    Eigen::VectorXd y(n);
    Eigen::MatrixXd X(n, ds.p());
    for (int r = 0; r < n; ++r) {
      y[r] = yv[r];
      X.row(r) = ds.x.row(rows[r]);
    }
    Rng jr = rng.substream(static_cast<std::uint64_t>(j));
    const MixRegFit fit = mixreg_em(y, X, spec.H[j], 10, 1e-8, jr);
    Eigen::VectorXd ic = fit.intercepts;
    std::sort(ic.data(), ic.data() + ic.size());
    for (int h = 0; h < spec.H[j]; ++h) {
      mu_mu(j, h) = ic[h];
    }
  }
  return mu_mu;
}

struct FitOutput {
  json file;
  std::string trace_csv;
  bool converged = false;
};

FitOutput run_fit(ModelConfig& config, const Dataset& ds, double tol,
                  int max_iter, std::uint64_t seed,
                  const std::string& warm_start_path) {
  FitOutput out;
  FitReport report;
  if (config.is_outcome()) {
    auto& spec = std::get<OutcomeMixtureSpec>(config.spec);
    if (config.mu_mu_from_mixreg) {
      spec.mu_mu = mixreg_intercept_priors(spec, ds, seed);
      config.mu_mu_from_mixreg = false;
    }
    OutcomeFitter fitter(spec, ds);
    FitOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.seed = seed;
    opt.init = config.outcome_init;
    OutcomeQState state;
    if (!warm_start_path.empty()) {
      LoadedFit prev = load_fit_file(warm_start_path);
      if (!prev.config.is_outcome()) {
        throw ConfigError(warm_start_path + ": warm start model kind mismatch");
      }
      state = std::get<OutcomeQState>(std::move(prev.state));
      if (state.mu_q_eta.size() != ds.n()) {
        throw ConfigError(warm_start_path +
                          ": warm start was fitted to a different number of rows");
      }
      report = fitter.fit_from(state, opt);
    } else {
      auto fitted = fitter.fit(opt);
      state = std::move(fitted.first);
      report = std::move(fitted.second);
    }
    const OutcomeQState sorted = state.sorted_by_intercept(spec);
    out.file = fit_file_to_json(config, sorted, report);
  } else {
    auto& spec = std::get<LatentMixtureSpec>(config.spec);
    LatentFitter fitter(spec, ds);
    LatentFitOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.seed = seed;
    opt.init = config.latent_init;
    LatentQState state;
    if (!warm_start_path.empty()) {
      LoadedFit prev = load_fit_file(warm_start_path);
      if (prev.config.is_outcome()) {
        throw ConfigError(warm_start_path + ": warm start model kind mismatch");
      }
      state = std::get<LatentQState>(std::move(prev.state));
      if (state.mu_q_eta.size() != ds.n()) {
        throw ConfigError(warm_start_path +
                          ": warm start was fitted to a different number of rows");
      }
      report = fitter.fit_from(state, opt);
    } else {
      auto fitted = fitter.fit(opt);
      state = std::move(fitted.first);
      report = std::move(fitted.second);
    }
    const Eigen::VectorXd x_bar =
        ds.p() > 0 ? ds.x.colwise().mean().transpose().eval() : Eigen::VectorXd();
    const LatentQState sorted = state.sorted_by_projection(x_bar);
    out.file = fit_file_to_json(config, sorted, report);
  }
  std::string trace = "iteration,metric\n";
  for (size_t i = 0; i < report.metric_trace.size(); ++i) {
    trace += std::to_string(i + 1) + "," + format_double(report.metric_trace[i]) + "\n";
  }
  out.trace_csv = std::move(trace);
  out.converged = report.converged;
  return out;
}

int cmd_simulate(const std::string& config_path, int n, std::uint64_t seed,
                 double missing_rate, const std::string& out_path,
                 const std::string& truth_out) {
  const json cfg = load_json_file(config_path);
  check_keys(cfg, {"schema_version", "truth"}, config_path);
  if (require_int(cfg, "schema_version", config_path) != 1) {
    throw ConfigError(config_path + ": unsupported schema_version");
  }
  const SimulationTruth truth =
      parse_truth(require_key(cfg, "truth", config_path), config_path + ".truth");
  if (n < 1) {
    throw ConfigError("simulate: --n must be >= 1");
  }
  auto [ds, eta] = simulate(truth, n, seed, missing_rate);
  write_csv(ds, out_path);
  if (!truth_out.empty()) {
    json tj;
    tj["schema_version"] = 1;
    tj["n"] = n;
    tj["seed"] = seed;
    tj["missing_rate"] = missing_rate;
    tj["truth"] = truth_to_json(truth);
    write_json_file(tj, truth_out);
  }
  return kExitOk;
}

int cmd_fit(const std::string& model_flag, const std::string& data_path,
            const std::string& config_path, double tol, int max_iter,
            std::uint64_t seed, const std::string& out_path,
            const std::string& trace_path, const std::string& warm_start,
            const std::string& missing_token, double standardize_sd) {
  json cfg = load_json_file(config_path);
  if (!cfg.contains("model") && !model_flag.empty()) {
    cfg["model"] = model_flag;
  }
  ModelConfig config = parse_model_config(cfg, config_path);
  const std::string declared = config.is_outcome() ? "outcome-mixture" : "latent-mixture";
  if (!model_flag.empty() && model_flag != declared) {
    throw ConfigError(config_path + ": declares model '" + declared +
                      "' but --model requested '" + model_flag + "'");
  }
  const Dataset ds = load_data(data_path, config.outcomes, config.covariates,
                               missing_token, standardize_sd);
  FitOutput fit = run_fit(config, ds, tol, max_iter, seed, warm_start);
  write_json_file(fit.file, out_path);
  if (!trace_path.empty()) {
    write_text_file(fit.trace_csv, trace_path);
  }
  return fit.converged ? kExitOk : kExitNonConverged;
}

int cmd_compare(const std::string& fits_list, const std::string& data_path,
                int draws, std::uint64_t seed, const std::string& out_path,
                const std::string& missing_token, double standardize_sd) {
  const auto paths = split_list(fits_list);
  if (paths.size() < 2) {
    throw ConfigError("compare: --fits needs at least two fit files");
  }
  struct Entry {
    std::string path;
    std::string model;
    CriteriaReport rep;
  };
  std::vector<Entry> entries;
  for (const auto& path : paths) {
    LoadedFit fit = load_fit_file(path);
    const Dataset ds = load_data(data_path, fit.config.outcomes,
                                 fit.config.covariates, missing_token,
                                 standardize_sd);
    Entry e;
    e.path = path;
    if (fit.config.is_outcome()) {
      e.model = "outcome-mixture";
      e.rep = compute_criteria(std::get<OutcomeQState>(fit.state),
                               std::get<OutcomeMixtureSpec>(fit.config.spec), ds,
                               draws, seed);
    } else {
      e.model = "latent-mixture";
      e.rep = compute_criteria(std::get<LatentQState>(fit.state),
                               std::get<LatentMixtureSpec>(fit.config.spec), ds,
                               draws, seed);
    }
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) {
                     return a.rep.vwaic < b.rep.vwaic;
                   });
  json j;
  j["schema_version"] = 1;
  j["draws"] = draws;
  j["seed"] = seed;
  json models = json::array();
  for (const auto& e : entries) {
    json m;
    m["fit"] = e.path;
    m["model"] = e.model;
    json crit = criteria_to_json(e.rep);
    for (const auto& item : crit.items()) {
      m[item.key()] = item.value();
    }
    models.push_back(std::move(m));
  }
  j["models"] = std::move(models);
  j["winner"] = entries.front().path;
  write_json_file(j, out_path);
  return kExitOk;
}

int cmd_bootstrap(const std::string& data_path, const std::string& config_path,
                  int replicates, double level, std::uint64_t seed, double tol,
                  int max_iter, int threads, const std::string& out_path,
                  const std::string& missing_token, double standardize_sd) {
  json cfg = load_json_file(config_path);
  ModelConfig config = parse_model_config(cfg, config_path);
  if (!config.is_outcome()) {
    throw ConfigError("bootstrap: only the outcome-mixture model is supported");
  }
  auto& spec = std::get<OutcomeMixtureSpec>(config.spec);
  const Dataset ds = load_data(data_path, config.outcomes, config.covariates,
                               missing_token, standardize_sd);
  if (config.mu_mu_from_mixreg) {
    spec.mu_mu = mixreg_intercept_priors(spec, ds, seed);
  }
  FitOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  opt.seed = seed;
  opt.init = config.outcome_init;
  const BootstrapResult boot =
      bootstrap(spec, ds, replicates, opt, seed, level, threads);
  json j;
  j["schema_version"] = 1;
  j["replicates"] = replicates;
  j["failed"] = boot.failed;
  j["level"] = level;
  j["seed"] = seed;
  json params = json::array();
  for (size_t c = 0; c < boot.parameter_names.size(); ++c) {
    json e;
    e["name"] = boot.parameter_names[c];
    e["lo"] = boot.intervals(static_cast<Eigen::Index>(c), 0);
    e["hi"] = boot.intervals(static_cast<Eigen::Index>(c), 1);
    json est = json::array();
    for (Eigen::Index r = 0; r < boot.estimates.rows(); ++r) {
      est.push_back(boot.estimates(r, static_cast<Eigen::Index>(c)));
    }
    e["estimates"] = std::move(est);
    params.push_back(std::move(e));
  }
  j["parameters"] = std::move(params);
  json idx = json::array();
  for (Eigen::Index b = 0; b < boot.indices.rows(); ++b) {
    json row = json::array();
    for (Eigen::Index i = 0; i < boot.indices.cols(); ++i) {
      row.push_back(boot.indices(b, i));
    }
    idx.push_back(std::move(row));
  }
  j["indices"] = std::move(idx);
  write_json_file(j, out_path);
  return kExitOk;
}

int cmd_ppc(const std::string& fit_path, const std::string& data_path, int draws,
            std::uint64_t seed, const std::string& out_path,
            const std::string& kde_path, const std::string& missing_token,
            double standardize_sd) {
  LoadedFit fit = load_fit_file(fit_path);
  const Dataset ds = load_data(data_path, fit.config.outcomes,
                               fit.config.covariates, missing_token,
                               standardize_sd);
  std::vector<Eigen::MatrixXd> reps;
  if (fit.config.is_outcome()) {
    reps = posterior_predictive(std::get<OutcomeQState>(fit.state),
                                std::get<OutcomeMixtureSpec>(fit.config.spec), ds,
                                draws, seed);
  } else {
    reps = posterior_predictive(std::get<LatentQState>(fit.state),
                                std::get<LatentMixtureSpec>(fit.config.spec), ds,
                                draws, seed);
  }
  std::string csv = "draw,individual,outcome,value\n";
  for (int d = 0; d < draws; ++d) {
    for (int i = 0; i < ds.n(); ++i) {
      for (int j = 0; j < ds.m(); ++j) {
        if (!ds.observed(i, j)) {
          continue;
        }
        csv += std::to_string(d + 1) + "," + std::to_string(i + 1) + "," +
               ds.outcome_names[j] + "," + format_double(reps[d](i, j)) + "\n";
      }
    }
  }
  write_text_file(csv, out_path);
  if (!kde_path.empty()) {
    std::string kcsv = "outcome,grid,density,draw\n";
    for (int j = 0; j < ds.m(); ++j) {
      Eigen::VectorXd mean_density;
      Eigen::VectorXd mean_grid;
      for (int d = 0; d < draws; ++d) {
        std::vector<double> values;
        for (int i = 0; i < ds.n(); ++i) {
          if (ds.observed(i, j)) {
            values.push_back(reps[d](i, j));
          }
        }
        const KdeResult k = kde(values);
        for (Eigen::Index g = 0; g < k.grid.size(); ++g) {
          kcsv += ds.outcome_names[j] + "," + format_double(k.grid[g]) + "," +
                  format_double(k.density[g]) + "," + std::to_string(d + 1) + "\n";
        }
        if (d == 0) {
          mean_grid = k.grid;
          mean_density = k.density;
        } else {
          // Average on the first draw's grid via linear interpolation.
          for (Eigen::Index g = 0; g < mean_grid.size(); ++g) {
            const double x = mean_grid[g];
            double v = 0.0;
            if (x <= k.grid[0]) {
              v = k.density[0];
            } else if (x >= k.grid[k.grid.size() - 1]) {
              v = k.density[k.density.size() - 1];
            } else {
              const double step = k.grid[1] - k.grid[0];
              const auto lo = static_cast<Eigen::Index>((x - k.grid[0]) / step);
              const double frac = (x - k.grid[lo]) / step;
              v = k.density[lo] + frac * (k.density[lo + 1] - k.density[lo]);
            }
            mean_density[g] += (v - mean_density[g]) / (d + 1);
          }
        }
      }
      for (Eigen::Index g = 0; g < mean_grid.size(); ++g) {
        kcsv += ds.outcome_names[j] + "," + format_double(mean_grid[g]) + "," +
                format_double(mean_density[g]) + ",mean\n";
      }
    }
    write_text_file(kcsv, kde_path);
  }
  return kExitOk;
}

int cmd_select_components(const std::string& data_path,
                          const std::string& outcomes_list, int max_h,
                          std::uint64_t seed, const std::string& out_path,
                          const std::string& missing_token,
                          double standardize_sd) {
  const auto outcomes = split_list(outcomes_list);
  if (outcomes.empty()) {
    throw ConfigError("select-components: --outcomes must list column names");
  }
  const Dataset ds = load_data(data_path, outcomes, {}, missing_token,
                               standardize_sd);
  Rng rng(seed);
  json cols;
  for (int j = 0; j < ds.m(); ++j) {
    std::vector<double> values;
    for (int i = 0; i < ds.n(); ++i) {
      if (ds.observed(i, j)) {
        values.push_back(ds.y(i, j));
      }
    }
    Rng jr = rng.substream(static_cast<std::uint64_t>(j));
    const auto [chosen, bics] = select_components_with_bic(values, max_h, jr);
    json e;
    e["chosen_h"] = chosen;
    e["bic"] = bics;
    cols[ds.outcome_names[j]] = std::move(e);
  }
  json j;
  j["schema_version"] = 1;
  j["max_h"] = max_h;
  j["seed"] = seed;
  j["columns"] = std::move(cols);
  write_json_file(j, out_path);
  return kExitOk;
}

int cmd_study(const std::string& config_path, const std::string& out_path,
              const std::string& coverage_csv, const std::string& mse_csv,
              const std::string& selection_csv, int threads_flag) {
  const json cfg = load_json_file(config_path);
  StudyConfig config = parse_study_config(cfg, config_path);
  if (threads_flag > 0) {
    config.threads = threads_flag;
  }
  const StudyReport report = run_study(config);
  std::cerr << "study: " << report.n_ok << "/" << report.n_datasets
            << " replicates ok in " << report.elapsed_seconds << " s\n";

  const auto& ref_cov = mcmc_reference_coverage();
  const auto& ref_mse = mcmc_reference_mse();
  json j;
  j["schema_version"] = 1;
  j["n_datasets"] = report.n_datasets;
  j["n_ok"] = report.n_ok;
  j["failed_replicates"] = report.failed_replicates;
  json params = json::array();
  for (size_t c = 0; c < report.parameter_names.size(); ++c) {
    const auto idx = static_cast<Eigen::Index>(c);
    const std::string& name = report.parameter_names[c];
    json e;
    e["name"] = name;
    e["truth"] = report.truth_values[idx];
    e["coverage_plain"] = report.coverage_plain[idx];
    if (report.coverage_bootstrap.size() > 0) {
      e["coverage_bootstrap"] = report.coverage_bootstrap[idx];
    }
    e["mse"] = report.mse[idx];
    if (ref_cov.count(name)) {
      e["mcmc_reference_coverage"] = ref_cov.at(name);
      e["mcmc_reference_mse"] = ref_mse.at(name);
    }
    params.push_back(std::move(e));
  }
  j["parameters"] = std::move(params);
  json sel;
  for (size_t v = 0; v < kStudyVariants.size(); ++v) {
    sel["vwaic"][kStudyVariants[v]] = report.wins_vwaic[v];
    sel["vaic"][kStudyVariants[v]] = report.wins_vaic[v];
  }
  sel["joint_true_wins"] = report.wins_joint_true;
  j["selection"] = std::move(sel);
  write_json_file(j, out_path);

  auto param_header = [&]() {
    std::string h = "method";
    for (const auto& name : report.parameter_names) {
      h += "," + name;
    }
    return h + "\n";
  };
  if (!coverage_csv.empty()) {
    std::string csv = param_header();
    csv += "mfvb";
    for (size_t c = 0; c < report.parameter_names.size(); ++c) {
      csv += "," + format_double(report.coverage_plain[static_cast<Eigen::Index>(c)]);
    }
    csv += "\n";
    if (report.coverage_bootstrap.size() > 0) {
      csv += "mfvb_bootstrap";
      for (size_t c = 0; c < report.parameter_names.size(); ++c) {
        csv += "," +
               format_double(report.coverage_bootstrap[static_cast<Eigen::Index>(c)]);
      }
      csv += "\n";
    }
    csv += "mcmc_reference";
    for (const auto& name : report.parameter_names) {
      csv += ",";
      if (ref_cov.count(name)) {
        csv += format_double(ref_cov.at(name));
      }
    }
    csv += "\n";
    write_text_file(csv, coverage_csv);
  }
  if (!mse_csv.empty()) {
    std::string csv = param_header();
    csv += "mfvb";
    for (size_t c = 0; c < report.parameter_names.size(); ++c) {
      csv += "," + format_double(report.mse[static_cast<Eigen::Index>(c)]);
    }
    csv += "\nmcmc_reference";
    for (const auto& name : report.parameter_names) {
      csv += ",";
      if (ref_mse.count(name)) {
        csv += format_double(ref_mse.at(name));
      }
    }
    csv += "\n";
    write_text_file(csv, mse_csv);
  }
  if (!selection_csv.empty()) {
    std::string csv = "criterion,variant,wins\n";
    for (size_t v = 0; v < kStudyVariants.size(); ++v) {
      csv += std::string("vwaic,") + kStudyVariants[v] + "," +
             std::to_string(report.wins_vwaic[v]) + "\n";
    }
    for (size_t v = 0; v < kStudyVariants.size(); ++v) {
      csv += std::string("vaic,") + kStudyVariants[v] + "," +
             std::to_string(report.wins_vaic[v]) + "\n";
    }
    write_text_file(csv, selection_csv);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Variational fitting of Gaussian-mixture structural equation models"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_config, sim_out, sim_truth_out;
  int sim_n = 0;
  std::uint64_t sim_seed = 0;
  double sim_missing = 0.0;
  sim->add_option("--config", sim_config, "Truth configuration JSON")->required();
  sim->add_option("--n", sim_n, "Number of individuals")->required();
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--missing-rate", sim_missing, "Uniform cell missingness rate");
  sim->add_option("--out", sim_out, "Output CSV path")->required();
  sim->add_option("--truth-out", sim_truth_out, "Truth echo JSON path");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model by coordinate ascent");
  std::string fit_model, fit_data, fit_config, fit_out, fit_trace, fit_warm,
      fit_missing = "NA";
  double fit_tol = 1e-6;
  int fit_max_iter = 500;
  std::uint64_t fit_seed = 0;
  fit->add_option("--model", fit_model, "outcome-mixture or latent-mixture")
      ->check(CLI::IsMember({"outcome-mixture", "latent-mixture"}));
  fit->add_option("--data", fit_data, "Dataset CSV")->required();
  fit->add_option("--config", fit_config, "Model configuration JSON")->required();
  fit->add_option("--tol", fit_tol, "Convergence tolerance");
  fit->add_option("--max-iter", fit_max_iter, "Maximum sweeps");
  fit->add_option("--seed", fit_seed, "Random seed");
  fit->add_option("--out", fit_out, "Fitted-state JSON path")->required();
  fit->add_option("--trace", fit_trace, "Iteration trace CSV path");
  fit->add_option("--warm-start", fit_warm, "Previous fit JSON to continue from");
  fit->add_option("--missing-token", fit_missing, "Missing-cell token");
  double fit_std_sd = 0.0;
  fit->add_option("--standardize-sd", fit_std_sd,
                  "Rescale each outcome to this sample sd before fitting");

  // compare
  auto* cmp = app.add_subcommand("compare", "Rank fitted models by VWAIC/VAIC");
  std::string cmp_fits, cmp_data, cmp_out, cmp_missing = "NA";
  int cmp_draws = 10000;
  std::uint64_t cmp_seed = 0;
  cmp->add_option("--fits", cmp_fits, "Comma-separated fit JSON paths")->required();
  cmp->add_option("--data", cmp_data, "Dataset CSV")->required();
  cmp->add_option("--draws", cmp_draws, "Monte-Carlo draws R");
  cmp->add_option("--seed", cmp_seed, "Random seed");
  cmp->add_option("--out", cmp_out, "Criteria JSON path")->required();
  cmp->add_option("--missing-token", cmp_missing, "Missing-cell token");
  double cmp_std_sd = 0.0;
  cmp->add_option("--standardize-sd", cmp_std_sd,
                  "Rescale each outcome to this sample sd before evaluating");

  // bootstrap
  auto* boot = app.add_subcommand("bootstrap", "Percentile bootstrap intervals");
  std::string boot_data, boot_config, boot_out, boot_missing = "NA";
  int boot_b = 20, boot_max_iter = 500, boot_threads = 0;
  double boot_level = 0.95, boot_tol = 1e-6;
  std::uint64_t boot_seed = 0;
  boot->add_option("--data", boot_data, "Dataset CSV")->required();
  boot->add_option("--config", boot_config, "Model configuration JSON")->required();
  boot->add_option("--replicates", boot_b, "Bootstrap replicates B");
  boot->add_option("--level", boot_level, "Interval level");
  boot->add_option("--seed", boot_seed, "Random seed");
  boot->add_option("--tol", boot_tol, "Fit tolerance");
  boot->add_option("--max-iter", boot_max_iter, "Fit max sweeps");
  boot->add_option("--threads", boot_threads, "Worker cap (0 = all cores)");
  boot->add_option("--out", boot_out, "Bootstrap JSON path")->required();
  boot->add_option("--missing-token", boot_missing, "Missing-cell token");
  double boot_std_sd = 0.0;
  boot->add_option("--standardize-sd", boot_std_sd,
                   "Rescale each outcome to this sample sd before fitting");

  // ppc
  auto* ppc = app.add_subcommand("ppc", "Posterior-predictive replicates");
  std::string ppc_fit, ppc_data, ppc_out, ppc_kde, ppc_missing = "NA";
  int ppc_draws = 300;
  std::uint64_t ppc_seed = 0;
  ppc->add_option("--fit", ppc_fit, "Fitted-state JSON")->required();
  ppc->add_option("--data", ppc_data, "Dataset CSV")->required();
  ppc->add_option("--draws", ppc_draws, "Number of replicate draws");
  ppc->add_option("--seed", ppc_seed, "Random seed");
  ppc->add_option("--out", ppc_out, "Replicates CSV path")->required();
  ppc->add_option("--kde-out", ppc_kde, "Optional KDE CSV path");
  ppc->add_option("--missing-token", ppc_missing, "Missing-cell token");
  double ppc_std_sd = 0.0;
  ppc->add_option("--standardize-sd", ppc_std_sd,
                  "Rescale each outcome to this sample sd before replicating");

  // select-components
  auto* sel = app.add_subcommand("select-components",
                                 "Choose per-outcome mixture sizes by BIC");
  std::string sel_data, sel_outcomes, sel_out, sel_missing = "NA";
  int sel_max_h = 3;
  std::uint64_t sel_seed = 0;
  sel->add_option("--data", sel_data, "Dataset CSV")->required();
  sel->add_option("--outcomes", sel_outcomes, "Comma-separated outcome columns")
      ->required();
  sel->add_option("--max-h", sel_max_h, "Largest candidate component count");
  sel->add_option("--seed", sel_seed, "Random seed");
  sel->add_option("--out", sel_out, "Output JSON path")->required();
  sel->add_option("--missing-token", sel_missing, "Missing-cell token");
  double sel_std_sd = 0.0;
  sel->add_option("--standardize-sd", sel_std_sd,
                  "Rescale each outcome to this sample sd before clustering");

  // study
  auto* study = app.add_subcommand("study", "Replicated simulation study");
  std::string study_config, study_out, study_cov, study_mse, study_sel;
  int study_threads = 0;
  study->add_option("--config", study_config, "Study configuration JSON")->required();
  study->add_option("--out", study_out, "Study report JSON path")->required();
  study->add_option("--coverage-csv", study_cov, "Coverage table CSV path");
  study->add_option("--mse-csv", study_mse, "MSE table CSV path");
  study->add_option("--selection-csv", study_sel, "Selection table CSV path");
  study->add_option("--threads", study_threads, "Worker cap (0 = all cores)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*sim) {
      return cmd_simulate(sim_config, sim_n, sim_seed, sim_missing, sim_out,
                          sim_truth_out);
    }
    if (*fit) {
      return cmd_fit(fit_model, fit_data, fit_config, fit_tol, fit_max_iter,
                     fit_seed, fit_out, fit_trace, fit_warm, fit_missing,
                     fit_std_sd);
    }
    if (*cmp) {
      return cmd_compare(cmp_fits, cmp_data, cmp_draws, cmp_seed, cmp_out,
                         cmp_missing, cmp_std_sd);
    }
    if (*boot) {
      return cmd_bootstrap(boot_data, boot_config, boot_b, boot_level, boot_seed,
                           boot_tol, boot_max_iter, boot_threads, boot_out,
                           boot_missing, boot_std_sd);
    }
    if (*ppc) {
      return cmd_ppc(ppc_fit, ppc_data, ppc_draws, ppc_seed, ppc_out, ppc_kde,
                     ppc_missing, ppc_std_sd);
    }
    if (*sel) {
      return cmd_select_components(sel_data, sel_outcomes, sel_max_h, sel_seed,
                                   sel_out, sel_missing, sel_std_sd);
    }
    if (*study) {
      return cmd_study(study_config, study_out, study_cov, study_mse, study_sel,
                       study_threads);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run_cli(args);
}

}  // namespace semvb
