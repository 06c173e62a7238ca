#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semvb/dataset.hpp"
#include "semvb/outcome_model.hpp"

namespace semvb {

struct CovariateLaw {
  enum class Kind { normal, uniform };
  Kind kind = Kind::normal;
  double a = 0.0;  // mean / lower bound
  double b = 1.0;  // variance / upper bound
};

/// Ground-truth parameters for the synthetic-data generator.
struct SimulationTruth {
  Eigen::VectorXd beta;
  Eigen::VectorXd lambda;              // lambda[0] == 1
  std::vector<Eigen::VectorXd> mu;     // per outcome, length H_j
  std::vector<Eigen::VectorXd> psi2;
  std::vector<Eigen::VectorXd> w;
  double sigma2 = 1.0;
  std::vector<int> H;
  std::vector<CovariateLaw> covariates;

  void validate() const;

  /// Copy with each outcome's components sorted by mu ascending, matching
  /// the label rule used when reporting fitted states.
  SimulationTruth sorted_components() const;

  /// The benchmark design: four outcomes with H = (1,2,2,1), loadings
  /// (1, .8, .5, .2), beta = (1,2), one Gaussian and one uniform covariate.
  static SimulationTruth benchmark();
};

/// Generates (Dataset, latent eta). Cells are masked uniformly at
/// missing_rate; a row's mask is re-drawn while it would leave the row
/// without any observed outcome.
std::pair<Dataset, Eigen::VectorXd> simulate(const SimulationTruth& truth, int N,
                                             std::uint64_t seed,
                                             double missing_rate);

struct StudyConfig {
  int n_datasets = 30;
  int N = 1000;
  double missing_rate = 0.0;
  SimulationTruth truth = SimulationTruth::benchmark();
  // Priors shared by the fitted variants.
  double mu_lambda = 1.0, sigma2_lambda = 1.0;
  double mu_mu = 0.0, sigma2_mu = 100.0;
  double alpha_psi2 = 2.390625, beta_psi2 = 8.69140625;
  double alpha_sigma2 = 1.0, beta_sigma2 = 1.0;
  double alpha_w = 10.0;
  double sigma2_beta = 100.0;
  double mu_nu = 0.0, sigma2_nu = 100.0;
  double latent_alpha_w = 10.0;
  int latent_K = 2;
  // Per-replicate work.
  int B_bootstrap = 20;
  int R_criteria = 1000;
  bool run_bootstrap = true;
  bool run_criteria = true;
  double level = 0.95;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// Fitted model variants compared by the study, in report order.
inline constexpr std::array<const char*, 3> kStudyVariants = {
    "outcome-true-h", "outcome-all-h1", "latent-k2"};

struct StudyReport {
  std::vector<std::string> parameter_names;
  Eigen::VectorXd truth_values;
  Eigen::VectorXd coverage_plain;
  Eigen::VectorXd coverage_bootstrap;  // empty when bootstrap disabled
  Eigen::VectorXd mse;
  std::array<int, 3> wins_vwaic = {0, 0, 0};
  std::array<int, 3> wins_vaic = {0, 0, 0};
  int wins_joint_true = 0;  // replicates where the true spec wins both criteria
  int n_datasets = 0;
  int n_ok = 0;
  std::vector<int> failed_replicates;
  double elapsed_seconds = 0.0;  // informational; never serialized
};

/// One replicate's contribution to the study tallies.
struct StudyReplicate {
  bool ok = false;
  Eigen::VectorXd estimates;
  std::vector<char> covered_plain;
  std::vector<char> covered_boot;  // empty when bootstrap was not run
  int winner_vwaic = -1;           // index into kStudyVariants, -1 = not run
  int winner_vaic = -1;
};

/// Deterministic ordered reduction of the per-replicate tallies.
StudyReport aggregate_study(const std::vector<StudyReplicate>& replicates,
                            std::vector<std::string> parameter_names,
                            const Eigen::VectorXd& truth_values);

StudyReport run_study(const StudyConfig& config);

/// Published MCMC reference results for the benchmark design (coverage and
/// mean squared error per parameter), embedded for side-by-side display.
const std::map<std::string, double>& mcmc_reference_coverage();
const std::map<std::string, double>& mcmc_reference_mse();

}  // namespace semvb
