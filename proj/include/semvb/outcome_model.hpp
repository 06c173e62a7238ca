#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "semvb/dataset.hpp"
#include "semvb/rng.hpp"

namespace semvb {

/// Model structure and prior hyperparameters for the outcome-mixture SEM:
/// each outcome j follows an H_j-component Gaussian mixture around
/// mu_jh + lambda_j * eta_i, with eta_i regressed on covariates.
struct OutcomeMixtureSpec {
  std::vector<int> H;        // components per outcome, H_j >= 1
  double mu_lambda = 1.0;
  double sigma2_lambda = 1.0;
  Eigen::MatrixXd mu_mu;     // M x max(H) per-(j,h) prior means
  Eigen::MatrixXd sigma2_mu; // M x max(H) per-(j,h) prior variances
  double alpha_psi2 = 1.0;
  double beta_psi2 = 1.0;
  double alpha_sigma2 = 1.0;
  double beta_sigma2 = 1.0;
  double alpha_w = 1.0;
  Eigen::VectorXd mu_beta;
  Eigen::MatrixXd Sigma_beta;

  int n_outcomes() const { return static_cast<int>(H.size()); }
  int max_h() const;

  /// Convenience constructor for the shared-intercept-prior case.
  static OutcomeMixtureSpec with_shared_priors(
      std::vector<int> H, int p, double mu_lambda, double sigma2_lambda,
      double mu_mu, double sigma2_mu, double alpha_psi2, double beta_psi2,
      double alpha_sigma2, double beta_sigma2, double alpha_w,
      double sigma2_beta_diag);

  void validate(int M, int p) const;
};

/// Full set of variational parameters updated by the coordinate-ascent
/// algorithm. Sizes follow the spec that produced the state; entries at
/// (j, h >= H_j) are unused padding.
struct OutcomeQState {
  // Intercept blocks, M x max(H).
  Eigen::MatrixXd mu_q_mu, sigma2_q_mu, mu_q_mu2;
  // Noise blocks, M x max(H).
  Eigen::MatrixXd alpha_q_psi2, beta_q_psi2, mu_q_inv_psi2, mu_q_log_psi2;
  // Mixture weights, one Dirichlet per outcome.
  std::vector<Eigen::VectorXd> alpha_q_w, mu_q_log_w;
  // Loadings, length M; entry 0 pinned at (1, 0, 1).
  Eigen::VectorXd mu_q_lambda, sigma2_q_lambda, mu_q_lambda2;
  // Latent factors, length N.
  Eigen::VectorXd mu_q_eta, sigma2_q_eta, mu_q_eta2;
  // Responsibilities per outcome: N x H_j, rows meaningful only at observed cells.
  std::vector<Eigen::MatrixXd> mu_q_a;
  // Regression block.
  Eigen::VectorXd mu_q_beta;
  Eigen::MatrixXd Sigma_q_beta;
  double alpha_q_sigma2 = 0.0;  // fixed at (N + 2 alpha_sigma2) / 2
  double beta_q_sigma2 = 0.0;
  double mu_q_inv_sigma2 = 1.0;

  /// Copy with components in each outcome sorted by mu_q_mu ascending
  /// (weights, noise and responsibilities permuted coherently).
  OutcomeQState sorted_by_intercept(const OutcomeMixtureSpec& spec) const;
};

struct InitOptions {
  /// Initial intercepts are spread around the observed mean by
  /// +-spread * sd to break mixture symmetry.
  double intercept_spread = 1.0;
  /// Optional N(0, jitter_sd^2) noise added to the initial intercepts.
  double jitter_sd = 0.0;
  /// Explicit initial intercept means (M x max(H)), overriding the spread rule.
  std::optional<Eigen::MatrixXd> intercept_means;
};

struct FitOptions {
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  InitOptions init;
};

struct FitReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> metric_trace;
  double elapsed_seconds = 0.0;  // informational; never serialized
};

/// Coordinate-ascent fitter. Holds the spec, the data and precomputed
/// observation indices; the variational state is passed explicitly so that
/// callers can run and inspect single updates.
class OutcomeFitter {
 public:
  OutcomeFitter(const OutcomeMixtureSpec& spec, const Dataset& ds);

  OutcomeQState init_state(const InitOptions& init, Rng& rng) const;

  void update_responsibilities(OutcomeQState& s, int j) const;
  void update_loadings(OutcomeQState& s, int j) const;          // j >= 1 (0-based)
  void update_intercepts(OutcomeQState& s, int j) const;
  void update_noise_and_weights(OutcomeQState& s, int j) const;
  void update_latents(OutcomeQState& s) const;
  void update_regression_beta(OutcomeQState& s) const;
  void update_regression_sigma2(OutcomeQState& s) const;
  void update_regression(OutcomeQState& s) const;

  /// One full coordinate-ascent cycle in the canonical update order.
  void sweep(OutcomeQState& s) const;

  std::pair<OutcomeQState, FitReport> fit(const FitOptions& options) const;
  /// Continues from an existing state (warm start).
  FitReport fit_from(OutcomeQState& s, const FitOptions& options) const;

  const OutcomeMixtureSpec& spec() const { return spec_; }
  const Dataset& data() const { return ds_; }

  /// Flattens every primary scalar variational parameter, in a fixed order
  /// (used for the convergence metric and determinism checks).
  void collect_scalars(const OutcomeQState& s, std::vector<double>& out) const;

 private:
  const OutcomeMixtureSpec spec_;
  const Dataset ds_;
  std::vector<std::vector<int>> obs_rows_;  // per outcome j: observed i
  std::vector<std::vector<int>> obs_cols_;  // per row i: observed j
  Eigen::MatrixXd xxt_sum_;                 // sum_i x_i x_i^T
  Eigen::MatrixXd Sigma_beta_inv_;
  Eigen::VectorXd Sigma_beta_inv_mu_;
};

/// Relative-change convergence metric between two scalar snapshots.
double max_relative_change(const std::vector<double>& before,
                           const std::vector<double>& after);

}  // namespace semvb
