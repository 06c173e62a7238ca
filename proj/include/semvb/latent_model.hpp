#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "semvb/dataset.hpp"
#include "semvb/outcome_model.hpp"  // FitOptions pieces, FitReport
#include "semvb/rng.hpp"

namespace semvb {

/// Model structure and priors for the latent-mixture SEM: Gaussian outcomes
/// around nu_j + lambda_j * eta_i with a K-component Gaussian mixture on the
/// latent factors, one regression vector per component.
struct LatentMixtureSpec {
  int K = 1;
  double mu_nu = 0.0;
  double sigma2_nu = 1.0;
  double mu_lambda = 1.0;
  double sigma2_lambda = 1.0;
  double alpha_psi2 = 1.0;
  double beta_psi2 = 1.0;
  double alpha_sigma2 = 1.0;
  double beta_sigma2 = 1.0;
  double alpha_w = 1.0;
  Eigen::VectorXd mu_beta;
  Eigen::MatrixXd Sigma_beta;
  /// Optional additional identifiability constraint: pin nu_1 to a constant.
  std::optional<double> pin_nu1;

  void validate(int p) const;
};

struct LatentQState {
  // Per-outcome blocks, length M.
  Eigen::VectorXd mu_q_nu, sigma2_q_nu, mu_q_nu2;
  Eigen::VectorXd alpha_q_psi2;  // fixed at N_obs(j)/2 + alpha_psi2
  Eigen::VectorXd beta_q_psi2, mu_q_inv_psi2;
  Eigen::VectorXd mu_q_lambda, sigma2_q_lambda, mu_q_lambda2;  // entry 0 pinned
  // Per-individual blocks.
  Eigen::VectorXd mu_q_eta, sigma2_q_eta, mu_q_eta2;
  Eigen::MatrixXd mu_q_a;  // N x K responsibilities
  // Per-component regression blocks.
  std::vector<Eigen::VectorXd> mu_q_beta_k;
  std::vector<Eigen::MatrixXd> Sigma_q_beta_k;
  Eigen::VectorXd alpha_q_sigma2_k, beta_q_sigma2_k;
  Eigen::VectorXd mu_q_inv_sigma2_k, mu_q_log_sigma2_k;
  // Mixture weights.
  Eigen::VectorXd alpha_q_w, mu_q_log_w;

  /// Copy with components sorted ascending by x_bar . mu_q_beta_k.
  LatentQState sorted_by_projection(const Eigen::VectorXd& x_bar) const;
};

struct LatentInitOptions {
  /// Seed the component blocks from a mixture-of-regressions fit of the
  /// first outcome on the covariates.
  bool mixreg = true;
  int mixreg_restarts = 10;
  /// Explicit overrides (p x K / K / K); all three bypass the mixreg seed.
  std::optional<Eigen::MatrixXd> beta_init;
  std::optional<Eigen::VectorXd> sigma2_init;
  std::optional<Eigen::VectorXd> weights_init;
};

struct LatentFitOptions {
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  LatentInitOptions init;
};

class LatentFitter {
 public:
  LatentFitter(const LatentMixtureSpec& spec, const Dataset& ds);

  LatentQState init_state(const LatentInitOptions& init, Rng& rng) const;

  void update_component_blocks(LatentQState& s) const;  // beta_k, sigma2_k, w
  void update_responsibilities_and_latents(LatentQState& s) const;
  void update_outcome_blocks(LatentQState& s) const;    // lambda_j, nu_j, psi2_j

  void sweep(LatentQState& s) const;

  std::pair<LatentQState, FitReport> fit(const LatentFitOptions& options) const;
  FitReport fit_from(LatentQState& s, const LatentFitOptions& options) const;

  const LatentMixtureSpec& spec() const { return spec_; }
  const Dataset& data() const { return ds_; }

  void collect_scalars(const LatentQState& s, std::vector<double>& out) const;

 private:
  const LatentMixtureSpec spec_;
  const Dataset ds_;
  std::vector<std::vector<int>> obs_rows_;
  std::vector<std::vector<int>> obs_cols_;
  Eigen::MatrixXd Sigma_beta_inv_;
  Eigen::VectorXd Sigma_beta_inv_mu_;
};

}  // namespace semvb
