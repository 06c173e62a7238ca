#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "semvb/dataset.hpp"
#include "semvb/latent_model.hpp"
#include "semvb/outcome_model.hpp"
#include "semvb/rng.hpp"

namespace semvb {

/// Monte-Carlo information criteria computed from draws of the variational
/// approximation. Lower is better for both criteria.
struct CriteriaReport {
  double vlppd = 0.0;
  double p_vwaic = 0.0;
  double vwaic = 0.0;
  double loglik_at_plugin = 0.0;
  double p_vaic = 0.0;
  double vaic = 0.0;
  // Approximate Monte-Carlo standard errors of the estimators above.
  double mc_se_vlppd = 0.0;
  double mc_se_p_vwaic = 0.0;
  double mc_se_expected_loglik = 0.0;
  int draws_R = 0;
  std::uint64_t seed = 0;
  std::string pointwise_unit = "per_individual";
};

/// One joint draw of every q-block of the outcome-mixture model. Mixture
/// indicators are not drawn; the likelihood marginalizes them.
struct OutcomeThetaDraw {
  Eigen::MatrixXd mu;    // M x max(H)
  Eigen::MatrixXd psi2;  // M x max(H)
  std::vector<Eigen::VectorXd> w;
  Eigen::VectorXd lambda;  // lambda[0] == 1
  Eigen::VectorXd eta;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
};

struct LatentThetaDraw {
  Eigen::VectorXd nu, lambda, psi2;  // per outcome
  Eigen::VectorXd eta;
  std::vector<Eigen::VectorXd> beta_k;
  Eigen::VectorXd sigma2_k;
  Eigen::VectorXd w;
};

/// Reduction of an N x R matrix of pointwise log-likelihood values to the
/// Monte-Carlo vlppd / P_VWAIC estimators (the exact streaming reduction the
/// criteria computation uses, exposed for direct testing). When every draw of
/// an individual coincides, its P contribution is exactly zero.
struct PointwiseSummary {
  double vlppd = 0.0;
  double p_vwaic = 0.0;
  double mc_se_vlppd = 0.0;
  double mc_se_p_vwaic = 0.0;
};
PointwiseSummary summarize_pointwise(const Eigen::MatrixXd& log_p);

OutcomeThetaDraw sample_theta(const OutcomeQState& s,
                              const OutcomeMixtureSpec& spec, Rng& rng);
LatentThetaDraw sample_theta(const LatentQState& s,
                             const LatentMixtureSpec& spec, Rng& rng);

/// Analytic q-means (plug-in estimate). Throws if an Inverse-Gamma block has
/// shape <= 1, naming the block.
OutcomeThetaDraw plugin_theta(const OutcomeQState& s,
                              const OutcomeMixtureSpec& spec);
LatentThetaDraw plugin_theta(const LatentQState& s,
                             const LatentMixtureSpec& spec);

/// log p(y_i | theta) over individual i's observed outcomes, mixture
/// components marginalized with log-sum-exp.
double pointwise_loglik(const OutcomeThetaDraw& draw, const Dataset& ds, int i);
double pointwise_loglik(const LatentThetaDraw& draw, const Dataset& ds, int i);

/// Both criteria from the same R draws of q. vwaic == -2 (vlppd - p_vwaic)
/// and vaic == -2 (loglik_at_plugin - p_vaic) exactly.
CriteriaReport compute_criteria(const OutcomeQState& s,
                                const OutcomeMixtureSpec& spec,
                                const Dataset& ds, int R, std::uint64_t seed);
CriteriaReport compute_criteria(const LatentQState& s,
                                const LatentMixtureSpec& spec,
                                const Dataset& ds, int R, std::uint64_t seed);

/// Single-criterion entry points (identical draws for identical seeds).
template <typename State, typename Spec>
CriteriaReport vwaic(const State& s, const Spec& spec, const Dataset& ds, int R,
                     std::uint64_t seed) {
  return compute_criteria(s, spec, ds, R, seed);
}
template <typename State, typename Spec>
CriteriaReport vaic(const State& s, const Spec& spec, const Dataset& ds, int R,
                    std::uint64_t seed) {
  return compute_criteria(s, spec, ds, R, seed);
}

}  // namespace semvb
