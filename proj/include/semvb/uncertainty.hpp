#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semvb/dataset.hpp"
#include "semvb/latent_model.hpp"
#include "semvb/outcome_model.hpp"

namespace semvb {

/// One scalar q-density block, enough to take central quantiles from.
struct QBlock {
  enum class Kind { gaussian, inverse_gamma, dirichlet_marginal };
  Kind kind;
  double a = 0.0;  // mean / alpha / alpha_h
  double b = 0.0;  // variance / beta / (alpha_total - alpha_h)
};

/// Central credible interval at the given level from the q-density quantiles.
std::pair<double, double> credible_interval(const QBlock& q, double level);

/// Flattened scalar parameter report for the outcome-mixture model, in a
/// fixed order; callers must pass a component-sorted state.
std::vector<std::string> outcome_parameter_names(const OutcomeMixtureSpec& spec,
                                                 int p);
Eigen::VectorXd outcome_parameter_estimates(const OutcomeQState& sorted,
                                            const OutcomeMixtureSpec& spec);
std::vector<QBlock> outcome_parameter_qblocks(const OutcomeQState& sorted,
                                              const OutcomeMixtureSpec& spec);

struct BootstrapResult {
  std::vector<std::string> parameter_names;
  Eigen::MatrixXd estimates;      // rows: successful replicates
  Eigen::MatrixXd intervals;      // P x 2 percentile bounds
  Eigen::MatrixXi indices;        // B x N resampled row indices
  int requested = 0;
  int failed = 0;
};

/// Nonparametric bootstrap: resamples individuals with replacement, refits
/// with the same options, and takes per-parameter percentile intervals of
/// the component-sorted q-means. Fails if more than 20% of replicates fail.
BootstrapResult bootstrap(const OutcomeMixtureSpec& spec, const Dataset& ds,
                          int B, const FitOptions& fit_options,
                          std::uint64_t seed, double level, int threads = 0);

/// Linear-interpolation ("type 7") empirical quantile of sorted values.
double quantile_type7(const std::vector<double>& sorted_values, double p);

/// Replicated outcome matrices from the posterior predictive; only observed
/// cells are populated (NaN elsewhere). Indicators are drawn explicitly.
std::vector<Eigen::MatrixXd> posterior_predictive(const OutcomeQState& s,
                                                  const OutcomeMixtureSpec& spec,
                                                  const Dataset& ds, int n_draws,
                                                  std::uint64_t seed);
std::vector<Eigen::MatrixXd> posterior_predictive(const LatentQState& s,
                                                  const LatentMixtureSpec& spec,
                                                  const Dataset& ds, int n_draws,
                                                  std::uint64_t seed);

struct KdeResult {
  Eigen::VectorXd grid;     // 512 points spanning range +- 3 bandwidths
  Eigen::VectorXd density;
  double bandwidth = 0.0;
};

/// Gaussian-kernel density estimate; Silverman's rule when bandwidth absent.
KdeResult kde(const std::vector<double>& values, double bandwidth = 0.0);

}  // namespace semvb
