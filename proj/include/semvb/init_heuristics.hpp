#pragma once

#include <Eigen/Dense>

#include <vector>

#include "semvb/rng.hpp"

namespace semvb {

struct GmmFit {
  Eigen::VectorXd means;
  Eigen::VectorXd variances;
  Eigen::VectorXd weights;
  double loglik = 0.0;
  bool converged = false;
  std::vector<double> loglik_trace;  // best run, one value per E step
};

/// Univariate H-component Gaussian mixture via EM; best of `restarts`
/// k-means++-style seeded runs. Variances are floored at 1e-6 * var(values).
GmmFit gmm_em(const std::vector<double>& values, int H, int restarts,
              double tol, Rng& rng);

/// Chooses the component count minimizing BIC = -2 loglik + (3H - 1) log n
/// over H = 1..H_max, ties broken toward smaller H.
int select_components(const std::vector<double>& values, int H_max, Rng& rng);

/// As select_components, also returning the BIC value per candidate H.
std::pair<int, std::vector<double>> select_components_with_bic(
    const std::vector<double>& values, int H_max, Rng& rng);

struct MixRegFit {
  Eigen::VectorXd intercepts;       // K
  Eigen::MatrixXd coefficients;     // p x K
  Eigen::VectorXd variances;        // K
  Eigen::VectorXd weights;          // K
  Eigen::MatrixXd responsibilities; // n x K
  double loglik = 0.0;
  bool converged = false;
  std::vector<double> loglik_trace;
};

/// K-component mixture of linear regressions of y on X (no intercept column
/// in X; intercepts are reported separately).
MixRegFit mixreg_em(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, int K,
                    int restarts, double tol, Rng& rng);

}  // namespace semvb
