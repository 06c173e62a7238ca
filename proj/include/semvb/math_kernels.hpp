#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>

namespace semvb {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Digamma function psi0(x) for x > 0. Absolute error below 1e-12 for
/// x >= 1e-6. Throws std::domain_error for x <= 0.
double digamma(double x);

/// log Gamma(x) for x > 0 (Lanczos approximation, ~1e-13 relative).
double log_gamma(double x);

/// Natural parameterization of a d-dimensional Gaussian:
/// v1 = Sigma^{-1} mu, v2 = vec(-1/2 Sigma^{-1}).
struct NaturalGaussianParams {
  Eigen::VectorXd v1;
  Eigen::VectorXd v2;

  int dim() const { return static_cast<int>(v1.size()); }

  static NaturalGaussianParams from_moments(const Eigen::VectorXd& mu,
                                            const Eigen::MatrixXd& Sigma);

  /// Recovers (mu, Sigma). Throws if vec^{-1}(v2) is singular.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> to_moments() const;
};

/// Expected Gaussian quadratic form in natural parameters:
///   G([v1,v2]; Q, r, s) = -(1/8) tr(Q V^{-1} [v1 v1^T V^{-1} - 2 I])
///                         - (1/2) r^T V^{-1} v1 - s/2,   V = vec^{-1}(v2).
/// Evaluated internally via the moment form for stability. Requires Q
/// symmetric and V invertible.
double g_quadratic(const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
                   const Eigen::MatrixXd& Q, const Eigen::VectorXd& r,
                   double s);
double g_quadratic(const NaturalGaussianParams& eta, const Eigen::MatrixXd& Q,
                   const Eigen::VectorXd& r, double s);

/// Factors vec^{-1}(v2) once so that repeated evaluations of G with the same
/// natural parameters stay cheap inside update loops.
class GQuadratic {
 public:
  explicit GQuadratic(const NaturalGaussianParams& eta);

  double operator()(const Eigen::MatrixXd& Q, const Eigen::VectorXd& r,
                    double s) const;

  /// Specialization for Q = x x^T, r = r_scale * x (the regression updates).
  double rank_one(const Eigen::VectorXd& x, double r_scale, double s) const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd second_moment_;  // Sigma + mu mu^T
};

struct InverseGammaMoments {
  double mean_inv;            // E[1/X] = alpha/beta
  double mean_log;            // E[log X] = log(beta) - digamma(alpha)
  std::optional<double> mean; // E[X] = beta/(alpha-1), present iff alpha > 1
};

InverseGammaMoments inverse_gamma_moments(double alpha, double beta);

/// Component h gets digamma(alpha_h) - digamma(sum(alpha)).
Eigen::VectorXd dirichlet_log_expectations(const Eigen::VectorXd& alpha);

double log_sum_exp(std::span<const double> v);

/// Replaces logits with softmax probabilities (max-subtraction).
void softmax_in_place(std::span<double> logits);

/// Deterministic pairwise tree summation.
double pairwise_sum(std::span<const double> v);

/// Standard normal quantile (inverse CDF), accurate to ~1e-14.
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double regularized_beta(double a, double b, double x);

/// Quantile of the Inverse-Gamma(alpha, beta) distribution.
double inverse_gamma_quantile(double alpha, double beta, double p);

/// Quantile of the Beta(a, b) distribution.
double beta_quantile(double a, double b, double p);

}  // namespace semvb
