#include "semvb/math_kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace semvb {

namespace {

// Bernoulli-number coefficients B_{2k}/(2k) of the asymptotic expansion.
constexpr double kDigammaAsym[] = {
    1.0 / 12.0,    -1.0 / 120.0,    1.0 / 252.0,    -1.0 / 240.0,
    1.0 / 132.0,   -691.0 / 32760.0, 1.0 / 12.0,
};

void check_symmetric(const Eigen::MatrixXd& A, const char* what) {
  const double scale = 1.0 + A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  }
}

Eigen::MatrixXd vec_inverse(const Eigen::VectorXd& v2) {
  const auto d2 = v2.size();
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(d2))));
  if (d * d != d2) {
    throw std::invalid_argument("g_quadratic: v2 length is not a perfect square");
  }
  return Eigen::Map<const Eigen::MatrixXd>(v2.data(), d, d);
}

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) {
    throw std::domain_error("digamma: requires x > 0, got " + std::to_string(x));
  }
  // Shift to x >= 10, then asymptotic series.
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double term = inv2;
  result += std::log(x) - 0.5 * inv;
  for (double c : kDigammaAsym) {
    result -= c * term;
    term *= inv2;
  }
  return result;
}

double log_gamma(double x) {
  if (!(x > 0.0)) {
    throw std::domain_error("log_gamma: requires x > 0");
  }
  // Lanczos, g = 7, n = 9.
  static constexpr double kCoef[] = {
      0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
      771.32342877765313,       -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7,
  };
  if (x < 0.5) {
    // Reflection keeps accuracy for small arguments.
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double a = kCoef[0];
  for (int i = 1; i < 9; ++i) {
    a += kCoef[i] / (z + i);
  }
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(a);
}

NaturalGaussianParams NaturalGaussianParams::from_moments(
    const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma) {
  check_symmetric(Sigma, "NaturalGaussianParams");
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("NaturalGaussianParams: covariance is not positive definite");
  }
  const Eigen::MatrixXd prec =
      llt.solve(Eigen::MatrixXd::Identity(Sigma.rows(), Sigma.cols()));
  NaturalGaussianParams out;
  out.v1 = prec * mu;
  Eigen::MatrixXd V = -0.5 * prec;
  V = 0.5 * (V + V.transpose());  // keep vec^{-1}(v2) exactly symmetric
  out.v2 = Eigen::Map<const Eigen::VectorXd>(V.data(), V.size());
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> NaturalGaussianParams::to_moments()
    const {
  const Eigen::MatrixXd V = vec_inverse(v2);
  check_symmetric(V, "NaturalGaussianParams::to_moments");
  const Eigen::MatrixXd prec = -2.0 * V;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(prec);
  if (!lu.isInvertible()) {
    throw std::domain_error("NaturalGaussianParams::to_moments: singular precision");
  }
  Eigen::MatrixXd Sigma = lu.inverse();
  Sigma = 0.5 * (Sigma + Sigma.transpose());
  return {Sigma * v1, Sigma};
}

double g_quadratic(const Eigen::VectorXd& v1, const Eigen::VectorXd& v2,
                   const Eigen::MatrixXd& Q, const Eigen::VectorXd& r,
                   double s) {
  const Eigen::MatrixXd V = vec_inverse(v2);
  check_symmetric(V, "g_quadratic");
  check_symmetric(Q, "g_quadratic");
  if (Q.rows() != V.rows() || r.size() != v1.size() || v1.size() != V.rows()) {
    throw std::invalid_argument("g_quadratic: dimension mismatch");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (!lu.isInvertible()) {
    throw std::domain_error("g_quadratic: vec^{-1}(v2) is singular");
  }
  // Moment form: with Sigma = (-2V)^{-1} and mu = Sigma v1 the definition
  // collapses to -(1/2)(mu^T Q mu + tr(Q Sigma) - 2 r^T mu + s).
  const Eigen::MatrixXd Vinv = lu.inverse();
  const Eigen::MatrixXd Sigma = -0.5 * Vinv;
  const Eigen::VectorXd mu = Sigma * v1;
  const double quad = mu.dot(Q * mu);
  const double trace = (Q * Sigma).trace();
  return -0.5 * (quad + trace - 2.0 * r.dot(mu) + s);
}

double g_quadratic(const NaturalGaussianParams& eta, const Eigen::MatrixXd& Q,
                   const Eigen::VectorXd& r, double s) {
  return g_quadratic(eta.v1, eta.v2, Q, r, s);
}

GQuadratic::GQuadratic(const NaturalGaussianParams& eta) {
  const Eigen::MatrixXd V = vec_inverse(eta.v2);
  check_symmetric(V, "GQuadratic");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (!lu.isInvertible()) {
    throw std::domain_error("GQuadratic: vec^{-1}(v2) is singular");
  }
  const Eigen::MatrixXd Sigma = -0.5 * lu.inverse();
  mu_ = Sigma * eta.v1;
  second_moment_ = Sigma + mu_ * mu_.transpose();
}

double GQuadratic::operator()(const Eigen::MatrixXd& Q, const Eigen::VectorXd& r,
                              double s) const {
  check_symmetric(Q, "GQuadratic");
  const double quad = (Q * second_moment_).trace();
  return -0.5 * (quad - 2.0 * r.dot(mu_) + s);
}

double GQuadratic::rank_one(const Eigen::VectorXd& x, double r_scale,
                            double s) const {
  const double quad = x.dot(second_moment_ * x);
  return -0.5 * (quad - 2.0 * r_scale * x.dot(mu_) + s);
}

InverseGammaMoments inverse_gamma_moments(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("inverse_gamma_moments: alpha and beta must be positive");
  }
  InverseGammaMoments m;
  m.mean_inv = alpha / beta;
  m.mean_log = std::log(beta) - digamma(alpha);
  if (alpha > 1.0) {
    m.mean = beta / (alpha - 1.0);
  }
  return m;
}

Eigen::VectorXd dirichlet_log_expectations(const Eigen::VectorXd& alpha) {
  if (alpha.size() == 0 || (alpha.array() <= 0.0).any()) {
    throw std::domain_error("dirichlet_log_expectations: entries must be positive");
  }
  const double dg_total = digamma(alpha.sum());
  Eigen::VectorXd out(alpha.size());
  for (Eigen::Index h = 0; h < alpha.size(); ++h) {
    out[h] = digamma(alpha[h]) - dg_total;
  }
  return out;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  double mx = v[0];
  for (double x : v) {
    mx = std::max(mx, x);
  }
  if (!std::isfinite(mx)) {
    return mx;
  }
  double acc = 0.0;
  for (double x : v) {
    acc += std::exp(x - mx);
  }
  return mx + std::log(acc);
}

void softmax_in_place(std::span<double> logits) {
  if (logits.empty()) {
    return;
  }
  double mx = logits[0];
  for (double x : logits) {
    mx = std::max(mx, x);
  }
  double sum = 0.0;
  for (double& x : logits) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : logits) {
    x /= sum;
  }
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double acc = 0.0;
    for (double x : v) {
      acc += x;
    }
    return acc;
  }
  const size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  // Acklam's rational approximation, then one Halley refinement step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double t = q * q;
    x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * q /
        (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against erfc.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw std::domain_error("regularized_gamma_p: bad arguments");
  }
  if (x == 0.0) {
    return 0.0;
  }
  const double gln = log_gamma(a);
  if (x < a + 1.0) {
    // Series representation.
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) {
        break;
      }
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Continued fraction for Q, return 1 - Q.
  const double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d0 = 1.0 / b;
  double h = d0;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d0 = an * d0 + b;
    if (std::fabs(d0) < kTiny) d0 = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d0 = 1.0 / d0;
    const double del = d0 * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) {
      break;
    }
  }
  const double q = std::exp(-x + a * std::log(x) - gln) * h;
  return 1.0 - q;
}

double regularized_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0) {
    throw std::domain_error("regularized_beta: bad arguments");
  }
  if (x == 0.0 || x == 1.0) {
    return x;
  }
  const double lbeta = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  const bool swap = x > (a + 1.0) / (a + b + 2.0);
  const double aa = swap ? b : a;
  const double bb = swap ? a : b;
  const double xx = swap ? 1.0 - x : x;
  // Lentz continued fraction.
  const double kTiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (aa + bb) * xx / (aa + 1.0);
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (bb - m) * xx / ((aa + m2 - 1.0) * (aa + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(aa + m) * (aa + bb + m) * xx / ((aa + m2) * (aa + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) {
      break;
    }
  }
  const double swapped_front =
      std::exp(aa * std::log(xx) + bb * std::log(1.0 - xx) - lbeta);
  const double val = swapped_front * h / aa;
  return swap ? 1.0 - val : val;
}

namespace {

// Monotone-root bisection: f increasing, f(lo) <= target <= f(hi).
template <typename F>
double bisect(F f, double lo, double hi, double target) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double inverse_gamma_quantile(double alpha, double beta, double p) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::domain_error("inverse_gamma_quantile: bad parameters");
  }
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("inverse_gamma_quantile: p must lie in (0, 1)");
  }
  // P(X <= x) = 1 - P(alpha, beta/x); solve in t = beta/x where the CDF of
  // the Gamma companion is regularized_gamma_p(alpha, t) = 1 - p.
  double lo = 1e-12;
  double hi = std::max(4.0 * alpha, 16.0);
  while (regularized_gamma_p(alpha, hi) < 1.0 - p) {
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  while (regularized_gamma_p(alpha, lo) > 1.0 - p) {
    lo *= 0.5;
    if (lo < 1e-290) break;
  }
  const double t =
      bisect([&](double v) { return regularized_gamma_p(alpha, v); }, lo, hi, 1.0 - p);
  return beta / t;
}

double beta_quantile(double a, double b, double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("beta_quantile: p must lie in (0, 1)");
  }
  return bisect([&](double x) { return regularized_beta(a, b, x); }, 0.0, 1.0, p);
}

}  // namespace semvb
