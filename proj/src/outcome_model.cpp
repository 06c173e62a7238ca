#include "semvb/outcome_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "semvb/errors.hpp"
#include "semvb/math_kernels.hpp"

namespace semvb {

int OutcomeMixtureSpec::max_h() const {
  int h = 1;
  for (int hj : H) {
    h = std::max(h, hj);
  }
  return h;
}

OutcomeMixtureSpec OutcomeMixtureSpec::with_shared_priors(
    std::vector<int> H, int p, double mu_lambda, double sigma2_lambda,
    double mu_mu, double sigma2_mu, double alpha_psi2, double beta_psi2,
    double alpha_sigma2, double beta_sigma2, double alpha_w,
    double sigma2_beta_diag) {
  OutcomeMixtureSpec s;
  const int M = static_cast<int>(H.size());
  s.H = std::move(H);
  s.mu_lambda = mu_lambda;
  s.sigma2_lambda = sigma2_lambda;
  s.mu_mu = Eigen::MatrixXd::Constant(M, s.max_h(), mu_mu);
  s.sigma2_mu = Eigen::MatrixXd::Constant(M, s.max_h(), sigma2_mu);
  s.alpha_psi2 = alpha_psi2;
  s.beta_psi2 = beta_psi2;
  s.alpha_sigma2 = alpha_sigma2;
  s.beta_sigma2 = beta_sigma2;
  s.alpha_w = alpha_w;
  s.mu_beta = Eigen::VectorXd::Zero(p);
  s.Sigma_beta = sigma2_beta_diag * Eigen::MatrixXd::Identity(p, p);
  return s;
}

void OutcomeMixtureSpec::validate(int M, int p) const {
  if (static_cast<int>(H.size()) != M) {
    throw ConfigError("spec: H lists " + std::to_string(H.size()) +
                      " outcomes but the data has " + std::to_string(M));
  }
  for (int j = 0; j < M; ++j) {
    if (H[j] < 1) {
      throw ConfigError("spec: H[" + std::to_string(j + 1) + "] must be >= 1");
    }
  }
  if (mu_mu.rows() != M || mu_mu.cols() < max_h() || sigma2_mu.rows() != M ||
      sigma2_mu.cols() < max_h()) {
    throw ConfigError("spec: intercept prior matrices must be M x max(H)");
  }
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < H[j]; ++h) {
      if (!(sigma2_mu(j, h) > 0.0)) {
        throw ConfigError("spec: sigma2_mu must be positive");
      }
    }
  }
  if (!(sigma2_lambda > 0.0) || !(alpha_psi2 > 0.0) || !(beta_psi2 > 0.0) ||
      !(alpha_sigma2 > 0.0) || !(beta_sigma2 > 0.0) || !(alpha_w > 0.0)) {
    throw ConfigError("spec: variance/shape/rate hyperparameters must be positive");
  }
  if (mu_beta.size() != p || Sigma_beta.rows() != p || Sigma_beta.cols() != p) {
    throw ConfigError("spec: regression prior dimensions must match p = " +
                      std::to_string(p));
  }
  if (p > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma_beta);
    if (llt.info() != Eigen::Success) {
      throw ConfigError("spec: Sigma_beta is not symmetric positive definite");
    }
  }
}

OutcomeQState OutcomeQState::sorted_by_intercept(
    const OutcomeMixtureSpec& spec) const {
  OutcomeQState out = *this;
  const int M = spec.n_outcomes();
  for (int j = 0; j < M; ++j) {
    const int H = spec.H[j];
    if (H <= 1) {
      continue;
    }
    std::vector<int> order(H);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return mu_q_mu(j, a) < mu_q_mu(j, b);
    });
    for (int h = 0; h < H; ++h) {
      const int src = order[h];
      out.mu_q_mu(j, h) = mu_q_mu(j, src);
      out.sigma2_q_mu(j, h) = sigma2_q_mu(j, src);
      out.mu_q_mu2(j, h) = mu_q_mu2(j, src);
      out.alpha_q_psi2(j, h) = alpha_q_psi2(j, src);
      out.beta_q_psi2(j, h) = beta_q_psi2(j, src);
      out.mu_q_inv_psi2(j, h) = mu_q_inv_psi2(j, src);
      out.mu_q_log_psi2(j, h) = mu_q_log_psi2(j, src);
      out.alpha_q_w[j][h] = alpha_q_w[j][src];
      out.mu_q_log_w[j][h] = mu_q_log_w[j][src];
      out.mu_q_a[j].col(h) = mu_q_a[j].col(src);
    }
  }
  return out;
}

OutcomeFitter::OutcomeFitter(const OutcomeMixtureSpec& spec, const Dataset& ds)
    : spec_(spec), ds_(ds) {
  ds_.validate();
  spec_.validate(ds_.m(), ds_.p());
  const int N = ds_.n();
  const int M = ds_.m();
  obs_rows_.resize(M);
  obs_cols_.resize(N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < M; ++j) {
      if (ds_.observed(i, j)) {
        obs_rows_[j].push_back(i);
        obs_cols_[i].push_back(j);
      }
    }
  }
  const int p = ds_.p();
  xxt_sum_ = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < N; ++i) {
    xxt_sum_.noalias() += ds_.x.row(i).transpose() * ds_.x.row(i);
  }
  if (p > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(spec_.Sigma_beta);
    Sigma_beta_inv_ = llt.solve(Eigen::MatrixXd::Identity(p, p));
    Sigma_beta_inv_mu_ = Sigma_beta_inv_ * spec_.mu_beta;
  } else {
    Sigma_beta_inv_.resize(0, 0);
    Sigma_beta_inv_mu_.resize(0);
  }
}

OutcomeQState OutcomeFitter::init_state(const InitOptions& init, Rng& rng) const {
  const int N = ds_.n();
  const int M = ds_.m();
  const int Hmax = spec_.max_h();
  if (init.intercept_means &&
      (init.intercept_means->rows() != M || init.intercept_means->cols() < Hmax)) {
    throw ConfigError("init: intercept_means must be M x max(H)");
  }

  OutcomeQState s;
  s.mu_q_mu.setZero(M, Hmax);
  s.sigma2_q_mu.setZero(M, Hmax);
  s.mu_q_mu2.setZero(M, Hmax);
  s.alpha_q_psi2.setZero(M, Hmax);
  s.beta_q_psi2.setZero(M, Hmax);
  s.mu_q_inv_psi2.setZero(M, Hmax);
  s.mu_q_log_psi2.setZero(M, Hmax);
  s.alpha_q_w.resize(M);
  s.mu_q_log_w.resize(M);
  s.mu_q_a.resize(M);
  s.mu_q_lambda = Eigen::VectorXd::Ones(M);
  s.sigma2_q_lambda = Eigen::VectorXd::Ones(M);
  s.mu_q_lambda2 = Eigen::VectorXd::Constant(M, 2.0);
  s.mu_q_lambda[0] = 1.0;
  s.sigma2_q_lambda[0] = 0.0;
  s.mu_q_lambda2[0] = 1.0;
  s.mu_q_eta = Eigen::VectorXd::Zero(N);
  s.sigma2_q_eta = Eigen::VectorXd::Ones(N);
  s.mu_q_eta2 = Eigen::VectorXd::Ones(N);
  s.mu_q_beta = Eigen::VectorXd::Zero(ds_.p());
  s.Sigma_q_beta = spec_.Sigma_beta;
  s.alpha_q_sigma2 = 0.5 * (N + 2.0 * spec_.alpha_sigma2);
  s.mu_q_inv_sigma2 = 1.0;
  s.beta_q_sigma2 = s.alpha_q_sigma2;  // consistent with mu_q_inv_sigma2 = 1

  for (int j = 0; j < M; ++j) {
    const int H = spec_.H[j];
    // Observed-column mean and variance drive the starting point.
    double sum = 0.0;
    int cnt = 0;
    for (int i : obs_rows_[j]) {
      sum += ds_.y(i, j);
      ++cnt;
    }
    const double mean = cnt > 0 ? sum / cnt : 0.0;
    double ss = 0.0;
    for (int i : obs_rows_[j]) {
      const double d = ds_.y(i, j) - mean;
      ss += d * d;
    }
    const double var = cnt > 1 ? ss / (cnt - 1) : 1.0;
    const double safe_var = var > 0.0 ? var : 1.0;
    const double sd = std::sqrt(safe_var);

    s.alpha_q_w[j] = Eigen::VectorXd::Constant(H, spec_.alpha_w);
    s.mu_q_log_w[j] = Eigen::VectorXd::Constant(H, std::log(1.0 / H));
    s.mu_q_a[j] = Eigen::MatrixXd::Constant(N, H, 1.0 / H);
    for (int h = 0; h < H; ++h) {
      double center;
      if (init.intercept_means) {
        center = (*init.intercept_means)(j, h);
      } else if (H == 1) {
        center = mean;
      } else {
        // Spread the components around the mean to break symmetry.
        const double t = 2.0 * h / (H - 1.0) - 1.0;
        center = mean + init.intercept_spread * t * sd;
      }
      if (init.jitter_sd > 0.0) {
        center += draw_normal(0.0, init.jitter_sd * init.jitter_sd, rng);
      }
      s.mu_q_mu(j, h) = center;
      s.sigma2_q_mu(j, h) = safe_var;
      s.mu_q_mu2(j, h) = center * center + safe_var;
      s.mu_q_inv_psi2(j, h) = 1.0 / safe_var;
      s.mu_q_log_psi2(j, h) = std::log(safe_var);
      s.alpha_q_psi2(j, h) = spec_.alpha_psi2;
      s.beta_q_psi2(j, h) = spec_.alpha_psi2 * safe_var;
    }
  }
  return s;
}

void OutcomeFitter::update_responsibilities(OutcomeQState& s, int j) const {
  const int H = spec_.H[j];
  if (H == 1) {
    for (int i : obs_rows_[j]) {
      s.mu_q_a[j](i, 0) = 1.0;
    }
    return;
  }
  Eigen::VectorXd tau(H);
  for (int i : obs_rows_[j]) {
    const double y = ds_.y(i, j);
    const double lam = s.mu_q_lambda[j];
    const double lam2 = s.mu_q_lambda2[j];
    const double eta = s.mu_q_eta[i];
    const double eta2 = s.mu_q_eta2[i];
    for (int h = 0; h < H; ++h) {
      const double quad = y * y + s.mu_q_mu2(j, h) + lam2 * eta2 -
                          2.0 * y * s.mu_q_mu(j, h) - 2.0 * y * lam * eta +
                          2.0 * s.mu_q_mu(j, h) * lam * eta;
      tau[h] = s.mu_q_log_w[j][h] - 0.5 * s.mu_q_log_psi2(j, h) -
               0.5 * kLog2Pi - 0.5 * s.mu_q_inv_psi2(j, h) * quad;
    }
    softmax_in_place({tau.data(), static_cast<size_t>(H)});
    s.mu_q_a[j].row(i) = tau.transpose();
  }
}

void OutcomeFitter::update_loadings(OutcomeQState& s, int j) const {
  if (j < 1) {
    throw std::invalid_argument("update_loadings: loading of the first outcome is pinned");
  }
  const int H = spec_.H[j];
  double prec = 1.0 / spec_.sigma2_lambda;
  double lin = spec_.mu_lambda / spec_.sigma2_lambda;
  for (int i : obs_rows_[j]) {
    const double y = ds_.y(i, j);
    for (int h = 0; h < H; ++h) {
      const double a = s.mu_q_a[j](i, h);
      const double invpsi = s.mu_q_inv_psi2(j, h);
      prec += a * s.mu_q_eta2[i] * invpsi;
      lin += a * s.mu_q_eta[i] * invpsi * (y - s.mu_q_mu(j, h));
    }
  }
  const double var = 1.0 / prec;
  s.sigma2_q_lambda[j] = var;
  s.mu_q_lambda[j] = var * lin;
  s.mu_q_lambda2[j] = var + s.mu_q_lambda[j] * s.mu_q_lambda[j];
}

void OutcomeFitter::update_intercepts(OutcomeQState& s, int j) const {
  const int H = spec_.H[j];
  for (int h = 0; h < H; ++h) {
    double prec = 1.0 / spec_.sigma2_mu(j, h);
    double lin = spec_.mu_mu(j, h) / spec_.sigma2_mu(j, h);
    const double invpsi = s.mu_q_inv_psi2(j, h);
    for (int i : obs_rows_[j]) {
      const double a = s.mu_q_a[j](i, h);
      prec += a * invpsi;
      lin += a * invpsi * (ds_.y(i, j) - s.mu_q_lambda[j] * s.mu_q_eta[i]);
    }
    const double var = 1.0 / prec;
    s.sigma2_q_mu(j, h) = var;
    s.mu_q_mu(j, h) = var * lin;
    s.mu_q_mu2(j, h) = var + s.mu_q_mu(j, h) * s.mu_q_mu(j, h);
  }
}

void OutcomeFitter::update_noise_and_weights(OutcomeQState& s, int j) const {
  const int H = spec_.H[j];
  const double lam = s.mu_q_lambda[j];
  const double lam2 = s.mu_q_lambda2[j];
  for (int h = 0; h < H; ++h) {
    double asum = 0.0;
    double quad = 0.0;
    for (int i : obs_rows_[j]) {
      const double a = s.mu_q_a[j](i, h);
      const double y = ds_.y(i, j);
      asum += a;
      quad += a * (y * y + s.mu_q_mu2(j, h) + lam2 * s.mu_q_eta2[i] -
                   2.0 * y * s.mu_q_mu(j, h) - 2.0 * y * lam * s.mu_q_eta[i] +
                   2.0 * s.mu_q_mu(j, h) * lam * s.mu_q_eta[i]);
    }
    const double alpha = 0.5 * asum + spec_.alpha_psi2;
    const double beta = spec_.beta_psi2 + 0.5 * quad;
    s.alpha_q_psi2(j, h) = alpha;
    s.beta_q_psi2(j, h) = beta;
    s.mu_q_inv_psi2(j, h) = alpha / beta;
    s.mu_q_log_psi2(j, h) = std::log(beta) - digamma(alpha);
    if (H > 1) {
      s.alpha_q_w[j][h] = asum + spec_.alpha_w;
    }
  }
  if (H > 1) {
    s.mu_q_log_w[j] = dirichlet_log_expectations(s.alpha_q_w[j]);
  }
}

void OutcomeFitter::update_latents(OutcomeQState& s) const {
  const int N = ds_.n();
  for (int i = 0; i < N; ++i) {
    double prec = s.mu_q_inv_sigma2;
    double lin = s.mu_q_inv_sigma2 * ds_.x.row(i).dot(s.mu_q_beta);
    for (int j : obs_cols_[i]) {
      const double y = ds_.y(i, j);
      for (int h = 0; h < spec_.H[j]; ++h) {
        const double a = s.mu_q_a[j](i, h);
        const double invpsi = s.mu_q_inv_psi2(j, h);
        prec += a * s.mu_q_lambda2[j] * invpsi;
        lin += a * s.mu_q_lambda[j] * (y - s.mu_q_mu(j, h)) * invpsi;
      }
    }
    const double var = 1.0 / prec;
    s.sigma2_q_eta[i] = var;
    s.mu_q_eta[i] = var * lin;
    s.mu_q_eta2[i] = var + s.mu_q_eta[i] * s.mu_q_eta[i];
  }
}

void OutcomeFitter::update_regression_beta(OutcomeQState& s) const {
  const int p = ds_.p();
  if (p == 0) {
    return;
  }
  Eigen::MatrixXd prec = s.mu_q_inv_sigma2 * xxt_sum_ + Sigma_beta_inv_;
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("regression update: precision matrix is not positive definite");
  }
  s.Sigma_q_beta = llt.solve(Eigen::MatrixXd::Identity(p, p));
  s.Sigma_q_beta = 0.5 * (s.Sigma_q_beta + s.Sigma_q_beta.transpose());
  Eigen::VectorXd lin = Sigma_beta_inv_mu_;
  for (int i = 0; i < ds_.n(); ++i) {
    lin.noalias() += s.mu_q_inv_sigma2 * s.mu_q_eta[i] * ds_.x.row(i).transpose();
  }
  s.mu_q_beta = s.Sigma_q_beta * lin;
}

void OutcomeFitter::update_regression_sigma2(OutcomeQState& s) const {
  const int p = ds_.p();
  double gsum = 0.0;
  if (p > 0) {
    const NaturalGaussianParams eta_beta =
        NaturalGaussianParams::from_moments(s.mu_q_beta, s.Sigma_q_beta);
    const GQuadratic g(eta_beta);
    for (int i = 0; i < ds_.n(); ++i) {
      const Eigen::VectorXd xi = ds_.x.row(i).transpose();
      gsum += g.rank_one(xi, s.mu_q_eta[i], s.mu_q_eta2[i]);
    }
  } else {
    for (int i = 0; i < ds_.n(); ++i) {
      gsum += -0.5 * s.mu_q_eta2[i];
    }
  }
  const double beta = -gsum + spec_.beta_sigma2;
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw NumericalError("sigma2 update: nonpositive rate parameter");
  }
  s.beta_q_sigma2 = beta;
  s.mu_q_inv_sigma2 = s.alpha_q_sigma2 / beta;
}

void OutcomeFitter::update_regression(OutcomeQState& s) const {
  update_regression_beta(s);
  update_regression_sigma2(s);
}

void OutcomeFitter::sweep(OutcomeQState& s) const {
  for (int j = 0; j < ds_.m(); ++j) {
    update_responsibilities(s, j);
    if (j >= 1) {
      update_loadings(s, j);
    }
    update_intercepts(s, j);
    update_noise_and_weights(s, j);
  }
  update_latents(s);
  update_regression(s);
}

void OutcomeFitter::collect_scalars(const OutcomeQState& s,
                                    std::vector<double>& out) const {
  out.clear();
  const int M = ds_.m();
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < spec_.H[j]; ++h) {
      out.push_back(s.mu_q_mu(j, h));
      out.push_back(s.sigma2_q_mu(j, h));
      out.push_back(s.alpha_q_psi2(j, h));
      out.push_back(s.beta_q_psi2(j, h));
      out.push_back(s.alpha_q_w[j][h]);
    }
    if (j >= 1) {
      out.push_back(s.mu_q_lambda[j]);
      out.push_back(s.sigma2_q_lambda[j]);
    }
  }
  for (int i = 0; i < ds_.n(); ++i) {
    out.push_back(s.mu_q_eta[i]);
    out.push_back(s.sigma2_q_eta[i]);
  }
  for (Eigen::Index k = 0; k < s.mu_q_beta.size(); ++k) {
    out.push_back(s.mu_q_beta[k]);
  }
  for (Eigen::Index r = 0; r < s.Sigma_q_beta.rows(); ++r) {
    for (Eigen::Index c = 0; c <= r; ++c) {
      out.push_back(s.Sigma_q_beta(r, c));
    }
  }
  out.push_back(s.mu_q_inv_sigma2);
  for (int j = 0; j < M; ++j) {
    for (int i : obs_rows_[j]) {
      for (int h = 0; h < spec_.H[j]; ++h) {
        out.push_back(s.mu_q_a[j](i, h));
      }
    }
  }
}

double max_relative_change(const std::vector<double>& before,
                           const std::vector<double>& after) {
  double metric = 0.0;
  for (size_t k = 0; k < before.size(); ++k) {
    const double denom = std::fabs(before[k]) + 1e-8;
    metric = std::max(metric, std::fabs(after[k] - before[k]) / denom);
  }
  return metric;
}

FitReport OutcomeFitter::fit_from(OutcomeQState& s, const FitOptions& options) const {
  const auto t0 = std::chrono::steady_clock::now();
  FitReport report;
  std::vector<double> before;
  std::vector<double> after;
  collect_scalars(s, before);
  for (int it = 0; it < options.max_iter; ++it) {
    try {
      sweep(s);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (iteration " +
                           std::to_string(it + 1) + ")");
    }
    collect_scalars(s, after);
    const double metric = max_relative_change(before, after);
    report.metric_trace.push_back(metric);
    report.iterations = it + 1;
    std::swap(before, after);
    if (metric < options.tol) {
      report.converged = true;
      break;
    }
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::pair<OutcomeQState, FitReport> OutcomeFitter::fit(
    const FitOptions& options) const {
  Rng rng(options.seed);
  OutcomeQState s = init_state(options.init, rng);
  FitReport report = fit_from(s, options);
  return {std::move(s), std::move(report)};
}

}  // namespace semvb
