#include "semvb/latent_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "semvb/errors.hpp"
#include "semvb/init_heuristics.hpp"
#include "semvb/math_kernels.hpp"

namespace semvb {

void LatentMixtureSpec::validate(int p) const {
  if (K < 1) {
    throw ConfigError("spec: K must be >= 1");
  }
  if (!(sigma2_nu > 0.0) || !(sigma2_lambda > 0.0) || !(alpha_psi2 > 0.0) ||
      !(beta_psi2 > 0.0) || !(alpha_sigma2 > 0.0) || !(beta_sigma2 > 0.0) ||
      !(alpha_w > 0.0)) {
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

LatentQState LatentQState::sorted_by_projection(const Eigen::VectorXd& x_bar) const {
  LatentQState out = *this;
  const int K = static_cast<int>(alpha_q_w.size());
  if (K <= 1) {
    return out;
  }
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return x_bar.dot(mu_q_beta_k[a]) < x_bar.dot(mu_q_beta_k[b]);
  });
  for (int k = 0; k < K; ++k) {
    const int src = order[k];
    out.mu_q_beta_k[k] = mu_q_beta_k[src];
    out.Sigma_q_beta_k[k] = Sigma_q_beta_k[src];
    out.alpha_q_sigma2_k[k] = alpha_q_sigma2_k[src];
    out.beta_q_sigma2_k[k] = beta_q_sigma2_k[src];
    out.mu_q_inv_sigma2_k[k] = mu_q_inv_sigma2_k[src];
    out.mu_q_log_sigma2_k[k] = mu_q_log_sigma2_k[src];
    out.alpha_q_w[k] = alpha_q_w[src];
    out.mu_q_log_w[k] = mu_q_log_w[src];
    out.mu_q_a.col(k) = mu_q_a.col(src);
  }
  return out;
}

LatentFitter::LatentFitter(const LatentMixtureSpec& spec, const Dataset& ds)
    : spec_(spec), ds_(ds) {
  ds_.validate();
  spec_.validate(ds_.p());
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
  if (p > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(spec_.Sigma_beta);
    Sigma_beta_inv_ = llt.solve(Eigen::MatrixXd::Identity(p, p));
    Sigma_beta_inv_mu_ = Sigma_beta_inv_ * spec_.mu_beta;
  } else {
    Sigma_beta_inv_.resize(0, 0);
    Sigma_beta_inv_mu_.resize(0);
  }
}

LatentQState LatentFitter::init_state(const LatentInitOptions& init,
                                      Rng& rng) const {
  const int N = ds_.n();
  const int M = ds_.m();
  const int K = spec_.K;
  const int p = ds_.p();

  LatentQState s;
  s.mu_q_nu.resize(M);
  s.sigma2_q_nu.resize(M);
  s.mu_q_nu2.resize(M);
  s.alpha_q_psi2.resize(M);
  s.beta_q_psi2.resize(M);
  s.mu_q_inv_psi2.resize(M);
  s.mu_q_lambda = Eigen::VectorXd::Ones(M);
  s.sigma2_q_lambda = Eigen::VectorXd::Ones(M);
  s.mu_q_lambda2 = Eigen::VectorXd::Constant(M, 2.0);
  s.mu_q_lambda[0] = 1.0;
  s.sigma2_q_lambda[0] = 0.0;
  s.mu_q_lambda2[0] = 1.0;
  s.mu_q_eta = Eigen::VectorXd::Zero(N);
  s.sigma2_q_eta = Eigen::VectorXd::Ones(N);
  s.mu_q_eta2 = Eigen::VectorXd::Ones(N);
  s.mu_q_a = Eigen::MatrixXd::Constant(N, K, 1.0 / K);
  s.mu_q_beta_k.assign(K, Eigen::VectorXd::Zero(p));
  s.Sigma_q_beta_k.assign(K, spec_.Sigma_beta);
  s.alpha_q_sigma2_k = Eigen::VectorXd::Constant(K, spec_.alpha_sigma2 + 0.5 * N / K);
  s.beta_q_sigma2_k = Eigen::VectorXd::Constant(K, spec_.beta_sigma2);
  s.mu_q_inv_sigma2_k.resize(K);
  s.mu_q_log_sigma2_k.resize(K);
  s.alpha_q_w = Eigen::VectorXd::Constant(K, spec_.alpha_w);
  s.mu_q_log_w = Eigen::VectorXd::Constant(K, std::log(1.0 / K));

  for (int j = 0; j < M; ++j) {
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
    s.mu_q_nu[j] = mean;
    s.sigma2_q_nu[j] = safe_var;
    s.mu_q_nu2[j] = mean * mean + safe_var;
    s.alpha_q_psi2[j] = 0.5 * cnt + spec_.alpha_psi2;
    s.mu_q_inv_psi2[j] = 1.0 / safe_var;
    s.beta_q_psi2[j] = s.alpha_q_psi2[j] * safe_var;
  }
  if (spec_.pin_nu1) {
    s.mu_q_nu[0] = *spec_.pin_nu1;
    s.sigma2_q_nu[0] = 0.0;
    s.mu_q_nu2[0] = s.mu_q_nu[0] * s.mu_q_nu[0];
  }

  // Deterministic symmetry breaking for the component blocks.
  for (int k = 0; k < K; ++k) {
    s.mu_q_inv_sigma2_k[k] = 1.0 / (1.0 + k);
    s.mu_q_log_sigma2_k[k] = std::log(1.0 + k);
  }

  const bool explicit_init =
      init.beta_init || init.sigma2_init || init.weights_init;
  if (explicit_init) {
    if (init.beta_init) {
      if (init.beta_init->rows() != p || init.beta_init->cols() != K) {
        throw ConfigError("init: beta_init must be p x K");
      }
      for (int k = 0; k < K; ++k) {
        s.mu_q_beta_k[k] = init.beta_init->col(k);
      }
    }
    if (init.sigma2_init) {
      if (init.sigma2_init->size() != K || (init.sigma2_init->array() <= 0.0).any()) {
        throw ConfigError("init: sigma2_init must be K positive values");
      }
      for (int k = 0; k < K; ++k) {
        s.mu_q_inv_sigma2_k[k] = 1.0 / (*init.sigma2_init)[k];
        s.mu_q_log_sigma2_k[k] = std::log((*init.sigma2_init)[k]);
      }
    }
    if (init.weights_init) {
      if (init.weights_init->size() != K || (init.weights_init->array() <= 0.0).any()) {
        throw ConfigError("init: weights_init must be K positive values");
      }
      const Eigen::VectorXd w = *init.weights_init / init.weights_init->sum();
      for (int k = 0; k < K; ++k) {
        s.mu_q_log_w[k] = std::log(w[k]);
        s.mu_q_a.col(k).setConstant(w[k]);
      }
    }
  } else if (init.mixreg && K > 1 && p > 0) {
    // Seed the mixture from a mixture regression of the reference outcome
    // (the one whose loading is pinned at 1) on the covariates.
    const auto& rows = obs_rows_[0];
    const int n0 = static_cast<int>(rows.size());
    if (n0 > spec_.K * (p + 2)) {
      Eigen::VectorXd y0(n0);
      Eigen::MatrixXd X0(n0, p);
      for (int r = 0; r < n0; ++r) {
        y0[r] = ds_.y(rows[r], 0);
        X0.row(r) = ds_.x.row(rows[r]);
      }
      Rng mixreg_rng = rng.substream(0x6d69787265ULL);
      const MixRegFit mr =
          mixreg_em(y0, X0, K, init.mixreg_restarts, 1e-8, mixreg_rng);
      for (int k = 0; k < K; ++k) {
        s.mu_q_beta_k[k] = mr.coefficients.col(k);
        const double v = std::max(mr.variances[k], 1e-8);
        s.mu_q_inv_sigma2_k[k] = 1.0 / v;
        s.mu_q_log_sigma2_k[k] = std::log(v);
        s.mu_q_log_w[k] = std::log(std::max(mr.weights[k], 1e-8));
        s.mu_q_a.col(k).setConstant(std::max(mr.weights[k], 1e-8));
      }
      for (int r = 0; r < n0; ++r) {
        s.mu_q_a.row(rows[r]) = mr.responsibilities.row(r);
      }
      // Keep the responsibility rows on the simplex.
      for (int i = 0; i < N; ++i) {
        s.mu_q_a.row(i) /= s.mu_q_a.row(i).sum();
      }
    }
  }
  return s;
}

void LatentFitter::update_component_blocks(LatentQState& s) const {
  const int N = ds_.n();
  const int K = spec_.K;
  const int p = ds_.p();
  for (int k = 0; k < K; ++k) {
    double asum = 0.0;
    for (int i = 0; i < N; ++i) {
      asum += s.mu_q_a(i, k);
    }
    if (p > 0) {
      Eigen::MatrixXd xxw = Eigen::MatrixXd::Zero(p, p);
      Eigen::VectorXd lin = Sigma_beta_inv_mu_;
      for (int i = 0; i < N; ++i) {
        const double a = s.mu_q_a(i, k);
        xxw.noalias() += a * ds_.x.row(i).transpose() * ds_.x.row(i);
        lin.noalias() += s.mu_q_inv_sigma2_k[k] * a * s.mu_q_eta[i] *
                         ds_.x.row(i).transpose();
      }
      Eigen::MatrixXd prec = s.mu_q_inv_sigma2_k[k] * xxw + Sigma_beta_inv_;
      Eigen::LLT<Eigen::MatrixXd> llt(prec);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("component regression update: precision not positive definite");
      }
      s.Sigma_q_beta_k[k] = llt.solve(Eigen::MatrixXd::Identity(p, p));
      s.Sigma_q_beta_k[k] = 0.5 * (s.Sigma_q_beta_k[k] + s.Sigma_q_beta_k[k].transpose());
      s.mu_q_beta_k[k] = s.Sigma_q_beta_k[k] * lin;
    }
    // sigma2_k block via the expected quadratic form under q(beta_k).
    double gsum = 0.0;
    if (p > 0) {
      const NaturalGaussianParams nat =
          NaturalGaussianParams::from_moments(s.mu_q_beta_k[k], s.Sigma_q_beta_k[k]);
      const GQuadratic g(nat);
      for (int i = 0; i < N; ++i) {
        gsum += s.mu_q_a(i, k) *
                g.rank_one(ds_.x.row(i).transpose(), s.mu_q_eta[i], s.mu_q_eta2[i]);
      }
    } else {
      for (int i = 0; i < N; ++i) {
        gsum += s.mu_q_a(i, k) * (-0.5 * s.mu_q_eta2[i]);
      }
    }
    const double alpha = 0.5 * asum + spec_.alpha_sigma2;
    const double beta = -gsum + spec_.beta_sigma2;
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw NumericalError("sigma2_k update: nonpositive rate parameter");
    }
    s.alpha_q_sigma2_k[k] = alpha;
    s.beta_q_sigma2_k[k] = beta;
    s.mu_q_log_sigma2_k[k] = std::log(beta) - digamma(alpha);
    s.mu_q_inv_sigma2_k[k] = alpha / beta;
    if (K > 1) {
      s.alpha_q_w[k] = asum + spec_.alpha_w;
    }
  }
  if (K > 1) {
    s.mu_q_log_w = dirichlet_log_expectations(s.alpha_q_w);
  }
}

void LatentFitter::update_responsibilities_and_latents(LatentQState& s) const {
  const int N = ds_.n();
  const int K = spec_.K;
  const int p = ds_.p();
  std::vector<GQuadratic> g;
  g.reserve(K);
  if (p > 0) {
    for (int k = 0; k < K; ++k) {
      g.emplace_back(NaturalGaussianParams::from_moments(s.mu_q_beta_k[k],
                                                         s.Sigma_q_beta_k[k]));
    }
  }
  Eigen::VectorXd tau(K);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd xi = ds_.x.row(i).transpose();
    if (K == 1) {
      s.mu_q_a(i, 0) = 1.0;
    } else {
      for (int k = 0; k < K; ++k) {
        const double gval = p > 0 ? g[k].rank_one(xi, s.mu_q_eta[i], s.mu_q_eta2[i])
                                  : -0.5 * s.mu_q_eta2[i];
        tau[k] = s.mu_q_log_w[k] - 0.5 * s.mu_q_log_sigma2_k[k] - 0.5 * kLog2Pi +
                 s.mu_q_inv_sigma2_k[k] * gval;
      }
      softmax_in_place({tau.data(), static_cast<size_t>(K)});
      s.mu_q_a.row(i) = tau.transpose();
    }
    double prec = 0.0;
    double lin = 0.0;
    for (int k = 0; k < K; ++k) {
      const double a = s.mu_q_a(i, k);
      prec += a * s.mu_q_inv_sigma2_k[k];
      if (p > 0) {
        lin += a * s.mu_q_inv_sigma2_k[k] * xi.dot(s.mu_q_beta_k[k]);
      }
    }
    for (int j : obs_cols_[i]) {
      prec += s.mu_q_lambda2[j] * s.mu_q_inv_psi2[j];
      lin += s.mu_q_lambda[j] * (ds_.y(i, j) - s.mu_q_nu[j]) * s.mu_q_inv_psi2[j];
    }
    const double var = 1.0 / prec;
    s.sigma2_q_eta[i] = var;
    s.mu_q_eta[i] = var * lin;
    s.mu_q_eta2[i] = var + s.mu_q_eta[i] * s.mu_q_eta[i];
  }
}

void LatentFitter::update_outcome_blocks(LatentQState& s) const {
  const int M = ds_.m();
  for (int j = 0; j < M; ++j) {
    if (j >= 1) {
      double prec = 1.0 / spec_.sigma2_lambda;
      double lin = spec_.mu_lambda / spec_.sigma2_lambda;
      for (int i : obs_rows_[j]) {
        prec += s.mu_q_eta2[i] * s.mu_q_inv_psi2[j];
        lin += s.mu_q_eta[i] * s.mu_q_inv_psi2[j] * (ds_.y(i, j) - s.mu_q_nu[j]);
      }
      const double var = 1.0 / prec;
      s.sigma2_q_lambda[j] = var;
      s.mu_q_lambda[j] = var * lin;
      s.mu_q_lambda2[j] = var + s.mu_q_lambda[j] * s.mu_q_lambda[j];
    }
    const bool pinned = (j == 0 && spec_.pin_nu1.has_value());
    if (!pinned) {
      double prec = 1.0 / spec_.sigma2_nu;
      double lin = spec_.mu_nu / spec_.sigma2_nu;
      for (int i : obs_rows_[j]) {
        prec += s.mu_q_inv_psi2[j];
        lin += s.mu_q_inv_psi2[j] *
               (ds_.y(i, j) - s.mu_q_lambda[j] * s.mu_q_eta[i]);
      }
      const double var = 1.0 / prec;
      s.sigma2_q_nu[j] = var;
      s.mu_q_nu[j] = var * lin;
      s.mu_q_nu2[j] = var + s.mu_q_nu[j] * s.mu_q_nu[j];
    }
    double quad = 0.0;
    for (int i : obs_rows_[j]) {
      const double y = ds_.y(i, j);
      quad += y * y + s.mu_q_nu2[j] + s.mu_q_lambda2[j] * s.mu_q_eta2[i] -
              2.0 * y * s.mu_q_nu[j] - 2.0 * y * s.mu_q_lambda[j] * s.mu_q_eta[i] +
              2.0 * s.mu_q_nu[j] * s.mu_q_lambda[j] * s.mu_q_eta[i];
    }
    s.beta_q_psi2[j] = spec_.beta_psi2 + 0.5 * quad;
    s.mu_q_inv_psi2[j] = s.alpha_q_psi2[j] / s.beta_q_psi2[j];
  }
}

void LatentFitter::sweep(LatentQState& s) const {
  update_component_blocks(s);
  update_responsibilities_and_latents(s);
  update_outcome_blocks(s);
}

void LatentFitter::collect_scalars(const LatentQState& s,
                                   std::vector<double>& out) const {
  out.clear();
  const int M = ds_.m();
  const int K = spec_.K;
  for (int j = 0; j < M; ++j) {
    out.push_back(s.mu_q_nu[j]);
    out.push_back(s.sigma2_q_nu[j]);
    out.push_back(s.beta_q_psi2[j]);
    if (j >= 1) {
      out.push_back(s.mu_q_lambda[j]);
      out.push_back(s.sigma2_q_lambda[j]);
    }
  }
  for (int i = 0; i < ds_.n(); ++i) {
    out.push_back(s.mu_q_eta[i]);
    out.push_back(s.sigma2_q_eta[i]);
    for (int k = 0; k < K; ++k) {
      out.push_back(s.mu_q_a(i, k));
    }
  }
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index c = 0; c < s.mu_q_beta_k[k].size(); ++c) {
      out.push_back(s.mu_q_beta_k[k][c]);
    }
    for (Eigen::Index r = 0; r < s.Sigma_q_beta_k[k].rows(); ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) {
        out.push_back(s.Sigma_q_beta_k[k](r, c));
      }
    }
    out.push_back(s.alpha_q_sigma2_k[k]);
    out.push_back(s.beta_q_sigma2_k[k]);
    out.push_back(s.alpha_q_w[k]);
  }
}

FitReport LatentFitter::fit_from(LatentQState& s,
                                 const LatentFitOptions& options) const {
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

std::pair<LatentQState, FitReport> LatentFitter::fit(
    const LatentFitOptions& options) const {
  Rng rng(options.seed);
  LatentQState s = init_state(options.init, rng);
  FitReport report = fit_from(s, options);
  return {std::move(s), std::move(report)};
}

}  // namespace semvb
