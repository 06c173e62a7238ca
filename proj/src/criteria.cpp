#include "semvb/criteria.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "semvb/errors.hpp"
#include "semvb/math_kernels.hpp"

namespace semvb {

namespace {

double gaussian_log_density(double y, double mean, double var) {
  const double d = y - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

double ig_mean_or_throw(double alpha, double beta, const std::string& block) {
  if (!(alpha > 1.0)) {
    throw NumericalError("plugin_theta: q(" + block + ") has shape " +
                         std::to_string(alpha) + " <= 1, mean undefined");
  }
  return beta / (alpha - 1.0);
}

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

/// Streaming per-individual accumulators for log p values across draws.
struct PointwiseAccumulator {
  double max_log = -std::numeric_limits<double>::infinity();
  double min_log = std::numeric_limits<double>::infinity();
  double sum_exp = 0.0;   // sum of exp(l - max_log)
  double sum_exp2 = 0.0;  // sum of exp(2 (l - max_log))
  KahanSum sum_log;
  KahanSum sum_log2;

  void add(double l) {
    if (l > max_log) {
      if (std::isfinite(max_log)) {
        const double scale = std::exp(max_log - l);
        sum_exp *= scale;
        sum_exp2 *= scale * scale;
      }
      max_log = l;
    }
    min_log = std::min(min_log, l);
    const double e = std::exp(l - max_log);
    sum_exp += e;
    sum_exp2 += e * e;
    sum_log.add(l);
    sum_log2.add(l * l);
  }

  double log_mean(int R) const {
    return max_log + std::log(sum_exp) - std::log(static_cast<double>(R));
  }
  double mean_log(int R) const { return sum_log.sum / R; }
  /// 2 (log mean p - mean log p); exactly zero when all draws coincide.
  double p_term(int R) const {
    if (max_log == min_log) {
      return 0.0;
    }
    return 2.0 * (log_mean(R) - mean_log(R));
  }
  double var_log(int R) const {
    const double m = mean_log(R);
    return std::max(0.0, (sum_log2.sum - R * m * m) / std::max(1, R - 1));
  }
  /// Relative MC standard error of the mean of p (delta method for log).
  double se_log_mean(int R) const {
    const double mean_e = sum_exp / R;
    const double var_e =
        std::max(0.0, (sum_exp2 / R - mean_e * mean_e) * R / std::max(1, R - 1));
    return std::sqrt(var_e / R) / mean_e;
  }
};

template <typename Sampler>
CriteriaReport run_criteria(const Sampler& sampler, const Dataset& ds, int R,
                            std::uint64_t seed) {
  if (R < 2) {
    throw ConfigError("criteria: R must be >= 2");
  }
  const int N = ds.n();
  std::vector<PointwiseAccumulator> acc(N);
  std::vector<double> draw_totals(R, 0.0);

  Rng rng = Rng(seed).substream(0x63726974ULL);
  for (int s = 0; s < R; ++s) {
    const auto draw = sampler.sample(rng);
    KahanSum total;
    for (int i = 0; i < N; ++i) {
      const double l = pointwise_loglik(draw, ds, i);
      acc[i].add(l);
      total.add(l);
    }
    draw_totals[s] = total.sum;
  }

  std::vector<double> log_means(N), p_terms(N), se2_vlppd(N), se2_p(N);
  for (int i = 0; i < N; ++i) {
    log_means[i] = acc[i].log_mean(R);
    p_terms[i] = acc[i].p_term(R);
    const double se_lm = acc[i].se_log_mean(R);
    se2_vlppd[i] = se_lm * se_lm;
    se2_p[i] = 4.0 * (se_lm * se_lm + acc[i].var_log(R) / R);
  }

  CriteriaReport rep;
  rep.draws_R = R;
  rep.seed = seed;
  rep.vlppd = pairwise_sum(log_means);
  rep.p_vwaic = pairwise_sum(p_terms);
  rep.vwaic = -2.0 * (rep.vlppd - rep.p_vwaic);
  rep.mc_se_vlppd = std::sqrt(pairwise_sum(se2_vlppd));
  rep.mc_se_p_vwaic = std::sqrt(pairwise_sum(se2_p));

  const auto plugin = sampler.plugin();
  std::vector<double> plug_terms(N);
  for (int i = 0; i < N; ++i) {
    plug_terms[i] = pointwise_loglik(plugin, ds, i);
  }
  rep.loglik_at_plugin = pairwise_sum(plug_terms);
  const double expected_loglik = pairwise_sum(draw_totals) / R;
  rep.p_vaic = 2.0 * (rep.loglik_at_plugin - expected_loglik);
  rep.vaic = -2.0 * (rep.loglik_at_plugin - rep.p_vaic);
  double var_tot = 0.0;
  for (double t : draw_totals) {
    const double d = t - expected_loglik;
    var_tot += d * d;
  }
  rep.mc_se_expected_loglik = std::sqrt(var_tot / (R - 1) / R);
  return rep;
}

struct OutcomeSampler {
  const OutcomeQState& s;
  const OutcomeMixtureSpec& spec;
  OutcomeThetaDraw sample(Rng& rng) const { return sample_theta(s, spec, rng); }
  OutcomeThetaDraw plugin() const { return plugin_theta(s, spec); }
};

struct LatentSampler {
  const LatentQState& s;
  const LatentMixtureSpec& spec;
  LatentThetaDraw sample(Rng& rng) const { return sample_theta(s, spec, rng); }
  LatentThetaDraw plugin() const { return plugin_theta(s, spec); }
};

}  // namespace

PointwiseSummary summarize_pointwise(const Eigen::MatrixXd& log_p) {
  const int N = static_cast<int>(log_p.rows());
  const int R = static_cast<int>(log_p.cols());
  if (R < 2) {
    throw ConfigError("summarize_pointwise: needs at least 2 draws");
  }
  std::vector<double> log_means(N), p_terms(N), se2_vlppd(N), se2_p(N);
  for (int i = 0; i < N; ++i) {
    PointwiseAccumulator acc;
    for (int s = 0; s < R; ++s) {
      acc.add(log_p(i, s));
    }
    log_means[i] = acc.log_mean(R);
    p_terms[i] = acc.p_term(R);
    const double se_lm = acc.se_log_mean(R);
    se2_vlppd[i] = se_lm * se_lm;
    se2_p[i] = 4.0 * (se_lm * se_lm + acc.var_log(R) / R);
  }
  PointwiseSummary out;
  out.vlppd = pairwise_sum(log_means);
  out.p_vwaic = pairwise_sum(p_terms);
  out.mc_se_vlppd = std::sqrt(pairwise_sum(se2_vlppd));
  out.mc_se_p_vwaic = std::sqrt(pairwise_sum(se2_p));
  return out;
}

OutcomeThetaDraw sample_theta(const OutcomeQState& s,
                              const OutcomeMixtureSpec& spec, Rng& rng) {
  const int M = spec.n_outcomes();
  const int Hmax = spec.max_h();
  OutcomeThetaDraw d;
  d.mu.setZero(M, Hmax);
  d.psi2.setZero(M, Hmax);
  d.w.resize(M);
  d.lambda.resize(M);
  for (int j = 0; j < M; ++j) {
    const int H = spec.H[j];
    for (int h = 0; h < H; ++h) {
      d.mu(j, h) = draw_normal(s.mu_q_mu(j, h), s.sigma2_q_mu(j, h), rng);
      d.psi2(j, h) =
          draw_inverse_gamma(s.alpha_q_psi2(j, h), s.beta_q_psi2(j, h), rng);
    }
    if (H == 1) {
      d.w[j] = Eigen::VectorXd::Ones(1);
    } else {
      d.w[j] = draw_dirichlet(s.alpha_q_w[j], rng);
    }
    d.lambda[j] = j == 0 ? 1.0
                         : draw_normal(s.mu_q_lambda[j], s.sigma2_q_lambda[j], rng);
  }
  d.eta.resize(s.mu_q_eta.size());
  for (Eigen::Index i = 0; i < d.eta.size(); ++i) {
    d.eta[i] = draw_normal(s.mu_q_eta[i], s.sigma2_q_eta[i], rng);
  }
  d.beta = s.mu_q_beta.size() > 0
               ? draw_mvnormal(s.mu_q_beta, s.Sigma_q_beta, rng)
               : Eigen::VectorXd();
  d.sigma2 = draw_inverse_gamma(s.alpha_q_sigma2, s.beta_q_sigma2, rng);
  return d;
}

OutcomeThetaDraw plugin_theta(const OutcomeQState& s,
                              const OutcomeMixtureSpec& spec) {
  const int M = spec.n_outcomes();
  OutcomeThetaDraw d;
  d.mu = s.mu_q_mu;
  d.psi2.setZero(M, spec.max_h());
  d.w.resize(M);
  d.lambda = s.mu_q_lambda;
  d.lambda[0] = 1.0;
  for (int j = 0; j < M; ++j) {
    const int H = spec.H[j];
    for (int h = 0; h < H; ++h) {
      d.psi2(j, h) = ig_mean_or_throw(
          s.alpha_q_psi2(j, h), s.beta_q_psi2(j, h),
          "psi2[" + std::to_string(j + 1) + "][" + std::to_string(h + 1) + "]");
    }
    if (H == 1) {
      d.w[j] = Eigen::VectorXd::Ones(1);
    } else {
      d.w[j] = s.alpha_q_w[j] / s.alpha_q_w[j].sum();
    }
  }
  d.eta = s.mu_q_eta;
  d.beta = s.mu_q_beta;
  d.sigma2 = ig_mean_or_throw(s.alpha_q_sigma2, s.beta_q_sigma2, "sigma2");
  return d;
}

double pointwise_loglik(const OutcomeThetaDraw& draw, const Dataset& ds, int i) {
  double total = 0.0;
  for (int j = 0; j < ds.m(); ++j) {
    if (!ds.observed(i, j)) {
      continue;
    }
    const int H = static_cast<int>(draw.w[j].size());
    const double base = draw.lambda[j] * draw.eta[i];
    if (H == 1) {
      total += gaussian_log_density(ds.y(i, j), draw.mu(j, 0) + base,
                                    draw.psi2(j, 0));
      continue;
    }
    double buf[16];
    std::vector<double> heap;
    double* lp = buf;
    if (H > 16) {
      heap.resize(H);
      lp = heap.data();
    }
    for (int h = 0; h < H; ++h) {
      lp[h] = std::log(draw.w[j][h]) +
              gaussian_log_density(ds.y(i, j), draw.mu(j, h) + base,
                                   draw.psi2(j, h));
    }
    total += log_sum_exp({lp, static_cast<size_t>(H)});
  }
  return total;
}

LatentThetaDraw sample_theta(const LatentQState& s,
                             const LatentMixtureSpec& spec, Rng& rng) {
  const int M = static_cast<int>(s.mu_q_nu.size());
  const int K = spec.K;
  LatentThetaDraw d;
  d.nu.resize(M);
  d.lambda.resize(M);
  d.psi2.resize(M);
  for (int j = 0; j < M; ++j) {
    d.nu[j] = draw_normal(s.mu_q_nu[j], s.sigma2_q_nu[j], rng);
    d.lambda[j] = j == 0 ? 1.0
                         : draw_normal(s.mu_q_lambda[j], s.sigma2_q_lambda[j], rng);
    d.psi2[j] = draw_inverse_gamma(s.alpha_q_psi2[j], s.beta_q_psi2[j], rng);
  }
  d.eta.resize(s.mu_q_eta.size());
  for (Eigen::Index i = 0; i < d.eta.size(); ++i) {
    d.eta[i] = draw_normal(s.mu_q_eta[i], s.sigma2_q_eta[i], rng);
  }
  d.beta_k.resize(K);
  d.sigma2_k.resize(K);
  for (int k = 0; k < K; ++k) {
    d.beta_k[k] = s.mu_q_beta_k[k].size() > 0
                      ? draw_mvnormal(s.mu_q_beta_k[k], s.Sigma_q_beta_k[k], rng)
                      : Eigen::VectorXd();
    d.sigma2_k[k] =
        draw_inverse_gamma(s.alpha_q_sigma2_k[k], s.beta_q_sigma2_k[k], rng);
  }
  d.w = K == 1 ? Eigen::VectorXd::Ones(1) : draw_dirichlet(s.alpha_q_w, rng);
  return d;
}

LatentThetaDraw plugin_theta(const LatentQState& s,
                             const LatentMixtureSpec& spec) {
  const int M = static_cast<int>(s.mu_q_nu.size());
  const int K = spec.K;
  LatentThetaDraw d;
  d.nu = s.mu_q_nu;
  d.lambda = s.mu_q_lambda;
  d.lambda[0] = 1.0;
  d.psi2.resize(M);
  for (int j = 0; j < M; ++j) {
    d.psi2[j] = ig_mean_or_throw(s.alpha_q_psi2[j], s.beta_q_psi2[j],
                                 "psi2[" + std::to_string(j + 1) + "]");
  }
  d.eta = s.mu_q_eta;
  d.beta_k = s.mu_q_beta_k;
  d.sigma2_k.resize(K);
  for (int k = 0; k < K; ++k) {
    d.sigma2_k[k] = ig_mean_or_throw(s.alpha_q_sigma2_k[k], s.beta_q_sigma2_k[k],
                                     "sigma2[" + std::to_string(k + 1) + "]");
  }
  d.w = K == 1 ? Eigen::VectorXd::Ones(1) : (s.alpha_q_w / s.alpha_q_w.sum()).eval();
  return d;
}

double pointwise_loglik(const LatentThetaDraw& draw, const Dataset& ds, int i) {
  double total = 0.0;
  for (int j = 0; j < ds.m(); ++j) {
    if (!ds.observed(i, j)) {
      continue;
    }
    total += gaussian_log_density(
        ds.y(i, j), draw.nu[j] + draw.lambda[j] * draw.eta[i], draw.psi2[j]);
  }
  return total;
}

CriteriaReport compute_criteria(const OutcomeQState& s,
                                const OutcomeMixtureSpec& spec,
                                const Dataset& ds, int R, std::uint64_t seed) {
  return run_criteria(OutcomeSampler{s, spec}, ds, R, seed);
}

CriteriaReport compute_criteria(const LatentQState& s,
                                const LatentMixtureSpec& spec,
                                const Dataset& ds, int R, std::uint64_t seed) {
  return run_criteria(LatentSampler{s, spec}, ds, R, seed);
}

}  // namespace semvb
