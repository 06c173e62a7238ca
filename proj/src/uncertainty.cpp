#include "semvb/uncertainty.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "semvb/errors.hpp"
#include "semvb/math_kernels.hpp"
#include "semvb/rng.hpp"

namespace semvb {

std::pair<double, double> credible_interval(const QBlock& q, double level) {
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::invalid_argument("credible_interval: level must lie in (0, 1)");
  }
  const double tail = 0.5 * (1.0 - level);
  switch (q.kind) {
    case QBlock::Kind::gaussian: {
      if (q.b == 0.0) {
        return {q.a, q.a};
      }
      const double z = normal_quantile(1.0 - tail);
      const double sd = std::sqrt(q.b);
      return {q.a - z * sd, q.a + z * sd};
    }
    case QBlock::Kind::inverse_gamma:
      return {inverse_gamma_quantile(q.a, q.b, tail),
              inverse_gamma_quantile(q.a, q.b, 1.0 - tail)};
    case QBlock::Kind::dirichlet_marginal:
      return {beta_quantile(q.a, q.b, tail), beta_quantile(q.a, q.b, 1.0 - tail)};
  }
  throw std::logic_error("credible_interval: unknown block kind");
}

std::vector<std::string> outcome_parameter_names(const OutcomeMixtureSpec& spec,
                                                 int p) {
  std::vector<std::string> names;
  const int M = spec.n_outcomes();
  for (int j = 1; j < M; ++j) {
    names.push_back("lambda[" + std::to_string(j + 1) + "]");
  }
  for (int k = 0; k < p; ++k) {
    names.push_back("beta[" + std::to_string(k + 1) + "]");
  }
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < spec.H[j]; ++h) {
      names.push_back("mu[" + std::to_string(j + 1) + "][" +
                      std::to_string(h + 1) + "]");
    }
  }
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < spec.H[j]; ++h) {
      names.push_back("psi2[" + std::to_string(j + 1) + "][" +
                      std::to_string(h + 1) + "]");
    }
  }
  for (int j = 0; j < M; ++j) {
    if (spec.H[j] > 1) {
      for (int h = 0; h < spec.H[j]; ++h) {
        names.push_back("w[" + std::to_string(j + 1) + "][" +
                        std::to_string(h + 1) + "]");
      }
    }
  }
  names.push_back("sigma2");
  return names;
}

Eigen::VectorXd outcome_parameter_estimates(const OutcomeQState& s,
                                            const OutcomeMixtureSpec& spec) {
  std::vector<double> v;
  const int M = spec.n_outcomes();
  for (int j = 1; j < M; ++j) {
    v.push_back(s.mu_q_lambda[j]);
  }
  for (Eigen::Index k = 0; k < s.mu_q_beta.size(); ++k) {
    v.push_back(s.mu_q_beta[k]);
  }
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < spec.H[j]; ++h) {
      v.push_back(s.mu_q_mu(j, h));
    }
  }
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < spec.H[j]; ++h) {
      const double alpha = s.alpha_q_psi2(j, h);
      v.push_back(alpha > 1.0 ? s.beta_q_psi2(j, h) / (alpha - 1.0)
                              : std::numeric_limits<double>::quiet_NaN());
    }
  }
  for (int j = 0; j < M; ++j) {
    if (spec.H[j] > 1) {
      const double total = s.alpha_q_w[j].sum();
      for (int h = 0; h < spec.H[j]; ++h) {
        v.push_back(s.alpha_q_w[j][h] / total);
      }
    }
  }
  v.push_back(s.alpha_q_sigma2 > 1.0
                  ? s.beta_q_sigma2 / (s.alpha_q_sigma2 - 1.0)
                  : std::numeric_limits<double>::quiet_NaN());
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<QBlock> outcome_parameter_qblocks(const OutcomeQState& s,
                                              const OutcomeMixtureSpec& spec) {
  std::vector<QBlock> blocks;
  const int M = spec.n_outcomes();
  for (int j = 1; j < M; ++j) {
    blocks.push_back({QBlock::Kind::gaussian, s.mu_q_lambda[j], s.sigma2_q_lambda[j]});
  }
  for (Eigen::Index k = 0; k < s.mu_q_beta.size(); ++k) {
    blocks.push_back({QBlock::Kind::gaussian, s.mu_q_beta[k], s.Sigma_q_beta(k, k)});
  }
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < spec.H[j]; ++h) {
      blocks.push_back({QBlock::Kind::gaussian, s.mu_q_mu(j, h), s.sigma2_q_mu(j, h)});
    }
  }
  for (int j = 0; j < M; ++j) {
    for (int h = 0; h < spec.H[j]; ++h) {
      blocks.push_back(
          {QBlock::Kind::inverse_gamma, s.alpha_q_psi2(j, h), s.beta_q_psi2(j, h)});
    }
  }
  for (int j = 0; j < M; ++j) {
    if (spec.H[j] > 1) {
      const double total = s.alpha_q_w[j].sum();
      for (int h = 0; h < spec.H[j]; ++h) {
        blocks.push_back({QBlock::Kind::dirichlet_marginal, s.alpha_q_w[j][h],
                          total - s.alpha_q_w[j][h]});
      }
    }
  }
  blocks.push_back({QBlock::Kind::inverse_gamma, s.alpha_q_sigma2, s.beta_q_sigma2});
  return blocks;
}

double quantile_type7(const std::vector<double>& sorted_values, double p) {
  const int n = static_cast<int>(sorted_values.size());
  if (n == 0) {
    throw std::invalid_argument("quantile_type7: empty sample");
  }
  if (n == 1) {
    return sorted_values[0];
  }
  const double h = (n - 1) * p;
  const int lo = static_cast<int>(std::floor(h));
  const int hi = std::min(lo + 1, n - 1);
  const double frac = h - lo;
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

namespace {

Dataset resample_rows(const Dataset& ds, const Eigen::VectorXi& idx) {
  Dataset out;
  const int N = static_cast<int>(idx.size());
  out.y.resize(N, ds.m());
  out.observed.resize(N, ds.m());
  out.x.resize(N, ds.p());
  out.outcome_names = ds.outcome_names;
  out.covariate_names = ds.covariate_names;
  out.scale_factors = ds.scale_factors;
  for (int r = 0; r < N; ++r) {
    out.y.row(r) = ds.y.row(idx[r]);
    out.observed.row(r) = ds.observed.row(idx[r]);
    out.x.row(r) = ds.x.row(idx[r]);
  }
  return out;
}

template <typename Fn>
void parallel_for(int count, int threads, Fn fn) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
  }
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) {
          return;
        }
        fn(i);
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
}

}  // namespace

BootstrapResult bootstrap(const OutcomeMixtureSpec& spec, const Dataset& ds,
                          int B, const FitOptions& fit_options,
                          std::uint64_t seed, double level, int threads) {
  if (B < 2) {
    throw ConfigError("bootstrap: needs at least 2 replicates");
  }
  const int N = ds.n();
  BootstrapResult result;
  result.requested = B;
  result.parameter_names = outcome_parameter_names(spec, ds.p());
  const int P = static_cast<int>(result.parameter_names.size());
  result.indices.resize(B, N);

  const Rng master(seed);
  for (int b = 0; b < B; ++b) {
    Rng rng = master.substream(static_cast<std::uint64_t>(b));
    for (int i = 0; i < N; ++i) {
      result.indices(b, i) =
          static_cast<int>(rng.next_double() * static_cast<double>(N));
    }
  }

  std::vector<Eigen::VectorXd> estimates(B);
  std::vector<char> ok(B, 0);
  parallel_for(B, threads, [&](int b) {
    try {
      const Dataset boot = resample_rows(ds, result.indices.row(b).transpose());
      OutcomeFitter fitter(spec, boot);
      FitOptions opt = fit_options;
      opt.seed = Rng(seed).substream(static_cast<std::uint64_t>(b)).next_u64();
      auto [state, report] = fitter.fit(opt);
      const OutcomeQState sorted = state.sorted_by_intercept(spec);
      estimates[b] = outcome_parameter_estimates(sorted, spec);
      ok[b] = 1;
    } catch (const std::exception&) {
      ok[b] = 0;
    }
  });

  int n_ok = 0;
  for (int b = 0; b < B; ++b) {
    n_ok += ok[b];
  }
  result.failed = B - n_ok;
  if (result.failed > 0.2 * B) {
    throw NumericalError("bootstrap: " + std::to_string(result.failed) + " of " +
                         std::to_string(B) + " replicates failed");
  }
  result.estimates.resize(n_ok, P);
  int r = 0;
  for (int b = 0; b < B; ++b) {
    if (ok[b]) {
      result.estimates.row(r++) = estimates[b].transpose();
    }
  }
  result.intervals.resize(P, 2);
  const double tail = 0.5 * (1.0 - level);
  std::vector<double> column(n_ok);
  for (int c = 0; c < P; ++c) {
    for (int i = 0; i < n_ok; ++i) {
      column[i] = result.estimates(i, c);
    }
    std::sort(column.begin(), column.end());
    result.intervals(c, 0) = quantile_type7(column, tail);
    result.intervals(c, 1) = quantile_type7(column, 1.0 - tail);
  }
  return result;
}

std::vector<Eigen::MatrixXd> posterior_predictive(const OutcomeQState& s,
                                                  const OutcomeMixtureSpec& spec,
                                                  const Dataset& ds, int n_draws,
                                                  std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> reps;
  reps.reserve(n_draws);
  Rng rng = Rng(seed).substream(0x707063ULL);
  const int N = ds.n();
  const int M = ds.m();
  for (int d = 0; d < n_draws; ++d) {
    Eigen::MatrixXd mu(M, spec.max_h());
    Eigen::MatrixXd psi2(M, spec.max_h());
    std::vector<Eigen::VectorXd> w(M);
    Eigen::VectorXd lambda(M);
    for (int j = 0; j < M; ++j) {
      const int H = spec.H[j];
      for (int h = 0; h < H; ++h) {
        mu(j, h) = draw_normal(s.mu_q_mu(j, h), s.sigma2_q_mu(j, h), rng);
        psi2(j, h) =
            draw_inverse_gamma(s.alpha_q_psi2(j, h), s.beta_q_psi2(j, h), rng);
      }
      w[j] = H == 1 ? Eigen::VectorXd::Ones(1)
                    : draw_dirichlet(s.alpha_q_w[j], rng);
      lambda[j] = j == 0 ? 1.0
                         : draw_normal(s.mu_q_lambda[j], s.sigma2_q_lambda[j], rng);
    }
    Eigen::MatrixXd rep =
        Eigen::MatrixXd::Constant(N, M, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < N; ++i) {
      const double eta = draw_normal(s.mu_q_eta[i], s.sigma2_q_eta[i], rng);
      for (int j = 0; j < M; ++j) {
        if (!ds.observed(i, j)) {
          continue;
        }
        const int h = spec.H[j] == 1 ? 0 : draw_categorical(w[j], rng);
        rep(i, j) = draw_normal(mu(j, h) + lambda[j] * eta, psi2(j, h), rng);
      }
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

std::vector<Eigen::MatrixXd> posterior_predictive(const LatentQState& s,
                                                  const LatentMixtureSpec& spec,
                                                  const Dataset& ds, int n_draws,
                                                  std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> reps;
  reps.reserve(n_draws);
  Rng rng = Rng(seed).substream(0x707063ULL);
  const int N = ds.n();
  const int M = ds.m();
  (void)spec;
  for (int d = 0; d < n_draws; ++d) {
    Eigen::VectorXd nu(M);
    Eigen::VectorXd lambda(M);
    Eigen::VectorXd psi2(M);
    for (int j = 0; j < M; ++j) {
      nu[j] = draw_normal(s.mu_q_nu[j], s.sigma2_q_nu[j], rng);
      lambda[j] = j == 0 ? 1.0
                         : draw_normal(s.mu_q_lambda[j], s.sigma2_q_lambda[j], rng);
      psi2[j] = draw_inverse_gamma(s.alpha_q_psi2[j], s.beta_q_psi2[j], rng);
    }
    Eigen::MatrixXd rep =
        Eigen::MatrixXd::Constant(N, M, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < N; ++i) {
      const double eta = draw_normal(s.mu_q_eta[i], s.sigma2_q_eta[i], rng);
      for (int j = 0; j < M; ++j) {
        if (ds.observed(i, j)) {
          rep(i, j) = draw_normal(nu[j] + lambda[j] * eta, psi2[j], rng);
        }
      }
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

KdeResult kde(const std::vector<double>& values, double bandwidth) {
  const int n = static_cast<int>(values.size());
  if (n < 2) {
    throw std::invalid_argument("kde: needs at least 2 values");
  }
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= n;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1));
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  const double iqr =
      quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
  double bw = bandwidth;
  if (bw <= 0.0) {
    // Silverman's rule of thumb.
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    bw = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  }
  if (!(bw > 0.0)) {
    throw std::invalid_argument("kde: degenerate (constant) input");
  }
  KdeResult out;
  out.bandwidth = bw;
  const double lo = sorted.front() - 3.0 * bw;
  const double hi = sorted.back() + 3.0 * bw;
  const int G = 512;
  out.grid.resize(G);
  out.density.resize(G);
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * M_PI));
  for (int g = 0; g < G; ++g) {
    const double x = lo + (hi - lo) * g / (G - 1);
    out.grid[g] = x;
    double acc = 0.0;
    for (double v : values) {
      const double z = (x - v) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    out.density[g] = norm * acc;
  }
  return out;
}

}  // namespace semvb
