#include "semvb/init_heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "semvb/errors.hpp"
#include "semvb/math_kernels.hpp"

namespace semvb {

namespace {

constexpr int kMaxEmIter = 1000;

double sample_variance_mle(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) {
    const double d = x - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(v.size());
}

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

/// k-means++ style: pick seeds far apart with probability proportional to
/// squared distance from the nearest chosen seed.
std::vector<double> kmeanspp_seeds(const std::vector<double>& values, int H,
                                   Rng& rng) {
  std::vector<double> seeds;
  seeds.push_back(values[static_cast<size_t>(rng.next_double() * values.size())]);
  while (static_cast<int>(seeds.size()) < H) {
    std::vector<double> d2(values.size());
    double total = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double s : seeds) {
        best = std::min(best, (values[i] - s) * (values[i] - s));
      }
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      seeds.push_back(values[static_cast<size_t>(rng.next_double() * values.size())]);
      continue;
    }
    double u = rng.next_double() * total;
    size_t pick = values.size() - 1;
    for (size_t i = 0; i < values.size(); ++i) {
      u -= d2[i];
      if (u <= 0.0) {
        pick = i;
        break;
      }
    }
    seeds.push_back(values[pick]);
  }
  return seeds;
}

}  // namespace

GmmFit gmm_em(const std::vector<double>& values, int H, int restarts,
              double tol, Rng& rng) {
  const int n = static_cast<int>(values.size());
  if (H < 1) {
    throw std::invalid_argument("gmm_em: H must be >= 1");
  }
  if (n < 2 * H) {
    throw DataError("gmm_em: need at least " + std::to_string(2 * H) +
                    " observations for H = " + std::to_string(H));
  }
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= n;
  const double var_all = sample_variance_mle(values, mean);
  const double var_floor = std::max(1e-6 * var_all, 1e-300);

  if (H == 1) {
    GmmFit fit;
    fit.means = Eigen::VectorXd::Constant(1, mean);
    fit.variances = Eigen::VectorXd::Constant(1, std::max(var_all, var_floor));
    fit.weights = Eigen::VectorXd::Constant(1, 1.0);
    fit.loglik = 0.0;
    for (double v : values) {
      fit.loglik += log_normal_pdf(v, fit.means[0], fit.variances[0]);
    }
    fit.converged = true;
    return fit;
  }

  GmmFit best;
  best.loglik = -std::numeric_limits<double>::infinity();
  for (int run = 0; run < std::max(1, restarts); ++run) {
    Rng run_rng = rng.substream(static_cast<std::uint64_t>(run));
    auto seeds = kmeanspp_seeds(values, H, run_rng);
    std::sort(seeds.begin(), seeds.end());
    Eigen::VectorXd mu = Eigen::Map<Eigen::VectorXd>(seeds.data(), H);
    Eigen::VectorXd var = Eigen::VectorXd::Constant(H, std::max(var_all, var_floor));
    Eigen::VectorXd w = Eigen::VectorXd::Constant(H, 1.0 / H);

    double prev_ll = -std::numeric_limits<double>::infinity();
    bool converged = false;
    std::vector<double> trace;
    Eigen::MatrixXd resp(n, H);
    for (int it = 0; it < kMaxEmIter; ++it) {
      // E step.
      double ll = 0.0;
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd logp(H);
        for (int h = 0; h < H; ++h) {
          logp[h] = std::log(w[h]) + log_normal_pdf(values[i], mu[h], var[h]);
        }
        const double lse = log_sum_exp({logp.data(), static_cast<size_t>(H)});
        ll += lse;
        for (int h = 0; h < H; ++h) {
          resp(i, h) = std::exp(logp[h] - lse);
        }
      }
      trace.push_back(ll);
      // M step.
      for (int h = 0; h < H; ++h) {
        const double nh = resp.col(h).sum();
        if (nh <= 1e-12) {
          continue;  // abandoned component; keep previous parameters
        }
        double m = 0.0;
        for (int i = 0; i < n; ++i) {
          m += resp(i, h) * values[i];
        }
        m /= nh;
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
          const double d = values[i] - m;
          ss += resp(i, h) * d * d;
        }
        mu[h] = m;
        var[h] = std::max(ss / nh, var_floor);
        w[h] = nh / n;
      }
      w /= w.sum();
      if (ll - prev_ll < tol * (std::fabs(prev_ll) + 1e-8) && it > 0) {
        prev_ll = ll;
        converged = true;
        break;
      }
      prev_ll = ll;
    }
    if (prev_ll > best.loglik) {
      best.means = mu;
      best.variances = var;
      best.weights = w;
      best.loglik = prev_ll;
      best.converged = converged;
      best.loglik_trace = trace;
    }
  }
  return best;
}

std::pair<int, std::vector<double>> select_components_with_bic(
    const std::vector<double>& values, int H_max, Rng& rng) {
  if (H_max < 1) {
    throw std::invalid_argument("select_components: H_max must be >= 1");
  }
  const double logn = std::log(static_cast<double>(values.size()));
  int best_h = 1;
  double best_bic = std::numeric_limits<double>::infinity();
  std::vector<double> bics;
  for (int H = 1; H <= H_max; ++H) {
    if (static_cast<int>(values.size()) < 2 * H) {
      break;
    }
    Rng h_rng = rng.substream(static_cast<std::uint64_t>(H));
    const GmmFit fit = gmm_em(values, H, 10, 1e-8, h_rng);
    const double bic = -2.0 * fit.loglik + (3.0 * H - 1.0) * logn;
    bics.push_back(bic);
    if (bic < best_bic - 1e-12) {
      best_bic = bic;
      best_h = H;
    }
  }
  return {best_h, std::move(bics)};
}

int select_components(const std::vector<double>& values, int H_max, Rng& rng) {
  return select_components_with_bic(values, H_max, rng).first;
}

MixRegFit mixreg_em(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, int K,
                    int restarts, double tol, Rng& rng) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(X.cols());
  if (K < 1) {
    throw std::invalid_argument("mixreg_em: K must be >= 1");
  }
  if (X.rows() != n) {
    throw std::invalid_argument("mixreg_em: X rows must match y length");
  }
  if (n <= K * (p + 2)) {
    throw DataError("mixreg_em: need more than " + std::to_string(K * (p + 2)) +
                    " observations for K = " + std::to_string(K));
  }

  // Design with explicit intercept column for the per-component WLS solves.
  Eigen::MatrixXd D(n, p + 1);
  D.col(0).setOnes();
  D.rightCols(p) = X;

  auto wls = [&](const Eigen::VectorXd& wts) -> Eigen::VectorXd {
    const Eigen::MatrixXd Dw = wts.asDiagonal() * D;
    Eigen::MatrixXd A = D.transpose() * Dw;
    const Eigen::VectorXd b = Dw.transpose() * y;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
      throw NumericalError("mixreg_em: singular weighted design");
    }
    return lu.solve(b);
  };

  const double y_mean = y.mean();
  double y_var = (y.array() - y_mean).square().sum() / n;
  const double var_floor = std::max(1e-6 * y_var, 1e-300);

  if (K == 1) {
    const Eigen::VectorXd coef = wls(Eigen::VectorXd::Ones(n));
    const Eigen::VectorXd resid = y - D * coef;
    MixRegFit fit;
    fit.intercepts = Eigen::VectorXd::Constant(1, coef[0]);
    fit.coefficients = coef.tail(p);
    fit.variances =
        Eigen::VectorXd::Constant(1, std::max(resid.squaredNorm() / n, var_floor));
    fit.weights = Eigen::VectorXd::Constant(1, 1.0);
    fit.responsibilities = Eigen::MatrixXd::Ones(n, 1);
    fit.loglik = 0.0;
    for (int i = 0; i < n; ++i) {
      fit.loglik += log_normal_pdf(resid[i], 0.0, fit.variances[0]);
    }
    fit.converged = true;
    return fit;
  }

  MixRegFit best;
  best.loglik = -std::numeric_limits<double>::infinity();
  for (int run = 0; run < std::max(1, restarts); ++run) {
    Rng run_rng = rng.substream(static_cast<std::uint64_t>(run));
    // Seed by clustering residuals of the pooled regression.
    const Eigen::VectorXd pooled = wls(Eigen::VectorXd::Ones(n));
    const Eigen::VectorXd resid = y - D * pooled;
    std::vector<double> rv(resid.data(), resid.data() + n);
    auto seeds = kmeanspp_seeds(rv, K, run_rng);
    std::sort(seeds.begin(), seeds.end());

    Eigen::MatrixXd coefs(p + 1, K);
    for (int k = 0; k < K; ++k) {
      coefs.col(k) = pooled;
      coefs(0, k) += seeds[k];
    }
    Eigen::VectorXd var = Eigen::VectorXd::Constant(K, std::max(y_var, var_floor));
    Eigen::VectorXd w = Eigen::VectorXd::Constant(K, 1.0 / K);

    Eigen::MatrixXd resp(n, K);
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool converged = false;
    std::vector<double> trace;
    for (int it = 0; it < kMaxEmIter; ++it) {
      double ll = 0.0;
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd logp(K);
        for (int k = 0; k < K; ++k) {
          const double fitv = D.row(i).dot(coefs.col(k));
          logp[k] = std::log(w[k]) + log_normal_pdf(y[i] - fitv, 0.0, var[k]);
        }
        const double lse = log_sum_exp({logp.data(), static_cast<size_t>(K)});
        ll += lse;
        for (int k = 0; k < K; ++k) {
          resp(i, k) = std::exp(logp[k] - lse);
        }
      }
      trace.push_back(ll);
      for (int k = 0; k < K; ++k) {
        const double nk = resp.col(k).sum();
        if (nk <= 1e-10) {
          continue;
        }
        const Eigen::VectorXd coef = wls(resp.col(k));
        coefs.col(k) = coef;
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
          const double r = y[i] - D.row(i).dot(coef);
          ss += resp(i, k) * r * r;
        }
        var[k] = std::max(ss / nk, var_floor);
        w[k] = nk / n;
      }
      w /= w.sum();
      if (ll - prev_ll < tol * (std::fabs(prev_ll) + 1e-8) && it > 0) {
        prev_ll = ll;
        converged = true;
        break;
      }
      prev_ll = ll;
    }
    if (prev_ll > best.loglik) {
      best.intercepts = coefs.row(0).transpose();
      best.coefficients = coefs.bottomRows(p);
      best.variances = var;
      best.weights = w;
      best.responsibilities = resp;
      best.loglik = prev_ll;
      best.converged = converged;
      best.loglik_trace = trace;
    }
  }
  return best;
}

}  // namespace semvb
