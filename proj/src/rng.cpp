#include "semvb/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace semvb {

namespace {

using u128 = unsigned __int128;

constexpr u128 kPcgMult =
    (static_cast<u128>(2549297995355413924ULL) << 64) | 4865540595714422341ULL;

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(s);
}

std::uint64_t rotr64(std::uint64_t v, unsigned rot) {
  return (v >> rot) | (v << ((64u - rot) & 63u));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_seed_(seed), key_stream_(stream) {
  std::uint64_t s = seed;
  const u128 init_state =
      (static_cast<u128>(splitmix64(s)) << 64) | splitmix64(s);
  std::uint64_t t = stream ^ 0xda3e39cb94b95bdbULL;
  const u128 init_seq = (static_cast<u128>(splitmix64(t)) << 64) | splitmix64(t);
  inc_ = (init_seq << 1) | 1;
  state_ = 0;
  state_ = state_ * kPcgMult + inc_;
  state_ += init_state;
  state_ = state_ * kPcgMult + inc_;
}

std::uint64_t Rng::next_u64() {
  state_ = state_ * kPcgMult + inc_;
  const std::uint64_t xored =
      static_cast<std::uint64_t>(state_ >> 64) ^ static_cast<std::uint64_t>(state_);
  const unsigned rot = static_cast<unsigned>(state_ >> 122);
  return rotr64(xored, rot);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

Rng Rng::substream(std::uint64_t unit) const {
  return Rng(mix2(key_seed_, unit), mix2(key_stream_, ~unit));
}

double draw_uniform(double lo, double hi, Rng& rng) {
  if (!(hi >= lo)) {
    throw std::invalid_argument("draw_uniform: hi < lo");
  }
  return lo + (hi - lo) * rng.next_double();
}

double draw_normal(double mu, double sigma2, Rng& rng) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("draw_normal: variance must be finite and nonnegative");
  }
  if (sigma2 == 0.0) {
    return mu;
  }
  // Box-Muller, one deviate per call.
  const double u1 = 1.0 - rng.next_double();  // (0, 1]
  const double u2 = rng.next_double();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return mu + std::sqrt(sigma2) * z;
}

Eigen::VectorXd draw_mvnormal(const Eigen::VectorXd& mu,
                              const Eigen::MatrixXd& Sigma, Rng& rng) {
  if (Sigma.rows() != Sigma.cols() || Sigma.rows() != mu.size()) {
    throw std::invalid_argument("draw_mvnormal: dimension mismatch");
  }
  if (Sigma.cwiseAbs().maxCoeff() == 0.0) {
    return mu;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("draw_mvnormal: covariance is not positive definite");
  }
  Eigen::VectorXd z(mu.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = draw_normal(0.0, 1.0, rng);
  }
  return mu + llt.matrixL() * z;
}

double draw_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("draw_gamma: shape must be positive");
  }
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^{1/a}.
    const double u = 1.0 - rng.next_double();
    return draw_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = draw_normal(0.0, 1.0, rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) {
      return d * v;
    }
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

double draw_inverse_gamma(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("draw_inverse_gamma: parameters must be positive");
  }
  return beta / draw_gamma(alpha, rng);
}

Eigen::VectorXd draw_dirichlet(const Eigen::VectorXd& alpha, Rng& rng) {
  if (alpha.size() == 0 || (alpha.array() <= 0.0).any()) {
    throw std::invalid_argument("draw_dirichlet: concentrations must be positive");
  }
  Eigen::VectorXd g(alpha.size());
  for (Eigen::Index h = 0; h < alpha.size(); ++h) {
    g[h] = draw_gamma(alpha[h], rng);
  }
  const double total = g.sum();
  Eigen::VectorXd w(alpha.size());
  double partial = 0.0;
  for (Eigen::Index h = 0; h + 1 < alpha.size(); ++h) {
    w[h] = g[h] / total;
    partial += w[h];
  }
  w[alpha.size() - 1] = std::max(0.0, 1.0 - partial);
  return w;
}

int draw_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  if (probs.size() == 0 || (probs.array() < 0.0).any()) {
    throw std::invalid_argument("draw_categorical: probabilities must be nonnegative");
  }
  if (std::fabs(probs.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("draw_categorical: probabilities must sum to 1");
  }
  const double u = rng.next_double();
  double cum = 0.0;
  for (Eigen::Index h = 0; h < probs.size(); ++h) {
    cum += probs[h];
    if (u < cum) {
      return static_cast<int>(h);
    }
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace semvb
