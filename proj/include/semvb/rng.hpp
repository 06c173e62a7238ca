#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace semvb {

/// Deterministic 64-bit PCG (XSL-RR 128/64) stream. Substreams are derived
/// from the owning stream's key, so every experiment unit can be given an
/// independent generator keyed by (master seed, unit index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0x853c49e6748fea9bULL) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double next_double();

  /// Independent generator keyed by this stream's identity and `unit`.
  Rng substream(std::uint64_t unit) const;

 private:
  unsigned __int128 state_;
  unsigned __int128 inc_;
  std::uint64_t key_seed_;
  std::uint64_t key_stream_;
};

double draw_uniform(double lo, double hi, Rng& rng);

/// sigma2 == 0 degenerates to a point mass at mu.
double draw_normal(double mu, double sigma2, Rng& rng);

Eigen::VectorXd draw_mvnormal(const Eigen::VectorXd& mu,
                              const Eigen::MatrixXd& Sigma, Rng& rng);

/// Unit-scale Gamma(shape) draw, valid for all shape > 0.
double draw_gamma(double shape, Rng& rng);

double draw_inverse_gamma(double alpha, double beta, Rng& rng);

/// Components sum to 1 exactly (last component closes the simplex).
Eigen::VectorXd draw_dirichlet(const Eigen::VectorXd& alpha, Rng& rng);

/// probs must be nonnegative and sum to 1 within 1e-9.
int draw_categorical(const Eigen::VectorXd& probs, Rng& rng);

}  // namespace semvb
