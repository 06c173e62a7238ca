#include <doctest.h>

#include <cmath>

#include "semvb/errors.hpp"
#include "semvb/latent_model.hpp"
#include "semvb/math_kernels.hpp"
#include "semvb/outcome_model.hpp"
#include "semvb/rng.hpp"
#include "semvb/sim_study.hpp"

using namespace semvb;

namespace {

LatentMixtureSpec latent_spec(int K, int p) {
  LatentMixtureSpec spec;
  spec.K = K;
  spec.mu_nu = 0.0;
  spec.sigma2_nu = 100.0;
  spec.mu_lambda = 1.0;
  spec.sigma2_lambda = 1.0;
  spec.alpha_psi2 = 2.390625;
  spec.beta_psi2 = 8.69140625;
  spec.alpha_sigma2 = 1.0;
  spec.beta_sigma2 = 1.0;
  spec.alpha_w = 10.0;
  spec.mu_beta = Eigen::VectorXd::Zero(p);
  spec.Sigma_beta = 100.0 * Eigen::MatrixXd::Identity(p, p);
  return spec;
}

/// Two-group latent data: eta ~ 0.5 N(x'b1, 1) + 0.5 N(x'b2, 1) with
/// well-separated regression vectors.
std::pair<Dataset, Eigen::MatrixXd> two_group_data(int N, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  const int M = 3;
  ds.y.resize(N, M);
  ds.observed.setConstant(N, M, true);
  ds.x.resize(N, 1);
  Eigen::MatrixXd beta(1, 2);
  beta << 1.0, 4.0;
  const Eigen::Vector3d lambda(1.0, 0.8, 0.6);
  const Eigen::Vector3d nu(0.0, 1.0, -1.0);
  for (int i = 0; i < N; ++i) {
    ds.x(i, 0) = draw_normal(2.0, 1.0, rng);
    const int k = rng.next_double() < 0.5 ? 0 : 1;
    const double eta = draw_normal(ds.x(i, 0) * beta(0, k), 0.25, rng);
    for (int j = 0; j < M; ++j) {
      ds.y(i, j) = draw_normal(nu[j] + lambda[j] * eta, 0.5, rng);
    }
  }
  ds.outcome_names = {"y1", "y2", "y3"};
  ds.covariate_names = {"x1"};
  return {std::move(ds), std::move(beta)};
}

}  // namespace

TEST_CASE("latent responsibilities: singleton and symmetric cases") {
  auto [ds, beta] = two_group_data(30, 5);

  LatentMixtureSpec spec1 = latent_spec(1, 1);
  LatentFitter f1(spec1, ds);
  Rng rng(1);
  LatentQState s1 = f1.init_state(LatentInitOptions{}, rng);
  f1.update_responsibilities_and_latents(s1);
  for (int i = 0; i < ds.n(); ++i) {
    CHECK(s1.mu_q_a(i, 0) == 1.0);
  }

  // Two components with identical q-factors split evenly.
  LatentMixtureSpec spec2 = latent_spec(2, 1);
  LatentFitter f2(spec2, ds);
  LatentQState s2 = f2.init_state(LatentInitOptions{}, rng);
  s2.mu_q_beta_k[0].setZero();
  s2.mu_q_beta_k[1].setZero();
  s2.Sigma_q_beta_k[0] = s2.Sigma_q_beta_k[1] = Eigen::MatrixXd::Identity(1, 1);
  s2.mu_q_inv_sigma2_k.setConstant(1.0);
  s2.mu_q_log_sigma2_k.setConstant(0.0);
  s2.mu_q_log_w.setConstant(std::log(0.5));
  f2.update_responsibilities_and_latents(s2);
  for (int i = 0; i < ds.n(); ++i) {
    CHECK(s2.mu_q_a(i, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s2.mu_q_a(i, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("latent responsibilities with x = 0 reduce to the direct formula") {
  // With x_i = 0 the G term collapses to -mu_q(eta_i^2)/2.
  Dataset ds;
  const int N = 4;
  ds.y.resize(N, 1);
  ds.y << 0.5, -0.5, 1.0, 2.0;
  ds.observed.setConstant(N, 1, true);
  ds.x = Eigen::MatrixXd::Zero(N, 1);
  ds.outcome_names = {"y1"};
  ds.covariate_names = {"x1"};
  LatentMixtureSpec spec = latent_spec(2, 1);
  LatentFitter fitter(spec, ds);
  Rng rng(2);
  LatentQState s = fitter.init_state(LatentInitOptions{}, rng);
  s.mu_q_beta_k[0] << 1.0;
  s.mu_q_beta_k[1] << -2.0;
  s.Sigma_q_beta_k[0] = 0.5 * Eigen::MatrixXd::Identity(1, 1);
  s.Sigma_q_beta_k[1] = 1.5 * Eigen::MatrixXd::Identity(1, 1);
  s.mu_q_inv_sigma2_k << 0.7, 1.3;
  s.mu_q_log_sigma2_k << 0.2, -0.4;
  s.mu_q_log_w << std::log(0.3), std::log(0.7);
  const LatentQState before = s;
  fitter.update_responsibilities_and_latents(s);
  for (int i = 0; i < N; ++i) {
    const double e2 =
        before.sigma2_q_eta[i] + before.mu_q_eta[i] * before.mu_q_eta[i];
    Eigen::Vector2d tau;
    for (int k = 0; k < 2; ++k) {
      tau[k] = before.mu_q_log_w[k] - 0.5 * before.mu_q_log_sigma2_k[k] -
               0.5 * kLog2Pi - 0.5 * before.mu_q_inv_sigma2_k[k] * e2;
    }
    const double mx = tau.maxCoeff();
    const Eigen::Vector2d e = (tau.array() - mx).exp();
    const Eigen::Vector2d want = e / e.sum();
    CHECK(s.mu_q_a(i, 0) == doctest::Approx(want[0]).epsilon(1e-12));
    CHECK(s.mu_q_a(i, 1) == doctest::Approx(want[1]).epsilon(1e-12));
  }
}

TEST_CASE("latent sweep reaches an idempotent fixed point") {
  auto [ds, beta] = two_group_data(60, 11);
  LatentMixtureSpec spec = latent_spec(2, 1);
  LatentFitter fitter(spec, ds);
  LatentFitOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 3000;
  auto [state, report] = fitter.fit(opt);
  REQUIRE(report.converged);
  std::vector<double> before, after;
  fitter.collect_scalars(state, before);
  LatentQState again = state;
  fitter.sweep(again);
  fitter.collect_scalars(again, after);
  CHECK(max_relative_change(before, after) < 1e-8);
}

TEST_CASE("K=1 latent fit equals the all-H=1 outcome fit at the fixed point") {
  const SimulationTruth truth = SimulationTruth::benchmark();
  auto [ds, eta_true] = simulate(truth, 120, 31, 0.1);

  LatentMixtureSpec lspec = latent_spec(1, 2);
  lspec.mu_beta = Eigen::VectorXd::Zero(2);
  lspec.Sigma_beta = 100.0 * Eigen::MatrixXd::Identity(2, 2);
  lspec.sigma2_nu = 100.0;
  LatentFitter lf(lspec, ds);
  LatentFitOptions lopt;
  lopt.tol = 1e-9;
  lopt.max_iter = 3000;
  auto [ls, lrep] = lf.fit(lopt);
  REQUIRE(lrep.converged);

  const OutcomeMixtureSpec ospec = OutcomeMixtureSpec::with_shared_priors(
      {1, 1, 1, 1}, 2, lspec.mu_lambda, lspec.sigma2_lambda, lspec.mu_nu,
      lspec.sigma2_nu, lspec.alpha_psi2, lspec.beta_psi2, lspec.alpha_sigma2,
      lspec.beta_sigma2, 1.0, 100.0);
  OutcomeFitter of(ospec, ds);
  FitOptions oopt;
  oopt.tol = 1e-9;
  oopt.max_iter = 3000;
  auto [os, orep] = of.fit(oopt);
  REQUIRE(orep.converged);

  // Both fixed points describe the same Gaussian SEM.
  for (int j = 0; j < 4; ++j) {
    CHECK(ls.mu_q_nu[j] == doctest::Approx(os.mu_q_mu(j, 0)).epsilon(1e-6));
    CHECK(ls.mu_q_lambda[j] == doctest::Approx(os.mu_q_lambda[j]).epsilon(1e-6));
    CHECK(ls.mu_q_inv_psi2[j] ==
          doctest::Approx(os.mu_q_inv_psi2(j, 0)).epsilon(1e-6));
  }
  for (int i = 0; i < ds.n(); ++i) {
    CHECK(ls.mu_q_eta[i] == doctest::Approx(os.mu_q_eta[i]).epsilon(1e-5));
  }
  for (int k = 0; k < 2; ++k) {
    CHECK(ls.mu_q_beta_k[0][k] == doctest::Approx(os.mu_q_beta[k]).epsilon(1e-6));
  }
  CHECK(ls.mu_q_inv_sigma2_k[0] ==
        doctest::Approx(os.mu_q_inv_sigma2).epsilon(1e-6));
}

TEST_CASE("well-separated two-group data recovers component regressions") {
  auto [ds, beta] = two_group_data(500, 77);
  LatentMixtureSpec spec = latent_spec(2, 1);
  LatentFitter fitter(spec, ds);
  LatentFitOptions opt;
  opt.max_iter = 1000;
  opt.seed = 4;
  auto [state, report] = fitter.fit(opt);
  const Eigen::VectorXd x_bar = ds.x.colwise().mean().transpose();
  const LatentQState sorted = state.sorted_by_projection(x_bar);
  CHECK(std::fabs(sorted.mu_q_beta_k[0][0] - 1.0) < 0.3);
  CHECK(std::fabs(sorted.mu_q_beta_k[1][0] - 4.0) < 0.3);
  // Determinism under a fixed seed.
  auto [state2, report2] = fitter.fit(opt);
  std::vector<double> v1, v2;
  fitter.collect_scalars(state, v1);
  fitter.collect_scalars(state2, v2);
  REQUIRE(v1.size() == v2.size());
  for (size_t i = 0; i < v1.size(); ++i) {
    CHECK(v1[i] == v2[i]);
  }
}

TEST_CASE("permuting the component initialization permutes the fit") {
  auto [ds, beta] = two_group_data(200, 13);
  LatentMixtureSpec spec = latent_spec(2, 1);
  LatentFitter fitter(spec, ds);

  LatentFitOptions opt;
  opt.max_iter = 800;
  Eigen::MatrixXd binit(1, 2);
  binit << 0.5, 3.0;
  Eigen::VectorXd sinit(2);
  sinit << 1.0, 2.0;
  Eigen::VectorXd winit(2);
  winit << 0.4, 0.6;
  opt.init.beta_init = binit;
  opt.init.sigma2_init = sinit;
  opt.init.weights_init = winit;
  auto [sa, ra] = fitter.fit(opt);

  LatentFitOptions perm = opt;
  Eigen::MatrixXd binit2(1, 2);
  binit2 << 3.0, 0.5;
  Eigen::VectorXd sinit2(2);
  sinit2 << 2.0, 1.0;
  Eigen::VectorXd winit2(2);
  winit2 << 0.6, 0.4;
  perm.init.beta_init = binit2;
  perm.init.sigma2_init = sinit2;
  perm.init.weights_init = winit2;
  auto [sb, rb] = fitter.fit(perm);

  CHECK(sa.mu_q_beta_k[0][0] == doctest::Approx(sb.mu_q_beta_k[1][0]).epsilon(1e-10));
  CHECK(sa.mu_q_beta_k[1][0] == doctest::Approx(sb.mu_q_beta_k[0][0]).epsilon(1e-10));
  CHECK(sa.beta_q_sigma2_k[0] == doctest::Approx(sb.beta_q_sigma2_k[1]).epsilon(1e-10));
  CHECK(sa.alpha_q_w[0] == doctest::Approx(sb.alpha_q_w[1]).epsilon(1e-10));
  // Non-component blocks are unchanged.
  for (int j = 0; j < ds.m(); ++j) {
    CHECK(sa.mu_q_nu[j] == doctest::Approx(sb.mu_q_nu[j]).epsilon(1e-10));
  }
  for (int i = 0; i < ds.n(); ++i) {
    CHECK(sa.mu_q_eta[i] == doctest::Approx(sb.mu_q_eta[i]).epsilon(1e-10));
  }
}

TEST_CASE("latent fit ignores masked cells") {
  const SimulationTruth truth = SimulationTruth::benchmark();
  auto [ds, eta_true] = simulate(truth, 50, 321, 0.2);
  Dataset poisoned = ds;
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.m(); ++j) {
      if (!ds.observed(i, j)) {
        poisoned.y(i, j) = -777.0;
      }
    }
  }
  LatentMixtureSpec spec = latent_spec(2, 2);
  spec.mu_beta = Eigen::VectorXd::Zero(2);
  spec.Sigma_beta = 100.0 * Eigen::MatrixXd::Identity(2, 2);
  LatentFitOptions opt;
  opt.max_iter = 40;
  LatentFitter f1(spec, ds);
  LatentFitter f2(spec, poisoned);
  auto [s1, r1] = f1.fit(opt);
  auto [s2, r2] = f2.fit(opt);
  std::vector<double> v1, v2;
  f1.collect_scalars(s1, v1);
  f2.collect_scalars(s2, v2);
  REQUIRE(v1.size() == v2.size());
  for (size_t k = 0; k < v1.size(); ++k) {
    CHECK(v1[k] == v2[k]);
  }
}

TEST_CASE("pinning nu_1 holds it fixed") {
  auto [ds, beta] = two_group_data(80, 5);
  LatentMixtureSpec spec = latent_spec(2, 1);
  spec.pin_nu1 = 0.25;
  LatentFitter fitter(spec, ds);
  LatentFitOptions opt;
  opt.max_iter = 200;
  auto [state, report] = fitter.fit(opt);
  CHECK(state.mu_q_nu[0] == 0.25);
  CHECK(state.sigma2_q_nu[0] == 0.0);
}
