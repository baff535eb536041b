#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wndyn/averaged_semigroup.hpp"
#include "wndyn/heat_bath.hpp"
#include "wndyn/monte_carlo.hpp"
#include "wndyn/noise_model.hpp"
#include "wndyn/phase_space.hpp"

using namespace wndyn;
constexpr double kInf = std::numeric_limits<double>::infinity();

namespace {

SimulationConfig base_config() {
  SimulationConfig c;
  c.n_traj = 2000;
  c.times = {0.5, 1.0, 2.0};
  c.seed = 1234;
  c.H = QuadraticHamiltonian::free_particle(1.0, 1.0);
  c.noise = CovarianceSpec::gaussian(0.8, 1.2, 0.9);
  c.initial.mean = Eigen::Vector2d(0.3, -0.2);
  c.initial.cov << 0.5, 0.1, 0.1, 0.4;
  return c;
}

}  // namespace

// ------------------------------------------------------------- configuration

TEST_CASE("config validation rejects malformed input") {
  SimulationConfig c = base_config();
  c.n_traj = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = base_config();
  c.times = {0.5, 0.5, 1.0};  // not strictly increasing
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = base_config();
  c.times = {-0.5, 1.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = base_config();
  c.times = {0.5, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = base_config();
  c.initial.cov << 0.5, 0.3, -0.3, 0.5;  // not symmetric
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = base_config();
  c.initial.cov << 1.0, 0.0, 0.0, -0.2;  // indefinite
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  CHECK_NOTHROW(base_config().validate());
}

// ------------------------------------------------- deterministic degeneracies

TEST_CASE("zero diffusion and point initial data reproduce the flow") {
  SimulationConfig c = base_config();
  c.noise = CovarianceSpec::constant(0.7);  // flat covariance: D = 0
  c.initial.mean = Eigen::Vector2d(1.1, -0.6);
  c.initial.cov.setZero();
  c.H = QuadraticHamiltonian::harmonic(1.3, 0.9, 1.0);
  c.n_traj = 16;

  const MomentEstimate est = simulate_classical(c);
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const Eigen::Vector2d z =
        flow_jacobian(c.H, c.times[k]).J * c.initial.mean;
    CHECK(est.p.mean[k] == doctest::Approx(z(0)).scale(1.0).epsilon(1e-12));
    CHECK(est.q.mean[k] == doctest::Approx(z(1)).scale(1.0).epsilon(1e-12));
    // identical samples: variance is pure floating-point residue
    CHECK(std::abs(est.p.var[k]) < 1e-12);
    CHECK(std::abs(est.q.var[k]) < 1e-12);
    CHECK(est.p.mean_se[k] < 1e-6);
  }
}

TEST_CASE("a fixed seed is reproducible and seeds are independent") {
  const SimulationConfig c = base_config();
  const MomentEstimate a = simulate_classical(c);
  const MomentEstimate b = simulate_classical(c);
  REQUIRE(a.times == b.times);
  CHECK(a.p.mean == b.p.mean);      // bit-identical
  CHECK(a.q.var == b.q.var);
  CHECK(a.p.m4 == b.p.m4);
  CHECK(a.slope_H == b.slope_H);
  CHECK(a.seed == c.seed);
  CHECK(a.n_traj == c.n_traj);

  SimulationConfig c2 = base_config();
  c2.seed = 999;
  const MomentEstimate d = simulate_classical(c2);
  CHECK(a.p.mean[0] != d.p.mean[0]);
}

// --------------------------------------------------------- statistical gates

TEST_CASE("free-particle moments agree with the closed forms at 3 sigma") {
  SimulationConfig c = base_config();
  c.n_traj = 20000;
  const MomentEstimate est = simulate_classical(c);

  MomentState init;
  init.mean = c.initial.mean;
  init.second = c.initial.cov + init.mean * init.mean.transpose();
  const DiffusionMatrix D = diffusion_matrix(c.noise);

  CHECK(est.batch_mean_discrepancy < 1e-12);
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const MomentTable mt = propagate_moments(c.H, D, init, c.times[k]);
    const double p_mean = mt.values.at("p");
    const double q_mean = mt.values.at("q");
    const double p_var = mt.values.at("p2") - p_mean * p_mean;
    const double q_var = mt.values.at("q2") - q_mean * q_mean;

    CHECK(std::abs(est.p.mean[k] - p_mean) < 3.0 * est.p.mean_se[k]);
    CHECK(std::abs(est.q.mean[k] - q_mean) < 3.0 * est.q.mean_se[k]);
    CHECK(std::abs(est.p.var[k] - p_var) < 3.0 * est.p.var_se[k]);
    CHECK(std::abs(est.q.var[k] - q_var) < 3.0 * est.q.var_se[k]);

    // the law stays Gaussian (linear dynamics, Gaussian data and noise)
    CHECK(std::abs(est.p.m3[k]) < 3.0 * est.p.m3_se[k]);
    CHECK(std::abs(est.q.m3[k]) < 3.0 * est.q.m3_se[k]);
    CHECK(std::abs(est.p.m4[k] - 3.0 * p_var * p_var) <
          3.0 * est.p.m4_se[k] + 9.0 * p_var * est.p.var_se[k]);
    CHECK(std::abs(est.q.m4[k] - 3.0 * q_var * q_var) <
          3.0 * est.q.m4_se[k] + 9.0 * q_var * est.q.var_se[k]);
  }
}

TEST_CASE("harmonic energy grows at the exact linear rate") {
  SimulationConfig c = base_config();
  c.H = QuadraticHamiltonian::harmonic(1.0, 1.0, 1.0);
  c.noise = CovarianceSpec::gaussian(1.0, 1.0, std::sqrt(2.0));
  c.times = {0.5, 1.0, 1.5, 2.0};
  c.n_traj = 20000;
  const MomentEstimate est = simulate_classical(c);

  // rate = D02/m + m w^2 D20 with D02 = C0/(2 lq^2), D20 = C0/(2 lp^2)
  const DiffusionMatrix D = diffusion_matrix(c.noise);
  const double rate = D.d02() / 1.0 + 1.0 * 1.0 * D.d20();
  CHECK(est.slope_H_se > 0.0);
  CHECK(std::abs(est.slope_H - rate) < 3.0 * est.slope_H_se);
}

TEST_CASE("standard errors shrink like one over root n") {
  SimulationConfig c = base_config();
  c.n_traj = 20000;
  const MomentEstimate small = simulate_classical(c);
  c.n_traj = 40000;
  c.seed = 77;
  const MomentEstimate big = simulate_classical(c);

  const double root2 = std::sqrt(2.0);
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    CHECK(small.p.mean_se[k] / big.p.mean_se[k] ==
          doctest::Approx(root2).epsilon(0.2));
    CHECK(small.q.mean_se[k] / big.q.mean_se[k] ==
          doctest::Approx(root2).epsilon(0.2));
    CHECK(small.p.var_se[k] / big.p.var_se[k] ==
          doctest::Approx(root2).epsilon(0.2));
    CHECK(small.q.var_se[k] / big.q.var_se[k] ==
          doctest::Approx(root2).epsilon(0.2));
  }
}

// ------------------------------------------------------------- total system

TEST_CASE("total-system sampler validates its extra requirements") {
  SimulationConfig c = base_config();
  CHECK_THROWS_AS(simulate_total_system(c), std::invalid_argument);  // no bath

  BathSpec bath;
  bath.n = 2;
  bath.masses = {0.4, 0.6};
  bath.frequencies = {1.0, 2.0};
  bath.m = 1.0;
  bath.omega = 1.0;
  c.bath = bath;
  // momentum-dependent noise is outside the model class
  c.noise = CovarianceSpec::gaussian(0.8, 1.2, 0.9);
  CHECK_THROWS_AS(simulate_total_system(c), std::invalid_argument);

  c.noise = CovarianceSpec::gaussian(0.8, kInf, 0.9);
  CHECK_NOTHROW(simulate_total_system(c));
}

TEST_CASE("total-system means follow the finite-bath response functions") {
  BathSpec bath;
  bath.n = 3;
  bath.masses = {0.3, 0.5, 0.7};
  bath.frequencies = {0.9, 1.7, 2.6};
  bath.m = 1.2;
  bath.omega = 1.1;

  SimulationConfig c;
  c.n_traj = 4000;
  c.times = {0.4, 0.9, 1.7};
  c.seed = 31;
  c.H = QuadraticHamiltonian::harmonic(bath.m, bath.omega, 1.0);
  c.noise = CovarianceSpec::constant(0.7);  // curvature zero: bath noise only
  c.bath = bath;
  c.beta = 1.5;
  c.hbar = 0.8;
  c.initial.mean = Eigen::Vector2d(1.3, 0.0);
  c.initial.cov.setZero();

  const MomentEstimate est = simulate_total_system(c);
  const FiniteBath fb(bath);
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const double t = c.times[k];
    const double p_exact = fb.cos00(t) * 1.3;
    const double q_exact = fb.gn(t) / bath.m * 1.3;
    CHECK(std::abs(est.p.mean[k] - p_exact) < 3.0 * est.p.mean_se[k]);
    CHECK(std::abs(est.q.mean[k] - q_exact) < 3.0 * est.q.mean_se[k]);
    CHECK(est.p.mean_se[k] > 0.0);  // the bath genuinely fluctuates
  }

  // reproducible, and the white-noise force adds variance on top
  const MomentEstimate again = simulate_total_system(c);
  CHECK(est.p.mean == again.p.mean);
  CHECK(est.q.var == again.q.var);

  SimulationConfig noisy = c;
  noisy.noise = CovarianceSpec::gaussian(0.5, kInf, 1.0);
  const MomentEstimate with_noise = simulate_total_system(noisy);
  for (std::size_t k = 0; k < c.times.size(); ++k)
    CHECK(with_noise.p.var[k] > est.p.var[k]);
}
