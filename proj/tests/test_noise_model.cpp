#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wndyn/errors.hpp"
#include "wndyn/noise_model.hpp"
#include "wndyn/rng.hpp"

using namespace wndyn;
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- evaluation

TEST_CASE("covariance families evaluate to their closed forms") {
  const CovarianceSpec g = CovarianceSpec::gaussian(2.0, 1.5, 0.8);
  CHECK(eval_C(g, 0.3, -0.4) ==
        doctest::Approx(2.0 * std::exp(-0.09 / (2 * 2.25) - 0.16 / (2 * 0.64)))
            .epsilon(1e-14));
  CHECK(g.c00() == doctest::Approx(2.0).epsilon(1e-15));

  // an infinite scale drops that factor entirely
  const CovarianceSpec gq = CovarianceSpec::gaussian(1.0, kInf, 2.0);
  CHECK(eval_C(gq, 123.0, 0.5) ==
        doctest::Approx(std::exp(-0.25 / 8.0)).epsilon(1e-14));
  CHECK(gq.is_q_only());
  CHECK_FALSE(g.is_q_only());

  const CovarianceSpec c = CovarianceSpec::constant(0.7);
  CHECK(eval_C(c, 5.0, -3.0) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(c.is_q_only());

  const double hbar = 0.9;
  const CovarianceSpec t = CovarianceSpec::tabulated(
      {{0.3, 0.7, 0.5}, {-0.2, 0.4, 1.0}}, hbar);
  const double p = 0.6, q = -1.1;
  const double expect = 0.5 * std::cos((p * 0.7 - q * 0.3) / hbar) +
                        1.0 * std::cos((p * 0.4 - q * (-0.2)) / hbar);
  CHECK(eval_C(t, p, q) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(t.c00() == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("covariance functions are even") {
  CounterRng rng(3, 0);
  const CovarianceSpec specs[] = {
      CovarianceSpec::gaussian(1.3, 0.9, 2.1),
      CovarianceSpec::tabulated({{1.0, 0.2, 0.4}, {-0.5, 1.1, 0.6}}, 1.0)};
  for (const auto& s : specs)
    for (int rep = 0; rep < 20; ++rep) {
      const double p = 4.0 * (rng.uniform() - 0.5);
      const double q = 4.0 * (rng.uniform() - 0.5);
      CHECK(eval_C(s, p, q) == doctest::Approx(eval_C(s, -p, -q)).epsilon(1e-14));
    }
}

// ----------------------------------------------------------------- curvature

TEST_CASE("curvature moments of the gaussian family") {
  const double C0 = 2.0, lp = 1.2, lq = 1.5;
  const CovarianceSpec g = CovarianceSpec::gaussian(C0, lp, lq);
  CHECK(curvature_moment(g, 0, 2) ==
        doctest::Approx(C0 / (2 * lq * lq)).epsilon(1e-12));
  CHECK(curvature_moment(g, 2, 0) ==
        doctest::Approx(C0 / (2 * lp * lp)).epsilon(1e-12));
  CHECK(curvature_moment(g, 1, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(curvature_moment(g, 0, 4) ==
        doctest::Approx(C0 / (8 * std::pow(lq, 4))).epsilon(1e-10));
  CHECK(curvature_moment(g, 4, 0) ==
        doctest::Approx(C0 / (8 * std::pow(lp, 4))).epsilon(1e-10));
  CHECK(curvature_moment(g, 2, 2) ==
        doctest::Approx(C0 / (4 * lp * lp * lq * lq)).epsilon(1e-10));

  // odd orders vanish identically
  CHECK(curvature_moment(g, 1, 0) == 0.0);
  CHECK(curvature_moment(g, 0, 3) == 0.0);
  CHECK(curvature_moment(g, 2, 1) == 0.0);

  // infinite momentum scale: no p-curvature at all
  const CovarianceSpec gq = CovarianceSpec::gaussian(1.0, kInf, 1.0);
  CHECK(curvature_moment(gq, 2, 0) == 0.0);
  CHECK(curvature_moment(gq, 0, 2) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(q_curvature(g) == doctest::Approx(C0 / (lq * lq)).epsilon(1e-12));
}

TEST_CASE("curvature moments of the tabulated family") {
  const double hbar = 0.9;
  const std::vector<SpectralAtom> atoms{{0.3, 0.7, 0.5}, {-0.2, 0.4, 1.0}};
  const CovarianceSpec t = CovarianceSpec::tabulated(atoms, hbar);
  for (int mu = 0; mu <= 3; ++mu)
    for (int nu = 0; nu <= 3; ++nu) {
      double expect = 0.0;
      if ((mu + nu) % 2 == 0) {
        double mf = 1.0, nf = 1.0;
        for (int k = 2; k <= mu; ++k) mf *= k;
        for (int k = 2; k <= nu; ++k) nf *= k;
        for (const auto& a : atoms)
          expect += a.weight * std::pow(a.q / hbar, mu) *
                    std::pow(a.p / hbar, nu) / (mf * nf);
      }
      CAPTURE(mu);
      CAPTURE(nu);
      CHECK(curvature_moment(t, mu, nu) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("constant covariance has no curvature") {
  const CovarianceSpec c = CovarianceSpec::constant(3.0);
  for (int mu = 0; mu <= 4; ++mu)
    for (int nu = 0; nu <= 4; ++nu)
      if (mu + nu > 0) CHECK(curvature_moment(c, mu, nu) == 0.0);
  CHECK(curvature_moment(c, 0, 0) == doctest::Approx(3.0));
  CHECK(q_curvature(c) == 0.0);
}

TEST_CASE("diffusion matrix layout and positivity") {
  const CovarianceSpec t = CovarianceSpec::tabulated(
      {{0.8, 0.1, 0.3}, {-0.4, 1.2, 0.9}, {0.0, 0.5, 0.2}}, 1.1);
  const DiffusionMatrix D = diffusion_matrix(t);
  CHECK(D.d02() == doctest::Approx(curvature_moment(t, 0, 2)).epsilon(1e-13));
  CHECK(D.d20() == doctest::Approx(curvature_moment(t, 2, 0)).epsilon(1e-13));
  CHECK(D.d11() == doctest::Approx(curvature_moment(t, 1, 1)).epsilon(1e-13));
  CHECK(D.D(0, 1) == doctest::Approx(D.D(1, 0)).epsilon(1e-15));
  const Eigen::Vector2d ev =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(D.D).eigenvalues();
  CHECK(ev[0] >= -1e-12);
}

// ---------------------------------------------------------------- positivity

TEST_CASE("positive-type validation accepts genuine covariances") {
  CHECK(validate_positive_type(CovarianceSpec::gaussian(1.0, 1.0, 1.0), 256)
            .pass);
  CHECK(validate_positive_type(CovarianceSpec::gaussian(2.0, kInf, 0.7), 256)
            .pass);
  CHECK(validate_positive_type(CovarianceSpec::constant(1.0), 128).pass);
  CHECK(validate_positive_type(
            CovarianceSpec::tabulated({{0.3, 0.7, 0.5}, {1.0, 0.0, 0.2}}, 1.0),
            64)
            .pass);
}

TEST_CASE("negative atom weights are rejected") {
  // at construction
  CHECK_THROWS_AS(
      CovarianceSpec::tabulated({{0.3, 0.7, 0.5}, {1.0, 0.0, -0.2}}, 1.0),
      std::invalid_argument);
  // and by the validator when the factory is bypassed
  CovarianceSpec bad;
  bad.family = CovarianceFamily::kTabulated;
  bad.atoms = {{0.3, 0.7, 0.5}, {1.0, 0.0, -0.2}};
  CHECK_THROWS_AS(validate_positive_type(bad, 64), NotPositiveType);
}

TEST_CASE("raw-sample validation flags an indefinite function") {
  // the box function: its transform is a sinc, which changes sign
  const int n = 512;
  const double step = 0.05;
  std::vector<double> box(n);
  for (int j = 0; j < n; ++j) {
    const double q = (j - n / 2) * step;
    box[j] = std::abs(q) <= 1.0 ? 1.0 : 0.0;
  }
  CHECK_THROWS_AS(validate_positive_type(box, step), NotPositiveType);

  // a sampled gaussian passes through the same route
  std::vector<double> gauss(n);
  for (int j = 0; j < n; ++j) {
    const double q = (j - n / 2) * step;
    gauss[j] = std::exp(-0.5 * q * q);
  }
  const PositivityReport rep = validate_positive_type(gauss, step);
  CHECK(rep.pass);
  CHECK(rep.samples == static_cast<std::size_t>(n));
  CHECK(rep.min_component >= -rep.threshold);
}

// ------------------------------------------------------------- field samples

TEST_CASE("field increments require pure position noise") {
  const CovarianceSpec g = CovarianceSpec::gaussian(1.0, 1.5, 1.0);
  CounterRng rng(7, 0);
  CHECK_THROWS_AS(sample_field_increment(g, rng, {0.0}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("field increments are deterministic given the rng state") {
  const CovarianceSpec g = CovarianceSpec::gaussian(1.0, kInf, 1.0);
  CounterRng a(11, 3), b(11, 3);
  const std::vector<double> xs{-1.0, 0.0, 2.5};
  const std::vector<double> va = sample_field_increment(g, a, xs, 0.2);
  const std::vector<double> vb = sample_field_increment(g, b, xs, 0.2);
  REQUIRE(va.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(va[k] == vb[k]);
}

TEST_CASE("field increments vanish at dt = 0") {
  const CovarianceSpec g = CovarianceSpec::gaussian(1.0, kInf, 1.0);
  CounterRng rng(1, 1);
  for (double v : sample_field_increment(g, rng, {0.0, 1.0}, 0.0))
    CHECK(v == 0.0);
}

TEST_CASE("gaussian field increment covariance matches -C'' dt") {
  const double C0 = 1.0, ell = 1.0, dt = 0.3;
  const CovarianceSpec g = CovarianceSpec::gaussian(C0, kInf, ell);
  const std::vector<double> xs{0.0, 0.5, 2.0};
  auto cov_exact = [&](double x) {
    const double r = x / ell;
    return C0 * std::exp(-0.5 * r * r) * (1.0 - r * r) / (ell * ell) * dt;
  };
  const int reps = 20000;
  CounterRng rng(21, 0);
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  for (int r = 0; r < reps; ++r) {
    const std::vector<double> v = sample_field_increment(g, rng, xs, dt);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) acc(i, j) += v[i] * v[j];
  }
  acc /= reps;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CAPTURE(i);
      CAPTURE(j);
      // ~4 sigma of the covariance estimator at 20000 draws
      CHECK(std::abs(acc(i, j) - cov_exact(xs[i] - xs[j])) < 0.02);
    }
}

TEST_CASE("tabulated field increment variance is exact in distribution") {
  // one cosine atom: force variance rate w p_a^2 / hbar^2
  const double w = 0.8, pa = 1.2, hbar = 1.0, dt = 0.5;
  const CovarianceSpec t = CovarianceSpec::tabulated({{pa, 0.0, w}}, hbar);
  CounterRng rng(5, 0);
  const int reps = 40000;
  double s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const std::vector<double> v = sample_field_increment(t, rng, {0.7}, dt);
    s2 += v[0] * v[0];
  }
  const double var = s2 / reps;
  const double expect = w * pa * pa / (hbar * hbar) * dt;
  // 4 sigma of the chi^2 spread of a variance estimate
  CHECK(std::abs(var - expect) <= 4.0 * expect * std::sqrt(2.0 / reps));
}

// ----------------------------------------------------------------- json load

TEST_CASE("tabulated atoms parse from json") {
  const CovarianceSpec t = CovarianceSpec::tabulated_from_json(
      R"([{"p": 0.3, "q": 0.7, "weight": 0.5},
          {"p": -0.2, "q": 0.4, "weight": 1.0}])",
      0.9);
  REQUIRE(t.atoms.size() == 2);
  CHECK(t.family == CovarianceFamily::kTabulated);
  CHECK(t.atoms[1].p == doctest::Approx(-0.2));
  CHECK(t.atoms[1].weight == doctest::Approx(1.0));
  CHECK(t.hbar == doctest::Approx(0.9));
  CHECK_THROWS(CovarianceSpec::tabulated_from_json("not json"));
}
