#include <doctest.h>

#include <cmath>

#include "esgd/errors.hpp"
#include "esgd/oracle.hpp"

using namespace esgd;

TEST_SUITE_BEGIN("oracle");

namespace {

const Fn1d kZero = [](double) { return 0.0; };

Fn1d quadratic1d(double a) {
  return [a](double t) { return 0.5 * a * t * t; };
}

Grid1d grid_around(double x, double gamma, int points = 20001, double sigmas = 10.0) {
  const double w = sigmas / std::sqrt(gamma);
  return Grid1d{x - w, x + w, points};
}

}  // namespace

TEST_CASE("flat energy gives the gaussian normalizer") {
  // F = 0.5 log(2 pi / gamma)
  const double f1 = local_entropy_quadrature(kZero, make_gibbs_1d(1.0, 0.0),
                                             grid_around(0.0, 1.0));
  CHECK(f1 == doctest::Approx(0.9189385332046727).epsilon(1e-10));
  const double f4 = local_entropy_quadrature(kZero, make_gibbs_1d(4.0, 0.3),
                                             grid_around(0.3, 4.0));
  CHECK(f4 == doctest::Approx(0.5 * std::log(2.0 * M_PI / 4.0)).epsilon(1e-10));
}

TEST_CASE("unit quadratic at the center") {
  // a = 1, gamma = 1, x = 0: F = 0.5 log(2 pi) - 0.5 log 2.
  const double f = local_entropy_quadrature(quadratic1d(1.0), make_gibbs_1d(1.0, 0.0),
                                            grid_around(0.0, 1.0));
  CHECK(f == doctest::Approx(0.5723649429247001).epsilon(1e-10));
}

TEST_CASE("double well: smoothed objective prefers the wide side at small gamma") {
  const Landscape1d land;
  const Fn1d f = [&land](double t) { return land(t); };
  const Grid1d grid{-40.0, 40.0, 40001};
  const double f_wide = local_entropy_quadrature(f, make_gibbs_1d(0.1, -2.0), grid);
  const double f_sharp = local_entropy_quadrature(f, make_gibbs_1d(0.1, 2.0), grid);
  CHECK(f_wide > f_sharp);
  CHECK(f_wide == doctest::Approx(1.3628615271655506).epsilon(1e-6));
  CHECK(f_sharp == doctest::Approx(1.2365627978044877).epsilon(1e-6));
}

TEST_CASE("gradient vanishes at the center of an even energy") {
  const double g = local_entropy_grad_quadrature(quadratic1d(2.5), make_gibbs_1d(1.0, 0.0),
                                                 grid_around(0.0, 1.0));
  CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("quadrature gradient equals finite differences of quadrature F") {
  const Landscape1d land;
  const Fn1d f = [&land](double t) { return land(t); };
  const double gamma = 0.7;
  const auto F = [&](double x) {
    return local_entropy_quadrature(f, make_gibbs_1d(gamma, x),
                                    Grid1d{x - 14.0, x + 14.0, 30001});
  };
  for (double x : {-2.0, -0.3, 0.9, 2.0}) {
    const double grad = local_entropy_grad_quadrature(f, make_gibbs_1d(gamma, x),
                                                      Grid1d{x - 14.0, x + 14.0, 30001});
    const double h = 1e-3;  // five-point stencil
    const double fd =
        (-F(x + 2 * h) + 8 * F(x + h) - 8 * F(x - h) + F(x - 2 * h)) / (12 * h);
    CHECK(std::abs(grad - fd) < 1e-8);
  }
}

TEST_CASE("unit quadratic away from the center") {
  // a = 1, gamma = 1, x = 2: dF/dx = -gamma a/(a+gamma) x = -1.
  const double g = local_entropy_grad_quadrature(quadratic1d(1.0), make_gibbs_1d(1.0, 2.0),
                                                 grid_around(2.0, 1.0));
  CHECK(g == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("closed form: flat energy keeps the center") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  GibbsSpec spec;
  spec.gamma = 1.5;
  spec.center = (ParamVector(2) << 0.4, -1.0).finished();
  const auto out = local_entropy_quadratic_closed_form(a, ParamVector::Zero(2), spec);
  CHECK((out.mean - spec.center).norm() < 1e-14);
  CHECK(out.grad.norm() < 1e-14);
}

TEST_CASE("closed form 1-d hand values") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const auto out =
      local_entropy_quadratic_closed_form(a, ParamVector::Zero(1), make_gibbs_1d(1.0, 2.0));
  CHECK(out.mean[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(out.grad[0] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("closed form matches quadrature to 1e-8 on embedded quadratics") {
  for (double a : {0.1, 1.0, 10.0}) {
    for (double gamma : {0.1, 1.0, 10.0}) {
      const double x = 0.7;
      const GibbsSpec spec = make_gibbs_1d(gamma, x);
      const auto closed = local_entropy_quadratic_closed_form(
          Eigen::MatrixXd::Constant(1, 1, a), ParamVector::Zero(1), spec);
      const Grid1d grid = grid_around(x, gamma);
      CHECK(std::abs(local_entropy_quadrature(quadratic1d(a), spec, grid) -
                     closed.log_partition) < 1e-8);
      CHECK(std::abs(local_entropy_grad_quadrature(quadratic1d(a), spec, grid) -
                     closed.grad[0]) < 1e-8);
    }
  }
}

TEST_CASE("closed form on an anisotropic diagonal") {
  // A = diag(1, 100), gamma = 1: per-axis gradient coefficients
  // gamma a_i/(a_i + gamma) = 1/2 and 100/101 per unit displacement.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 100.0;
  GibbsSpec spec;
  spec.gamma = 1.0;
  spec.center = (ParamVector(2) << 1.0, 1.0).finished();
  const auto out = local_entropy_quadratic_closed_form(a, ParamVector::Zero(2), spec);
  CHECK(out.grad[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(out.grad[1] == doctest::Approx(-100.0 / 101.0).epsilon(1e-12));
  const double ratio = out.grad[0] / out.grad[1];
  CHECK(ratio == doctest::Approx((1.0 / 2.0) / (100.0 / 101.0)).epsilon(1e-12));
}

TEST_CASE("saddle point approximation is exact for quadratics") {
  const QuadraticObjective obj = QuadraticObjective::from_eigenvalues({0.5, 1.5, 3.0}, 7);
  Rng rng(3);
  const ParamVector x = rng.gaussian_vector(3);
  const double gamma = 0.8;
  GibbsSpec spec;
  spec.gamma = gamma;
  spec.center = x;
  const auto closed =
      local_entropy_quadratic_closed_form(obj.matrix(), obj.linear_term(), spec);
  const ParamVector approx = saddle_point_grad(obj, x, gamma);
  CHECK((approx + closed.grad).norm() < 1e-10);  // approx = -gradF
}

TEST_CASE("saddle point gradient is zero at a critical point") {
  const QuadraticObjective obj = QuadraticObjective::from_eigenvalues({1.0, 2.0}, 9);
  const ParamVector x = obj.minimizer();
  CHECK(saddle_point_grad(obj, x, 0.5).norm() < 1e-12);
}

TEST_CASE("classical entropy of the flat energy is the gaussian entropy") {
  const double s = classical_entropy_quadrature(kZero, make_gibbs_1d(1.0, 0.0),
                                                grid_around(0.0, 1.0));
  CHECK(s == doctest::Approx(1.4189385332046727).epsilon(1e-10));
}

TEST_CASE("classical entropy shrinks as gamma grows") {
  double prev = std::numeric_limits<double>::infinity();
  for (double gamma : {0.5, 1.0, 2.0, 4.0}) {
    const double s = classical_entropy_quadrature(kZero, make_gibbs_1d(gamma, 0.0),
                                                  grid_around(0.0, gamma));
    CHECK(s < prev);
    CHECK(s == doctest::Approx(0.5 * std::log(2.0 * M_PI * M_E / gamma)).epsilon(1e-9));
    prev = s;
  }
}

TEST_CASE("three-region landscape: entropy and local entropy rank differently") {
  // Plateau (x = 8, flat and high), wide well (x = -2), sharp well (x = 2),
  // at gamma = 1. The differential entropy S is largest on the plateau,
  // while -F is smallest (most favorable) at the wide well.
  const Landscape1d land;
  const Fn1d f = [&land](double t) { return land(t); };
  const Grid1d grid{-60.0, 70.0, 130001};
  const double s_plateau = classical_entropy_quadrature(f, make_gibbs_1d(1.0, 8.0), grid);
  const double s_wide = classical_entropy_quadrature(f, make_gibbs_1d(1.0, -2.0), grid);
  const double s_sharp = classical_entropy_quadrature(f, make_gibbs_1d(1.0, 2.0), grid);
  CHECK(s_plateau > s_sharp);
  CHECK(s_plateau > s_wide);

  const double negF_plateau =
      -local_entropy_quadrature(f, make_gibbs_1d(1.0, 8.0), grid);
  const double negF_wide = -local_entropy_quadrature(f, make_gibbs_1d(1.0, -2.0), grid);
  const double negF_sharp = -local_entropy_quadrature(f, make_gibbs_1d(1.0, 2.0), grid);
  CHECK(negF_wide < negF_sharp);
  CHECK(negF_wide < negF_plateau);
}

TEST_CASE("beta other than one is accepted by the quadrature evaluators") {
  const double f = local_entropy_quadrature(kZero, make_gibbs_1d(1.0, 0.0, 2.0),
                                            grid_around(0.0, 2.0));
  CHECK(f == doctest::Approx(0.5 * std::log(2.0 * M_PI / 2.0)).epsilon(1e-10));
  const double s = classical_entropy_quadrature(kZero, make_gibbs_1d(1.0, 0.0, 2.0),
                                                grid_around(0.0, 2.0));
  CHECK(s == doctest::Approx(0.5 * std::log(2.0 * M_PI * M_E / 2.0)).epsilon(1e-9));
}

TEST_CASE("grid that misses mass raises a coverage error") {
  // Center far outside the grid.
  CHECK_THROWS_AS(local_entropy_quadrature(kZero, make_gibbs_1d(1.0, 30.0),
                                           Grid1d{-5.0, 5.0, 4001}),
                  CoverageError);
  // Grid much narrower than the gaussian factor.
  CHECK_THROWS_AS(local_entropy_quadrature(kZero, make_gibbs_1d(1e-4, 0.0),
                                           Grid1d{-3.0, 3.0, 4001}),
                  CoverageError);
}

TEST_CASE("gamma = 0 has no normalizable density") {
  CHECK_THROWS_AS(local_entropy_quadrature(kZero, make_gibbs_1d(0.0, 0.0),
                                           Grid1d{-5.0, 5.0, 4001}),
                  ArgumentError);
}

TEST_CASE("lemma equality on 1-d quadratics: Lip(dF) = a / (1 + a/gamma)") {
  for (double a : {0.5, 1.0, 2.0}) {
    for (double gamma : {0.5, 1.0, 5.0}) {
      const Eigen::MatrixXd A = Eigen::MatrixXd::Constant(1, 1, a);
      const auto grad_at = [&](double x) {
        return local_entropy_quadratic_closed_form(A, ParamVector::Zero(1),
                                                   make_gibbs_1d(gamma, x))
            .grad[0];
      };
      const double lip = std::abs(grad_at(1.7) - grad_at(-0.4)) / (1.7 + 0.4);
      CHECK(lip == doctest::Approx(a / (1.0 + a / gamma)).epsilon(1e-10));
      CHECK(lip <= a / (1.0 + 0.9 * a / gamma));  // bound with c slightly below a
    }
  }
}

TEST_CASE("smoothing family approaches the raw landscape as gamma grows") {
  const Landscape1d land;
  // -F(x, gamma) + 0.5 log(2 pi / gamma) -> f(x) pointwise.
  const double gamma = 1e6;
  const double offset = 0.5 * std::log(2.0 * M_PI / gamma);
  for (double x : {-3.0, -2.0, 0.0, 1.0, 2.0}) {
    const Grid1d grid = auto_integration_grid(x, gamma, 1.0, land.sharp_sigma);
    const double neg_f = -local_entropy_quadrature([&](double t) { return land(t); },
                                                   make_gibbs_1d(gamma, x), grid);
    CHECK(std::abs(neg_f + offset - land(x)) < 1e-3);
  }
}

TEST_CASE("smoothing family flattens monotonically as gamma shrinks") {
  const Landscape1d land;
  const Grid1d query{-4.0, 4.0, 161};
  const std::vector<double> gammas{0.05, 0.1, 0.2, 0.5, 1.0};
  const SmoothingTable table = smoothing_family(land, gammas, query);
  double prev_range = 0.0;
  for (double gamma : gammas) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : table.rows) {
      if (row.gamma != gamma) continue;
      lo = std::min(lo, row.neg_entropy);
      hi = std::max(hi, row.neg_entropy);
    }
    CHECK(hi - lo > prev_range);  // range grows with gamma
    prev_range = hi - lo;
  }
}

TEST_CASE("smoothing family is invariant under joint translation") {
  const Landscape1d base;
  Landscape1d shifted = base;
  shifted.wide_center += 10.0;
  shifted.sharp_center += 10.0;
  const std::vector<double> gammas{0.3, 3.0};
  const SmoothingTable a = smoothing_family(base, gammas, Grid1d{-4.0, 4.0, 81});
  const SmoothingTable b = smoothing_family(shifted, gammas, Grid1d{6.0, 14.0, 81});
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].x + 10.0 == doctest::Approx(b.rows[i].x).epsilon(1e-12));
    CHECK(a.rows[i].neg_entropy == doctest::Approx(b.rows[i].neg_entropy).epsilon(1e-9));
  }
}

TEST_CASE("smoothing family argmin tracks the wide well then the sharp one") {
  const Landscape1d land;
  const SmoothingTable table =
      smoothing_family(land, {0.1, 1e6}, Grid1d{-4.0, 4.0, 801});
  REQUIRE(table.argmin.size() == 2);
  CHECK(std::abs(table.argmin[0].second - land.wide_center) < 0.5);
  CHECK(std::abs(table.argmin[1].second - land.sharp_center) < 0.011);
}

TEST_SUITE_END();
