#include <doctest.h>

#include <cmath>

#include "epilab/sturm.hpp"
#include "test_helpers.hpp"

using namespace epilab;
using sturm::RadialOperator;

TEST_SUITE("sturm") {

TEST_CASE("collocation matches shooting on a d=3 band") {
  Band b(Dim(3), 0.4, M_PI - 0.4);
  RadialOperator op(b, 0.0);
  const double lam_c = sturm::eigen_solve(op, 1)[0].eigenvalue;
  const double lam_s = sturm::shoot_lambda1(b, 0.0);
  CHECK(std::abs(lam_c - lam_s) / lam_c < 1e-9);
}

TEST_CASE("cross-validation on random bands") {
  auto gen = testing::rng(42);
  std::uniform_real_distribution<double> umid(1.0, 2.1);
  std::uniform_real_distribution<double> uw(0.2, 1.0);
  std::uniform_int_distribution<int> ud(0, 2);
  std::uniform_int_distribution<int> um(0, 3);
  const int dims[3] = {3, 7, 15};
  for (int i = 0; i < 6; ++i) {
    const double mid = umid(gen), w = uw(gen);
    Band b(Dim(dims[ud(gen)]), mid - w / 2, mid + w / 2);
    const double m = static_cast<double>(um(gen)) * (b.d.d - 2);
    RadialOperator op(b, m);
    const double lam_c = sturm::eigen_solve(op, 1)[0].eigenvalue;
    const double lam_s = sturm::shoot_lambda1(b, m);
    CHECK(std::abs(lam_c - lam_s) / std::max(1.0, lam_c) < 1e-8);
  }
}

TEST_CASE("first eigenvalue increases with the azimuthal potential") {
  Band b = Band::symmetric(Dim(7), 0.5437);
  double prev = -1.0;
  for (double m : {0.0, 1.0, 5.0, 12.0, 40.0, 200.0}) {
    const double lam = sturm::eigen_solve(RadialOperator(b, m), 1)[0].eigenvalue;
    CHECK(lam > prev);
    prev = lam;
  }
  CHECK(prev > 100.0);  // m -> infinity drives lambda_1 up
}

TEST_CASE("first eigenvalue decreases with band width") {
  double prev = 1e300;
  for (double t0 : {0.3, 0.4, 0.5, 0.7, 0.9}) {
    Band b = Band::symmetric(Dim(7), t0);
    const double lam = sturm::eigen_solve(RadialOperator(b, 0.0), 1)[0].eigenvalue;
    CHECK(lam < prev);
    prev = lam;
  }
}

TEST_CASE("eigenvalues strictly increasing and profiles alternate parity") {
  Band b = Band::symmetric(Dim(7), 0.5437);
  auto pairs = sturm::eigen_solve(RadialOperator(b, 0.0), 3);
  CHECK(pairs[0].eigenvalue < pairs[1].eigenvalue);
  CHECK(pairs[1].eigenvalue < pairs[2].eigenvalue);
  // first profile even, second odd about the equator
  for (double s : {0.1, 0.25, 0.4}) {
    const double pe = pairs[0].profile.eval(M_PI / 2 - s);
    const double qe = pairs[0].profile.eval(M_PI / 2 + s);
    CHECK(pe == doctest::Approx(qe).epsilon(1e-10));
    const double po = pairs[1].profile.eval(M_PI / 2 - s);
    const double qo = pairs[1].profile.eval(M_PI / 2 + s);
    CHECK(po == doctest::Approx(-qo).epsilon(1e-9));
  }
}

TEST_CASE("narrow bands approach the flat-interval eigenvalue") {
  const double w = 0.01;
  Band b(Dim(5), M_PI / 2 - w / 2, M_PI / 2 + w / 2);
  const double lam = sturm::shoot_lambda1(b, 0.0);
  CHECK(std::abs(lam * w * w / (M_PI * M_PI) - 1.0) < 1e-3);
}

TEST_CASE("nearly full band drives lambda_1 to zero (d=3)") {
  // point capacity vanishes in two dimensions, so lambda_1 -> 0 as the caps
  // shrink, logarithmically slowly; shooting handles the wide bands
  double prev = 1e300;
  for (double eps : {0.1, 0.02, 0.005}) {
    Band b(Dim(3), eps, M_PI - eps);
    const double lam = sturm::shoot_lambda1(b, 0.0);
    CHECK(lam < prev);
    prev = lam;
  }
  CHECK(prev < 0.3);
}

TEST_CASE("bvp with homogeneous data is zero (m = d-2)") {
  Band b = Band::symmetric(Dim(7), 0.5437287);
  RadialOperator op(b, 5.0, 6.0);
  auto sol = sturm::bvp_solve(op, [](double) { return 0.0; }, {0.0, 0.0});
  CHECK(sol.u.weighted_norm() < 1e-12);
  CHECK(sol.multiplier == 0.0);
}

TEST_CASE("bvp reproduces the l=1 even closed form sin(theta)/cos(theta0)") {
  const auto& c = testing::cone_of(7);
  Band b = c.band();
  RadialOperator op(b, 5.0, 6.0);  // m = d-2, shift = d-1
  auto sol = sturm::bvp_solve(op, [](double) { return 0.0; }, {1.0, 1.0});
  for (double th = b.theta_lo; th <= b.theta_hi; th += 0.1) {
    CHECK(sol.u.eval(th) ==
          doctest::Approx(std::sin(th) / std::cos(c.theta0)).epsilon(1e-9));
  }
}

TEST_CASE("unconstrained solve at a spectral shift raises SolvabilityError") {
  const auto& c = testing::cone_of(7);
  RadialOperator op(c.band(), 0.0, 6.0);  // d-1 is the first eigenvalue
  CHECK_THROWS_AS(sturm::bvp_solve(op, [](double) { return 0.0; }, {1.0, 1.0}),
                  SolvabilityError);
}

TEST_CASE("constrained solve agrees with a dense oracle at 4x resolution") {
  const auto& c = testing::cone_of(7);
  RadialOperator op(c.band(), 0.0, 6.0);
  auto coarse = sturm::bvp_solve(op, [](double) { return 0.0; }, {1.0, 1.0},
                                 c.profile0, c.profile0, 96);
  auto dense = sturm::bvp_solve(op, [](double) { return 0.0; }, {1.0, 1.0},
                                c.profile0, c.profile0, 384);
  CHECK(std::abs(coarse.multiplier - dense.multiplier) < 1e-7);
  for (double th = c.band().theta_lo + 0.01; th < c.band().theta_hi; th += 0.07)
    CHECK(coarse.u.eval(th) == doctest::Approx(dense.u.eval(th)).epsilon(1e-7));
}

TEST_CASE("bvp is linear in rhs and boundary data") {
  Band b = Band::symmetric(Dim(7), 0.5437287);
  RadialOperator op(b, 12.0, 6.0);
  auto r1 = [](double th) { return std::sin(th); };
  auto r2 = [](double th) { return std::cos(2 * th); };
  auto s1 = sturm::bvp_solve(op, r1, {1.0, -0.5});
  auto s2 = sturm::bvp_solve(op, r2, {0.25, 2.0});
  auto s12 = sturm::bvp_solve(op, [&](double th) { return r1(th) + r2(th); },
                              {1.25, 1.5});
  for (double th = b.theta_lo; th <= b.theta_hi; th += 0.09)
    CHECK(s12.u.eval(th) ==
          doctest::Approx(s1.u.eval(th) + s2.u.eval(th)).epsilon(1e-9));
}

TEST_CASE("mismatched constraint arguments are rejected") {
  const auto& c = testing::cone_of(7);
  RadialOperator op(c.band(), 0.0, 6.0);
  CHECK_THROWS_AS(sturm::bvp_solve(op, [](double) { return 0.0; }, {1.0, 1.0},
                                   c.profile0, std::nullopt),
                  PreconditionError);
}

}  // TEST_SUITE
