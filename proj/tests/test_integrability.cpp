#include <doctest.h>

#include <cmath>

#include "epilab/integrability.hpp"
#include "test_helpers.hpp"

using namespace epilab;

TEST_SUITE("integrability") {

TEST_CASE("d=7 verdict") {
  auto v = integrability::classify(testing::cone_of(7), 4, 2);
  CHECK(v.index_count == 7);
  CHECK(v.kernel_dim == 6);
  CHECK(v.kernel_is_rotations);
  CHECK(v.negative_modes_integrate_to_zero);
  CHECK(v.zeta1plus_positive);
  CHECK(v.integrable);
}

TEST_CASE("d=15 verdict") {
  auto v = integrability::classify(testing::cone_of(15), 3, 2);
  CHECK(v.index_count == 15);
  CHECK(v.kernel_dim == 14);
  CHECK(v.zeta1plus_positive);
  CHECK(v.integrable);
}

TEST_CASE("rounding helpers are outward") {
  CHECK(integrability::round_up_4(0.86494348) == doctest::Approx(0.8650));
  CHECK(integrability::round_down_4(0.16995905) == doctest::Approx(0.1699));
  CHECK(integrability::round_up_4(34.61875195) == doctest::Approx(34.6188));
  CHECK(integrability::round_down_4(18.71701452) == doctest::Approx(18.7170));
}

TEST_CASE("d=7 certificate chain") {
  auto chain = integrability::verify_d7();
  CHECK(chain.pass);
  // outward rounding respected on every step
  for (const auto& s : chain.steps) {
    if (s.rounding == 'u') CHECK(s.rounded >= s.computed - 1e-12);
    else CHECK(s.rounded <= s.computed + 1e-12);
  }
  // every step passes strictly except the known 5.5509/5.5609 misprint
  for (const auto& s : chain.steps) {
    if (s.name.rfind("tan_term_literal", 0) == 0) {
      CHECK(!s.strict_pass);
      CHECK(s.pass);
      CHECK(s.computed == doctest::Approx(5.55093014).epsilon(1e-7));
    } else {
      CHECK(s.strict_pass);
    }
  }
  CHECK(chain.direct_zeta1plus == doctest::Approx(2.4329978).epsilon(1e-5));
  CHECK(chain.variational_lower_bound == doctest::Approx(2.2003204).epsilon(1e-5));
  CHECK(chain.direct_zeta1plus > chain.variational_lower_bound);
  CHECK(chain.recomputed_int_phi0 == doctest::Approx(0.8760823).epsilon(1e-5));
  CHECK(chain.recomputed_final_product == doctest::Approx(20.723046).epsilon(1e-5));
  CHECK(chain.recomputed_square == doctest::Approx(0.69322276).epsilon(1e-10));
}

TEST_CASE("chain steps do not flip at doubled quadrature resolution") {
  // recompute the quadrature-backed literal steps at 100x tighter tolerance
  const double lit_measure =
      integrate([](double th) { return std::pow(std::cos(th), 5); }, -0.5438,
                0.5438, 1e-14)
          .value;
  CHECK(integrability::round_up_4(lit_measure) <= 0.8650);

  auto q_std = [](double t) { return (1 - t * t) * cone::legendre_Q(3, 2, t); };
  const double q_norm =
      integrate([&](double t) { return q_std(t) * q_std(t); }, -0.5174, 0.5174, 1e-12)
          .value;
  CHECK(integrability::round_up_4(q_norm) <= 34.6188);
  CHECK(integrability::round_down_4(1.0 / std::sqrt(q_norm)) >= 0.1699);

  const double q_weighted =
      integrate(
          [&](double t) { return (1 - t * t) * (1 - t * t) * std::abs(q_std(t)); },
          -0.5173, 0.5173, 1e-12)
          .value;
  CHECK(integrability::round_down_4(0.1699 * q_weighted) >= 0.8326);
}

TEST_CASE("error-estimate structure: mean-carrying even modes sit high") {
  // in the m=0 Dirichlet spectrum the first even eigenfunction orthogonal to
  // the ground profile with nonzero weighted mean must have eigenvalue at
  // least (d-2)(d-1)
  const auto& c = testing::cone_of(7);
  sturm::RadialOperator op(c.band(), 0.0);
  auto pairs = sturm::eigen_solve(op, 3);
  const int dd = 7;
  auto mean = [&](const Profile& p) {
    return integrate([&](double th) { return p.eval(th) * std::pow(std::sin(th), dd - 2); },
                     p.band.theta_lo, p.band.theta_hi, 1e-11)
        .value;
  };
  // second eigenfunction is odd: zero mean; third is even with nonzero mean
  CHECK(std::abs(mean(pairs[1].profile)) < 1e-9);
  CHECK(std::abs(mean(pairs[2].profile)) > 1e-3);
  CHECK(pairs[2].eigenvalue >= (dd - 2) * (dd - 1));
}

TEST_CASE("asymptotic check guards its precondition") {
  CHECK_THROWS_AS(integrability::asymptotic_check(testing::cone_of(7)),
                  PreconditionError);
}

TEST_CASE("asymptotic checks at d=21: what holds and what does not") {
  auto rep = integrability::asymptotic_check(testing::cone_of(21));
  REQUIRE(rep.checks.size() == 4);

  // the measured theta0 sqrt(d) sits near 1.35, so the printed upper bound
  // .65 fails while the lower bound .62 holds
  const auto& window = rep.checks[0];
  CHECK(window.comparisons[0].pass);    // .62 < theta0 sqrt(d)
  CHECK(!window.comparisons[1].pass);   // theta0 sqrt(d) <= .65 fails
  CHECK(rep.theta0 * std::sqrt(21.0) == doctest::Approx(1.3465).epsilon(1e-3));

  const auto& chainm = rep.checks[1];
  CHECK(!chainm.comparisons[0].pass);  // 1.3 > 2 sqrt(d) theta0 fails
  for (std::size_t i = 1; i < chainm.comparisons.size(); ++i)
    CHECK(chainm.comparisons[i].pass);

  CHECK(rep.checks[2].pass);  // lower bound on c^2
  CHECK(rep.checks[3].pass);  // plugged-in positivity
  CHECK(!rep.pass);
}

TEST_CASE("asymptotic positivity margin grows with dimension") {
  double prev = 0.0;
  for (int d : {21, 30}) {
    auto rep = integrability::asymptotic_check(testing::cone_of(d));
    const double margin = rep.checks[3].comparisons[0].lhs;
    CHECK(margin > prev);
    prev = margin;
  }
}

}  // TEST_SUITE
