#include <doctest.h>

#include <cmath>

#include "epilab/decay.hpp"

using namespace epilab;

namespace {

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("decay") {

TEST_CASE("input validation") {
  CHECK_THROWS_AS(decay::DecayInput(0.0, 0.0, Dim(7), 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(decay::DecayInput(0.1, 1.0, Dim(7), 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(decay::DecayInput(0.1, 0.0, Dim(7), -1.0, 1.0), DomainError);
}

TEST_CASE("gamma=0 branch decays with exponent d eps/(1-eps)") {
  decay::DecayInput in(0.1, 0.0, Dim(7), 1.0, 1.0);
  auto curve = decay::integrate_decay(in);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < 40; ++i) {
    xs.push_back(std::log(curve.radii[i]));
    ys.push_back(std::log(curve.ode_values[i]));
  }
  CHECK(std::abs(fit_loglog_slope(xs, ys) - 7 * 0.1 / 0.9) < 1e-6);
}

TEST_CASE("gamma>0 branch reproduces the closed form") {
  decay::DecayInput in(0.1, 0.5, Dim(7), 1.0, 1.0);
  auto curve = decay::integrate_decay(in);
  for (int k : {8, 16, 32}) {
    const double K = k * std::log(2.0);  // rho = r0 e^{-K}
    CHECK(curve.w_values[k] ==
          doctest::Approx(std::pow(0.1 * 0.5 * 7 * K, -2.0)).epsilon(1e-6));
  }
  // near r0 the bound is vacuous and capped at w_start
  CHECK(curve.w_values[1] == 1.0);
  // integrated curve dominates (sits below) the closed-form bound
  for (std::size_t i = 1; i < curve.radii.size(); ++i)
    CHECK(curve.ode_values[i] <= curve.w_values[i] + 1e-9);
}

TEST_CASE("no gain means no decay") {
  decay::DecayInput in(1e-12, 0.0, Dim(7), 1.0, 1.0);
  auto curve = decay::integrate_decay(in);
  CHECK(curve.w_values.back() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("l2 drift accumulates the dyadic bound") {
  decay::DecayInput in(0.1, 0.0, Dim(7), 1.0, 1.0);
  auto curve = decay::integrate_decay(in, 8);
  CHECK(curve.l2_drift[0] == 0.0);
  double acc = 0.0;
  for (int k = 1; k <= 8; ++k) {
    acc += std::sqrt(std::log(2.0) * curve.w_values[k - 1]);
    CHECK(curve.l2_drift[k] == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("synthetic modulus exponent at gamma=1/2") {
  auto e = [](double r) { return std::pow(-std::log(r), -2.0); };
  auto fit = decay::dyadic_l2_modulus(e, 1.0, 0.5, 8);
  CHECK(std::abs(fit.fitted_exponent - (-1.0)) < 0.1);
  // modulus at the starting scale is the empty sum
  CHECK(fit.ts.front() == 1.0);
  CHECK(fit.values.front() == 0.0);
}

TEST_CASE("fitted modulus exponent is monotone in gamma") {
  double prev = -1e9;
  for (double g : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    auto e = [g](double r) { return std::pow(-std::log(r), -1.0 / g); };
    auto fit = decay::dyadic_l2_modulus(e, 1.0, g, 8);
    const double expected = (g - 1.0) / g;
    CHECK(std::abs(fit.fitted_exponent - expected) < 0.1 * std::abs(expected));
    CHECK(fit.fitted_exponent > prev);
    prev = fit.fitted_exponent;
  }
}

TEST_CASE("gamma=0 uses the geometric summation branch") {
  auto e = [](double r) { return std::pow(r, 0.7); };
  auto fit = decay::dyadic_l2_modulus(e, 1.0, 0.0, 6);
  // modulus(t) ~ t^{0.35}: the Hoelder exponent is half the decay rate
  CHECK(std::abs(fit.fitted_exponent - 0.35) < 0.035);
}

TEST_CASE("modulus from an integrated curve") {
  // a gain large enough that the bound is active on the whole dyadic ladder
  decay::DecayInput in(0.8, 0.5, Dim(7), 1.0, 1.0);
  auto curve = decay::integrate_decay(in);
  auto fit = decay::dyadic_l2_modulus(curve, 0.5);
  CHECK(std::abs(fit.fitted_exponent - (-1.0)) < 0.1);
}

}  // TEST_SUITE
