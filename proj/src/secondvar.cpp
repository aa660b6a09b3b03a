#include "epilab/secondvar.hpp"

#include <algorithm>
#include <cmath>

namespace epilab::secondvar {

double azimuthal_eigenvalue(int ell, Dim d) {
  if (ell < 0) throw DomainError("azimuthal_eigenvalue: ell >= 0");
  return static_cast<double>(ell) * (ell + d.d - 3);
}

int multiplicity(int ell, Dim d) {
  // Harmonic-space dimension on S^{n} with n = d-2 (ambient n+1 = d-1):
  // C(n+l, l) - C(n+l-2, l-2).
  if (ell == 0) return 1;
  const int n = d.d - 2;
  auto binom = [](int a, int b) -> double {
    if (b < 0 || b > a) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  return static_cast<int>(std::llround(binom(n + ell, ell) - binom(n + ell - 2, ell - 2)));
}

double boundary_zeta_sq(const cone::ConeModel& c) {
  return 2.0 * std::pow(std::cos(c.theta0), c.d.d - 2);
}

double fredholm_eta(const cone::ConeModel& c) {
  return c.perim / (c.kappa0 * c.kappa0 * std::sqrt(sphere_area(c.d.d - 2)));
}

double kernel_tolerance() { return 1e-6; }

namespace {

// Boundary values of the sqrt(H^{d-2})-scaled radial part F of u = -zeta:
// even modes have F = (1,1), odd modes F = (-1,+1).
std::pair<double, double> bvp_boundary(Parity p) {
  return p == Parity::Even ? std::pair{1.0, 1.0} : std::pair{-1.0, 1.0};
}

}  // namespace

VariationReport first_variations(const cone::ConeModel& c, ModeId mode) {
  const double hd2 = sphere_area(c.d.d - 2);
  const double circ = std::pow(std::cos(c.theta0), c.d.d - 2);  // per-circle measure/H^{d-2}

  // int_{dOmega} zeta: the S^{d-2} integral of psi_l vanishes for l >= 1 and
  // equals sqrt(H^{d-2}) for the unit constant.
  double delta_m = 0.0;
  if (mode.ell == 0 && mode.parity == Parity::Even)
    delta_m = -2.0 * circ * std::sqrt(hd2);  // zeta_1^+ = -psi_1 on both circles
  // l=0 odd: opposite signs cancel; l >= 1: zero-mean harmonics.

  // Hadamard: delta_lambda = -int zeta |d_nu phi_1|^2, with the numerically
  // computed boundary derivatives entering per circle.
  const double dn_lo = c.profile0.normal_deriv_lo() / std::sqrt(hd2);
  const double dn_hi = c.profile0.normal_deriv_hi() / std::sqrt(hd2);
  double delta_lambda = 0.0;
  if (mode.ell == 0) {
    const double zlo = (mode.parity == Parity::Even ? -1.0 : 1.0) / std::sqrt(hd2);
    const double zhi = -1.0 / std::sqrt(hd2);
    delta_lambda = -(zlo * dn_lo * dn_lo + zhi * dn_hi * dn_hi) * circ * hd2;
  }
  VariationReport r;
  r.delta_m = delta_m;
  r.delta_lambda = delta_lambda;
  r.delta_F = c.kappa0 * c.kappa0 * delta_lambda + delta_m;
  return r;
}

sturm::BvpSolution dtn_solution(const cone::ConeModel& c, ModeId mode) {
  const Band band = c.band();
  const double m = azimuthal_eigenvalue(mode.ell, c.d);
  sturm::RadialOperator op(band, m, c.d.d - 1.0);
  const auto bc = bvp_boundary(mode.parity);
  const auto zero = [](double) { return 0.0; };

  if (mode.ell == 0) {
    // The m=0 operator has d-1 in its spectrum, so both parities need the
    // Fredholm-constrained form; the multiplier vanishes by parity for the
    // odd mode.
    return sturm::bvp_solve(op, zero, bc, c.profile0, c.profile0);
  }
  return sturm::bvp_solve(op, zero, bc);
}

double dtn_mode(const cone::ConeModel& c, ModeId mode) {
  const auto sol = dtn_solution(c, mode);
  const double tau_lo = sol.u.normal_deriv_lo() / sol.u.value_lo();
  const double tau_hi = sol.u.normal_deriv_hi() / sol.u.value_hi();
  if (std::abs(tau_lo - tau_hi) > 1e-7 * std::max(1.0, std::abs(tau_lo)))
    throw NumericError("dtn_mode: boundary circles disagree: " +
                       std::to_string(tau_lo) + " vs " + std::to_string(tau_hi));
  return 0.5 * (tau_lo + tau_hi);
}

namespace {

std::optional<std::string> closed_form_tag(ModeId mode, double& value,
                                           const cone::ConeModel& c) {
  const int dd = c.d.d;
  const double t0 = c.theta0;
  const double cs = std::pow(std::cos(t0), dd - 2);
  const double tn = std::tan(t0);
  if (mode.ell == 1 && mode.parity == Parity::Even) {
    value = -4.0 * (dd - 1) * cs * tn;
    return "-4(d-1)cos^(d-2)(theta0)tan(theta0)";
  }
  if (mode.ell == 1 && mode.parity == Parity::Odd) {
    value = 0.0;
    return "0 (rotations)";
  }
  if (mode.ell == 2 && mode.parity == Parity::Even) {
    value = 4.0 * cs * tn;
    return "4cos^(d-2)(theta0)tan(theta0)";
  }
  if (mode.ell == 0 && mode.parity == Parity::Odd) {
    value = 4.0 * cs * (1.0 / tn - (dd - 2) * tn);
    return "4cos^(d-2)(theta0)(cot(theta0)-(d-2)tan(theta0))";
  }
  return std::nullopt;
}

}  // namespace

SecondVarEntry second_var_eigenvalue(const cone::ConeModel& c, ModeId mode) {
  const double tau = dtn_mode(c, mode);
  const double H = boundary_mean_curvature(c.band());
  const double zsq = boundary_zeta_sq(c);
  SecondVarEntry e;
  e.mode = mode;
  e.mult = multiplicity(mode.ell, c.d);
  e.value = 2.0 * (tau + H) * zsq;

  const double scale = 4.0 * std::pow(std::cos(c.theta0), c.d.d - 2) * std::tan(c.theta0);
  e.classification = std::abs(e.value) / scale < kernel_tolerance()
                         ? Classification::Kernel
                         : (e.value < 0 ? Classification::Negative : Classification::Positive);

  double cf = 0.0;
  if (auto tag = closed_form_tag(mode, cf, c)) {
    e.closed_form = tag;
    e.closed_form_value = cf;
    e.residual = std::abs(e.value - cf) / std::max(1.0, std::abs(cf));
    if (e.residual > 1e-6)
      throw NumericError("second_var_eigenvalue: closed form disagrees, residual " +
                         std::to_string(e.residual));
  }
  return e;
}

std::vector<SecondVarEntry> spectrum(const cone::ConeModel& c, int ell_max, int jobs) {
  if (ell_max < 2) throw DomainError("spectrum: ell_max >= 2");
  std::vector<ModeId> modes;
  for (int l = 0; l <= ell_max; ++l) {
    modes.push_back({l, Parity::Even});
    modes.push_back({l, Parity::Odd});
  }
  std::vector<SecondVarEntry> entries(modes.size());
  parallel_for(static_cast<std::int64_t>(modes.size()), jobs,
               [&](std::int64_t i) { entries[i] = second_var_eigenvalue(c, modes[i]); });
  std::sort(entries.begin(), entries.end(),
            [](const SecondVarEntry& a, const SecondVarEntry& b) { return a.value < b.value; });
  return entries;
}

double j_functional(const cone::ConeModel& c, const Profile& f, double m) {
  const int dd = c.d.d;
  const auto g = [&](double th) {
    const double v = f.eval(th), dv = f.deriv(th);
    const double s = std::sin(th);
    return (dv * dv + (m / (s * s) - (dd - 1)) * v * v) * std::pow(s, dd - 2);
  };
  return integrate(g, f.band.theta_lo, f.band.theta_hi, 1e-11).value;
}

}  // namespace epilab::secondvar
