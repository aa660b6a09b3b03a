#pragma once

// Second variation of the spherical Alt-Caffarelli functional at the cone:
// per-mode Dirichlet-to-Neumann values over the zeta_l^{+/-} basis, closed
// forms where available, and the first-variation identities.
//
// Conventions: psi_l is a unit-norm L2(S^{d-2}) spherical harmonic of degree
// l; boundary data zeta^+ = -psi on both circles, zeta^- = -+psi (plus on the
// lower-colatitude circle, minus on the upper). With these choices
// int_{dOmega} zeta^2 = 2 cos^{d-2}(theta0) and the closed forms below
// reproduce literally.

#include <optional>
#include <string>
#include <vector>

#include "epilab/cone.hpp"
#include "epilab/core.hpp"
#include "epilab/sturm.hpp"

namespace epilab::secondvar {

enum class Parity { Even, Odd };

struct ModeId {
  int ell = 0;
  Parity parity = Parity::Even;
};

/// Azimuthal eigenvalue l(l+d-3) on S^{d-2}.
double azimuthal_eigenvalue(int ell, Dim d);

/// Dimension of the degree-l spherical-harmonic space on S^{d-2}.
int multiplicity(int ell, Dim d);

enum class Classification { Negative, Kernel, Positive };

struct SecondVarEntry {
  ModeId mode;
  int mult = 1;
  double value = 0.0;
  Classification classification = Classification::Positive;
  std::optional<std::string> closed_form;
  double closed_form_value = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;  // |value - closed_form_value| / scale, when present
};

struct VariationReport {
  double delta_m = 0.0;
  double delta_lambda = 0.0;
  double delta_F = 0.0;  // kappa0^2 delta_lambda + delta_m
};

/// int_{dOmega} zeta^2 for a unit-psi mode: 2 cos^{d-2}(theta0).
double boundary_zeta_sq(const cone::ConeModel& c);

/// eta = perim / (kappa0^2 sqrt(H^{d-2}(S^{d-2}))): the source coefficient in
/// the constrained l=0-even problem.
double fredholm_eta(const cone::ConeModel& c);

/// First variations for the mode's boundary datum: delta_m = int zeta,
/// delta_lambda from the Hadamard formula -int zeta |d_nu phi_1|^2 evaluated
/// with the computed boundary derivatives (so delta_F is a genuine residual,
/// not zero by construction).
VariationReport first_variations(const cone::ConeModel& c, ModeId mode);

/// Radial BVP solution u with u = -zeta on the boundary circles (the l=0
/// modes carry the Fredholm constraint). Profile is the sqrt(H^{d-2})-scaled
/// radial part, boundary values +-1.
sturm::BvpSolution dtn_solution(const cone::ConeModel& c, ModeId mode);

/// Scalar DtN value of the mode: d_nu u / u at the boundary circles (the two
/// circles agree by parity; their mean is returned).
double dtn_mode(const cone::ConeModel& c, ModeId mode);

/// delta^2 F(0)[zeta, zeta] = 2 <u,u> - 2 (d-2) tan(theta0) int zeta^2
///                          = 2 (tau + H) int zeta^2.
SecondVarEntry second_var_eigenvalue(const cone::ConeModel& c, ModeId mode);

/// Entries for all (l <= ell_max, +/-), sorted by eigenvalue.
std::vector<SecondVarEntry> spectrum(const cone::ConeModel& c, int ell_max,
                                     int jobs = 1);

/// Energy functional J_l(f) = int (f'^2 + (m/sin^2) f^2 - (d-1) f^2)
/// sin^{d-2} d theta over the band; the alternative route to the eigenvalues,
/// value = 2 J_l(f) - 4 (d-2) cos^{d-2}(theta0) tan(theta0) for l >= 1.
double j_functional(const cone::ConeModel& c, const Profile& f, double m);

double kernel_tolerance();

}  // namespace epilab::secondvar
