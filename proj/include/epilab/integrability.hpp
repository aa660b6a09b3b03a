#pragma once

// Certificates: index/kernel classification and integrability verdict per
// dimension, the d=7 directed-rounding bound chain, and the high-dimension
// asymptotic checks.

#include <string>
#include <vector>

#include "epilab/cone.hpp"
#include "epilab/secondvar.hpp"

namespace epilab::integrability {

struct BoundStep {
  std::string name;
  std::string comparison;  // "<" or ">"
  double reference_value = 0.0;  // printed 4-decimal constant
  double computed = 0.0;   // full-precision computed quantity
  double rounded = 0.0;    // outward-rounded at the 4th decimal
  char rounding = 'u';     // 'u' (round up) or 'd' (round down)
  bool strict_pass = false;   // rounded value satisfies the printed inequality
  bool pass = false;          // consistent at the printed precision (1 ulp at 1e-4)
  std::string note;
};

struct BoundChain {
  std::vector<BoundStep> steps;
  bool pass = false;
  // recomputed quantities reported alongside the literal chain
  double direct_zeta1plus = 0.0;       // delta^2 F(0)[zeta_1^+,zeta_1^+], BVP route
  double variational_lower_bound = 0.0;
  double recomputed_int_phi0 = 0.0;    // int phi0 / sqrt(H^{d-2}) by quadrature
  double recomputed_square = 0.0;      // (.8326)^2, fixing the misprinted ".685"
  double recomputed_final_product = 0.0;  // 27 * (int phi0 / sqrt(H^5))^2
};

double round_up_4(double x);
double round_down_4(double x);

struct IntegrabilityVerdict {
  int d = 0;
  int index_count = 0;
  int kernel_dim = 0;
  bool kernel_is_rotations = false;
  bool negative_modes_integrate_to_zero = false;
  bool zeta1plus_positive = false;
  bool integrable = false;
  std::vector<secondvar::SecondVarEntry> entries;
};

IntegrabilityVerdict classify(const cone::ConeModel& c, int ell_max, int jobs = 1);

/// The d=7 certificate: every literal constant of the published chain
/// (0.8650, 5.5509, 18.5359, 34.6188, 0.1699, 0.8326, 18.7170) against the
/// computed quantities with outward rounding at the 4th decimal, plus the
/// recomputed final product and the direct Fredholm-BVP value of the
/// zeta_1^+ eigenvalue.
BoundChain verify_d7();

struct AsymptoticComparison {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string op;  // "<", ">", "<=", ">="
  bool pass = false;
};

struct AsymptoticCheck {
  std::string name;
  std::vector<AsymptoticComparison> comparisons;
  bool pass = false;
};

struct AsymptoticReport {
  int d = 0;
  double theta0 = 0.0;
  std::vector<AsymptoticCheck> checks;  // the four checks, literal
  bool pass = false;
};

/// Literal verification of the four high-dimension inequalities for the
/// computed theta0: the theta0 sqrt(d) window, the measure chain, the lower
/// bound on c^2, and positivity of the plugged-in lower bound for the
/// zeta_1^+ eigenvalue. Requires d >= 21.
AsymptoticReport asymptotic_check(const cone::ConeModel& c);

}  // namespace epilab::integrability
