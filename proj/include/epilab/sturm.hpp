#pragma once

// Singular Sturm-Liouville eigen- and boundary-value solver on latitudinal
// bands with weight sin^{d-2}(theta): the engine behind every eigenvalue,
// profile and Dirichlet-to-Neumann computation.
//
// Discretization is Chebyshev collocation on the band mapped to [-1,1]; the
// coefficients are analytic on bands strictly inside (0,pi), so convergence
// is exponential and a modest resolution ladder suffices.

#include <optional>
#include <utility>
#include <vector>

#include "epilab/core.hpp"

namespace epilab::sturm {

/// L f = -(sin^{d-2} f')' / sin^{d-2} + (m / sin^2) f on `band`, Dirichlet
/// ends. `shift` is the zeroth-order shift used by bvp_solve, typically d-1.
struct RadialOperator {
  Band band;
  double azimuthal_eigenvalue = 0.0;  // m = l(l+d-3) >= 0
  double shift = 0.0;

  RadialOperator(const Band& b, double m, double s = 0.0)
      : band(b), azimuthal_eigenvalue(m), shift(s) {
    if (m < 0) throw DomainError("RadialOperator: m < 0");
    if (b.degenerate()) throw DomainError("RadialOperator: degenerate band");
  }
};

struct EigenPair {
  double eigenvalue = 0.0;
  Profile profile;       // weighted L2(sin^{d-2}) norm 1, sign-fixed
  double residual = 0.0; // weighted-L2 ODE residual on a doubled grid
};

struct EigenOpts {
  int start_n = 64;
  int max_n = 1024;
  double rel_tol = 1e-10;       // ladder stop: eigenvalue movement
  double residual_tol = 1e-8;   // per-pair acceptance
};

/// k lowest Dirichlet eigenpairs, strictly increasing (simple in 1D).
std::vector<EigenPair> eigen_solve(const RadialOperator& op, int k,
                                   const EigenOpts& opts = {});

/// Single-resolution variant (no ladder); used for per-slice solves after the
/// resolution has been validated once.
std::vector<EigenPair> eigen_solve_at(const RadialOperator& op, int k, int n);

struct BvpSolution {
  Profile u;
  double multiplier = 0.0;  // Fredholm multiplier t; 0 when unconstrained
  double residual = 0.0;
};

/// Solve (L - shift) u = rhs - t * fredholm_direction, u = boundary at the
/// band ends, and (when constrained) <u, orthogonality>_{sin^{d-2}} = 0 with
/// t the reported multiplier. When `shift` sits on an eigenvalue of L the
/// constrained form MUST be used (Fredholm alternative); an unconstrained
/// call then raises SolvabilityError naming the offending eigenvalue.
BvpSolution bvp_solve(const RadialOperator& op,
                      const std::function<double(double)>& rhs,
                      std::pair<double, double> boundary,
                      const std::optional<Profile>& orthogonality = std::nullopt,
                      const std::optional<Profile>& fredholm_direction = std::nullopt,
                      int n = 96);

/// First Dirichlet eigenvalue by shooting from theta_lo with bisection on
/// lambda; the independent cross-check oracle for eigen_solve.
double shoot_lambda1(const Band& band, double m);

}  // namespace epilab::sturm
