#pragma once

// De Silva-Jerison cone construction: opening angle theta0 (the unique angle
// with lambda_1(band) = d-1), normalization kappa0, eigenprofile, measures,
// Weiss density, and the associated-Legendre cross-check.

#include <optional>

#include "epilab/core.hpp"
#include "epilab/sturm.hpp"

namespace epilab::cone {

struct ConeModel {
  Dim d;
  double theta0 = 0.0;
  double kappa0 = 0.0;
  Profile profile0;        // radial part p, weighted L2(sin^{d-2}) norm 1, p > 0
  double lambda1 = 0.0;    // = d-1 to solver tolerance
  double lambda2 = 0.0;    // second Dirichlet eigenvalue (m=0), gap check
  double m0 = 0.0;         // H^{d-1}(Omega)
  double perim = 0.0;      // H^{d-2}(boundary circles)
  double weiss_density = 0.0;  // Theta = m0 / d
  double c_int = 0.0;      // int_Omega phi0
  bool minimizing = false; // true for d >= 7; stationary-only below

  Band band() const { return Band::symmetric(d, theta0); }
  SphereGeom geom() const { return SphereGeom(d); }
  /// Value of the normalized eigenfunction phi_1^Omega at colatitude theta
  /// (axisymmetric): p(theta) / sqrt(H^{d-2}(S^{d-2})).
  double phi0(double theta) const;
};

/// Unique angle with lambda_1(band(theta), m=0) = d-1, to 1e-12 in theta.
double solve_theta0(Dim d);

ConeModel build_cone(Dim d);

/// Gegenbauer-form associated Legendre function of the second kind: the
/// solution of
///   (1-t^2) Q'' - 2(mu+1) t Q' + (nu-mu)(nu+mu+1) Q = 0
/// with initial data at t=0 matching the standard Q^mu_nu (so that
/// (1-t^2)^{mu/2} * legendre_Q equals the classical on-the-cut function).
/// For odd d and (nu,mu) = ((d-1)/2, (d-3)/2), legendre_Q(cos theta) is a
/// multiple of the cone eigenprofile.
double legendre_Q(double nu, double mu, double t);

/// Smallest positive root of legendre_Q(nu, mu, .) on (0,1); for d=7 this is
/// sin(theta0).
double legendre_Q_root(double nu, double mu);

/// First-kind companion for even d (same Gegenbauer-form equation, first-kind
/// initial data); optional cross-check gated behind the cone --legendre-check
/// flag.
double legendre_P(double nu, double mu, double t);
double legendre_P_root(double nu, double mu);

/// Cross-check root of the closed-form eigenprofile for any d: the smallest
/// positive root of the Gegenbauer-form Legendre function (second kind for
/// odd d, first kind for even d) must equal sin(theta0).
double legendre_root_for_dimension(Dim d);

/// Interpolated eigenprofile value phi0(theta); theta must lie in the band.
double profile_phi0(const ConeModel& cone, double theta);

/// L2(Omega)-normalizing constant of the Legendre closed form: the constant
/// c with phi0(theta) = c * |legendre_Q(nu, mu, cos theta)| for odd d.
double legendre_normalizer(const ConeModel& cone);

}  // namespace epilab::cone
