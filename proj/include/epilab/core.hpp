#pragma once

// Shared domain types, sphere geometry, quadrature and the spherical slice
// energy used by every other module.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace epilab {

// ---------------------------------------------------------------------------
// Errors

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numeric failure (non-convergence, bracket failure); message carries the
// achieved tolerance or the last estimates.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Singular linear system in a constrained solve; names the offending
// eigenvalue.
struct SolvabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Domain types

/// Ambient dimension. d >= 3 everywhere; De Silva-Jerison cones are only
/// known to minimize for d >= 7 (construction below that is stationary-only).
struct Dim {
  int d = 0;
  explicit Dim(int dd) : d(dd) {
    if (d < 3) throw DomainError("Dim: require d >= 3, got " + std::to_string(d));
  }
  bool minimizing_range() const { return d >= 7; }
};

/// Surface measure of the unit n-sphere S^n, 2 pi^{(n+1)/2} / Gamma((n+1)/2).
double sphere_area(int n);

struct SphereGeom {
  Dim d;
  double area_dm1;  // H^{d-1}(S^{d-1})
  double area_dm2;  // H^{d-2}(S^{d-2})
  explicit SphereGeom(Dim dim)
      : d(dim), area_dm1(sphere_area(dim.d - 1)), area_dm2(sphere_area(dim.d - 2)) {}
};

/// Latitudinal band {theta_lo < theta < theta_hi} on S^{d-1}, colatitude in
/// radians. Degenerate bands (theta_lo == theta_hi) are allowed and carry
/// zero measure; they show up as limits in sweeps.
struct Band {
  Dim d;
  double theta_lo = 0.0;
  double theta_hi = 0.0;

  Band(Dim dim, double lo, double hi) : d(dim), theta_lo(lo), theta_hi(hi) {
    if (!(lo > 0.0) || !(hi < M_PI) || !(lo <= hi))
      throw DomainError("Band: require 0 < theta_lo <= theta_hi < pi");
  }
  static Band symmetric(Dim dim, double theta0) {
    if (!(theta0 > 0.0) || !(theta0 < M_PI / 2))
      throw DomainError("Band::symmetric: require 0 < theta0 < pi/2");
    return Band(dim, M_PI / 2 - theta0, M_PI / 2 + theta0);
  }
  double width() const { return theta_hi - theta_lo; }
  bool degenerate() const { return theta_hi == theta_lo; }
  bool symmetric_about_equator(double tol = 1e-12) const {
    return std::abs((M_PI - theta_hi) - theta_lo) <= tol * M_PI;
  }
  /// Half opening angle of a symmetric band.
  double theta0() const {
    if (!symmetric_about_equator(1e-9))
      throw DomainError("Band::theta0: band is not symmetric about the equator");
    return width() / 2;
  }
};

// ---------------------------------------------------------------------------
// Chebyshev grid (Gauss-Lobatto points mapped to [a,b], increasing order)
// with differentiation matrix, Clenshaw-Curtis quadrature weights and
// barycentric interpolation weights.

struct ChebGrid {
  double a = 0.0, b = 1.0;
  Eigen::VectorXd nodes;     // increasing in [a,b]
  Eigen::MatrixXd diff;      // differentiation matrix on `nodes`
  Eigen::VectorXd quad_w;    // Clenshaw-Curtis weights on [a,b]
  Eigen::VectorXd bary_w;    // barycentric weights

  ChebGrid(int n, double a_, double b_);  // n+1 nodes
  int size() const { return static_cast<int>(nodes.size()); }
  double interpolate(const Eigen::VectorXd& values, double x) const;
};

/// Sampled radial function on a band: Chebyshev nodes, values, and the
/// collocation derivative. Evaluation is barycentric.
struct Profile {
  Band band;
  Eigen::VectorXd nodes;
  Eigen::VectorXd values;
  Eigen::VectorXd derivs;

  Profile(const Band& bd, const Eigen::VectorXd& vals);
  Profile(const Band& bd, const std::function<double(double)>& f, int n = 64);

  int size() const { return static_cast<int>(nodes.size()); }
  double eval(double theta) const;
  double deriv(double theta) const;
  double value_lo() const { return values(0); }
  double value_hi() const { return values(values.size() - 1); }
  /// Outward normal derivative at the two band ends (-d/dtheta at lo,
  /// +d/dtheta at hi).
  double normal_deriv_lo() const { return -derivs(0); }
  double normal_deriv_hi() const { return derivs(derivs.size() - 1); }
  /// L2 norm with weight sin^{d-2}(theta) d theta.
  double weighted_norm() const;

 private:
  ChebGrid grid_;
};

struct SliceEnergy {
  double e_total = 0.0;      // E(c) = E_0(c) + H^{d-1}({c>0})
  double e_quadratic = 0.0;  // E_0(c)
};

// ---------------------------------------------------------------------------
// Quadrature

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod on [a,b]. Throws NumericError when the error
/// estimate exceeds the requested tolerance (absolute + relative).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double tol = 1e-10);

// ---------------------------------------------------------------------------
// Operations

/// H^{d-2}(S^{d-2}) * int_band sin^{d-2}(theta) d theta.
double band_measure(const Band& band, double tol = 1e-10);

/// Sum over the two boundary circles of sin^{d-2}(theta_b) * H^{d-2}(S^{d-2}).
double band_perimeter(const Band& band);

/// Scalar mean curvature H of the boundary circles of a symmetric band,
/// -(d-2) tan(theta0). Sign convention: delta^2 F(0) = 2 int H zeta^2
/// + 2 int zeta T zeta.
double boundary_mean_curvature(const Band& band);

/// Positive root alpha of alpha(alpha + d - 2) = lambda.
double homogeneity_exponent(double lambda, Dim d);

/// Slice energy of an axisymmetric trace c(theta,phi) = V(theta)/sqrt(H^{d-2})
/// supported on `v.band`:
///   E_0 = int (V'^2 - (d-1) V^2) sin^{d-2} d theta,  E = E_0 + band measure.
/// The profile is the sqrt(H^{d-2})-scaled radial part, so the azimuthal
/// factor integrates out exactly.
SliceEnergy slice_energy(const Profile& v, Dim d, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Parallel kernel driver. jobs == 1 runs the plain serial loop (the reference
// path used in tests); jobs > 1 runs the same per-item work under OpenMP, so
// results are identical bit for bit.

void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& body);

int hardware_jobs();

}  // namespace epilab
