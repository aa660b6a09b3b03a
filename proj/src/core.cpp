#include "epilab/core.hpp"

#include <algorithm>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace epilab {

double sphere_area(int n) {
  if (n < 1) throw DomainError("sphere_area: require n >= 1");
  return 2.0 * std::pow(M_PI, (n + 1) / 2.0) / std::tgamma((n + 1) / 2.0);
}

// ---------------------------------------------------------------------------
// ChebGrid

ChebGrid::ChebGrid(int n, double a_, double b_) : a(a_), b(b_) {
  if (n < 2) throw DomainError("ChebGrid: require at least 3 nodes");
  const int m = n + 1;
  nodes.resize(m);
  bary_w.resize(m);
  // Gauss-Lobatto points cos(pi k/n) reversed to increasing order.
  for (int k = 0; k <= n; ++k) {
    const double x = -std::cos(M_PI * k / n);  // increasing in [-1,1]
    nodes(k) = a + (b - a) * (x + 1.0) / 2.0;
    bary_w(k) = (k % 2 == 0 ? 1.0 : -1.0);
  }
  bary_w(0) *= 0.5;
  bary_w(n) *= 0.5;

  // Differentiation matrix (Trefethen) in increasing order, scaled to [a,b].
  Eigen::VectorXd c(m);
  for (int k = 0; k <= n; ++k) c(k) = (k == 0 || k == n) ? 2.0 : 1.0;
  Eigen::VectorXd x(m);
  for (int k = 0; k <= n; ++k) x(k) = -std::cos(M_PI * k / n);
  diff.resize(m, m);
  for (int i = 0; i <= n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      const double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      diff(i, j) = (c(i) / c(j)) * sgn / (x(i) - x(j));
      rowsum += diff(i, j);
    }
    diff(i, i) = -rowsum;  // negative sum trick
  }
  diff *= 2.0 / (b - a);

  // Clenshaw-Curtis weights (Waldvogel's closed form, valid for any n).
  quad_w.setZero(m);
  for (int k = 0; k <= n; ++k) {
    const double th = M_PI * k / n;
    double s = 1.0;
    for (int j = 1; j <= n / 2; ++j) {
      const double bj = (2 * j == n) ? 1.0 : 2.0;
      s -= bj * std::cos(2.0 * j * th) / (4.0 * j * j - 1.0);
    }
    const double ck = (k == 0 || k == n) ? 1.0 : 2.0;
    quad_w(n - k) = ck * s / n * (b - a) / 2.0;
  }
}

double ChebGrid::interpolate(const Eigen::VectorXd& values, double xq) const {
  const int m = size();
  double num = 0.0, den = 0.0;
  for (int k = 0; k < m; ++k) {
    const double dx = xq - nodes(k);
    if (dx == 0.0) return values(k);
    const double t = bary_w(k) / dx;
    num += t * values(k);
    den += t;
  }
  return num / den;
}

// ---------------------------------------------------------------------------
// Profile

Profile::Profile(const Band& bd, const Eigen::VectorXd& vals)
    : band(bd),
      values(vals),
      grid_(static_cast<int>(vals.size()) - 1, bd.theta_lo, bd.theta_hi) {
  if (vals.size() < 16) throw DomainError("Profile: need at least 16 nodes");
  if (bd.degenerate()) throw DomainError("Profile: degenerate band");
  nodes = grid_.nodes;
  derivs = grid_.diff * values;
  if (!values.allFinite()) throw DomainError("Profile: non-finite values");
}

Profile::Profile(const Band& bd, const std::function<double(double)>& f, int n)
    : band(bd), grid_(n, bd.theta_lo, bd.theta_hi) {
  if (n + 1 < 16) throw DomainError("Profile: need at least 16 nodes");
  nodes = grid_.nodes;
  values.resize(n + 1);
  for (int i = 0; i <= n; ++i) values(i) = f(nodes(i));
  if (!values.allFinite()) throw DomainError("Profile: non-finite values");
  derivs = grid_.diff * values;
}

double Profile::eval(double theta) const {
  if (theta < band.theta_lo - 1e-12 || theta > band.theta_hi + 1e-12)
    throw DomainError("Profile::eval: theta outside band");
  return grid_.interpolate(values, std::clamp(theta, band.theta_lo, band.theta_hi));
}

double Profile::deriv(double theta) const {
  if (theta < band.theta_lo - 1e-12 || theta > band.theta_hi + 1e-12)
    throw DomainError("Profile::deriv: theta outside band");
  return grid_.interpolate(derivs, std::clamp(theta, band.theta_lo, band.theta_hi));
}

double Profile::weighted_norm() const {
  const int dd = band.d.d;
  const auto f = [&](double th) {
    const double v = eval(th);
    return v * v * std::pow(std::sin(th), dd - 2);
  };
  return std::sqrt(integrate(f, band.theta_lo, band.theta_hi, 1e-12).value);
}

// ---------------------------------------------------------------------------
// Quadrature

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double tol) {
  if (a == b) return {0.0, 0.0};
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, tol, &err);
  if (err > tol * std::max(1.0, std::abs(v)) * 10.0)
    throw NumericError("integrate: requested tol " + std::to_string(tol) +
                       ", achieved error estimate " + std::to_string(err));
  return {v, err};
}

// ---------------------------------------------------------------------------
// Geometry operations

double band_measure(const Band& band, double tol) {
  if (band.degenerate()) return 0.0;
  const int dd = band.d.d;
  const auto f = [dd](double th) { return std::pow(std::sin(th), dd - 2); };
  return sphere_area(dd - 2) * integrate(f, band.theta_lo, band.theta_hi, tol).value;
}

double band_perimeter(const Band& band) {
  const int dd = band.d.d;
  const double s = sphere_area(dd - 2);
  return s * (std::pow(std::sin(band.theta_lo), dd - 2) +
              std::pow(std::sin(band.theta_hi), dd - 2));
}

double boundary_mean_curvature(const Band& band) {
  if (!band.symmetric_about_equator(1e-9))
    throw DomainError("boundary_mean_curvature: symmetric band required");
  const double t0 = band.theta0();
  if (t0 >= M_PI / 2) throw DomainError("boundary_mean_curvature: theta0 >= pi/2");
  return -(band.d.d - 2) * std::tan(t0);
}

double homogeneity_exponent(double lambda, Dim d) {
  if (lambda < 0.0) throw DomainError("homogeneity_exponent: lambda < 0");
  const double q = d.d - 2.0;
  return (-q + std::sqrt(q * q + 4.0 * lambda)) / 2.0;
}

namespace {

// H^{d-1} measure of the positivity set {v > 0} inside the band: sign
// changes of the interpolant are located by scan + bisection and the
// positive subintervals are integrated.
double positivity_measure(const Profile& v, double tol) {
  const double a = v.band.theta_lo, b = v.band.theta_hi;
  const double scale = v.values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  const int nscan = 1024;
  std::vector<double> cuts{a};
  double prev_t = a, prev_v = v.eval(a);
  for (int i = 1; i <= nscan; ++i) {
    const double t = a + (b - a) * i / nscan;
    const double val = v.eval(t);
    if ((prev_v > 0) != (val > 0)) {
      double lo = prev_t, hi = t, flo = prev_v;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = v.eval(mid);
        if ((flo > 0) != (fm > 0)) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev_t = t;
    prev_v = val;
  }
  cuts.push_back(b);
  const int dd = v.band.d.d;
  double meas = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (v.eval(mid) > 0.0)
      meas += integrate([dd](double th) { return std::pow(std::sin(th), dd - 2); },
                        cuts[i], cuts[i + 1], tol)
                  .value;
  }
  return sphere_area(dd - 2) * meas;
}

}  // namespace

SliceEnergy slice_energy(const Profile& v, Dim d, double tol) {
  if (v.band.d.d != d.d)
    throw UnsupportedInputError("slice_energy: profile dimension mismatch");
  const int dd = d.d;
  const auto f = [&](double th) {
    const double val = v.eval(th), dv = v.deriv(th);
    return (dv * dv - (dd - 1) * val * val) * std::pow(std::sin(th), dd - 2);
  };
  SliceEnergy e;
  e.e_quadratic = integrate(f, v.band.theta_lo, v.band.theta_hi, tol).value;
  e.e_total = e.e_quadratic + positivity_measure(v, tol);
  return e;
}

// ---------------------------------------------------------------------------
// Parallel driver

void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& body) {
  if (jobs <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  // exceptions must not unwind across the OpenMP region; rethrow the first
  std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(epilab_parallel_for_err)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

int hardware_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace epilab
