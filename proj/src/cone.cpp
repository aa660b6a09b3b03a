#include "epilab/cone.hpp"

#include <cmath>

namespace epilab::cone {

double ConeModel::phi0(double theta) const {
  return profile0.eval(theta) / std::sqrt(sphere_area(d.d - 2));
}

namespace {

double lambda1_of_band(Dim d, double theta, int start_n = 64) {
  sturm::RadialOperator op(Band::symmetric(d, theta), 0.0);
  return sturm::eigen_solve(op, 1, {start_n, 512, 1e-11, 1e-8})[0].eigenvalue;
}

}  // namespace

double solve_theta0(Dim d) {
  // lambda_1 is strictly decreasing in the opening angle (domain
  // monotonicity), so g(theta) = lambda_1(band(theta)) - (d-1) has a unique
  // root. theta0 scales like 1/sqrt(d); grow the bracket only as needed so
  // the eigensolver never sees an absurdly wide band.
  auto g = [&](double th) { return lambda1_of_band(d, th) - (d.d - 1); };
  const double cap = M_PI / 2 - 1e-3;
  double lo = std::min(0.6 / std::sqrt(static_cast<double>(d.d)), cap / 2);
  double glo = g(lo);
  if (glo <= 0.0)
    throw NumericError("solve_theta0: lower bracket is not below the root");
  double hi = std::min(1.7 / std::sqrt(static_cast<double>(d.d)), cap);
  double ghi = g(hi);
  while (ghi >= 0.0 && hi < cap) {
    lo = hi;
    glo = ghi;
    hi = std::min(1.3 * hi, cap);
    ghi = g(hi);
  }
  if (ghi >= 0.0)
    throw NumericError("solve_theta0: no sign change in bracket [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    double mid = 0.5 * (lo + hi);
    const double sec = lo - glo * (hi - lo) / (ghi - glo);
    if (sec > lo + 0.02 * (hi - lo) && sec < hi - 0.02 * (hi - lo)) mid = sec;
    const double gm = g(mid);
    if (gm > 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  return 0.5 * (lo + hi);
}

ConeModel build_cone(Dim d) {
  const double t0 = solve_theta0(d);
  const Band band = Band::symmetric(d, t0);
  sturm::RadialOperator op(band, 0.0);
  auto pairs = sturm::eigen_solve(op, 2);
  const double lam1 = pairs[0].eigenvalue;
  if (std::abs(lam1 - (d.d - 1)) > 1e-9 * (d.d - 1))
    throw NumericError("build_cone: lambda_1(theta0) != d-1, got " +
                       std::to_string(lam1));
  Profile p = pairs[0].profile;

  const double dn_lo = p.normal_deriv_lo();
  const double dn_hi = p.normal_deriv_hi();
  if (std::abs(dn_lo - dn_hi) > 1e-8 * std::abs(dn_lo))
    throw NumericError("build_cone: asymmetric boundary derivatives");
  const double hd2 = sphere_area(d.d - 2);
  // kappa0 |d_nu phi_1| = 1 with phi_1 = p / sqrt(H^{d-2}).
  const double kappa0 = std::sqrt(hd2) / std::abs(dn_lo);

  ConeModel c{d,
              t0,
              kappa0,
              std::move(p),
              lam1,
              pairs[1].eigenvalue,
              band_measure(band),
              band_perimeter(band),
              0.0,
              0.0,
              d.minimizing_range()};
  c.weiss_density = c.m0 / d.d;
  const Profile& pp = c.profile0;
  const int dd = d.d;
  c.c_int = std::sqrt(hd2) *
            integrate([&](double th) { return pp.eval(th) * std::pow(std::sin(th), dd - 2); },
                      band.theta_lo, band.theta_hi, 1e-12)
                .value;

  // Construction invariants.
  const double c_id = c.perim / ((dd - 1) * c.kappa0);
  if (std::abs(c.c_int - c_id) > 1e-7 * std::abs(c_id))
    throw NumericError("build_cone: c_int identity violated: " +
                       std::to_string(c.c_int) + " vs " + std::to_string(c_id));
  if (c.m0 / (c.kappa0 * c.kappa0) < dd - 1)
    throw NumericError("build_cone: m0/kappa0^2 < d-1");
  if (!(c.lambda2 > dd - 1))
    throw NumericError("build_cone: no spectral gap above d-1");
  return c;
}

// ---------------------------------------------------------------------------
// Legendre function (Gegenbauer form), integrated from series data at t=0.

namespace {

struct QInit {
  double value;
  double slope;
};

// Standard Q^mu_nu(0) and (Q^mu_nu)'(0) (A&S 8.6.11 / 8.6.12); these equal
// the Gegenbauer-form values since (1-t^2)^{-mu/2} has value 1, slope 0 at 0.
QInit q_initial(double nu, double mu) {
  const double s = std::sin((nu + mu) * M_PI / 2.0);
  const double c = std::cos((nu + mu) * M_PI / 2.0);
  const double v = -std::pow(2.0, mu - 1.0) * std::sqrt(M_PI) * s *
                   std::tgamma((nu + mu + 1.0) / 2.0) / std::tgamma((nu - mu + 2.0) / 2.0);
  const double dv = std::pow(2.0, mu) * std::sqrt(M_PI) * c *
                    std::tgamma((nu + mu + 2.0) / 2.0) / std::tgamma((nu - mu + 1.0) / 2.0);
  return {v, dv};
}

// First-kind initial data (A&S 8.6.1 / 8.6.2).
QInit p_initial(double nu, double mu) {
  const double c = std::cos((nu + mu) * M_PI / 2.0);
  const double s = std::sin((nu + mu) * M_PI / 2.0);
  const double v = std::pow(2.0, mu) / std::sqrt(M_PI) * c *
                   std::tgamma((nu + mu + 1.0) / 2.0) / std::tgamma((nu - mu + 2.0) / 2.0);
  const double dv = -std::pow(2.0, mu + 1.0) / std::sqrt(M_PI) * s *
                    std::tgamma((nu + mu + 2.0) / 2.0) / std::tgamma((nu - mu + 1.0) / 2.0);
  return {v, dv};
}

// RK4 integration of the Gegenbauer-form equation from the series data at 0.
double integrate_gegenbauer(double nu, double mu, double target, const QInit& init) {
  if (!(target > -1.0 && target < 1.0))
    throw DomainError("legendre function: need -1 < t < 1");
  if (target == 0.0) return init.value;
  const double coef = (nu - mu) * (nu + mu + 1.0);
  auto deriv = [&](double x, double q, double qp, double& dq, double& dqp) {
    dq = qp;
    dqp = (2.0 * (mu + 1.0) * x * qp - coef * q) / (1.0 - x * x);
  };
  const int steps = std::max(800, static_cast<int>(20000 * std::abs(target)));
  const double h = target / steps;
  double q = init.value, qp = init.slope;
  for (int i = 0; i < steps; ++i) {
    const double x = i * h;
    double k1q, k1p, k2q, k2p, k3q, k3p, k4q, k4p;
    deriv(x, q, qp, k1q, k1p);
    deriv(x + h / 2, q + h / 2 * k1q, qp + h / 2 * k1p, k2q, k2p);
    deriv(x + h / 2, q + h / 2 * k2q, qp + h / 2 * k2p, k3q, k3p);
    deriv(x + h, q + h * k3q, qp + h * k3p, k4q, k4p);
    q += h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
    qp += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
  }
  return q;
}

double first_root(const std::function<double(double)>& f, const char* who) {
  double prev_t = 1e-4, prev = f(prev_t);
  for (double t = 0.01; t < 0.999; t += 0.01) {
    const double v = f(t);
    if (prev * v <= 0.0) {
      double lo = prev_t, hi = t, flo = prev;
      for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (flo * fm <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev = v;
    prev_t = t;
  }
  throw NumericError(std::string(who) + ": no root found on (0,1)");
}

}  // namespace

double legendre_Q(double nu, double mu, double t) {
  return integrate_gegenbauer(nu, mu, t, q_initial(nu, mu));
}

double legendre_P(double nu, double mu, double t) {
  return integrate_gegenbauer(nu, mu, t, p_initial(nu, mu));
}

double legendre_Q_root(double nu, double mu) {
  return first_root([&](double t) { return legendre_Q(nu, mu, t); },
                    "legendre_Q_root");
}

double legendre_P_root(double nu, double mu) {
  return first_root([&](double t) { return legendre_P(nu, mu, t); },
                    "legendre_P_root");
}

double legendre_root_for_dimension(Dim d) {
  const double nu = (d.d - 1) / 2.0, mu = (d.d - 3) / 2.0;
  return d.d % 2 == 1 ? legendre_Q_root(nu, mu) : legendre_P_root(nu, mu);
}

double profile_phi0(const ConeModel& cone, double theta) {
  const Band b = cone.band();
  if (theta < b.theta_lo || theta > b.theta_hi)
    throw DomainError("profile_phi0: theta outside band");
  return cone.phi0(theta);
}

double legendre_normalizer(const ConeModel& cone) {
  if (cone.d.d % 2 == 0)
    throw DomainError("legendre_normalizer: closed form requires odd d");
  const double nu = (cone.d.d - 1) / 2.0, mu = (cone.d.d - 3) / 2.0;
  const double mid = M_PI / 2;
  return cone.phi0(mid) / std::abs(legendre_Q(nu, mu, std::cos(mid)));
}

}  // namespace epilab::cone
