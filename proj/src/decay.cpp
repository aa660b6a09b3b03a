#include "epilab/decay.hpp"

#include <algorithm>
#include <cmath>

namespace epilab::decay {

namespace {

// RK4 for dW/dx = f(W) with x = log(r0/r) on one dyadic step.
double rk4_step(double w, double h, const std::function<double(double)>& f) {
  const double k1 = f(w);
  const double k2 = f(w + h / 2 * k1);
  const double k3 = f(w + h / 2 * k2);
  const double k4 = f(w + h * k3);
  return w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys,
                 double* icept = nullptr) {
  const int n = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (icept) *icept = (sy - slope * sx) / n;
  return slope;
}

}  // namespace

DecayCurve integrate_decay(const DecayInput& in, int kmax) {
  DecayCurve c;
  const double dd = in.d.d;
  double w_ode = in.w_start;
  const int substeps = 64;

  for (int k = 0; k <= kmax; ++k) {
    const double r = in.r0 * std::pow(2.0, -k);
    const double x = k * std::log(2.0);  // log(r0/r)
    c.radii.push_back(r);

    double bound;
    double exact_ode;
    if (in.gamma == 0.0) {
      // retained-factor form: dW/dx = -(d eps/(1-eps)) W
      const double rate = dd * in.eps / (1.0 - in.eps);
      bound = in.w_start * std::exp(-rate * x);
      exact_ode = bound;
    } else {
      // discarded (weaker) form: dW/dx = -eps gamma d ... W^{1+gamma}
      bound = (x == 0.0) ? in.w_start
                         : std::min(in.w_start,
                                    std::pow(in.eps * in.gamma * dd * x, -1.0 / in.gamma));
      exact_ode = std::pow(std::pow(in.w_start, -in.gamma) + in.eps * in.gamma * dd * x,
                           -1.0 / in.gamma);
    }
    c.w_values.push_back(bound);

    if (k > 0) {
      const double h = std::log(2.0) / substeps;
      // the differential inequality dW/d(log(r0/r)) <= -d eps W^{1+gamma};
      // the gamma factor of the printed bound appears on integration
      const auto f = [&](double w) {
        if (in.gamma == 0.0) return -dd * in.eps / (1.0 - in.eps) * w;
        return -in.eps * dd * std::pow(std::max(w, 0.0), 1.0 + in.gamma);
      };
      for (int s = 0; s < substeps; ++s) w_ode = rk4_step(w_ode, h, f);
    }
    c.ode_values.push_back(w_ode);
    if (std::abs(w_ode - exact_ode) > 1e-6 * std::max(1e-300, exact_ode))
      throw NumericError("integrate_decay: ODE integration drifted from the closed form");
    if (w_ode > bound + 1e-9 * std::max(1.0, bound))
      throw NumericError("integrate_decay: ODE curve fails to dominate the bound");

    // cumulative dyadic L2 drift: ||u_{r/2} - u_r|| <= sqrt(log 2 * w(r))
    const double prev = c.l2_drift.empty() ? 0.0 : c.l2_drift.back();
    if (k == 0) {
      c.l2_drift.push_back(0.0);
    } else {
      c.l2_drift.push_back(prev + std::sqrt(std::log(2.0) * c.w_values[k - 1]));
    }
  }
  return c;
}

ModulusFit dyadic_l2_modulus(const std::function<double(double)>& e, double r0,
                             double gamma, int kmax) {
  ModulusFit out;
  // at the starting scale the sum is empty
  out.ts.push_back(r0);
  out.values.push_back(0.0);
  if (gamma == 0.0) {
    // geometric (Hoelder) branch: plain dyadic scales, modulus(t) =
    // sum_{r_k <= t} sqrt(log 2 * e(r_k))
    std::vector<double> xs, ys;
    const int K = 48;
    for (int i = 1; i + 8 <= K; ++i) {
      const double t = r0 * std::pow(2.0, -i);
      double m = 0.0;
      for (int k = i; k <= K; ++k) m += std::sqrt(std::log(2.0) * e(r0 * std::pow(2.0, -k)));
      out.ts.push_back(t);
      out.values.push_back(m);
      if (m > 0) {
        xs.push_back(std::log(t / r0));
        ys.push_back(std::log(m));
      }
    }
    double icept = 0.0;
    out.fitted_exponent = fit_slope(xs, ys, &icept);  // Hoelder exponent in t
    out.fitted_c = std::exp(icept);
    return out;
  }
  if (!(gamma > 0.0 && gamma < 1.0))
    throw DomainError("dyadic_l2_modulus: gamma in [0,1)");

  // doubly-dyadic scales t_i = r0 2^{-2^i}; modulus(t_i) = sum_{k>=i} 2^k e(t_k)
  std::vector<double> xs, ys;
  for (int i = 1; i <= kmax; ++i) {
    const double t = r0 * std::pow(2.0, -std::pow(2.0, i));
    double m = 0.0;
    for (int k = i; k <= kmax; ++k)
      m += std::pow(2.0, k) * e(r0 * std::pow(2.0, -std::pow(2.0, k)));
    out.ts.push_back(t);
    out.values.push_back(m);
    // the last two samples see a truncated tail; keep them out of the fit
    if (m > 0 && i + 2 <= kmax) {
      xs.push_back(std::log(-std::log(t / r0)));
      ys.push_back(std::log(m));
    }
  }
  if (xs.size() < 3) throw NumericError("dyadic_l2_modulus: not enough samples");
  double icept = 0.0;
  out.fitted_exponent = fit_slope(xs, ys, &icept);  // expected (gamma-1)/gamma
  out.fitted_c = std::exp(icept);
  return out;
}

ModulusFit dyadic_l2_modulus(const DecayCurve& curve, double gamma) {
  // log-log interpolation of the curve's bound values
  const auto& r = curve.radii;
  const auto& w = curve.w_values;
  auto e = [&](double t) {
    if (t >= r.front()) return w.front();
    if (t <= r.back()) return w.back();
    // radii are geometric, decreasing
    const double k = std::log(r.front() / t) / std::log(2.0);
    const int i = std::min(static_cast<int>(k), static_cast<int>(r.size()) - 2);
    const double frac = k - i;
    return std::exp((1.0 - frac) * std::log(w[i]) + frac * std::log(w[i + 1]));
  };
  const int kmax = static_cast<int>(std::log2(static_cast<double>(r.size() - 1)));
  return dyadic_l2_modulus(e, r.front(), gamma, std::max(3, kmax));
}

}  // namespace epilab::decay
