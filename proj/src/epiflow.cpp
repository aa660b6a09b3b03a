#include "epilab/epiflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace epilab::epiflow {

namespace {

constexpr double kTracePositivityTol = 1e-12;

}  // namespace

Band Trace::band(const cone::ConeModel& c) const {
  return Band(c.d, M_PI / 2 - c.theta0 - a_lo, M_PI / 2 + c.theta0 + a_hi);
}

double Competitor::slicing_residual() const {
  return std::abs(w_h - w_h_direct) /
         std::max({1.0, std::abs(w_h), std::abs(w_h_direct)});
}

void check_gate(const Trace& t, const cone::ConeModel& c, const Gate& g) {
  double high = 0.0;
  for (const auto& [j, cj] : t.high_modes) {
    if (j < 2) throw PreconditionError("Trace: high-mode eigenindex must be >= 2");
    high += cj * cj;
  }
  high = std::sqrt(high);
  const double kdev = std::abs(t.kappa - c.kappa0) / c.kappa0;
  if (std::abs(t.a_lo) > g.max_shift || std::abs(t.a_hi) > g.max_shift ||
      kdev > g.max_kappa_dev || high > g.max_high)
    throw PreconditionError(
        "trace outside smallness gate: |a_lo|=" + std::to_string(std::abs(t.a_lo)) +
        " |a_hi|=" + std::to_string(std::abs(t.a_hi)) +
        " |kappa-kappa0|/kappa0=" + std::to_string(kdev) +
        " |g|=" + std::to_string(high));
}

double psi_rho(double r, double rho, Dim d) {
  if (r <= rho) return 0.0;
  if (r >= 2 * rho) return 1.0;
  const double p = 2.0 - d.d;
  return (std::pow(rho, p) - std::pow(r, p)) / (std::pow(rho, p) - std::pow(2 * rho, p));
}

double psi_rho_deriv(double r, double rho, Dim d) {
  if (r <= rho || r >= 2 * rho) return 0.0;
  const double p = 2.0 - d.d;
  return -p * std::pow(r, p - 1.0) / (std::pow(rho, p) - std::pow(2 * rho, p));
}

// ---------------------------------------------------------------------------
// Slice materialization

namespace {

struct Materialized {
  Band band;
  Eigen::VectorXd theta;        // grid nodes
  Eigen::VectorXd quad_w;       // Clenshaw-Curtis weights on the band
  std::vector<double> lambdas;  // Dirichlet eigenvalues, 1-based index j
  Eigen::VectorXd V, Vtheta;    // total slice profile and its theta-derivative
  double measure = 0.0;
  double e_quadratic = 0.0;  // Parseval over the slice's own eigenbasis
  double e_total = 0.0;
};

int needed_modes(const Trace& t) {
  int k = 1;
  for (const auto& [j, cj] : t.high_modes) k = std::max(k, j);
  return k;
}

Materialized materialize(const Trace& t, const cone::ConeModel& c, int n,
                         bool check_positive) {
  const Band band = t.band(c);
  const int kneed = needed_modes(t);
  sturm::RadialOperator op(band, 0.0);
  auto pairs = sturm::eigen_solve_at(op, kneed, n);

  ChebGrid grid(n, band.theta_lo, band.theta_hi);
  Materialized m{band, grid.nodes, grid.quad_w, {},
                 Eigen::VectorXd::Zero(n + 1), Eigen::VectorXd::Zero(n + 1)};
  for (const auto& ep : pairs) m.lambdas.push_back(ep.eigenvalue);

  m.V = t.kappa * pairs[0].profile.values;
  m.Vtheta = t.kappa * pairs[0].profile.derivs;
  const int dd = c.d.d;
  m.e_quadratic = t.kappa * t.kappa * (m.lambdas[0] - (dd - 1));
  for (const auto& [j, cj] : t.high_modes) {
    m.V += cj * pairs[j - 1].profile.values;
    m.Vtheta += cj * pairs[j - 1].profile.derivs;
    m.e_quadratic += cj * cj * (m.lambdas[j - 1] - (dd - 1));
  }
  m.measure = band_measure(band);
  m.e_total = m.e_quadratic + m.measure;

  if (check_positive) {
    for (int i = 1; i < n; ++i)
      if (m.V(i) < kTracePositivityTol)
        throw PreconditionError(
            "slice trace not positive on its band; tighten the gate");
  }
  return m;
}

// Raw eigen data of a band: values and theta-derivatives of the first k
// Dirichlet modes on the band's Chebyshev grid. Grids of equal order are
// entrywise comparable across bands through the normalized band coordinate.
struct ModeSet {
  Band band;
  Eigen::VectorXd theta;
  Eigen::VectorXd quad_w;
  std::vector<double> lambdas;
  Eigen::MatrixXd vals;    // (n+1) x k
  Eigen::MatrixXd derivs;  // d/dtheta
};

ModeSet mode_set(const Band& band, int kneed, int n) {
  sturm::RadialOperator op(band, 0.0);
  auto pairs = sturm::eigen_solve_at(op, kneed, n);
  ChebGrid grid(n, band.theta_lo, band.theta_hi);
  ModeSet ms{band, grid.nodes, grid.quad_w, {}, Eigen::MatrixXd(n + 1, kneed),
             Eigen::MatrixXd(n + 1, kneed)};
  for (int j = 0; j < kneed; ++j) {
    ms.lambdas.push_back(pairs[j].eigenvalue);
    ms.vals.col(j) = pairs[j].profile.values;
    ms.derivs.col(j) = pairs[j].profile.derivs;
  }
  return ms;
}

// A slice together with d/dt of its profile at fixed colatitude. The stencil
// stays inside [t_min, t_max] (schedules are only piecewise smooth in r), and
// band motion enters through the normalized band coordinate, so no finite
// difference ever straddles a moving support boundary.
struct SliceWithDeriv {
  Materialized mat;
  Eigen::VectorXd dV;       // d/dt V at fixed theta, on the slice grid
  double deriv_term = 0.0;  // int (dV)^2 sin^{d-2} d theta
};

SliceWithDeriv slice_with_derivative(const std::function<Trace(double)>& field,
                                     double t, double t_min, double t_max,
                                     const cone::ConeModel& c, int n, double h,
                                     bool check_positive = true) {
  h = std::min(h, (t_max - t_min) / 3);
  double ta, tb, tc;
  if (t - h < t_min) {
    ta = t;
    tb = t + h;
    tc = t + 2 * h;
  } else if (t + h > t_max) {
    ta = t - 2 * h;
    tb = t - h;
    tc = t;
  } else {
    ta = t - h;
    tb = t;
    tc = t + h;
  }

  Materialized mc = materialize(field(t), c, n, check_positive);
  auto at = [&](double tt) -> Materialized {
    if (tt == t) return mc;
    return materialize(field(tt), c, n, false);
  };
  const Materialized ma = at(ta), mb = at(tb), mz = at(tc);

  // derivative at t of the parabola through the three stencil slices
  const double l0 = (2 * t - tb - tc) / ((ta - tb) * (ta - tc));
  const double l1 = (2 * t - ta - tc) / ((tb - ta) * (tb - tc));
  const double l2 = (2 * t - ta - tb) / ((tc - ta) * (tc - tb));

  const int np = static_cast<int>(mc.V.size());
  Eigen::VectorXd dVhat(np);
  for (int k = 0; k < np; ++k)
    dVhat(k) = ma.V(k) * l0 + mb.V(k) * l1 + mz.V(k) * l2;
  const double lo_dot =
      ma.band.theta_lo * l0 + mb.band.theta_lo * l1 + mz.band.theta_lo * l2;
  const double hi_dot =
      ma.band.theta_hi * l0 + mb.band.theta_hi * l1 + mz.band.theta_hi * l2;

  SliceWithDeriv out{std::move(mc), Eigen::VectorXd(np), 0.0};
  const double width = out.mat.band.width();
  const int dd = c.d.d;
  double acc = 0.0;
  for (int k = 0; k < np; ++k) {
    const double s =
        (2 * out.mat.theta(k) - out.mat.band.theta_lo - out.mat.band.theta_hi) / width;
    out.dV(k) = dVhat(k) -
                out.mat.Vtheta(k) * ((lo_dot + hi_dot) + s * (hi_dot - lo_dot)) / 2.0;
    acc += out.mat.quad_w(k) * out.dV(k) * out.dV(k) *
           std::pow(std::sin(out.mat.theta(k)), dd - 2);
  }
  out.deriv_term = acc;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Competitor schedules

namespace {

struct Schedules {
  double eps = 0.0;
  double q_plus = 0.0, q_minus = 0.0;  // coordinates along zeta_1^+ / zeta_1^-
  double s0 = 0.0;                     // kappa^2 = kappa0^2 + s0^3
  double a_coef = 0.0;                 // sign(s0) * delta lambda(0)[zeta_1]
  double sqh = 0.0;
  std::vector<std::pair<int, double>> base_modes;
  std::vector<double> alpha;
  double kappa0_sq = 0.0;
  double rho = 0.25;
  int d = 0;

  double eta1(double r) const { return 1.0 - (d + 1) * eps * (1.0 - r); }
  static double eta2(double) { return 1.0; }
  double eta3(double r) const { return 1.0 - eps * a_coef * (1.0 - r); }

  Trace slice(double r) const {
    const double out_lo = (-eta1(r) * q_plus + q_minus) / sqh;
    const double out_hi = (-eta1(r) * q_plus - q_minus) / sqh;
    const double k2 = kappa0_sq + eta3(r) * s0 * s0 * s0;
    if (k2 <= 0.0) throw NumericError("competitor: kappa_r^2 <= 0");
    Trace t;
    t.kappa = std::sqrt(k2);
    t.a_lo = out_lo;
    t.a_hi = out_hi;
    const double psi = psi_rho(r, rho, Dim(d));
    for (std::size_t i = 0; i < base_modes.size(); ++i) {
      const auto& [j, cj] = base_modes[i];
      t.high_modes.emplace_back(j, cj * psi * std::pow(r, alpha[i] - 1.0));
    }
    return t;
  }
};

Schedules make_schedules(const Trace& trace, const cone::ConeModel& c, double eps,
                         double rho, const std::vector<double>& lambdas1) {
  Schedules s;
  s.eps = eps;
  s.rho = rho;
  s.d = c.d.d;
  s.sqh = std::sqrt(sphere_area(c.d.d - 2));
  s.kappa0_sq = c.kappa0 * c.kappa0;
  s.q_plus = -(trace.a_lo + trace.a_hi) * s.sqh / 2.0;
  s.q_minus = (trace.a_lo - trace.a_hi) * s.sqh / 2.0;
  s.s0 = std::cbrt(trace.kappa * trace.kappa - s.kappa0_sq);
  const double cs = std::pow(std::cos(c.theta0), c.d.d - 2);
  const double dlam_zeta1 = 2.0 * s.q_plus * cs * s.sqh / s.kappa0_sq;
  s.a_coef = (s.s0 > 0 ? 1.0 : (s.s0 < 0 ? -1.0 : 0.0)) * dlam_zeta1;
  s.base_modes = trace.high_modes;
  for (const auto& [j, cj] : s.base_modes) {
    (void)cj;
    s.alpha.push_back(homogeneity_exponent(lambdas1[j - 1], c.d));
  }
  return s;
}

}  // namespace

Competitor build_competitor(const Trace& trace, const cone::ConeModel& c,
                            double eps, double rho, int jobs, const Gate& gate) {
  check_gate(trace, c, gate);
  if (!(eps > 0.0) || eps >= 1.0 / (c.d.d + 1))
    throw PreconditionError("build_competitor: need 0 < eps < 1/(d+1)");
  if (!(rho > 0.0 && rho <= 0.25))
    throw PreconditionError("build_competitor: need 0 < rho <= 1/4");

  // Validate the resolution once at the boundary trace; every slice then runs
  // at the validated rung (the ladder returning at 2m certifies the m-level
  // spectrum to its tolerance, so slices use the coarser rung).
  const int kneed = needed_modes(trace);
  sturm::RadialOperator op1(trace.band(c), 0.0);
  auto pairs1 = sturm::eigen_solve(op1, kneed, {48, 384, 1e-10, 1e-8});
  const int n = std::max(48, (pairs1[0].profile.size() - 1) / 2);
  std::vector<double> lambdas1;
  for (const auto& ep : pairs1) lambdas1.push_back(ep.eigenvalue);
  for (const auto& [j, cj] : trace.high_modes) {
    (void)cj;
    if (lambdas1[j - 1] <= c.d.d - 1)
      throw PreconditionError("build_competitor: high mode with lambda_j <= d-1");
  }

  Schedules sch = make_schedules(trace, c, eps, rho, lambdas1);
  const int dd = c.d.d;
  const double hd2 = sphere_area(dd - 2);

  // r-panels split where psi_rho has kinks; slices are conical below rho/2.
  // psi and psi' are taken per panel so the duplicated boundary nodes carry
  // their panel's one-sided values.
  const std::array<std::pair<double, double>, 3> spans = {
      std::pair{rho / 2, rho}, {rho, 2 * rho}, {2 * rho, 1.0}};
  const std::array<int, 3> orders = {48, 48, 160};
  auto psi_of = [&](int panel, double r) {
    if (panel == 0) return 0.0;
    if (panel == 2) return 1.0;
    const double p = 2.0 - dd;
    return (std::pow(rho, p) - std::pow(r, p)) /
           (std::pow(rho, p) - std::pow(2 * rho, p));
  };
  auto dpsi_of = [&](int panel, double r) {
    if (panel != 1) return 0.0;
    const double p = 2.0 - dd;
    return -p * std::pow(r, p - 1.0) /
           (std::pow(rho, p) - std::pow(2 * rho, p));
  };

  Competitor comp;
  comp.rho = rho;
  comp.eps = eps;
  comp.alpha = sch.alpha;
  comp.w_b = c.weiss_density;

  struct NodeRef {
    int panel;
    double r;
    double w;
  };
  std::vector<NodeRef> nodes;
  for (int p = 0; p < 3; ++p) {
    ChebGrid g(orders[p], spans[p].first, spans[p].second);
    comp.panels.push_back({static_cast<int>(nodes.size()),
                           static_cast<int>(nodes.size()) + g.size()});
    for (int i = 0; i < g.size(); ++i) nodes.push_back({p, g.nodes(i), g.quad_w(i)});
  }
  const auto nn = static_cast<std::int64_t>(nodes.size());

  // pass 1: eigen data per slice band
  std::vector<ModeSet> ms;
  ms.reserve(nodes.size());
  for (const auto& nd : nodes) ms.push_back(ModeSet{sch.slice(nd.r).band(c),
                                                    {}, {}, {}, {}, {}});
  parallel_for(nn, jobs, [&](std::int64_t q) {
    ms[q] = mode_set(sch.slice(nodes[q].r).band(c), kneed, n);
  });

  // pass 2: assemble slices, with schedule derivatives in closed form and
  // d/dr of the eigenprofiles by per-panel finite differences in the
  // normalized band coordinate.
  std::vector<SliceData> slices(nodes.size());
  std::vector<double> contrib(nodes.size());
  std::vector<double> direct_contrib(nodes.size(), 0.0);
  std::vector<double> boundary_sq(nodes.size(), 0.0);
  std::vector<double> frozen_direct(1, 0.0);
  const double eta1p = (dd + 1) * eps;            // d eta1 / dr
  const double eta3p = eps * sch.a_coef;          // d eta3 / dr
  const double lo_dot = eta1p * sch.q_plus / sch.sqh;
  const double hi_dot = -eta1p * sch.q_plus / sch.sqh;

  parallel_for(nn, jobs, [&](std::int64_t q) {
    const NodeRef& nd = nodes[q];
    const auto [b0, b1] = comp.panels[nd.panel];
    const double r = nd.r;
    const ModeSet& m = ms[q];
    Trace sl = sch.slice(r);
    // per-panel psi in the stored slice coefficients
    for (std::size_t i = 0; i < sl.high_modes.size(); ++i)
      sl.high_modes[i].second = sch.base_modes[i].second * psi_of(nd.panel, r) *
                                std::pow(r, sch.alpha[i] - 1.0);

    const double kr = sl.kappa;
    const double krp = sch.s0 * sch.s0 * sch.s0 * eta3p / (2.0 * kr);

    Eigen::VectorXd V = kr * m.vals.col(0);
    Eigen::VectorXd Vt = kr * m.derivs.col(0);
    double e0 = kr * kr * (m.lambdas[0] - (dd - 1));
    for (std::size_t i = 0; i < sl.high_modes.size(); ++i) {
      const auto [j, cj] = sl.high_modes[i];
      V += cj * m.vals.col(j - 1);
      Vt += cj * m.derivs.col(j - 1);
      e0 += cj * cj * (m.lambdas[j - 1] - (dd - 1));
    }
    for (int k = 1; k < n; ++k)
      if (V(k) < kTracePositivityTol)
        throw PreconditionError("slice trace not positive; tighten the gate");

    // measure by Clenshaw-Curtis on the slice grid (spectrally exact here)
    double meas = 0.0;
    for (int k = 0; k <= n; ++k)
      meas += m.quad_w(k) * std::pow(std::sin(m.theta(k)), dd - 2);
    meas *= hd2;

    // three-point stencil within the panel for the profile derivative,
    // differentiated at r (one-sided at the panel ends)
    std::int64_t s0i = q - 1, s1i = q, s2i = q + 1;
    if (q == b0) {
      s0i = q;
      s1i = q + 1;
      s2i = q + 2;
    } else if (q == b1 - 1) {
      s0i = q - 2;
      s1i = q - 1;
      s2i = q;
    }
    const double x0 = nodes[s0i].r, x1 = nodes[s1i].r, x2 = nodes[s2i].r;
    const double l0 = (2 * r - x1 - x2) / ((x0 - x1) * (x0 - x2));
    const double l1 = (2 * r - x0 - x2) / ((x1 - x0) * (x1 - x2));
    const double l2 = (2 * r - x0 - x1) / ((x2 - x0) * (x2 - x1));

    // d/dr V at fixed theta
    Eigen::VectorXd dV = krp * m.vals.col(0);
    {
      Eigen::VectorXd dp = l0 * ms[s0i].vals.col(0) + l1 * ms[s1i].vals.col(0) +
                           l2 * ms[s2i].vals.col(0);
      dV += kr * dp;
    }
    for (std::size_t i = 0; i < sl.high_modes.size(); ++i) {
      const auto [j, cj] = sl.high_modes[i];
      const double a = sch.alpha[i];
      const double base = sch.base_modes[i].second;
      const double cjp = base * (dpsi_of(nd.panel, r) * std::pow(r, a - 1.0) +
                                 psi_of(nd.panel, r) * (a - 1.0) * std::pow(r, a - 2.0));
      Eigen::VectorXd dp = l0 * ms[s0i].vals.col(j - 1) + l1 * ms[s1i].vals.col(j - 1) +
                           l2 * ms[s2i].vals.col(j - 1);
      dV += cjp * m.vals.col(j - 1) + cj * dp;
    }
    // band-motion chain rule through the normalized coordinate
    const double width = m.band.width();
    double dterm = 0.0, direct = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double s = (2 * m.theta(k) - m.band.theta_lo - m.band.theta_hi) / width;
      const double dv =
          dV(k) - Vt(k) * ((lo_dot + hi_dot) + s * (hi_dot - lo_dot)) / 2.0;
      const double wgt = m.quad_w(k) * std::pow(std::sin(m.theta(k)), dd - 2);
      dterm += wgt * dv * dv;
      const double vr = V(k) + r * dv;  // d/dr of r v_r
      direct += wgt * (vr * vr + Vt(k) * Vt(k));
    }

    SliceData& out = slices[q];
    out.r = r;
    out.slice = sl;
    out.lambda1 = m.lambdas[0];
    out.measure = meas;
    out.e_quadratic = e0;
    out.e_total = e0 + meas;
    out.deriv_term = dterm;
    contrib[q] = nd.w * std::pow(r, dd - 1) * (out.e_total + r * r * out.deriv_term);
    direct_contrib[q] = nd.w * std::pow(r, dd - 1) * (direct + meas);
    if (std::abs(r - 1.0) <= 1e-13) {
      double bsq = 0.0;
      for (int k = 0; k <= n; ++k)
        bsq += m.quad_w(k) * V(k) * V(k) * std::pow(std::sin(m.theta(k)), dd - 2);
      boundary_sq[q] = bsq;
    }
    if (q == 0) {
      double a0 = 0.0;
      for (int k = 0; k <= n; ++k)
        a0 += m.quad_w(k) * (V(k) * V(k) + Vt(k) * Vt(k)) *
              std::pow(std::sin(m.theta(k)), dd - 2);
      frozen_direct[0] = a0 + meas;
    }
  });

  double w = 0.0, wd = 0.0;
  for (double v : contrib) w += v;
  for (double v : direct_contrib) wd += v;
  for (double v : boundary_sq) wd -= v;
  // exactly conical piece on [0, rho/2]: the slice frozen at rho/2
  w += std::pow(rho / 2, dd) / dd * slices[0].e_total;
  wd += std::pow(rho / 2, dd) / dd * frozen_direct[0];
  comp.w_h = w;
  comp.w_h_direct = wd;

  // the boundary slice must reproduce the input trace
  const SliceData& top = slices.back();
  bool modes_match = top.slice.high_modes.size() == trace.high_modes.size();
  for (std::size_t i = 0; modes_match && i < trace.high_modes.size(); ++i)
    modes_match = std::abs(top.slice.high_modes[i].second -
                           trace.high_modes[i].second) <= 1e-9;
  if (std::abs(top.r - 1.0) > 1e-13 ||
      std::abs(top.slice.kappa - trace.kappa) > 1e-9 ||
      std::abs(top.slice.a_lo - trace.a_lo) > 1e-9 ||
      std::abs(top.slice.a_hi - trace.a_hi) > 1e-9 || !modes_match)
    throw NumericError("build_competitor: boundary slice mismatch");
  comp.w_z = top.e_total / dd;

  comp.slices = std::move(slices);
  comp.r_grid.reserve(nodes.size());
  comp.eta_values.reserve(nodes.size());
  for (const auto& ndr : nodes) {
    comp.r_grid.push_back(ndr.r);
    comp.eta_values.push_back(
        {sch.eta1(ndr.r), Schedules::eta2(ndr.r), sch.eta3(ndr.r)});
  }
  return comp;
}

double weiss_one_homogeneous(const Trace& t, const cone::ConeModel& c) {
  Materialized m = materialize(t, c, 96, false);
  return m.e_total / c.d.d;
}

double weiss_energy(const std::function<Trace(double)>& field,
                    const cone::ConeModel& c, int n_r, int jobs) {
  const double r_eps = 1e-4;  // the r^{d-1} weight kills the inner ball
  ChebGrid rg(n_r, r_eps, 1.0);
  const int dd = c.d.d;
  std::vector<double> contrib(rg.size());
  parallel_for(rg.size(), jobs, [&](std::int64_t i) {
    const double r = rg.nodes(i);
    SliceWithDeriv sd =
        slice_with_derivative(field, r, r_eps, 1.0, c, 80, 1e-5, false);
    contrib[i] =
        rg.quad_w(i) * std::pow(r, dd - 1) * (sd.mat.e_total + r * r * sd.deriv_term);
  });
  double w = 0.0;
  for (double v : contrib) w += v;
  return w;
}

double weiss_at(const Competitor& comp, const cone::ConeModel& c, double r) {
  const int dd = c.d.d;
  double acc = std::pow(comp.rho / 2, dd) / dd * comp.slices[0].e_total;
  bool reached = (r == comp.rho / 2);
  for (const auto& [b0, b1] : comp.panels) {
    if (reached) break;
    const double pa = comp.slices[b0].r, pb = comp.slices[b1 - 1].r;
    // TODO: support mid-panel radii by re-quadrature of the partial panel
    if (r < pb - 1e-12 && r > pa + 1e-12)
      throw DomainError("weiss_at: r must be a panel boundary of the grid");
    ChebGrid pg(b1 - b0 - 1, pa, pb);
    for (int k = b0; k < b1; ++k) {
      const SliceData& s = comp.slices[k];
      acc += pg.quad_w(k - b0) * std::pow(s.r, dd - 1) *
             (s.e_total + s.r * s.r * s.deriv_term);
    }
    if (std::abs(r - pb) <= 1e-12) reached = true;
  }
  if (!reached) throw DomainError("weiss_at: r beyond the grid");
  return acc / std::pow(r, dd);
}

SlicingCheck slicing_weiss(const std::function<Trace(double)>& v_of_t,
                           const std::function<double(double)>& eta, double eps,
                           const cone::ConeModel& c, int n_r, int jobs) {
  const double r_eps = 1e-4;
  ChebGrid rg(n_r, r_eps, 1.0);
  const int dd = c.d.d;
  const int n_theta = 80;

  auto eta_prime = [&](double r) {
    const double h = 1e-6;
    const double rl = std::max(r_eps, r - h), rr = std::min(1.0, r + h);
    return (eta(rr) - eta(rl)) / (rr - rl);
  };

  // boundary slice, t = eta(1)
  Materialized m1 = materialize(v_of_t(eta(1.0)), c, n_theta, false);
  const double e_top = m1.e_total;
  double boundary_sq = 0.0;
  for (int k = 0; k < m1.V.size(); ++k)
    boundary_sq += m1.quad_w(k) * m1.V(k) * m1.V(k) *
                   std::pow(std::sin(m1.theta(k)), dd - 2);

  std::vector<double> direct(rg.size()), eform(rg.size()), cost(rg.size());
  parallel_for(rg.size(), jobs, [&](std::int64_t i) {
    const double r = rg.nodes(i);
    const double t = eta(r);
    const double ep = eta_prime(r);
    SliceWithDeriv sd = slice_with_derivative(v_of_t, t, t - 1e-3, t + 1e-3, c,
                                              n_theta, 1e-5, false);
    double a_direct = 0.0, a_e0 = 0.0;
    for (int k = 0; k < sd.mat.V.size(); ++k) {
      const double w =
          std::pow(std::sin(sd.mat.theta(k)), dd - 2) * sd.mat.quad_w(k);
      const double vd = sd.mat.V(k) + r * ep * sd.dV(k);
      a_direct += w * (vd * vd + sd.mat.Vtheta(k) * sd.mat.Vtheta(k));
      a_e0 += w * (sd.mat.Vtheta(k) * sd.mat.Vtheta(k) -
                   (dd - 1) * sd.mat.V(k) * sd.mat.V(k));
    }
    const double rw = std::pow(r, dd - 1);
    direct[i] = rg.quad_w(i) * rw * (a_direct + sd.mat.measure);
    eform[i] = rg.quad_w(i) * rw * ((a_e0 + sd.mat.measure) - (1.0 - eps) * e_top);
    cost[i] = rg.quad_w(i) * std::pow(r, dd + 1) * ep * ep * sd.deriv_term;
  });

  double w_direct = -boundary_sq, rhs = 0.0, cost_total = 0.0;
  for (int i = 0; i < rg.size(); ++i) {
    w_direct += direct[i];
    rhs += eform[i];
    cost_total += cost[i];
  }
  SlicingCheck out;
  out.lhs = w_direct - (1.0 - eps) * e_top / dd;
  out.rhs = rhs + cost_total;
  out.residual_rel = std::abs(out.lhs - out.rhs) /
                     std::max({1.0, std::abs(out.lhs), std::abs(out.rhs), e_top / dd});
  return out;
}

// ---------------------------------------------------------------------------
// High-mode competitor on a fixed band

double harmonic_ratio_analytic(double lambda, Dim d) {
  const double a = homogeneity_exponent(lambda, d);
  return 1.0 - (a - 1.0) / (d.d + a - 1.0);
}

HighModeEnergies high_mode_competitor(
    const std::vector<std::pair<double, double>>& lambda_coeff, Dim d, double rho) {
  if (!(rho >= 0.0 && rho < 0.5))
    throw DomainError("high_mode_competitor: need 0 <= rho < 1/2");
  HighModeEnergies out;
  const int dd = d.d;
  for (const auto& [lambda, cj] : lambda_coeff) {
    if (lambda <= dd - 1)
      throw PreconditionError("high_mode_competitor: mode with lambda <= d-1");
    const double a = homogeneity_exponent(lambda, d);
    const double c2 = cj * cj;
    out.w0_homogeneous += c2 * (lambda - (dd - 1)) / dd;
    // W_0(h_g) per unit coefficient: int_0^1 (a^2 + lambda) r^{2a+d-3} dr - 1
    const double full = (a * a + lambda) / (2 * a + dd - 2);
    out.w0_harmonic += c2 * (full - 1.0);
    if (rho == 0.0) {
      out.w0_cutoff += c2 * (full - 1.0);
      continue;
    }
    const double tail =
        (a * a + lambda) * (1.0 - std::pow(2 * rho, 2 * a + dd - 2)) / (2 * a + dd - 2);
    const auto f = [&, lambda = lambda, a](double r) {
      const double psi = psi_rho(r, rho, d);
      const double dpsi = psi_rho_deriv(r, rho, d);
      const double g = dpsi * std::pow(r, a) + a * psi * std::pow(r, a - 1);
      return (g * g + lambda * psi * psi * std::pow(r, 2 * a - 2)) * std::pow(r, dd - 1);
    };
    const double mid = integrate(f, rho, 2 * rho, 1e-13).value;
    out.w0_cutoff += c2 * (tail + mid - 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lyapunov-Schmidt reduction

namespace {

GradientFn fd_gradient(const EnergyFn& g, int dim, double h = 1e-6) {
  return [g, dim, h](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(dim);
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      out(i) = (g(xp) - g(xm)) / (2 * h);
    }
    return out;
  };
}

}  // namespace

Eigen::VectorXd ReducedEnergy::upsilon(const Eigen::VectorXd& mu) const {
  const int nperp = static_cast<int>(basis_complement.cols());
  if (nperp == 0) return Eigen::VectorXd::Zero(full_dim);
  const Eigen::VectorXd base = basis_kernel * mu;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nperp);
  const double fd = 1e-6;
  for (int it = 0; it < 80; ++it) {
    const Eigen::VectorXd x = base + basis_complement * w;
    const Eigen::VectorXd r = basis_complement.transpose() * grad_full(x);
    if (r.norm() <= 1e-12) break;
    Eigen::MatrixXd J(nperp, nperp);
    for (int j = 0; j < nperp; ++j) {
      Eigen::VectorXd wp = w, wm = w;
      wp(j) += fd;
      wm(j) -= fd;
      const Eigen::VectorXd rp =
          basis_complement.transpose() * grad_full(base + basis_complement * wp);
      const Eigen::VectorXd rm =
          basis_complement.transpose() * grad_full(base + basis_complement * wm);
      J.col(j) = (rp - rm) / (2 * fd);
    }
    w -= J.fullPivLu().solve(r).eval();
  }
  const Eigen::VectorXd x = base + basis_complement * w;
  const double res = (basis_complement.transpose() * grad_full(x)).norm();
  if (res > 1e-10)
    throw NumericError("ls_reduce: Newton residual " + std::to_string(res));
  return basis_complement * w;
}

double ReducedEnergy::value(const Eigen::VectorXd& mu) const {
  return g_full(basis_kernel * mu + upsilon(mu));
}

Eigen::VectorXd ReducedEnergy::gradient(const Eigen::VectorXd& mu) const {
  const Eigen::VectorXd x = basis_kernel * mu + upsilon(mu);
  return basis_kernel.transpose() * grad_full(x);
}

ReducedEnergy ls_reduce(EnergyFn g_full, int dim,
                        const std::vector<Eigen::VectorXd>& kernel_basis,
                        std::optional<GradientFn> grad) {
  if (kernel_basis.empty()) throw PreconditionError("ls_reduce: empty kernel basis");
  ReducedEnergy red;
  red.full_dim = dim;
  const int nk = static_cast<int>(kernel_basis.size());
  red.basis_kernel.resize(dim, nk);
  for (int i = 0; i < nk; ++i) red.basis_kernel.col(i) = kernel_basis[i].normalized();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(red.basis_kernel);
  Eigen::MatrixXd Q = qr.householderQ();
  red.basis_complement = Q.rightCols(dim - nk);
  red.g_full = std::move(g_full);
  red.grad_full = grad ? *grad : fd_gradient(red.g_full, dim);

  const Eigen::VectorXd up0 = red.upsilon(Eigen::VectorXd::Zero(nk));
  if (up0.norm() > 1e-8)
    throw NumericError("ls_reduce: Upsilon(0) != 0, norm " + std::to_string(up0.norm()));
  return red;
}

// ---------------------------------------------------------------------------
// Unit-speed gradient flow

FlowTrace gradient_flow(const EnergyFn& g, const GradientFn& grad,
                        const Eigen::VectorXd& start, double t_end,
                        double record_dt) {
  if (!(t_end > 0)) throw PreconditionError("gradient_flow: t_end > 0");
  const double freeze_tol = 1e-9;
  FlowTrace trace;
  Eigen::VectorXd x = start;
  double t = 0.0;
  auto record = [&](double tt) {
    const Eigen::VectorXd gr = grad(x);
    trace.states.push_back({x, g(x), gr.norm(), tt});
  };
  record(0.0);

  auto field = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    const Eigen::VectorXd gr = grad(y);
    const double nn = gr.norm();
    if (nn < freeze_tol) return Eigen::VectorXd::Zero(y.size());
    return -gr / nn;
  };
  auto rk4 = [&](const Eigen::VectorXd& y, double hh) {
    const Eigen::VectorXd k1 = field(y);
    const Eigen::VectorXd k2 = field(y + hh / 2 * k1);
    const Eigen::VectorXd k3 = field(y + hh / 2 * k2);
    const Eigen::VectorXd k4 = field(y + hh * k3);
    return (y + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)).eval();
  };

  double h = record_dt;
  double next_record = record_dt;
  while (t < t_end - 1e-14) {
    if (field(x).norm() == 0.0) {
      trace.frozen = true;
      break;
    }
    h = std::min(h, t_end - t);
    const Eigen::VectorXd big = rk4(x, h);
    const Eigen::VectorXd half = rk4(rk4(x, h / 2), h / 2);
    const double err = (big - half).norm();
    const double tol = 1e-10 * std::max(1.0, x.norm());
    if (err > tol && h > 1e-12) {
      h /= 2;
      continue;
    }
    x = half;
    t += h;
    if (err < tol / 32) h = std::min(2 * h, record_dt);
    if (h < 1e-13)
      throw NumericError("gradient_flow: step-size underflow at t=" + std::to_string(t));
    if (t + 1e-14 >= next_record) {
      record(t);
      while (next_record <= t + 1e-14) next_record += record_dt;
    }
  }
  record(std::min(t, t_end));
  return trace;
}

LojFit lojasiewicz_fit(const FlowTrace& trace) {
  std::vector<double> xs, ys;
  for (const auto& st : trace.states) {
    if (st.g_value > 1e-13 && st.grad_norm > 1e-13) {
      xs.push_back(std::log(st.g_value));
      ys.push_back(std::log(st.grad_norm));
    }
  }
  if (xs.size() < 4 ||
      *std::max_element(xs.begin(), xs.end()) -
              *std::min_element(xs.begin(), xs.end()) < 1e-6)
    throw NumericError("lojasiewicz_fit: degenerate trace (constant G)");
  const int n = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icept = (sy - slope * sx) / n;
  double rss = 0;
  for (int i = 0; i < n; ++i) {
    const double e = ys[i] - slope * xs[i] - icept;
    rss += e * e;
  }
  LojFit fit;
  fit.gamma = 1.0 - slope;
  fit.c = std::exp(icept);
  fit.residual = std::sqrt(rss / n);
  if (!(fit.gamma > 0.0 && fit.gamma <= 0.55))
    throw NumericError("lojasiewicz_fit: fitted gamma " + std::to_string(fit.gamma) +
                       " outside (0, 1/2] + slack");
  return fit;
}

// ---------------------------------------------------------------------------
// End-to-end verification

EpiReport verify_epi(const Trace& trace, const cone::ConeModel& c,
                     const EpiOptions& opts) {
  check_gate(trace, c, opts.gate);
  EpiReport rep;
  rep.w_b = c.weiss_density;
  rep.w_z = weiss_one_homogeneous(trace, c);
  const double gap = rep.w_z - rep.w_b;
  if (gap <= 1e-11 * std::max(1.0, std::abs(rep.w_b))) {
    // W(z) <= W(b): the inequality holds for free with h = z
    rep.trivial = true;
    rep.w_h = rep.w_z;
    rep.epsilon_hat = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  // Starting eps from the quadratic model: schedule guard 1/(2(d+1)), capped
  // by half the high-mode gain when modes are present.
  double eps0 = 1.0 / (2.0 * (c.d.d + 1));
  if (!trace.high_modes.empty()) {
    sturm::RadialOperator op(trace.band(c), 0.0);
    auto pairs = sturm::eigen_solve(op, needed_modes(trace), {48, 384, 1e-10, 1e-8});
    for (const auto& [j, cj] : trace.high_modes) {
      (void)cj;
      const double a = homogeneity_exponent(pairs[j - 1].eigenvalue, c.d);
      eps0 = std::min(eps0, 0.5 * (a - 1.0) / (c.d.d + a - 1.0));
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  // rho only enters through the high-mode cutoff; pure first-mode traces need
  // a single rho
  std::vector<double> rhos = opts.rhos;
  if (trace.high_modes.empty() && !rhos.empty()) rhos.resize(1);
  for (double rho : rhos) {
    int worse_streak = 0;
    int halvings = 0;
    for (double e = eps0; e >= opts.eps_floor && halvings <= 10; e /= 2, ++halvings) {
      Competitor comp = build_competitor(trace, c, e, rho, opts.jobs, opts.gate);
      const double eh = 1.0 - (comp.w_h - rep.w_b) / gap;
      const double improvement = eh - best;
      if (improvement > 0) {
        best = eh;
        rep.w_h = comp.w_h;
        rep.eps_used = e;
        rep.rho_used = rho;
        worse_streak = 0;
        if (improvement < std::max(1e-6, 1e-3 * std::abs(best)) && halvings > 2) break;
      } else if (++worse_streak >= 2) {
        break;
      }
    }
    if (best >= 1e-2) break;  // two decades above the acceptance floor
  }
  rep.epsilon_hat = best;
  return rep;
}

}  // namespace epilab::epiflow
