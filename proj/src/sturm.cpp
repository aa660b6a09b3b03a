#include "epilab/sturm.hpp"

#include <algorithm>
#include <cmath>

namespace epilab::sturm {

namespace {

// Collocation matrix of L on the full grid (rows are not yet constrained).
Eigen::MatrixXd operator_matrix(const RadialOperator& op, const ChebGrid& g) {
  const int dd = op.band.d.d;
  const int m = g.size();
  Eigen::MatrixXd L = -(g.diff * g.diff);
  for (int i = 0; i < m; ++i) {
    const double th = g.nodes(i);
    L.row(i) -= (dd - 2) / std::tan(th) * g.diff.row(i);
    L(i, i) += op.azimuthal_eigenvalue / (std::sin(th) * std::sin(th));
  }
  return L;
}

// Chebyshev series of grid values (increasing-node convention) and its
// derivative; differentiation in coefficient space keeps rounding noise at
// the n^2 eps level, far below what the squared differentiation matrices
// would inject.
struct ChebSeries {
  Eigen::VectorXd coef;
  double a = 0.0, b = 1.0;

  double eval(double x) const {
    const double t = std::clamp(2.0 * (x - a) / (b - a) - 1.0, -1.0, 1.0);
    double bk1 = 0.0, bk2 = 0.0;
    for (int k = static_cast<int>(coef.size()) - 1; k >= 1; --k) {
      const double bk = 2.0 * t * bk1 - bk2 + coef(k);
      bk2 = bk1;
      bk1 = bk;
    }
    return t * bk1 - bk2 + coef(0);
  }

  ChebSeries derivative() const {
    const int n = static_cast<int>(coef.size()) - 1;
    ChebSeries d{Eigen::VectorXd::Zero(std::max(1, n)), a, b};
    if (n == 0) return d;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 2);
    for (int k = n - 1; k >= 0; --k)
      c(k) = c(k + 2) + 2.0 * (k + 1) * coef(k + 1);
    c(0) /= 2.0;
    d.coef = c.head(n) * (2.0 / (b - a));
    return d;
  }
};

ChebSeries cheb_series(const Eigen::VectorXd& values_increasing, double a, double b) {
  const int n = static_cast<int>(values_increasing.size()) - 1;
  // values at x_j = cos(pi j / n) are the reversed grid values
  ChebSeries s{Eigen::VectorXd::Zero(n + 1), a, b};
  for (int k = 0; k <= n; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double vj = values_increasing(n - j);
      const double w = (j == 0 || j == n) ? 0.5 : 1.0;
      acc += w * vj * std::cos(M_PI * k * j / n);
    }
    s.coef(k) = 2.0 * acc / n;
  }
  s.coef(0) /= 2.0;
  s.coef(n) /= 2.0;
  return s;
}

// Weighted-L2 ODE residual ||(L - lambda) v - rhs|| on a grid twice as fine,
// with derivatives taken through the Chebyshev series of the solution.
// Normalized by the applied-operator magnitude.
double ode_residual(const RadialOperator& op, const Profile& v, double lambda,
                    const std::function<double(double)>& rhs) {
  const ChebSeries f = cheb_series(v.values, v.band.theta_lo, v.band.theta_hi);
  const ChebSeries fp = f.derivative();
  const ChebSeries fpp = fp.derivative();
  const int n2 = 2 * (v.size() - 1);
  ChebGrid fine(n2, v.band.theta_lo, v.band.theta_hi);
  const int dd = op.band.d.d;
  const double m = op.azimuthal_eigenvalue;
  double acc = 0.0, scale = 0.0;
  for (int i = 1; i + 1 < fine.size(); ++i) {
    const double th = fine.nodes(i);
    const double s = std::sin(th);
    const double lv = -fpp.eval(th) - (dd - 2) / std::tan(th) * fp.eval(th) +
                      m / (s * s) * f.eval(th);
    const double w = std::pow(s, dd - 2);
    const double mis = lv - lambda * f.eval(th) - rhs(th);
    acc += fine.quad_w(i) * w * mis * mis;
    scale += fine.quad_w(i) * w * lv * lv;
  }
  return std::sqrt(acc) / std::max(1.0, std::sqrt(scale));
}

struct RawPair {
  double lambda;
  Eigen::VectorXd values;  // full grid incl. zero boundary values
};

std::vector<RawPair> raw_eigen(const RadialOperator& op, int k, int n) {
  ChebGrid g(n, op.band.theta_lo, op.band.theta_hi);
  Eigen::MatrixXd L = operator_matrix(op, g);
  const int m = g.size();
  Eigen::MatrixXd Li = L.block(1, 1, m - 2, m - 2);
  Eigen::EigenSolver<Eigen::MatrixXd> es(Li);
  if (es.info() != Eigen::Success)
    throw NumericError("eigen_solve: dense eigensolver failed");

  std::vector<std::pair<double, int>> real_idx;
  for (int i = 0; i < m - 2; ++i) {
    const auto ev = es.eigenvalues()(i);
    if (std::abs(ev.imag()) <= 1e-8 * std::max(1.0, std::abs(ev.real())))
      real_idx.emplace_back(ev.real(), i);
  }
  std::sort(real_idx.begin(), real_idx.end());

  std::vector<RawPair> out;
  for (const auto& [lam, idx] : real_idx) {
    if (static_cast<int>(out.size()) == k) break;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(m);
    full.segment(1, m - 2) = es.eigenvectors().col(idx).real();
    // spurious collocation eigenvalues have large residuals; filter later
    out.push_back({lam, full});
  }
  return out;
}

Profile normalized_profile(const RadialOperator& op, const Eigen::VectorXd& vals,
                           int rank) {
  Profile p(op.band, vals);
  const double nrm = p.weighted_norm();
  Eigen::VectorXd v = vals / nrm;
  Profile q(op.band, v);
  // Sign: first profile positive, higher profiles have positive derivative at
  // the lower band end.
  bool flip = false;
  if (rank == 0) {
    flip = q.eval((op.band.theta_lo + op.band.theta_hi) / 2) < 0.0;
  } else {
    flip = q.derivs(0) < 0.0;
  }
  if (flip) return Profile(op.band, Eigen::VectorXd(-v));
  return q;
}

// Verifying the ODE residual of a degree-n interpolant cannot beat the
// rounding floor of its second derivative, which grows like n^4 eps; the
// acceptance bar scales accordingly above the working resolutions.
double residual_floor_factor(int n) {
  const double f = std::pow(n / 128.0, 4);
  return std::max(1.0, f);
}

std::vector<EigenPair> assemble(const RadialOperator& op, int k, int n,
                                double residual_tol) {
  auto raw = raw_eigen(op, k + 4, n);  // headroom for residual filtering
  std::vector<EigenPair> out;
  const auto zero = [](double) { return 0.0; };
  const double tol = residual_tol * residual_floor_factor(n);
  for (const auto& rp : raw) {
    if (static_cast<int>(out.size()) == k) break;
    Profile p = normalized_profile(op, rp.values, static_cast<int>(out.size()));
    const double res = ode_residual(op, p, rp.lambda, zero);
    if (res > 1e-6 * residual_floor_factor(n)) continue;  // spurious mode
    if (res > tol)
      throw NumericError("eigen_solve: residual " + std::to_string(res) +
                         " above tolerance at n=" + std::to_string(n));
    out.push_back({rp.lambda, std::move(p), res});
  }
  if (static_cast<int>(out.size()) < k)
    throw NumericError("eigen_solve: residual filtering left fewer than k modes");
  return out;
}

}  // namespace

std::vector<EigenPair> eigen_solve_at(const RadialOperator& op, int k, int n) {
  if (k < 1) throw DomainError("eigen_solve: k >= 1");
  return assemble(op, k, n, 1e-6);
}

std::vector<EigenPair> eigen_solve(const RadialOperator& op, int k,
                                   const EigenOpts& opts) {
  if (k < 1) throw DomainError("eigen_solve: k >= 1");
  std::vector<double> prev;
  std::string last_err;
  for (int n = opts.start_n; n <= opts.max_n; n *= 2) {
    std::vector<EigenPair> pairs;
    try {
      pairs = assemble(op, k, n, opts.residual_tol);
    } catch (const NumericError& e) {
      // under-resolved rung: escalate instead of failing
      last_err = e.what();
      prev.clear();
      continue;
    }
    std::vector<double> cur(k);
    for (int i = 0; i < k; ++i) cur[i] = pairs[i].eigenvalue;
    if (!prev.empty()) {
      bool converged = true;
      for (int i = 0; i < k; ++i)
        if (std::abs(cur[i] - prev[i]) > opts.rel_tol * std::max(1.0, std::abs(cur[i])))
          converged = false;
      if (converged) return pairs;
    }
    prev = cur;
  }
  std::string msg = "eigen_solve: no convergence at max resolution; last estimates:";
  for (double v : prev) msg += " " + std::to_string(v);
  if (!last_err.empty()) msg += " (" + last_err + ")";
  throw NumericError(msg);
}

BvpSolution bvp_solve(const RadialOperator& op,
                      const std::function<double(double)>& rhs,
                      std::pair<double, double> boundary,
                      const std::optional<Profile>& orthogonality,
                      const std::optional<Profile>& fredholm_direction,
                      int n) {
  if (orthogonality.has_value() != fredholm_direction.has_value())
    throw PreconditionError(
        "bvp_solve: orthogonality and fredholm_direction go together");
  const bool constrained = orthogonality.has_value();

  if (!constrained) {
    // Fail fast when the shift sits on the spectrum (Fredholm alternative).
    auto low = eigen_solve_at(op, 4, std::min(n, 96));
    for (const auto& ep : low)
      if (std::abs(ep.eigenvalue - op.shift) < 1e-6 * std::max(1.0, std::abs(op.shift)))
        throw SolvabilityError(
            "bvp_solve: shift " + std::to_string(op.shift) +
            " coincides with eigenvalue " + std::to_string(ep.eigenvalue) +
            "; supply orthogonality + fredholm_direction");
  }

  ChebGrid g(n, op.band.theta_lo, op.band.theta_hi);
  const int m = g.size();
  const int dd = op.band.d.d;
  Eigen::MatrixXd L = operator_matrix(op, g);
  const int dim = m + (constrained ? 1 : 0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);

  A.block(0, 0, m, m) = L - op.shift * Eigen::MatrixXd::Identity(m, m);
  for (int i = 1; i + 1 < m; ++i) b(i) = rhs(g.nodes(i));
  // Dirichlet rows.
  A.row(0).setZero();
  A(0, 0) = 1.0;
  b(0) = boundary.first;
  A.row(m - 1).setZero();
  A(m - 1, m - 1) = 1.0;
  b(m - 1) = boundary.second;

  if (constrained) {
    for (int i = 1; i + 1 < m; ++i)
      A(i, m) = fredholm_direction->eval(g.nodes(i));  // +t * direction on LHS
    for (int j = 0; j < m; ++j) {
      const double w = std::pow(std::sin(g.nodes(j)), dd - 2);
      A(m, j) = g.quad_w(j) * w * orthogonality->eval(g.nodes(j));
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw SolvabilityError("bvp_solve: singular collocation system");
  Eigen::VectorXd sol = lu.solve(b);
  // iterative refinement: the collocation matrix conditioning grows like n^4
  for (int it = 0; it < 2; ++it) {
    const Eigen::VectorXd r = b - A * sol;
    sol += lu.solve(r);
  }

  Profile u(op.band, Eigen::VectorXd(sol.head(m)));
  const double t = constrained ? sol(m) : 0.0;
  const auto eff_rhs = [&](double th) {
    double v = rhs(th);
    if (constrained) v -= t * fredholm_direction->eval(th);
    return v;
  };
  const double res = ode_residual(op, u, op.shift, eff_rhs);
  if (res > 1e-8 * std::max(1.0, u.weighted_norm()) * residual_floor_factor(n))
    throw NumericError("bvp_solve: residual " + std::to_string(res));

  if (constrained) {
    double ip = 0.0;
    for (int j = 0; j < m; ++j) {
      const double w = std::pow(std::sin(g.nodes(j)), dd - 2);
      ip += g.quad_w(j) * w * orthogonality->eval(g.nodes(j)) * u.values(j);
    }
    if (std::abs(ip) > 1e-10 * std::max(1.0, u.weighted_norm()))
      throw NumericError("bvp_solve: orthogonality violated: " + std::to_string(ip));
  }
  // multiplier convention: (L - shift) u = rhs - t * fredholm_direction
  return {std::move(u), t, res};
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

// RK4 integration of f'' = -(d-2) cot(theta) f' + (m/sin^2 - lambda) f from
// theta_lo with f=0, f'=1; returns f(theta_hi).
double shoot_endval(const Band& band, double m, double lambda, int steps) {
  const int dd = band.d.d;
  const double a = band.theta_lo, b = band.theta_hi;
  const double h = (b - a) / steps;
  auto deriv = [&](double th, double f, double fp, double& df, double& dfp) {
    df = fp;
    dfp = -(dd - 2) / std::tan(th) * fp + (m / (std::sin(th) * std::sin(th)) - lambda) * f;
  };
  double f = 0.0, fp = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double th = a + i * h;
    double k1f, k1p, k2f, k2p, k3f, k3p, k4f, k4p;
    deriv(th, f, fp, k1f, k1p);
    deriv(th + h / 2, f + h / 2 * k1f, fp + h / 2 * k1p, k2f, k2p);
    deriv(th + h / 2, f + h / 2 * k2f, fp + h / 2 * k2p, k3f, k3p);
    deriv(th + h, f + h * k3f, fp + h * k3p, k4f, k4p);
    f += h / 6 * (k1f + 2 * k2f + 2 * k3f + k4f);
    fp += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
  }
  return f;
}

}  // namespace

double shoot_lambda1(const Band& band, double m) {
  if (band.degenerate()) throw DomainError("shoot_lambda1: degenerate band");
  const int steps = 3000;
  auto g = [&](double lam) { return shoot_endval(band, m, lam, steps); };

  // For lambda below lambda_1 the solution has no interior zero, so g > 0.
  // Scan upward until the endpoint value flips; the scan step is far below
  // the gap lambda_2 - lambda_1 on these bands.
  double lo = 1e-9, glo = g(lo);
  if (glo <= 0.0) throw NumericError("shoot_lambda1: unexpected sign at lambda=0");
  double hi = lo, ghi = glo;
  const double step0 = 2.0;
  for (int it = 0; it < 100000; ++it) {
    const double step = std::max(step0, 0.05 * hi);
    hi += step;
    ghi = g(hi);
    if (ghi < 0.0) break;
    lo = hi;
    glo = ghi;
  }
  if (ghi >= 0.0) throw NumericError("shoot_lambda1: bracket failure");

  // Bisection with a secant refinement; stop on bracket width 1e-12 relative.
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    // secant proposal, kept if it lands strictly inside
    const double sec = lo - glo * (hi - lo) / (ghi - glo);
    if (sec > lo + 0.01 * (hi - lo) && sec < hi - 0.01 * (hi - lo)) mid = sec;
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

}  // namespace epilab::sturm
