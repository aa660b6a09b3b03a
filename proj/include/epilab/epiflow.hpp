#pragma once

// Constructive epiperimetric machinery: trace decomposition, slice-by-slice
// competitor with the eta schedules, Weiss-energy slicing, high-mode harmonic
// competitor, finite-dimensional Lyapunov-Schmidt reduction, unit-speed
// gradient flow with Lojasiewicz fitting, and the end-to-end inequality check
// for axisymmetric traces.
//
// Scope: traces are axisymmetric (band shifts + m=0 radial high modes). In
// this sector the De Silva-Jerison kernel (l=1 odd) is absent, so the
// integrable (gamma = 0) path is exact.

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "epilab/cone.hpp"
#include "epilab/core.hpp"
#include "epilab/sturm.hpp"

namespace epilab::epiflow {

// ---------------------------------------------------------------------------
// Traces and competitors

/// Axisymmetric spherical trace near the cone: coefficient kappa of the first
/// eigenfunction of its own (shifted) band, outward boundary offsets, and
/// higher Dirichlet-mode coefficients (eigenindex j >= 2, m = 0) on that band.
struct Trace {
  double kappa = 0.0;
  double a_lo = 0.0;  // outward offset of the lower-colatitude circle
  double a_hi = 0.0;  // outward offset of the upper-colatitude circle
  std::vector<std::pair<int, double>> high_modes;

  Band band(const cone::ConeModel& c) const;
};

/// Smallness gate of the inequality's hypothesis; mode-truncated traces make
/// the norm equivalence automatic, so the gate is on plain coefficients.
struct Gate {
  double max_shift = 0.05;      // |a_lo|, |a_hi|
  double max_kappa_dev = 0.08;  // |kappa - kappa0| / kappa0
  double max_high = 0.05;       // sqrt(sum c_j^2)
};

void check_gate(const Trace& t, const cone::ConeModel& c, const Gate& g = {});

struct SliceData {
  double r = 0.0;
  Trace slice;             // kappa_r, offsets of Omega_{g_r}, scaled high modes
  double lambda1 = 0.0;    // first Dirichlet eigenvalue of the slice band
  double measure = 0.0;    // H^{d-1}(Omega_{g_r})
  double e_total = 0.0;    // E(v_r)
  double e_quadratic = 0.0;
  double deriv_term = 0.0;  // int (d_r V)^2 sin^{d-2} d theta
};

struct Competitor {
  double rho = 0.25;
  double eps = 0.0;
  std::vector<double> r_grid;
  std::vector<SliceData> slices;
  std::vector<std::pair<int, int>> panels;        // slice index ranges per r-panel
  std::vector<std::array<double, 3>> eta_values;  // eta1, eta2, eta3 per node
  std::vector<double> alpha;                      // homogeneity exponents at r=1
  double w_h = 0.0;  // W(competitor), slice-energy form of the slicing identity
  double w_h_direct = 0.0;  // W(competitor), direct gradient form
  double w_z = 0.0;         // W(one-homogeneous extension)
  double w_b = 0.0;         // W(cone)

  /// Residual of the slicing identity between the two independently
  /// assembled forms of W(competitor).
  double slicing_residual() const;
};

/// Radial cutoff psi_rho: 0 on [0,rho], harmonic-in-the-annulus profile on
/// [rho, 2 rho], 1 on [2 rho, 1].
double psi_rho(double r, double rho, Dim d);
double psi_rho_deriv(double r, double rho, Dim d);

/// Slice-by-slice competitor: first-mode part flows along the eta schedules
/// (eta1 shrinks the positive direction, eta2 == 1 freezes the negative one,
/// eta3 drives kappa_r^2 = kappa0^2 + eta3 s0^3), high modes ride the slice
/// band scaled by psi_rho(r) r^{alpha_j - 1}. Slices are exactly conical on
/// [0, rho/2].
Competitor build_competitor(const Trace& trace, const cone::ConeModel& c,
                            double eps, double rho = 0.25, int jobs = 1,
                            const Gate& gate = {});

/// Weiss energy of an axisymmetric field r -> Trace via the slicing identity.
double weiss_energy(const std::function<Trace(double)>& field,
                    const cone::ConeModel& c, int n_r = 96, int jobs = 1);

/// Weiss energy of the one-homogeneous extension of a single trace, E(c)/d.
double weiss_one_homogeneous(const Trace& t, const cone::ConeModel& c);

/// Partial Weiss energy W(h, r) of a competitor on B_r, evaluated at panel
/// boundaries and grid nodes by cumulative quadrature.
double weiss_at(const Competitor& comp, const cone::ConeModel& c, double r);

struct SlicingCheck {
  double lhs = 0.0;  // W(w) - (1 - eps) W(z_v)
  double rhs = 0.0;  // slice-energy form + reparametrization cost
  double residual_rel = 0.0;
};

/// Both sides of the slicing identity for w(r,.) = r v_{eta(r)}; the two
/// sides are assembled from different integrands (direct gradient form vs the
/// integrated-by-parts slice-energy form), so their agreement is a genuine
/// consistency check.
SlicingCheck slicing_weiss(const std::function<Trace(double)>& v_of_t,
                           const std::function<double(double)>& eta, double eps,
                           const cone::ConeModel& c, int n_r = 96, int jobs = 1);

// ---------------------------------------------------------------------------
// High-mode harmonic competitor on a fixed band (modes given by their
// Dirichlet eigenvalue and coefficient; all lambda_j > d-1).

struct HighModeEnergies {
  double w0_cutoff = 0.0;    // W_0(psi_rho h_g)
  double w0_homogeneous = 0.0;  // W_0(z_g)
  double w0_harmonic = 0.0;  // W_0(h_g), no cutoff
};

HighModeEnergies high_mode_competitor(
    const std::vector<std::pair<double, double>>& lambda_coeff, Dim d, double rho);

/// Analytic per-mode ratio W_0(h_g)/W_0(z_g) = 1 - (alpha-1)/(d+alpha-1).
double harmonic_ratio_analytic(double lambda, Dim d);

// ---------------------------------------------------------------------------
// Finite-dimensional Lyapunov-Schmidt reduction and unit-speed descent

using EnergyFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct ReducedEnergy {
  int full_dim = 0;
  Eigen::MatrixXd basis_kernel;      // columns span the degenerate subspace
  Eigen::MatrixXd basis_complement;  // orthonormal complement
  EnergyFn g_full;
  GradientFn grad_full;

  /// Complement correction Upsilon(mu) solving P_perp grad G(K mu + Upsilon) = 0.
  Eigen::VectorXd upsilon(const Eigen::VectorXd& mu) const;
  double value(const Eigen::VectorXd& mu) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& mu) const;
};

ReducedEnergy ls_reduce(EnergyFn g_full, int dim,
                        const std::vector<Eigen::VectorXd>& kernel_basis,
                        std::optional<GradientFn> grad = std::nullopt);

struct FlowState {
  Eigen::VectorXd state;
  double g_value = 0.0;
  double grad_norm = 0.0;
  double time = 0.0;
};

struct FlowTrace {
  std::vector<FlowState> states;
  bool frozen = false;  // hit a critical point before t_end
};

/// Unit-speed descent x' = -grad G / |grad G|, frozen where the gradient
/// vanishes; g_value is nonincreasing along the trace and dG/dt = -|grad G|.
FlowTrace gradient_flow(const EnergyFn& g, const GradientFn& grad,
                        const Eigen::VectorXd& start, double t_end,
                        double record_dt = 1e-3);

struct LojFit {
  double gamma = 0.0;
  double c = 0.0;
  double residual = 0.0;  // rms residual of the log-log fit
};

/// Least-squares fit of log|grad G| = log C + (1-gamma) log G along a trace.
LojFit lojasiewicz_fit(const FlowTrace& trace);

// ---------------------------------------------------------------------------
// End-to-end verification

struct EpiReport {
  double w_z = 0.0;
  double w_h = 0.0;
  double w_b = 0.0;
  double epsilon_hat = 0.0;  // 1 - (W(h)-W(b)) / (W(z)-W(b)); NaN when trivial
  std::optional<double> gamma_fit;  // absent on the gamma = 0 path
  bool trivial = false;             // W(z) <= W(b): inequality holds for free
  double eps_used = 0.0;
  double rho_used = 0.0;
};

struct EpiOptions {
  std::vector<double> rhos = {0.25, 0.125, 0.0625};
  double eps_floor = 1e-8;
  int jobs = 1;
  Gate gate;
};

EpiReport verify_epi(const Trace& trace, const cone::ConeModel& c,
                     const EpiOptions& opts = {});

}  // namespace epilab::epiflow
