// Command-line surface tying the pipeline together for scripted and CI use.
//
// Exit codes: 0 pass, 1 verification failed, 2 numeric failure, 64 usage.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "epilab/cone.hpp"
#include "epilab/core.hpp"
#include "epilab/decay.hpp"
#include "epilab/epiflow.hpp"
#include "epilab/integrability.hpp"
#include "epilab/report.hpp"
#include "epilab/secondvar.hpp"

namespace el = epilab;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailed = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitUsage = 64;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
  }
};

void emit(json& j, const Timer& timer, const std::string& out_path) {
  j["meta"]["wall_clock_ms"] = timer.ms();
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    el::report::write_text(out_path, text);
  }
}

int run_cone(int dim, const std::string& out, bool check, bool legendre_check,
             int jobs) {
  Timer timer;
  (void)jobs;
  json j;
  j["meta"] = el::report::make_meta(
      "cone", {{"dim", std::to_string(dim)}, {"check", check ? "true" : "false"}},
      {{"theta0_tol", 1e-12}, {"eigen_rel_tol", 1e-10}});
  el::cone::ConeModel c = el::cone::build_cone(el::Dim(dim));
  j["cone"] = el::report::to_json(c);
  bool all = true;
  if (check) {
    json checks;
    checks["lambda1_equals_d_minus_1"] =
        std::abs(c.lambda1 - (dim - 1)) <= 1e-9 * (dim - 1);
    checks["c_int_identity"] =
        std::abs(c.c_int - c.perim / ((dim - 1) * c.kappa0)) <= 1e-7 * c.c_int;
    checks["weiss_density"] = c.weiss_density == c.m0 / dim;
    checks["m0_over_kappa0_sq_ge_d_minus_1"] =
        c.m0 / (c.kappa0 * c.kappa0) >= dim - 1;
    checks["spectral_gap"] = c.lambda2 > dim - 1;
    j["checks"] = checks;
    for (const auto& [k, v] : j["checks"].items()) all = all && v.get<bool>();
  }
  if (legendre_check) {
    const double root = el::cone::legendre_root_for_dimension(el::Dim(dim));
    const bool match = std::abs(root - std::sin(c.theta0)) < 1e-6;
    j["legendre_check"] = {{"kind", dim % 2 == 1 ? "Q" : "P"},
                           {"root", root},
                           {"sin_theta0", std::sin(c.theta0)},
                           {"pass", match}};
    all = all && match;
  }
  emit(j, timer, out);
  return all ? kExitOk : kExitVerificationFailed;
}

int run_spectrum(int dim, int ell_max, const std::string& csv,
                 const std::string& out, int jobs) {
  Timer timer;
  json j;
  j["meta"] = el::report::make_meta("spectrum",
                                    {{"dim", std::to_string(dim)},
                                     {"ell_max", std::to_string(ell_max)},
                                     {"jobs", std::to_string(jobs)}},
                                    {{"kernel_tol", el::secondvar::kernel_tolerance()},
                                     {"closed_form_rel_tol", 1e-6}});
  el::cone::ConeModel c = el::cone::build_cone(el::Dim(dim));
  auto entries = el::secondvar::spectrum(c, ell_max, jobs);
  j["spectrum"] = el::report::to_json(entries);
  if (!csv.empty()) el::report::write_text(csv, el::report::spectrum_csv(entries));
  emit(j, timer, out);
  return kExitOk;
}

int run_integrability(int dim_lo, int dim_hi, int ell_max, bool certify_d7,
                      bool asymptotic, const std::string& out, int jobs) {
  Timer timer;
  json j;
  j["meta"] = el::report::make_meta(
      "integrability",
      {{"dim_lo", std::to_string(dim_lo)},
       {"dim_hi", std::to_string(dim_hi)},
       {"ell_max", std::to_string(ell_max)},
       {"certify_d7", certify_d7 ? "true" : "false"},
       {"asymptotic", asymptotic ? "true" : "false"},
       {"jobs", std::to_string(jobs)}},
      {{"kernel_tol", el::secondvar::kernel_tolerance()}, {"zero_mean_tol", 1e-9}});

  bool ok = true;
  json verdicts = json::array();
  std::vector<json> rows(dim_hi - dim_lo + 1);
  el::parallel_for(dim_hi - dim_lo + 1, jobs, [&](std::int64_t i) {
    const int dd = dim_lo + static_cast<int>(i);
    el::cone::ConeModel c = el::cone::build_cone(el::Dim(dd));
    auto v = el::integrability::classify(c, ell_max, 1);
    json row = el::report::to_json(v);
    if (asymptotic && dd >= 21)
      row["asymptotic"] = el::report::to_json(el::integrability::asymptotic_check(c));
    rows[i] = std::move(row);
  });
  for (auto& row : rows) {
    ok = ok && row["integrable"].get<bool>();
    if (row.contains("asymptotic")) ok = ok && row["asymptotic"]["pass"].get<bool>();
    verdicts.push_back(std::move(row));
  }
  j["verdicts"] = verdicts;

  if (certify_d7) {
    auto chain = el::integrability::verify_d7();
    j["d7_certificate"] = el::report::to_json(chain);
    ok = ok && chain.pass;
    // human-readable table alongside the JSON
    if (!out.empty()) {
      std::printf("%-46s %12s %10s %2s %10s  %s\n", "step", "computed", "rounded",
                  "", "reference", "status");
      for (const auto& s : chain.steps)
        std::printf("%-46s %12.8f %10.4f %2s %10.4f  %s\n", s.name.c_str(),
                    s.computed, s.rounded, s.comparison.c_str(), s.reference_value,
                    s.strict_pass ? "pass" : (s.pass ? "pass (printed precision)"
                                                     : "FAIL"));
      std::printf("direct zeta_1^+ eigenvalue  %.8f   variational lower bound %.8f\n",
                  chain.direct_zeta1plus, chain.variational_lower_bound);
      std::printf("recomputed int phi0 / sqrt(H^5) = %.8f -> 27 c^2 = %.6f\n",
                  chain.recomputed_int_phi0, chain.recomputed_final_product);
    }
  }
  j["pass"] = ok;
  emit(j, timer, out);
  return ok ? kExitOk : kExitVerificationFailed;
}

el::epiflow::Trace trace_from_json(const json& t) {
  el::epiflow::Trace tr;
  tr.kappa = t.value("kappa", 0.0);
  tr.a_lo = t.value("a_lo", 0.0);
  tr.a_hi = t.value("a_hi", 0.0);
  if (t.contains("high_modes"))
    for (const auto& hm : t["high_modes"])
      tr.high_modes.emplace_back(hm[0].get<int>(), hm[1].get<double>());
  return tr;
}

int run_epi(const std::string& scenario_path, const std::string& out,
            const std::string& csv, const std::string& slices_csv, int jobs) {
  Timer timer;
  std::ifstream in(scenario_path);
  if (!in) throw el::DomainError("epi: cannot open scenario " + scenario_path);
  json scenario = json::parse(in);

  const int dim = scenario.at("dim").get<int>();
  el::cone::ConeModel c = el::cone::build_cone(el::Dim(dim));
  el::epiflow::EpiOptions opts;
  opts.jobs = jobs;
  if (scenario.contains("gate")) {
    opts.gate.max_shift = scenario["gate"].value("max_shift", opts.gate.max_shift);
    opts.gate.max_kappa_dev =
        scenario["gate"].value("max_kappa_dev", opts.gate.max_kappa_dev);
    opts.gate.max_high = scenario["gate"].value("max_high", opts.gate.max_high);
  }

  std::vector<el::epiflow::Trace> traces;
  if (scenario.contains("traces"))
    for (const auto& t : scenario["traces"]) traces.push_back(trace_from_json(t));
  if (scenario.contains("random")) {
    const auto& r = scenario["random"];
    const int count = r.value("count", 10);
    std::mt19937_64 rng(r.value("seed", 1U));
    const double shift = r.value("shift_scale", 0.02);
    const double kscale = r.value("kappa_scale", 0.02);
    const double hscale = r.value("high_scale", 0.02);
    std::vector<int> modes = r.value("modes", std::vector<int>{2, 3});
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    while (static_cast<int>(traces.size()) < count) {
      el::epiflow::Trace t;
      t.kappa = c.kappa0 * (1.0 + kscale * u(rng));
      t.a_lo = shift * u(rng);
      t.a_hi = shift * u(rng);
      for (int m : modes) t.high_modes.emplace_back(m, hscale * u(rng));
      // keep only nontrivial traces (W(z) > W(b)), so epsilon_hat is defined
      if (el::epiflow::weiss_one_homogeneous(t, c) - c.weiss_density > 1e-8)
        traces.push_back(t);
    }
  }
  if (traces.empty()) throw el::DomainError("epi: scenario provided no traces");

  json j;
  j["meta"] = el::report::make_meta(
      "epi", {{"scenario", scenario_path}, {"jobs", std::to_string(jobs)}},
      {{"epsilon_hat_min", 1e-4}});
  j["scenario_echo"] = scenario;

  bool ok = true;
  double min_eps_hat = std::numeric_limits<double>::infinity();
  json results = json::array();
  for (const auto& t : traces) {
    auto rep = el::epiflow::verify_epi(t, c, opts);
    json row = el::report::to_json(rep);
    row["trace"] = {{"kappa", t.kappa}, {"a_lo", t.a_lo}, {"a_hi", t.a_hi}};
    results.push_back(row);
    if (!rep.trivial) {
      ok = ok && rep.epsilon_hat >= 1e-4;
      min_eps_hat = std::min(min_eps_hat, rep.epsilon_hat);
    }
  }
  j["results"] = results;
  j["min_epsilon_hat"] = std::isfinite(min_eps_hat) ? json(min_eps_hat) : json(nullptr);
  j["pass"] = ok;

  if (!csv.empty()) {
    std::ostringstream os;
    os << "kappa,a_lo,a_hi,w_z,w_h,w_b,epsilon_hat,trivial,eps_used,rho_used\n";
    os.precision(17);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto& r = results[i];
      os << traces[i].kappa << ',' << traces[i].a_lo << ',' << traces[i].a_hi << ','
         << r["w_z"].get<double>() << ',' << r["w_h"].get<double>() << ','
         << r["w_b"].get<double>() << ','
         << (r["epsilon_hat"].is_null() ? "" : r["epsilon_hat"].dump()) << ','
         << (r["trivial"].get<bool>() ? 1 : 0) << ',' << r["eps_used"].get<double>()
         << ',' << r["rho_used"].get<double>() << '\n';
    }
    el::report::write_text(csv, os.str());
  }
  if (!slices_csv.empty() && !traces.empty()) {
    // plot data: r against slice energy for the first trace's competitor
    auto comp = el::epiflow::build_competitor(traces[0], c, 1.0 / (2 * (dim + 1)),
                                              0.25, jobs, opts.gate);
    el::report::write_text(slices_csv, el::report::competitor_csv(comp));
  }
  emit(j, timer, out);
  return ok ? kExitOk : kExitVerificationFailed;
}

int run_flow(const std::string& energy, double x0, double y0, double t_end,
             double record_dt, const std::string& csv, const std::string& out) {
  Timer timer;
  json j;
  j["meta"] = el::report::make_meta("flow",
                                    {{"energy", energy},
                                     {"x0", std::to_string(x0)},
                                     {"y0", std::to_string(y0)},
                                     {"t_end", std::to_string(t_end)}},
                                    {{"step_tol", 1e-10}, {"freeze_tol", 1e-9}});

  el::epiflow::FlowTrace trace;
  if (energy == "x2") {
    auto g = [](const Eigen::VectorXd& x) { return x(0) * x(0); };
    auto gr = [](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, 2 * x(0)).eval();
    };
    Eigen::VectorXd start(1);
    start << x0;
    trace = el::epiflow::gradient_flow(g, gr, start, t_end, record_dt);
  } else if (energy == "x4") {
    auto g = [](const Eigen::VectorXd& x) { return std::pow(x(0), 4); };
    auto gr = [](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, 4 * std::pow(x(0), 3)).eval();
    };
    Eigen::VectorXd start(1);
    start << x0;
    trace = el::epiflow::gradient_flow(g, gr, start, t_end, record_dt);
  } else if (energy == "ls_toy") {
    // (y - x^2)^2 + x^4 reduced over the kernel direction x, then descended
    auto g = [](const Eigen::VectorXd& v) {
      const double x = v(0), y = v(1);
      return (y - x * x) * (y - x * x) + std::pow(x, 4);
    };
    auto gr = [](const Eigen::VectorXd& v) {
      const double x = v(0), y = v(1);
      Eigen::VectorXd out(2);
      out << -4 * x * (y - x * x) + 4 * x * x * x, 2 * (y - x * x);
      return out;
    };
    Eigen::VectorXd kx(2);
    kx << 1, 0;
    auto red = el::epiflow::ls_reduce(g, 2, {kx}, gr);
    auto gred = [red](const Eigen::VectorXd& mu) { return red.value(mu); };
    auto grred = [red](const Eigen::VectorXd& mu) { return red.gradient(mu); };
    Eigen::VectorXd start(1);
    start << x0;
    trace = el::epiflow::gradient_flow(gred, grred, start, t_end, record_dt);
  } else {
    throw el::DomainError("flow: unknown energy '" + energy + "' (x2|x4|ls_toy)");
  }

  json summary;
  summary["steps"] = trace.states.size();
  summary["frozen"] = trace.frozen;
  summary["g_final"] = trace.states.back().g_value;
  try {
    auto fit = el::epiflow::lojasiewicz_fit(trace);
    summary["gamma_fit"] = fit.gamma;
    summary["fit_c"] = fit.c;
    summary["fit_residual"] = fit.residual;
  } catch (const el::NumericError& e) {
    summary["gamma_fit"] = nullptr;
    summary["fit_error"] = e.what();
  }
  j["flow"] = summary;
  if (!csv.empty()) el::report::write_text(csv, el::report::flow_csv(trace));
  emit(j, timer, out);
  return kExitOk;
}

int run_decay(double gamma, double eps, int dim, double w_start, double r0,
              const std::string& csv, const std::string& out) {
  Timer timer;
  json j;
  j["meta"] = el::report::make_meta("decay",
                                    {{"gamma", std::to_string(gamma)},
                                     {"eps", std::to_string(eps)},
                                     {"dim", std::to_string(dim)},
                                     {"w_start", std::to_string(w_start)},
                                     {"r0", std::to_string(r0)}},
                                    {{"ode_rel_tol", 1e-6}});
  el::decay::DecayInput input(eps, gamma, el::Dim(dim), w_start, r0);
  auto curve = el::decay::integrate_decay(input);
  j["curve"] = el::report::to_json(curve);

  json summary;
  if (gamma == 0.0) {
    // fitted Hoelder exponent of the integrated curve
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
      if (curve.ode_values[i] <= 0) continue;
      const double x = std::log(curve.radii[i] / r0), y = std::log(curve.ode_values[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    summary["fitted_exponent"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    summary["closed_form_exponent"] = dim * eps / (1.0 - eps);
  } else {
    auto fit = el::decay::dyadic_l2_modulus(curve, gamma);
    summary["modulus_exponent"] = fit.fitted_exponent;
    summary["modulus_exponent_expected"] = (gamma - 1.0) / gamma;
    summary["modulus_c"] = fit.fitted_c;
  }
  j["summary"] = summary;
  if (!csv.empty()) el::report::write_text(csv, el::report::decay_csv(curve));
  emit(j, timer, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for singular cones of the one-phase "
               "Bernoulli problem"};
  app.set_config("--config", "", "flat key=value config file; flags override");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  int jobs = 1;
  app.add_option("--jobs", jobs, "parallel jobs for sweeps (1 = serial reference)");

  auto* cone_cmd = app.add_subcommand("cone", "build a De Silva-Jerison cone model");
  int cone_dim = 7;
  std::string cone_out;
  bool cone_check = false, cone_legendre = false;
  cone_cmd->add_option("--dim", cone_dim, "ambient dimension (>= 3)")->required();
  cone_cmd->add_option("--out", cone_out, "output JSON path");
  cone_cmd->add_flag("--check", cone_check, "verify the cone invariants");
  cone_cmd->add_flag("--legendre-check", cone_legendre,
                     "cross-check theta0 against the closed Legendre form");

  auto* spec_cmd = app.add_subcommand("spectrum", "second-variation spectrum");
  int spec_dim = 7, spec_ell = 4;
  std::string spec_csv, spec_out;
  spec_cmd->add_option("--dim", spec_dim)->required();
  spec_cmd->add_option("--ell-max", spec_ell);
  spec_cmd->add_option("--csv", spec_csv, "spectrum table CSV path");
  spec_cmd->add_option("--out", spec_out, "output JSON path");

  auto* integ_cmd = app.add_subcommand("integrability", "index/kernel certificates");
  int integ_dim = 7, integ_hi = -1, integ_ell = 4;
  bool certify = false, asym = false;
  std::string integ_out;
  integ_cmd->add_option("--dim", integ_dim, "dimension (or range start)")->required();
  integ_cmd->add_option("--dim-hi", integ_hi, "range end (inclusive)");
  integ_cmd->add_option("--ell-max", integ_ell);
  integ_cmd->add_flag("--certify-d7", certify, "run the d=7 bound chain");
  integ_cmd->add_flag("--asymptotic", asym, "run the d>=21 asymptotic checks");
  integ_cmd->add_option("--out", integ_out, "output JSON path");

  auto* epi_cmd = app.add_subcommand("epi", "epiperimetric verification");
  std::string epi_scenario, epi_out, epi_csv, epi_slices_csv;
  epi_cmd->add_option("--scenario", epi_scenario, "scenario JSON")->required();
  epi_cmd->add_option("--out", epi_out, "output JSON path");
  epi_cmd->add_option("--csv", epi_csv, "per-trace results CSV");
  epi_cmd->add_option("--slices-csv", epi_slices_csv,
                      "plot data (r vs slice energy) for the first trace");

  auto* flow_cmd = app.add_subcommand("flow", "unit-speed descent on synthetic energies");
  std::string flow_energy = "x2", flow_csv, flow_out;
  double flow_x0 = 1.0, flow_y0 = 0.0, flow_tend = 0.9, flow_dt = 1e-3;
  flow_cmd->add_option("--energy", flow_energy, "x2|x4|ls_toy");
  flow_cmd->add_option("--x0", flow_x0);
  flow_cmd->add_option("--y0", flow_y0);
  flow_cmd->add_option("--t-end", flow_tend);
  flow_cmd->add_option("--record-dt", flow_dt);
  flow_cmd->add_option("--csv", flow_csv, "trace CSV path");
  flow_cmd->add_option("--out", flow_out, "output JSON path");

  auto* decay_cmd = app.add_subcommand("decay", "decay-rate integrator");
  double dk_gamma = 0.0, dk_eps = 0.05, dk_w = 1.0, dk_r0 = 1.0;
  int dk_dim = 7;
  std::string dk_csv, dk_out;
  decay_cmd->add_option("--gamma", dk_gamma);
  decay_cmd->add_option("--eps", dk_eps);
  decay_cmd->add_option("--dim", dk_dim);
  decay_cmd->add_option("--w-start", dk_w);
  decay_cmd->add_option("--r0", dk_r0);
  decay_cmd->add_option("--csv", dk_csv, "curve CSV path");
  decay_cmd->add_option("--out", dk_out, "output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*cone_cmd)
      return run_cone(cone_dim, cone_out, cone_check, cone_legendre, jobs);
    if (*spec_cmd) return run_spectrum(spec_dim, spec_ell, spec_csv, spec_out, jobs);
    if (*integ_cmd)
      return run_integrability(integ_dim, integ_hi < 0 ? integ_dim : integ_hi,
                               integ_ell, certify, asym, integ_out, jobs);
    if (*epi_cmd)
      return run_epi(epi_scenario, epi_out, epi_csv, epi_slices_csv, jobs);
    if (*flow_cmd)
      return run_flow(flow_energy, flow_x0, flow_y0, flow_tend, flow_dt, flow_csv,
                      flow_out);
    if (*decay_cmd)
      return run_decay(dk_gamma, dk_eps, dk_dim, dk_w, dk_r0, dk_csv, dk_out);
  } catch (const el::DomainError& e) {
    std::cerr << "{\"error\":\"domain\",\"what\":\"" << e.what() << "\"}\n";
    return kExitUsage;
  } catch (const el::PreconditionError& e) {
    std::cerr << "{\"error\":\"precondition\",\"what\":\"" << e.what() << "\"}\n";
    return kExitUsage;
  } catch (const el::UnsupportedInputError& e) {
    std::cerr << "{\"error\":\"unsupported\",\"what\":\"" << e.what() << "\"}\n";
    return kExitUsage;
  } catch (const el::SolvabilityError& e) {
    std::cerr << "{\"error\":\"solvability\",\"what\":\"" << e.what() << "\"}\n";
    return kExitNumeric;
  } catch (const el::NumericError& e) {
    std::cerr << "{\"error\":\"numeric\",\"what\":\"" << e.what() << "\"}\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"internal\",\"what\":\"" << e.what() << "\"}\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
