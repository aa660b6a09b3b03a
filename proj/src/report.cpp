#include "epilab/report.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace epilab::report {

using nlohmann::json;

json make_meta(const std::string& command,
               const std::map<std::string, std::string>& config,
               const std::map<std::string, double>& tolerances) {
  json j;
  j["schema"] = kSchemaVersion;
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = config;
  j["tolerances"] = tolerances;
  j["wall_clock_ms"] = 0.0;
  return j;
}

json to_json(const cone::ConeModel& c) {
  json j;
  j["d"] = c.d.d;
  j["theta0"] = c.theta0;
  j["sin_theta0"] = std::sin(c.theta0);
  j["kappa0"] = c.kappa0;
  j["lambda1"] = c.lambda1;
  j["lambda2"] = c.lambda2;
  j["m0"] = c.m0;
  j["perimeter"] = c.perim;
  j["weiss_density"] = c.weiss_density;
  j["c_int"] = c.c_int;
  j["minimizing"] = c.minimizing;
  j["profile_nodes"] = std::vector<double>(c.profile0.nodes.data(),
                                           c.profile0.nodes.data() + c.profile0.size());
  j["profile_values"] = std::vector<double>(
      c.profile0.values.data(), c.profile0.values.data() + c.profile0.size());
  return j;
}

namespace {

const char* classification_name(secondvar::Classification c) {
  switch (c) {
    case secondvar::Classification::Negative: return "negative";
    case secondvar::Classification::Kernel: return "kernel";
    case secondvar::Classification::Positive: return "positive";
  }
  return "?";
}

}  // namespace

json to_json(const secondvar::SecondVarEntry& e) {
  json j;
  j["ell"] = e.mode.ell;
  j["parity"] = e.mode.parity == secondvar::Parity::Even ? "even" : "odd";
  j["multiplicity"] = e.mult;
  j["eigenvalue"] = e.value;
  j["classification"] = classification_name(e.classification);
  if (e.closed_form) {
    j["closed_form"] = *e.closed_form;
    j["closed_form_value"] = e.closed_form_value;
    j["residual"] = e.residual;
  }
  return j;
}

json to_json(const std::vector<secondvar::SecondVarEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) arr.push_back(to_json(e));
  return arr;
}

json to_json(const integrability::IntegrabilityVerdict& v) {
  json j;
  j["d"] = v.d;
  j["index_count"] = v.index_count;
  j["kernel_dim"] = v.kernel_dim;
  j["kernel_is_rotations"] = v.kernel_is_rotations;
  j["negative_modes_integrate_to_zero"] = v.negative_modes_integrate_to_zero;
  j["zeta1plus_positive"] = v.zeta1plus_positive;
  j["integrable"] = v.integrable;
  j["entries"] = to_json(v.entries);
  return j;
}

json to_json(const integrability::BoundChain& chain) {
  json j;
  json arr = json::array();
  for (const auto& s : chain.steps) {
    json st;
    st["name"] = s.name;
    st["comparison"] = s.comparison;
    st["reference_value"] = s.reference_value;
    st["computed"] = s.computed;
    st["rounded"] = s.rounded;
    st["rounding"] = std::string(1, s.rounding);
    st["strict_pass"] = s.strict_pass;
    st["pass"] = s.pass;
    if (!s.note.empty()) st["note"] = s.note;
    arr.push_back(st);
  }
  j["steps"] = arr;
  j["pass"] = chain.pass;
  j["direct_zeta1plus"] = chain.direct_zeta1plus;
  j["variational_lower_bound"] = chain.variational_lower_bound;
  j["recomputed_int_phi0"] = chain.recomputed_int_phi0;
  j["recomputed_square"] = chain.recomputed_square;
  j["recomputed_final_product"] = chain.recomputed_final_product;
  return j;
}

json to_json(const integrability::AsymptoticReport& rep) {
  json j;
  j["d"] = rep.d;
  j["theta0"] = rep.theta0;
  j["pass"] = rep.pass;
  json checks = json::array();
  for (const auto& ch : rep.checks) {
    json c;
    c["name"] = ch.name;
    c["pass"] = ch.pass;
    json comps = json::array();
    for (const auto& a : ch.comparisons) {
      json x;
      x["name"] = a.name;
      x["lhs"] = a.lhs;
      x["op"] = a.op;
      x["rhs"] = a.rhs;
      x["pass"] = a.pass;
      comps.push_back(x);
    }
    c["comparisons"] = comps;
    checks.push_back(c);
  }
  j["checks"] = checks;
  return j;
}

json to_json(const epiflow::EpiReport& rep) {
  json j;
  j["w_z"] = rep.w_z;
  j["w_h"] = rep.w_h;
  j["w_b"] = rep.w_b;
  j["trivial"] = rep.trivial;
  if (std::isfinite(rep.epsilon_hat)) j["epsilon_hat"] = rep.epsilon_hat;
  else j["epsilon_hat"] = nullptr;
  if (rep.gamma_fit) j["gamma_fit"] = *rep.gamma_fit;
  else j["gamma_fit"] = nullptr;
  j["eps_used"] = rep.eps_used;
  j["rho_used"] = rep.rho_used;
  return j;
}

json to_json(const decay::DecayCurve& curve) {
  json j;
  j["radii"] = curve.radii;
  j["w_values"] = curve.w_values;
  j["ode_values"] = curve.ode_values;
  j["l2_drift"] = curve.l2_drift;
  return j;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string spectrum_csv(const std::vector<secondvar::SecondVarEntry>& entries) {
  std::ostringstream os;
  os << "ell,parity,multiplicity,eigenvalue,classification,closed_form,residual\n";
  for (const auto& e : entries) {
    os << e.mode.ell << ','
       << (e.mode.parity == secondvar::Parity::Even ? "even" : "odd") << ','
       << e.mult << ',' << format_double(e.value) << ','
       << classification_name(e.classification) << ','
       << (e.closed_form ? *e.closed_form : "") << ','
       << (e.closed_form ? format_double(e.residual) : "") << '\n';
  }
  return os.str();
}

std::string competitor_csv(const epiflow::Competitor& comp) {
  std::ostringstream os;
  os << "r,kappa_r,a_lo,a_hi,lambda1,measure,e_total,deriv_term,eta1,eta2,eta3\n";
  for (std::size_t i = 0; i < comp.slices.size(); ++i) {
    const auto& s = comp.slices[i];
    os << format_double(s.r) << ',' << format_double(s.slice.kappa) << ','
       << format_double(s.slice.a_lo) << ',' << format_double(s.slice.a_hi) << ','
       << format_double(s.lambda1) << ',' << format_double(s.measure) << ','
       << format_double(s.e_total) << ',' << format_double(s.deriv_term) << ','
       << format_double(comp.eta_values[i][0]) << ','
       << format_double(comp.eta_values[i][1]) << ','
       << format_double(comp.eta_values[i][2]) << '\n';
  }
  return os.str();
}

std::string flow_csv(const epiflow::FlowTrace& trace) {
  std::ostringstream os;
  os << "t,g_value,grad_norm";
  const int dim = trace.states.empty() ? 0 : static_cast<int>(trace.states[0].state.size());
  for (int i = 0; i < dim; ++i) os << ",x" << i;
  os << '\n';
  for (const auto& st : trace.states) {
    os << format_double(st.time) << ',' << format_double(st.g_value) << ','
       << format_double(st.grad_norm);
    for (int i = 0; i < dim; ++i) os << ',' << format_double(st.state(i));
    os << '\n';
  }
  return os.str();
}

std::string decay_csv(const decay::DecayCurve& curve) {
  std::ostringstream os;
  os << "radius,bound,ode_value,l2_drift\n";
  for (std::size_t i = 0; i < curve.radii.size(); ++i)
    os << format_double(curve.radii[i]) << ',' << format_double(curve.w_values[i])
       << ',' << format_double(curve.ode_values[i]) << ','
       << format_double(curve.l2_drift[i]) << '\n';
  return os.str();
}

std::string modulus_csv(const decay::ModulusFit& fit) {
  std::ostringstream os;
  os << "t,modulus\n";
  for (std::size_t i = 0; i < fit.ts.size(); ++i)
    os << format_double(fit.ts[i]) << ',' << format_double(fit.values[i]) << '\n';
  return os.str();
}

std::string resolve_output_path(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("EPILAB_OUT_DIR")) p = fs::path(dir) / p;
  }
  return p.string();
}

void write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(resolve_output_path(path));
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);  // binary: keep LF endings
  if (!out) throw NumericError("write_text: cannot open " + p.string());
  out << content;
}

}  // namespace epilab::report
