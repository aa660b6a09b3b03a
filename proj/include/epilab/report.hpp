#pragma once

// Report serialization: versioned JSON reports with config echo, and CSV
// artifacts (header row, '.' decimal separator, LF line endings).

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "epilab/cone.hpp"
#include "epilab/decay.hpp"
#include "epilab/epiflow.hpp"
#include "epilab/integrability.hpp"
#include "epilab/secondvar.hpp"

namespace epilab::report {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// schema/version/command/config/tolerances header; wall_clock_ms is filled
/// by the caller just before writing.
nlohmann::json make_meta(const std::string& command,
                         const std::map<std::string, std::string>& config,
                         const std::map<std::string, double>& tolerances = {});

nlohmann::json to_json(const cone::ConeModel& c);
nlohmann::json to_json(const secondvar::SecondVarEntry& e);
nlohmann::json to_json(const std::vector<secondvar::SecondVarEntry>& entries);
nlohmann::json to_json(const integrability::IntegrabilityVerdict& v);
nlohmann::json to_json(const integrability::BoundChain& chain);
nlohmann::json to_json(const integrability::AsymptoticReport& rep);
nlohmann::json to_json(const epiflow::EpiReport& rep);
nlohmann::json to_json(const decay::DecayCurve& curve);

std::string spectrum_csv(const std::vector<secondvar::SecondVarEntry>& entries);
std::string competitor_csv(const epiflow::Competitor& comp);
std::string flow_csv(const epiflow::FlowTrace& trace);
std::string decay_csv(const decay::DecayCurve& curve);
std::string modulus_csv(const decay::ModulusFit& fit);

/// Write with LF endings, creating parent directories; honors EPILAB_OUT_DIR
/// for relative paths.
void write_text(const std::string& path, const std::string& content);
std::string resolve_output_path(const std::string& path);

}  // namespace epilab::report
