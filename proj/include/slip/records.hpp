#pragma once
/// JSON summaries and provenance stamps shared by the command-line tools.

#include <string>
#include <vector>

#include "json.hpp"
#include "slip/config.hpp"

namespace slip {

/// {"version", "config_hash", "seed"}.
nlohmann::json provenance(const RunConfig& c);
/// Comment lines for CSV headers carrying the same stamp.
std::vector<std::string> provenance_comments(const RunConfig& c);

nlohmann::json row_json(const SweepRow& r);
nlohmann::json fit_json(const FitResult& f);
nlohmann::json bound_json(const BoundReport& b);
nlohmann::json regime_json(const RegimeResult& r);
nlohmann::json checks_json(const std::vector<ConvergenceCheck>& c);
nlohmann::json verdict_json(const DecayVerdict& v);

void write_json(const std::string& path, const nlohmann::json& j);
void write_text(const std::string& path, const std::string& s);

/// Conservation and relaxation summary of a non-diffusive run.
struct NdReport {
    double theta_l2_drift = 0.0, theta_l4_drift = 0.0;  // max relative change from t = 0
    bool conservation_pass = false;
    bool conservation_informational = false;  // nu_h > 0
    double u_early_max = 0.0, u_late_max = 0.0, u_ratio = 0.0;
    double hydro_reference = 0.0, hydro_final = 0.0, hydro_ratio = 0.0;
    double hydro_reference_time = 0.0;
    bool relax_pass = false;
    DecayVerdict decay;
    double decay_eps = 0.0;  // absolute threshold used (fraction times the peak)
    std::string deviation;
};

/// Uses the record columns t, theta_l2, theta_l4, kinetic and hydrostatic.
NdReport nd_report(const DiagnosticsRecord& rec, const SimParams& p, const NdConfig& c);
nlohmann::json nd_report_json(const NdReport& r);

/// "Ra,Nu" per line; '#' comments and a header line starting with a letter are skipped.
std::vector<RaNu> read_rows_file(const std::string& path);

}  // namespace slip
