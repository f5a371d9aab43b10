#pragma once
/// Run configuration: one JSON document with strict validation.
///
/// Sections: geometry, grid, params, initial, diagnostics, output, and the
/// optional sweep, identities and nd sections. Unknown keys are rejected with
/// their path. The effective configuration (all defaults filled in) is
/// canonical JSON; its hash identifies a run.

#include <optional>
#include <string>

#include "slip/harness.hpp"

namespace slip {

struct OutputConfig {
    std::string directory = "out";
    bool csv = true, json = true;
    bool checkpoint = true;
};

struct RunSettings {
    long cadence = 100;
    double sample_dt = 0.1;    // 0: every cadence steps
    double window_start = 0.4;
};

struct NdConfig {
    double decay_C = 1.0;       // bound on f' for the decay detector
    double decay_eps = 1e-2;    // fraction of max ||u||^2 over the run
    std::optional<double> decay_budget;  // absolute; default eps * half the horizon
    double conservation_tol = 5e-3;
    double relax_early = 10.0;  // ||u|| window [0, early] vs [T - late, T]
    double relax_late = 10.0;
    double relax_ratio = 0.2;
    double hydro_reference_time = 5.0;
};

struct SweepConfig {
    SweepSpec spec;                 // Ra, Pr, alpha, resolution, seed policy
    std::string rows_file;          // synthetic rows "Ra,Nu" instead of runs
    double fit_ra_min = 0.0, fit_ra_max = std::numeric_limits<double>::infinity();
    double bound_exponent = 0.5;
    double bound_tol = 0.05;
};

struct RunConfig {
    GeometrySpec geometry;
    std::size_t n1 = 64, n2 = 64;
    bool dealias = true;
    SimParams params;
    InitialSpec initial;
    DiagnosticsOptions diagnostics;
    RunSettings run;
    OutputConfig output;
    std::optional<SweepConfig> sweep;
    std::optional<IdentitySpec> identities;
    std::vector<std::string> identity_geometries;  // "flat", "curved" or "config"
    NdConfig nd;

    std::string effective_json;  // canonical, pretty-printed
    std::string hash;            // 16 hex digits of the canonical compact form

    DomainPtr make_domain() const;
};

/// Throws Error naming the key path (or line and column for syntax errors).
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);

/// Output directory with SLIPCONV_OUTPUT_ROOT prepended to relative paths.
std::string resolve_output_dir(const std::string& dir);

/// FNV-1a 64-bit, hex.
std::string hash_hex(const std::string& s);

const char* code_version();

}  // namespace slip
