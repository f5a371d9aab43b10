#include "slip/records.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

namespace slip {

using json = nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json provenance(const RunConfig& c) {
    return json{{"version", code_version()}, {"config_hash", c.hash}, {"seed", c.params.seed}};
}

std::vector<std::string> provenance_comments(const RunConfig& c) {
    return {std::string("slipconv ") + code_version() + " config_hash=" + c.hash +
            " seed=" + std::to_string(c.params.seed)};
}

json row_json(const SweepRow& r) {
    json strips = json::object();
    char buf[32];
    for (const auto& [d, v] : r.nu_strip) {
        std::snprintf(buf, sizeof buf, "%g", d);
        strips[buf] = finite_or_null(v);
    }
    json j{{"Ra", r.Ra},
           {"Pr", r.Pr},
           {"alpha", r.alpha},
           {"slip_length", r.slip_length},
           {"n1", r.n1},
           {"n2", r.n2},
           {"seed", r.seed},
           {"window", {r.window.t0, r.window.t1}},
           {"failed", r.failed}};
    if (r.failed) {
        j["reason"] = r.reason;
        return j;
    }
    j["nu_flux"] = finite_or_null(r.nu_flux);
    j["nu_gradient"] = finite_or_null(r.nu_gradient);
    j["nu_strip"] = strips;
    j["nu_convective_lower_estimate"] = finite_or_null(r.nu_convective);
    j["nu_background"] = r.nu_background ? finite_or_null(*r.nu_background) : json(nullptr);
    j["theta_min"] = r.theta_min;
    j["theta_max"] = r.theta_max;
    j["max_energy_residual"] = finite_or_null(r.max_energy_residual);
    j["max_coupling_residual"] = finite_or_null(r.max_coupling_residual);
    j["steps"] = r.steps;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

json fit_json(const FitResult& f) {
    return json{{"beta", f.beta}, {"stderr", f.stderr_beta}, {"log_prefactor", f.log_prefactor},
                {"rms_residual", f.residual}, {"rows", f.n}};
}

json bound_json(const BoundReport& b) {
    return json{{"C0", b.C0}, {"exponent", b.exponent}, {"margins", b.margins}, {"max_margin", b.max_margin}};
}

json regime_json(const RegimeResult& r) {
    return json{{"table", r.table == RegimeTable::by_slip_length ? "by_slip_length" : "by_prandtl"},
                {"forms", r.forms},
                {"rows", r.rows},
                {"ra_exponents", r.ra_exponents},
                {"ambiguous", r.ambiguous}};
}

json checks_json(const std::vector<ConvergenceCheck>& cs) {
    json a = json::array();
    for (const auto& c : cs) {
        json errs = json::array(), ords = json::array();
        for (double e : c.errors) errs.push_back(finite_or_null(e));
        for (double o : c.orders) ords.push_back(finite_or_null(o));
        a.push_back(json{{"name", c.name}, {"n2", c.n2}, {"errors", errs}, {"orders", ords},
                         {"pass", c.pass}, {"note", c.note}});
    }
    return a;
}

json verdict_json(const DecayVerdict& v) {
    if (v.found) return json{{"verdict", "T_found"}, {"T", v.T}};
    return json{{"verdict", "inconclusive"}, {"reason", v.reason}};
}

NdReport nd_report(const DiagnosticsRecord& rec, const SimParams& p, const NdConfig& c) {
    if (rec.size() < 3) throw Error("nd_report: need at least 3 samples");
    NdReport r;
    const auto t = rec.column("t"), l2 = rec.column("theta_l2"), l4 = rec.column("theta_l4");
    const auto ke = rec.column("kinetic"), hy = rec.column("hydrostatic");
    for (std::size_t k = 0; k < t.size(); ++k) {
        r.theta_l2_drift = std::max(r.theta_l2_drift, std::abs(l2[k] - l2[0]) / l2[0]);
        r.theta_l4_drift = std::max(r.theta_l4_drift, std::abs(l4[k] - l4[0]) / l4[0]);
    }
    r.conservation_informational = p.nu_h > 0.0;
    r.conservation_pass = r.theta_l2_drift <= c.conservation_tol && r.theta_l4_drift <= c.conservation_tol;

    const double T = t.back();
    double early = 0.0, late = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double u = std::sqrt(std::max(ke[k], 0.0));
        if (t[k] <= t.front() + c.relax_early + 1e-12) early = std::max(early, u);
        if (t[k] >= T - c.relax_late - 1e-12) late = std::max(late, u);
    }
    r.u_early_max = early;
    r.u_late_max = late;
    r.u_ratio = early > 0.0 ? late / early : (late > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

    std::size_t kref = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (std::abs(t[k] - c.hydro_reference_time) < std::abs(t[kref] - c.hydro_reference_time)) kref = k;
    r.hydro_reference_time = t[kref];
    r.hydro_reference = hy[kref];
    r.hydro_final = hy.back();
    r.hydro_ratio = r.hydro_reference > 0.0 ? r.hydro_final / r.hydro_reference
                                            : (r.hydro_final > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.relax_pass = r.u_ratio <= c.relax_ratio && r.hydro_ratio <= c.relax_ratio;

    // Absolute thresholds are meaningless across amplitudes; eps scales with the peak.
    const double peak = *std::max_element(ke.begin(), ke.end());
    r.decay_eps = c.decay_eps * peak;
    if (r.decay_eps > 0.0)
        r.decay = decay_detector(t, ke, c.decay_C, r.decay_eps, c.decay_budget);
    else
        r.decay = {true, t.front(), ""};
    r.deviation =
        "modeling deviation: the convergence result assumes a bounded C^{2,1} domain; this run uses a "
        "horizontally periodic channel";
    return r;
}

json nd_report_json(const NdReport& r) {
    return json{{"conservation",
                 {{"theta_l2_drift", r.theta_l2_drift},
                  {"theta_l4_drift", r.theta_l4_drift},
                  {"pass", r.conservation_pass},
                  {"informational_only", r.conservation_informational}}},
                {"relaxation",
                 {{"u_early_max", r.u_early_max},
                  {"u_late_max", r.u_late_max},
                  {"u_ratio", finite_or_null(r.u_ratio)},
                  {"hydrostatic_reference_time", r.hydro_reference_time},
                  {"hydrostatic_reference", r.hydro_reference},
                  {"hydrostatic_final", r.hydro_final},
                  {"hydrostatic_ratio", finite_or_null(r.hydro_ratio)},
                  {"pass", r.relax_pass}}},
                {"decay_detector", [&] {
                     json v = verdict_json(r.decay);
                     v["eps"] = r.decay_eps;
                     return v;
                 }()},
                {"periodic_channel_deviation", r.deviation}};
}

void write_text(const std::string& path, const std::string& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os << s;
    if (!os) throw Error("write failed: " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<RaNu> read_rows_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read rows file " + path);
    std::vector<RaNu> rows;
    std::string line;
    int ln = 0;
    while (std::getline(is, line)) {
        ++ln;
        if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        RaNu r;
        if (!(ss >> r.Ra >> r.Nu)) throw Error(path + ":" + std::to_string(ln) + ": expected 'Ra,Nu'");
        rows.push_back(r);
    }
    return rows;
}

}  // namespace slip
