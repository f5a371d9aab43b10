// slipconv: simulate, sweep, identities, nd, report.
//
// Every subcommand takes one JSON config. Outputs go to output.directory,
// prefixed by $SLIPCONV_OUTPUT_ROOT when that path is relative.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "slip/records.hpp"

using namespace slip;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out;  // overrides output.directory
};

std::string prepare_out(const RunConfig& c, const Common& o) {
    std::string dir = resolve_output_dir(o.out.empty() ? c.output.directory : o.out);
    fs::create_directories(dir);
    write_text(dir + "/effective_config.json", c.effective_json);
    return dir;
}

RunOptions run_options(const RunConfig& c, Recorder& rec, const std::string& dir) {
    RunOptions ro;
    ro.cadence = c.run.cadence;
    ro.sample_dt = c.run.sample_dt;
    ro.sinks.push_back(rec.sink());
    ro.config_hash = c.hash;
    if (c.output.checkpoint) ro.checkpoint_dir = dir + "/checkpoint";
    return ro;
}

void print_row(const SweepRow& r) {
    std::printf("  nu_flux        %.6f\n  nu_gradient    %.6f\n", r.nu_flux, r.nu_gradient);
    for (const auto& [d, v] : r.nu_strip) {
        const std::string label = "nu_strip(" + std::to_string(d).substr(0, 4) + ")";
        std::printf("  %-15s%.6f\n", label.c_str(), v);
    }
    if (r.nu_background) std::printf("  nu_background  %.6f\n", *r.nu_background);
    std::printf("  nu_convective  %.6f (lower estimate)\n", r.nu_convective);
    std::printf("  theta range    [%.6g, %.6g]\n", r.theta_min, r.theta_max);
}

int cmd_simulate(const Common& o) {
    RunConfig c = load_config(o.config);
    const std::string dir = prepare_out(c, o);
    auto d = c.make_domain();
    Recorder rec(d, c.params, c.diagnostics);
    RunResult res = run(d, c.params, initial_state(d, c.params, c.initial), run_options(c, rec, dir));
    if (c.output.csv) rec.record().write_csv(dir + "/diagnostics.csv", provenance_comments(c));
    json j{{"provenance", provenance(c)},
           {"mode", mode_name(c.params.mode)},
           {"samples", rec.record().size()},
           {"steps", res.steps},
           {"wall_seconds", res.wall_seconds}};
    std::printf("slipconv %s  hash %s  seed %llu\n", code_version(), c.hash.c_str(),
                static_cast<unsigned long long>(c.params.seed));
    std::printf("%ld steps, %zu samples, %.2f s\n", res.steps, rec.record().size(), res.wall_seconds);
    if (rec.record().size() > 0 && c.params.T > 0.0) {
        const Window w = window_from_fraction(c.params.T, c.run.window_start);
        SweepRow r = summarize_run(rec.record(), w, c.diagnostics, c.params);
        r.alpha = c.params.slip.is_constant() && c.params.slip.bottom.c0 == c.params.slip.top.c0 ? c.params.slip.bottom.c0 : 0.0;
        r.n1 = c.n1;
        r.n2 = c.n2;
        r.steps = res.steps;
        r.wall_seconds = res.wall_seconds;
        j["summary"] = row_json(r);
        if (c.params.mode == Mode::diffusive) {
            std::printf("window [%g, %g]\n", w.t0, w.t1);
            print_row(r);
        } else if (rec.record().size() >= 3) {
            j["nd"] = nd_report_json(nd_report(rec.record(), c.params, c.nd));
        }
    }
    if (c.output.json) write_json(dir + "/summary.json", j);
    return 0;
}

int cmd_sweep(const Common& o) {
    RunConfig c = load_config(o.config);
    if (!c.sweep) throw Error("config: sweep: section required for the sweep command");
    const auto& sw = *c.sweep;
    const std::string dir = prepare_out(c, o);
    auto d = c.make_domain();
    const double alpha = sw.spec.alpha.front();
    const BoundCoefficients bc = bound_coefficients(*d, SlipSpec::constant(alpha));
    json j{{"provenance", provenance(c)}};
    std::vector<RaNu> pts;
    int exit_code = 0;

    if (!sw.rows_file.empty()) {
        pts = read_rows_file(sw.rows_file);
        j["source"] = sw.rows_file;
    } else {
        SweepRecord rec = run_sweep(sw.spec);
        std::size_t failed = 0;
        json rows = json::array();
        for (std::size_t k = 0; k < rec.rows.size(); ++k) {
            const auto& r = rec.rows[k];
            rows.push_back(row_json(r));
            if (r.failed) {
                ++failed;
                std::printf("run %zu (Ra=%g Pr=%g alpha=%g) failed: %s\n", k, r.Ra, r.Pr, r.alpha, r.reason.c_str());
                continue;
            }
            if (c.output.csv) r.record.write_csv(dir + "/run_" + std::to_string(k) + ".csv", provenance_comments(c));
            std::printf("Ra=%-10g Pr=%-6g alpha=%-6g grid %zux%zu  Nu=%.5f\n", r.Ra, r.Pr, r.alpha, r.n1, r.n2, r.nu_flux);
            if (sw.spec.Pr.size() == 1 && sw.spec.alpha.size() == 1) pts.push_back({r.Ra, r.nu_flux});
            json reg = json::array();
            for (auto t : {RegimeTable::by_slip_length, RegimeTable::by_prandtl})
                reg.push_back(regime_json(regime_classify(r.slip_length, r.Pr, r.Ra, t)));
            rows.back()["regimes"] = reg;
        }
        j["rows"] = rows;
        if (c.output.csv) write_sweep_csv(dir + "/sweep.csv", rec, provenance_comments(c));
        write_plot_data(dir + "/plot_data.txt", rec);
        if (failed == rec.rows.size()) exit_code = 1;
        if (!rec.fit) j["fit_note"] = rec.fit_note;
    }

    std::vector<RaNu> in_range;
    for (const auto& p : pts)
        if (p.Ra >= sw.fit_ra_min && p.Ra <= sw.fit_ra_max) in_range.push_back(p);
    if (in_range.size() >= 3) {
        FitResult f = fit_exponent(in_range);
        j["fit"] = fit_json(f);
        std::printf("fit: beta = %.4f +- %.4f over %d rows\n", f.beta, f.stderr_beta, f.n);
    } else if (!j.contains("fit_note")) {
        j["fit_note"] = "fit skipped: fewer than 3 rows in range";
    }
    if (!in_range.empty()) {
        BoundReport b = bound_check(in_range, bc, sw.bound_exponent);
        j["bound_check"] = bound_json(b);
        j["bound_check"]["tol"] = sw.bound_tol;
        j["bound_check"]["pass"] = b.ok(sw.bound_tol);
        j["bound_coefficients"] = {{"C1", bc.C1}, {"C2", bc.C2}, {"C3", bc.C3}};
        std::printf("bound check (Ra^%g shape): max margin %.4f\n", sw.bound_exponent, b.max_margin);
    }
    if (c.output.json) write_json(dir + "/sweep.json", j);
    return exit_code;
}

int cmd_identities(const Common& o) {
    RunConfig c = load_config(o.config);
    const std::string dir = prepare_out(c, o);
    IdentitySpec spec = c.identities ? *c.identities : IdentitySpec{};
    if (!c.identities) spec.seed = c.params.seed;
    auto checks = run_identity_suite(spec);
    bool ok = true;
    for (const auto& ch : checks) {
        ok = ok && ch.pass;
        std::printf("%-4s %-44s", ch.pass ? "ok" : "FAIL", ch.name.c_str());
        for (double e : ch.errors) std::printf(" %.3e", e);
        if (!ch.orders.empty()) {
            std::printf("  orders");
            for (double q : ch.orders) std::printf(" %.2f", q);
        }
        if (!ch.note.empty()) std::printf("  (%s)", ch.note.c_str());
        std::printf("\n");
    }
    if (c.output.json) write_json(dir + "/identities.json", json{{"provenance", provenance(c)}, {"checks", checks_json(checks)}, {"pass", ok}});
    return ok ? 0 : 1;
}

int cmd_nd(const Common& o) {
    RunConfig c = load_config(o.config);
    if (c.params.mode != Mode::non_diffusive) throw Error("config: params.mode: the nd command needs \"non_diffusive\"");
    const std::string dir = prepare_out(c, o);
    auto d = c.make_domain();
    Recorder rec(d, c.params, c.diagnostics);
    RunResult res = run(d, c.params, initial_state(d, c.params, c.initial), run_options(c, rec, dir));
    if (c.output.csv) rec.record().write_csv(dir + "/diagnostics.csv", provenance_comments(c));
    NdReport r = nd_report(rec.record(), c.params, c.nd);
    json j{{"provenance", provenance(c)}, {"steps", res.steps}, {"wall_seconds", res.wall_seconds},
           {"report", nd_report_json(r)}};
    if (c.output.json) write_json(dir + "/nd_report.json", j);
    std::printf("theta drift: L2 %.3e  L4 %.3e  %s%s\n", r.theta_l2_drift, r.theta_l4_drift,
                r.conservation_pass ? "pass" : "fail", r.conservation_informational ? " (informational, nu_h > 0)" : "");
    std::printf("relaxation: |u| ratio %.3g  hydrostatic ratio %.3g  %s\n", r.u_ratio, r.hydro_ratio,
                r.relax_pass ? "pass" : "fail");
    if (r.decay.found)
        std::printf("decay detector: T_found = %g\n", r.decay.T);
    else
        std::printf("decay detector: inconclusive (%s)\n", r.decay.reason.c_str());
    std::printf("note: %s\n", r.deviation.c_str());
    return 0;
}

int cmd_report(const Common& o, const std::string& checkpoint) {
    RunConfig c = load_config(o.config);
    std::string dir = resolve_output_dir(o.out.empty() ? c.output.directory : o.out);
    const std::string ck = checkpoint.empty() ? dir + "/checkpoint" : checkpoint;
    auto d = c.make_domain();
    std::string hash;
    State s = read_checkpoint(ck, d, &hash);
    Stepper st(d, c.params);
    st.ensure_derived(s);
    Recorder rec(d, c.params, c.diagnostics);
    StepInfo info;
    info.step = s.step;
    info.t = s.t;
    rec(s, info);
    const auto& fresh = rec.record();
    json values = json::object();
    for (std::size_t k = 0; k < fresh.columns.size(); ++k) {
        const double v = fresh.rows[0][k];
        values[fresh.columns[k]] = std::isfinite(v) ? json(v) : json(nullptr);
    }
    json j{{"provenance", provenance(c)}, {"checkpoint", ck}, {"t", s.t}, {"step", s.step}, {"values", values}};
    if (hash != c.hash) j["warning"] = "checkpoint config hash " + hash + " differs from the config";

    // Compare with the recorded last row when the run's CSV is present.
    const std::string csv = dir + "/diagnostics.csv";
    if (fs::exists(csv)) {
        DiagnosticsRecord old = DiagnosticsRecord::read_csv(csv);
        std::vector<std::string> mismatched;
        if (old.size() > 0) {
            const auto& last = old.rows.back();
            for (std::size_t k = 0; k < fresh.columns.size(); ++k) {
                const auto& name = fresh.columns[k];
                if (name == "dt" || name == "energy_residual" || name == "ut_proxy" || !old.has(name)) continue;
                const double a = fresh.rows[0][k], b = last[old.index(name)];
                if (!(a == b || (std::isnan(a) && std::isnan(b)))) mismatched.push_back(name);
            }
            j["matches_recorded_last_row"] = mismatched.empty();
            j["mismatched_columns"] = mismatched;
        }
        if (old.size() > 1 && c.params.T > 0.0) {
            const Window w = window_from_fraction(c.params.T, c.run.window_start);
            if (c.params.mode == Mode::diffusive)
                j["summary"] = row_json(summarize_run(old, w, c.diagnostics, c.params));
            else if (old.size() >= 3)
                j["nd"] = nd_report_json(nd_report(old, c.params, c.nd));
        }
    }
    fs::create_directories(dir);
    write_json(dir + "/report.json", j);
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boussinesq convection in slip channels: simulation and diagnostics"};
    app.set_version_flag("--version", std::string("slipconv ") + code_version());
    app.require_subcommand(1);

    Common o;
    std::string checkpoint;
    auto add = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("config", o.config, "JSON configuration")->required()->check(CLI::ExistingFile);
        s->add_option("--out", o.out, "Output directory (overrides output.directory)");
        return s;
    };
    auto* sim = add("simulate", "Run one simulation and write its records");
    auto* swp = add("sweep", "Parameter sweep, exponent fit and bound check");
    auto* ids = add("identities", "Identity, elliptic and coercivity refinement suite");
    auto* nd = add("nd", "Non-diffusive conservation and relaxation report");
    auto* rep = add("report", "Re-derive diagnostics from a checkpoint");
    rep->add_option("--checkpoint", checkpoint, "Checkpoint directory (default <out>/checkpoint)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (swp->parsed()) return cmd_sweep(o);
        if (ids->parsed()) return cmd_identities(o);
        if (nd->parsed()) return cmd_nd(o);
        if (rep->parsed()) return cmd_report(o, checkpoint);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
