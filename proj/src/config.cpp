#include "slip/config.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#ifndef SLIP_VERSION
#define SLIP_VERSION "unknown"
#endif

namespace slip {

using json = nlohmann::json;

const char* code_version() { return SLIP_VERSION; }

std::string hash_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string resolve_output_dir(const std::string& dir) {
    const char* root = std::getenv("SLIPCONV_OUTPUT_ROOT");
    std::filesystem::path p(dir);
    if (root && *root && p.is_relative()) p = std::filesystem::path(root) / p;
    return p.string();
}

DomainPtr RunConfig::make_domain() const { return Domain::make(geometry.build(n1), n2, dealias); }

namespace {

// Object reader that remembers which keys were consumed.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw Error("config: " + at(key) + ": " + what);
    }
    std::string at(const std::string& key) const {
        if (key.empty()) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    const json* raw(const std::string& k) {
        used_.insert(k);
        auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    double num(const std::string& k, std::optional<double> def) {
        const json* v = raw(k);
        if (!v) {
            if (!def) fail(k, "required key missing");
            return *def;
        }
        if (!v->is_number()) fail(k, "expected a number");
        return v->get<double>();
    }
    std::optional<double> num_or_null(const std::string& k) {
        const json* v = raw(k);
        if (!v || v->is_null()) return std::nullopt;
        if (!v->is_number()) fail(k, "expected a number or null");
        return v->get<double>();
    }
    long integer(const std::string& k, long def, long lo = std::numeric_limits<long>::min()) {
        const json* v = raw(k);
        if (!v) return def;
        if (!v->is_number_integer()) fail(k, "expected an integer");
        long x = v->get<long>();
        if (x < lo) fail(k, "must be >= " + std::to_string(lo));
        return x;
    }
    bool flag(const std::string& k, bool def) {
        const json* v = raw(k);
        if (!v) return def;
        if (!v->is_boolean()) fail(k, "expected true or false");
        return v->get<bool>();
    }
    std::string str(const std::string& k, const std::string& def) {
        const json* v = raw(k);
        if (!v) return def;
        if (!v->is_string()) fail(k, "expected a string");
        return v->get<std::string>();
    }
    std::vector<double> nums(const std::string& k, const std::vector<double>& def, bool required = false) {
        const json* v = raw(k);
        if (!v) {
            if (required) fail(k, "required key missing");
            return def;
        }
        if (!v->is_array()) fail(k, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number()) fail(k + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }
    std::optional<Obj> sub(const std::string& k) {
        const json* v = raw(k);
        if (!v) return std::nullopt;
        return Obj(*v, at(k));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) fail(it.key(), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

FourierProfile parse_profile(Obj& parent, const std::string& key, const FourierProfile& def) {
    const json* v = parent.raw(key);
    if (!v) return def;
    if (v->is_number()) return FourierProfile::constant(v->get<double>());
    Obj o(*v, parent.at(key));
    FourierProfile p;
    p.c0 = o.num("c0", 0.0);
    p.a = o.nums("cos", {});
    p.b = o.nums("sin", {});
    o.finish();
    return p;
}

json profile_json(const FourierProfile& p) { return json{{"c0", p.c0}, {"cos", p.a}, {"sin", p.b}}; }

Mode parse_mode(Obj& o, const std::string& k, Mode def) {
    std::string s = o.str(k, mode_name(def));
    if (s == "diffusive") return Mode::diffusive;
    if (s == "non_diffusive") return Mode::non_diffusive;
    o.fail(k, "expected \"diffusive\" or \"non_diffusive\"");
}

const char* kind_name(InitialKind k) {
    switch (k) {
    case InitialKind::conduction_perturbed: return "conduction_perturbed";
    case InitialKind::stratified_blob: return "stratified_blob";
    case InitialKind::hydrostatic: return "hydrostatic";
    case InitialKind::snapshot: return "snapshot";
    }
    return "?";
}

InitialKind parse_kind(Obj& o, const std::string& k, InitialKind def) {
    std::string s = o.str(k, kind_name(def));
    for (InitialKind c : {InitialKind::conduction_perturbed, InitialKind::stratified_blob, InitialKind::hydrostatic,
                          InitialKind::snapshot})
        if (s == kind_name(c)) return c;
    o.fail(k, "unknown initial kind '" + s + "'");
}

std::size_t size_at_least(Obj& o, const std::string& k, long def, long lo) {
    return static_cast<std::size_t>(o.integer(k, def, lo));
}

void parse_geometry(Obj& o, GeometrySpec& g) {
    g.id = o.str("id", g.id);
    g.period = o.num("period", g.period);
    if (!(g.period > 0.0)) o.fail("period", "must be > 0");
    g.bottom = parse_profile(o, "bottom", g.bottom);
    g.top = parse_profile(o, "top", g.top);
    g.normalize = o.flag("normalize", g.normalize);
    o.finish();
}

json geometry_json(const GeometrySpec& g) {
    return json{{"id", g.id}, {"period", g.period}, {"bottom", profile_json(g.bottom)},
                {"top", profile_json(g.top)}, {"normalize", g.normalize}};
}

void parse_params(Obj& o, SimParams& p) {
    p.Ra = o.num("Ra", std::nullopt);
    p.Pr = o.num("Pr", p.Pr);
    p.mode = parse_mode(o, "mode", p.mode);
    if (const json* v = o.raw("slip")) {
        if (v->is_number()) {
            p.slip = SlipSpec::constant(v->get<double>());
        } else {
            Obj s(*v, o.at("slip"));
            p.slip.bottom = parse_profile(s, "bottom", p.slip.bottom);
            p.slip.top = parse_profile(s, "top", p.slip.top);
            s.finish();
        }
    }
    p.dt = o.num("dt", p.dt);
    p.cfl = o.num("cfl", p.cfl);
    p.dt_max = o.num("dt_max", p.dt_max);
    p.T = o.num("T", p.T);
    p.K = static_cast<int>(o.integer("K", p.K, 1));
    p.K_max = static_cast<int>(o.integer("K_max", p.K_max, 1));
    p.coupling_tol = o.num("coupling_tol", p.coupling_tol);
    p.mean_flux = o.num("mean_flux", p.mean_flux);
    p.nu_h = o.num("nu_h", p.nu_h);
    p.seed = static_cast<std::uint64_t>(o.integer("seed", static_cast<long>(p.seed), 0));
    p.force_generic = o.flag("force_generic", p.force_generic);
    if (auto s = o.sub("solver")) {
        p.solver.tol = s->num("tol", p.solver.tol);
        p.solver.max_iter = static_cast<int>(s->integer("max_iter", p.solver.max_iter, 1));
        p.solver.restart = static_cast<int>(s->integer("restart", p.solver.restart, 2));
        p.solver.force_generic = s->flag("force_generic", p.solver.force_generic);
        s->finish();
    }
    o.finish();
    try {
        p.validate();
    } catch (const Error& e) {
        throw Error(std::string("config: ") + o.at("") + ": " + e.what());
    }
}

json params_json(const SimParams& p) {
    return json{{"Ra", p.Ra},
                {"Pr", p.Pr},
                {"mode", mode_name(p.mode)},
                {"slip", {{"bottom", profile_json(p.slip.bottom)}, {"top", profile_json(p.slip.top)}}},
                {"dt", p.dt},
                {"cfl", p.cfl},
                {"dt_max", p.dt_max},
                {"T", p.T},
                {"K", p.K},
                {"K_max", p.K_max},
                {"coupling_tol", p.coupling_tol},
                {"mean_flux", p.mean_flux},
                {"nu_h", p.nu_h},
                {"seed", p.seed},
                {"force_generic", p.force_generic},
                {"solver",
                 {{"tol", p.solver.tol},
                  {"max_iter", p.solver.max_iter},
                  {"restart", p.solver.restart},
                  {"force_generic", p.solver.force_generic}}}};
}

void parse_initial(Obj& o, InitialSpec& s) {
    s.kind = parse_kind(o, "kind", s.kind);
    s.amplitude = o.num("amplitude", s.amplitude);
    s.modes = static_cast<int>(o.integer("modes", s.modes, 0));
    s.beta = o.num("beta", s.beta);
    s.gamma = o.num("gamma", s.gamma);
    s.blob_amplitude = o.num("blob_amplitude", s.blob_amplitude);
    s.blob_x = o.num("blob_x", s.blob_x);
    s.blob_y = o.num("blob_y", s.blob_y);
    s.blob_width = o.num("blob_width", s.blob_width);
    s.omega_path = o.str("omega_path", s.omega_path);
    s.theta_path = o.str("theta_path", s.theta_path);
    o.finish();
    if (s.kind == InitialKind::snapshot && (s.omega_path.empty() || s.theta_path.empty()))
        o.fail("kind", "snapshot needs omega_path and theta_path");
}

json initial_json(const InitialSpec& s) {
    return json{{"kind", kind_name(s.kind)}, {"amplitude", s.amplitude}, {"modes", s.modes},
                {"beta", s.beta},            {"gamma", s.gamma},         {"blob_amplitude", s.blob_amplitude},
                {"blob_x", s.blob_x},        {"blob_y", s.blob_y},       {"blob_width", s.blob_width},
                {"omega_path", s.omega_path}, {"theta_path", s.theta_path}};
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // The message carries the line and column.
        throw Error(origin + ": " + e.what());
    }
    RunConfig c;
    Obj top(root, "");

    if (auto g = top.sub("geometry")) parse_geometry(*g, c.geometry);

    if (auto g = top.sub("grid")) {
        c.n1 = size_at_least(*g, "n1", static_cast<long>(c.n1), 8);
        c.n2 = size_at_least(*g, "n2", static_cast<long>(c.n2), 8);
        if (c.n1 % 2) g->fail("n1", "must be even");
        c.dealias = g->flag("dealias", c.dealias);
        g->finish();
    }

    {
        auto p = top.sub("params");
        if (!p) top.fail("params", "required section missing");
        parse_params(*p, c.params);
    }

    if (auto s = top.sub("initial")) parse_initial(*s, c.initial);

    if (auto s = top.sub("diagnostics")) {
        c.run.cadence = s->integer("cadence", c.run.cadence, 1);
        c.run.sample_dt = s->num("sample_dt", c.run.sample_dt);
        if (c.run.sample_dt < 0.0) s->fail("sample_dt", "must be >= 0");
        c.run.window_start = s->num("window_start", c.run.window_start);
        if (!(c.run.window_start >= 0.0 && c.run.window_start < 1.0)) s->fail("window_start", "must be in [0, 1)");
        c.diagnostics.strip_deltas = s->nums("strip_deltas", c.diagnostics.strip_deltas);
        for (double d : c.diagnostics.strip_deltas)
            if (!(d > 0.0 && d < 1.0)) s->fail("strip_deltas", "entries must be in (0, 1)");
        c.diagnostics.delta_bg = s->num("delta_bg", c.diagnostics.delta_bg);
        if (!(c.diagnostics.delta_bg >= 0.0 && c.diagnostics.delta_bg <= 0.5))
            s->fail("delta_bg", "must be in [0, 1/2] (0 disables)");
        c.diagnostics.identities = s->flag("identities", c.diagnostics.identities);
        s->finish();
    }
    c.diagnostics.beta = c.initial.beta;
    c.diagnostics.gamma = c.initial.gamma;

    if (auto s = top.sub("output")) {
        c.output.directory = s->str("directory", c.output.directory);
        c.output.csv = s->flag("csv", c.output.csv);
        c.output.json = s->flag("json", c.output.json);
        c.output.checkpoint = s->flag("checkpoint", c.output.checkpoint);
        s->finish();
    }

    if (auto s = top.sub("sweep")) {
        SweepConfig sw;
        auto& sp = sw.spec;
        sp.Ra = s->nums("Ra", {}, true);
        sp.Pr = s->nums("Pr", sp.Pr);
        sp.alpha = s->nums("alpha", sp.alpha);
        if (auto r = s->sub("resolution")) {
            std::string pol = r->str("policy", "fixed");
            if (pol != "fixed" && pol != "per_ra") r->fail("policy", "expected \"fixed\" or \"per_ra\"");
            sp.resolution.per_ra = pol == "per_ra";
            sp.resolution.n2_factor = r->num("n2_factor", sp.resolution.n2_factor);
            sp.resolution.n2_min = size_at_least(*r, "n2_min", static_cast<long>(sp.resolution.n2_min), 8);
            sp.resolution.n2_multiple = size_at_least(*r, "n2_multiple", static_cast<long>(sp.resolution.n2_multiple), 1);
            sp.resolution.n1_per_n2 = r->num("n1_per_n2", sp.resolution.n1_per_n2);
            r->finish();
        }
        sp.seed_per_run = s->flag("seed_per_run", sp.seed_per_run);
        sp.threads = static_cast<int>(s->integer("threads", sp.threads, 0));
        sw.rows_file = s->str("rows_file", sw.rows_file);
        sw.fit_ra_min = s->num("fit_ra_min", sw.fit_ra_min);
        if (auto v = s->num_or_null("fit_ra_max")) sw.fit_ra_max = *v;
        sw.bound_exponent = s->num("bound_exponent", sw.bound_exponent);
        sw.bound_tol = s->num("bound_tol", sw.bound_tol);
        s->finish();
        c.sweep = sw;
    }

    if (auto s = top.sub("identities")) {
        IdentitySpec is;
        is.n1 = size_at_least(*s, "n1", static_cast<long>(is.n1), 8);
        if (const json* v = s->raw("n2_levels")) {
            if (!v->is_array() || v->empty()) s->fail("n2_levels", "expected a non-empty array of integers");
            is.n2_levels.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number_integer()) s->fail("n2_levels[" + std::to_string(i) + "]", "expected an integer");
                long n = (*v)[i].get<long>();
                if (n < 16) s->fail("n2_levels[" + std::to_string(i) + "]", "N2 below the minimum of 16");
                is.n2_levels.push_back(static_cast<std::size_t>(n));
            }
        }
        is.fields = static_cast<int>(s->integer("fields", is.fields, 1));
        is.min_order = s->num("min_order", is.min_order);
        is.alphas = s->nums("alphas", is.alphas);
        is.coercivity_ensemble = static_cast<int>(s->integer("coercivity_ensemble", is.coercivity_ensemble, 10));
        is.coercivity_fraction = s->num("coercivity_fraction", is.coercivity_fraction);
        is.coercivity_stability = s->num("coercivity_stability", is.coercivity_stability);
        is.corrupt_metric = s->num("corrupt_metric", is.corrupt_metric);
        is.identities = s->flag("run_identities", is.identities);
        is.elliptic = s->flag("run_elliptic", is.elliptic);
        is.coercivity = s->flag("run_coercivity", is.coercivity);
        c.identity_geometries = {"flat", "curved"};
        if (const json* v = s->raw("geometries")) {
            if (!v->is_array()) s->fail("geometries", "expected an array of names");
            c.identity_geometries.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                const auto& e = (*v)[i];
                std::string n = e.is_string() ? e.get<std::string>() : "";
                if (n != "flat" && n != "curved" && n != "config")
                    s->fail("geometries[" + std::to_string(i) + "]", "expected \"flat\", \"curved\" or \"config\"");
                c.identity_geometries.push_back(n);
            }
        }
        s->finish();
        is.seed = c.params.seed;
        for (const auto& n : c.identity_geometries)
            is.geometries.push_back(n == "flat" ? GeometrySpec{} : n == "curved" ? curved_default_geometry() : c.geometry);
        try {
            is.validate();
        } catch (const Error& e) {
            throw Error(std::string("config: identities: ") + e.what());
        }
        c.identities = is;
    }

    if (auto s = top.sub("nd")) {
        c.nd.decay_C = s->num("decay_C", c.nd.decay_C);
        c.nd.decay_eps = s->num("decay_eps", c.nd.decay_eps);
        c.nd.decay_budget = s->num_or_null("decay_budget");
        c.nd.conservation_tol = s->num("conservation_tol", c.nd.conservation_tol);
        c.nd.relax_early = s->num("relax_early", c.nd.relax_early);
        c.nd.relax_late = s->num("relax_late", c.nd.relax_late);
        c.nd.relax_ratio = s->num("relax_ratio", c.nd.relax_ratio);
        c.nd.hydro_reference_time = s->num("hydro_reference_time", c.nd.hydro_reference_time);
        s->finish();
    }

    top.finish();

    if (c.sweep) {
        auto& sp = c.sweep->spec;
        sp.geometry = c.geometry;
        sp.resolution.n1 = c.n1;
        sp.resolution.n2 = c.n2;
        sp.base = c.params;
        sp.initial = c.initial;
        sp.diagnostics = c.diagnostics;
        sp.window_start = c.run.window_start;
        sp.sample_dt = c.run.sample_dt > 0.0 ? c.run.sample_dt : 0.1;
        if (c.sweep->rows_file.empty()) {
            try {
                sp.validate();
            } catch (const Error& e) {
                throw Error(std::string("config: ") + e.what());
            }
        }
    }

    // Effective configuration.
    json eff;
    eff["geometry"] = geometry_json(c.geometry);
    eff["grid"] = {{"n1", c.n1}, {"n2", c.n2}, {"dealias", c.dealias}};
    eff["params"] = params_json(c.params);
    eff["initial"] = initial_json(c.initial);
    eff["diagnostics"] = {{"cadence", c.run.cadence},
                          {"sample_dt", c.run.sample_dt},
                          {"window_start", c.run.window_start},
                          {"strip_deltas", c.diagnostics.strip_deltas},
                          {"delta_bg", c.diagnostics.delta_bg},
                          {"identities", c.diagnostics.identities}};
    eff["output"] = {{"directory", c.output.directory},
                     {"csv", c.output.csv},
                     {"json", c.output.json},
                     {"checkpoint", c.output.checkpoint}};
    if (c.sweep) {
        const auto& sw = *c.sweep;
        const auto& r = sw.spec.resolution;
        eff["sweep"] = {{"Ra", sw.spec.Ra},
                        {"Pr", sw.spec.Pr},
                        {"alpha", sw.spec.alpha},
                        {"resolution",
                         {{"policy", r.per_ra ? "per_ra" : "fixed"},
                          {"n2_factor", r.n2_factor},
                          {"n2_min", r.n2_min},
                          {"n2_multiple", r.n2_multiple},
                          {"n1_per_n2", r.n1_per_n2}}},
                        {"seed_per_run", sw.spec.seed_per_run},
                        {"threads", sw.spec.threads},
                        {"rows_file", sw.rows_file},
                        {"fit_ra_min", sw.fit_ra_min},
                        {"fit_ra_max", num_or_null(sw.fit_ra_max)},
                        {"bound_exponent", sw.bound_exponent},
                        {"bound_tol", sw.bound_tol}};
    }
    if (c.identities) {
        const auto& is = *c.identities;
        eff["identities"] = {{"n1", is.n1},
                             {"n2_levels", is.n2_levels},
                             {"fields", is.fields},
                             {"min_order", is.min_order},
                             {"alphas", is.alphas},
                             {"coercivity_ensemble", is.coercivity_ensemble},
                             {"coercivity_fraction", is.coercivity_fraction},
                             {"coercivity_stability", is.coercivity_stability},
                             {"corrupt_metric", is.corrupt_metric},
                             {"run_identities", is.identities},
                             {"run_elliptic", is.elliptic},
                             {"run_coercivity", is.coercivity},
                             {"geometries", c.identity_geometries}};
    }
    eff["nd"] = {{"decay_C", c.nd.decay_C},
                 {"decay_eps", c.nd.decay_eps},
                 {"decay_budget", c.nd.decay_budget ? json(*c.nd.decay_budget) : json(nullptr)},
                 {"conservation_tol", c.nd.conservation_tol},
                 {"relax_early", c.nd.relax_early},
                 {"relax_late", c.nd.relax_late},
                 {"relax_ratio", c.nd.relax_ratio},
                 {"hydro_reference_time", c.nd.hydro_reference_time}};
    c.effective_json = eff.dump(2) + "\n";
    c.hash = hash_hex(eff.dump());
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("config: cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace slip
