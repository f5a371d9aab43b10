#include <cstdlib>
#include <string>

#include "doctest.h"
#include "slip/config.hpp"

using namespace slip;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
    RunConfig c = parse_config(R"({"params": {"Ra": 100}})");
    CHECK(c.params.Ra == 100.0);
    CHECK(c.params.Pr == 1.0);
    CHECK(c.geometry.period == 2.0);
    CHECK(c.run.window_start == doctest::Approx(0.4));
    CHECK(c.hash.size() == 16);
    CHECK_FALSE(c.sweep.has_value());
}

TEST_CASE("validation errors name the key") {
    CHECK(error_of(R"({"params": {"Pr": 1}})").find("Ra") != std::string::npos);
    CHECK(error_of(R"({"params": {"Ra": 1, "Rayleigh": 3}})").find("params.Rayleigh") != std::string::npos);
    CHECK(error_of(R"({"params": {"Ra": 1}, "grid": {"n1": 64, "nx": 3}})").find("grid.nx") != std::string::npos);
    CHECK(error_of(R"({"params": {"Ra": "ten"}})").find("params.Ra") != std::string::npos);
    CHECK(error_of(R"({"params": {"Ra": 1}, "identities": {"n2_levels": [8, 16]}})").find("n2_levels") !=
          std::string::npos);
}

TEST_CASE("syntax errors carry line and column") {
    const std::string msg = error_of("{\n  \"params\": {\"Ra\": 1,}\n}");
    CHECK_FALSE(msg.empty());
    CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("effective config round-trips with the same hash") {
    const std::string text = R"({
      "geometry": {"period": 2, "bottom": {"c0": 0, "sin": [0.1]}, "top": {"c0": 1, "sin": [0.1]}},
      "grid": {"n1": 32, "n2": 33},
      "params": {"Ra": 1000, "Pr": 0.7, "slip": 2, "T": 3, "seed": 9},
      "diagnostics": {"strip_deltas": [0.05]},
      "sweep": {"Ra": [1000, 2000, 4000], "threads": 2}
    })";
    RunConfig a = parse_config(text);
    RunConfig b = parse_config(a.effective_json);
    CHECK(a.hash == b.hash);
    CHECK(a.effective_json == b.effective_json);
    REQUIRE(b.sweep.has_value());
    CHECK(b.sweep->spec.Ra.size() == 3);
    CHECK(b.params.seed == 9);
    CHECK(b.geometry.bottom.b.at(0) == 0.1);

    RunConfig c = parse_config(R"({"params": {"Ra": 1001}})");
    CHECK(c.hash != parse_config(R"({"params": {"Ra": 1000}})").hash);
}

TEST_CASE("hash is FNV-1a 64") {
    CHECK(hash_hex("") == "cbf29ce484222325");
    CHECK(hash_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("output root override") {
    ::unsetenv("SLIPCONV_OUTPUT_ROOT");
    CHECK(resolve_output_dir("out") == "out");
    ::setenv("SLIPCONV_OUTPUT_ROOT", "/tmp/root", 1);
    CHECK(resolve_output_dir("out") == "/tmp/root/out");
    CHECK(resolve_output_dir("/abs/out") == "/abs/out");
    ::unsetenv("SLIPCONV_OUTPUT_ROOT");
}

TEST_CASE("non-diffusive settings") {
    RunConfig c = parse_config(R"({"params": {"Ra": 1, "Pr": 1, "mode": "non_diffusive", "nu_h": 1e-4},
                                   "initial": {"kind": "stratified_blob"}})");
    CHECK(c.params.mode == Mode::non_diffusive);
    CHECK(c.params.nu_h == 1e-4);
    CHECK(c.initial.kind == InitialKind::stratified_blob);
    CHECK_FALSE(error_of(R"({"params": {"Ra": 5, "mode": "non_diffusive"}})").empty());
}
