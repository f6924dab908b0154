#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "sqzsim/config.hpp"

using namespace sqzsim;

namespace {

// Mirrors the shipped prototype file; tests mutate pieces of it.
const char* kBase = R"({
  "detector": {
    "wavelength_m": 1.064e-6,
    "power_bs_w": 0.057,
    "R_s_power": 0.925,
    "R_m_power": 0.995,
    "detuning_rad": 0.0,
    "michelson_offset_rad": 0.013199969132730223,
    "eta_det": 0.825,
    "mirror_mass_kg": 0.25,
    "offset_convention": "one_way_phase"
  },
  "squeezer": {"source_sqz_db": 9.3, "phase_jitter_rms_rad": 0.0},
  "classical": {"amp_1hz_m_per_sqrthz": 6.427869649948563e94, "slope": 24.0, "lines": []},
  "chains": {
    "injection": [
      {"name": "injection_roundtrip", "eta_power": 0.775},
      {"name": "mode_overlap", "eta_power": 0.960},
      {"name": "detection", "eta_power": 0.93},
      {"name": "src_reflection", "src_reflection": true}
    ],
    "monitor": [
      {"name": "quantum_efficiency", "eta_power": 0.93},
      {"name": "homodyne", "eta_power": 0.992}
    ]
  },
  "readout": {"dark_noise_db_below_shot": 6.0, "include_dark_noise": false}
})";

std::string replaced(const std::string& from, const std::string& to) {
    std::string s = kBase;
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
}

bool has_field(const ValidationError& e, const std::string& needle) {
    for (const auto& v : e.violations())
        if (v.field.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_CASE("prototype-style config parses to the expected values") {
    const Config c = parse_config(kBase);
    CHECK(c.detector.wavelength == 1.064e-6);
    CHECK(c.detector.power_bs == 0.057);
    CHECK(c.detector.r_s == std::sqrt(0.925));
    CHECK(c.detector.r_m == std::sqrt(0.995));
    CHECK(c.detector.eta_det == 0.825);
    CHECK(c.detector.mirror_mass == 0.25);
    CHECK(c.detector.offset_convention == OffsetConvention::one_way_phase);

    // No explicit anti-squeezing: assumed pure and flagged.
    CHECK(c.squeezer.source_sqz_db == 9.3);
    CHECK(c.squeezer.source_antisqz_db == 9.3);
    CHECK(c.squeezer.antisqz_assumed_pure);

    CHECK(c.classical.slope == 24.0);
    CHECK(c.chains.at("injection").stages.size() == 4);
    CHECK(c.chains.at("monitor").stages.size() == 2);

    // SRC reflection stage resolved from the detector at parse time.
    const EfficiencyStage& src = c.chains.at("injection").stages[3];
    CHECK(src.from_detector);
    CHECK(src.eta == doctest::Approx(0.7456448186491271).epsilon(1e-14));

    CHECK(c.readout.dark_noise_db_below_shot == 6.0);
    CHECK_FALSE(c.readout.include_dark_noise);
}

TEST_CASE("reflectivities accept amplitude or power form, not both") {
    const Config amp = parse_config(
        replaced("\"R_s_power\": 0.925", "\"r_s_amplitude\": 0.5"));
    CHECK(amp.detector.r_s == 0.5);

    CHECK_THROWS_AS(
        parse_config(replaced("\"R_s_power\": 0.925",
                              "\"R_s_power\": 0.925, \"r_s_amplitude\": 0.96")),
        ConfigError);
    CHECK_THROWS_AS(parse_config(replaced("\"R_m_power\": 0.995,", "")), ConfigError);
}

TEST_CASE("unknown and missing keys are parse errors that name the key") {
    try {
        parse_config(replaced("\"eta_det\"", "\"eta_dett\""));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("eta_dett") != std::string::npos);
    }

    // Mirror mass has no sane default; it must be explicit.
    CHECK_THROWS_AS(parse_config(replaced("\"mirror_mass_kg\": 0.25,", "")), ConfigError);
    CHECK_THROWS_AS(parse_config(replaced("\"readout\"", "\"readoutt\"")), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"detector\": 3}"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
}

TEST_CASE("omitted optional keys take documented defaults") {
    const Config c = parse_config(replaced("\"detuning_rad\": 0.0,", ""));
    CHECK(c.detector.detuning == 0.0);

    // Whole sections may be absent.
    const char* minimal = R"({
      "detector": {
        "wavelength_m": 1.064e-6, "power_bs_w": 0.057,
        "R_s_power": 0.925, "R_m_power": 0.995,
        "eta_det": 0.825, "mirror_mass_kg": 0.25
      }
    })";
    const Config m = parse_config(minimal);
    CHECK(m.squeezer.source_sqz_db == 0.0);
    CHECK(m.squeezer.phase_jitter_rms == 0.0);
    CHECK(m.classical.amp_1hz == 0.0);
    CHECK(m.classical.slope == 2.0);
    CHECK(m.chains.empty());
    CHECK(m.readout.dark_noise_db_below_shot == 6.0);
    CHECK(m.detector.michelson_offset == 0.0);
}

TEST_CASE("offset convention names are checked") {
    const Config c = parse_config(replaced("one_way_phase", "half_fringe"));
    CHECK(c.detector.offset_convention == OffsetConvention::half_fringe);
    CHECK_THROWS_AS(parse_config(replaced("one_way_phase", "one_way")), ConfigError);
}

TEST_CASE("validation collects every violation in one pass") {
    try {
        parse_config(replaced("\"R_s_power\": 0.925", "\"r_s_amplitude\": 1.2"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(has_field(e, "detector.r_s_amplitude"));
    }

    // Two independent violations reported together.
    std::string s = replaced("\"eta_det\": 0.825", "\"eta_det\": 0.0");
    const auto pos = s.find("\"mirror_mass_kg\": 0.25");
    s.replace(pos, std::string("\"mirror_mass_kg\": 0.25").size(),
              "\"mirror_mass_kg\": -1.0");
    try {
        parse_config(s);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.violations().size() >= 2);
        CHECK(has_field(e, "detector.eta_det"));
        CHECK(has_field(e, "detector.mirror_mass_kg"));
    }
}

TEST_CASE("physics invariants are validated") {
    // Anti-squeezing below squeezing breaks the uncertainty bound.
    CHECK_THROWS_AS(
        parse_config(replaced("\"source_sqz_db\": 9.3",
                              "\"source_sqz_db\": 9.3, \"source_antisqz_db\": 5.0")),
        ValidationError);

    // Duplicate line frequencies.
    try {
        parse_config(replaced(
            "\"lines\": []",
            "\"lines\": [{\"f_hz\": 50.0, \"amp_m_per_sqrthz\": 1e-18, \"width_hz\": 1.0},"
            "{\"f_hz\": 50.0, \"amp_m_per_sqrthz\": 2e-18, \"width_hz\": 1.0}]"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(has_field(e, "lines[1].f_hz"));
    }

    // Stage eta outside (0, 1].
    CHECK_THROWS_AS(
        parse_config(replaced("\"eta_power\": 0.775", "\"eta_power\": 0.0")),
        ValidationError);
    CHECK_THROWS_AS(
        parse_config(replaced("\"eta_power\": 0.775", "\"eta_power\": 1.5")),
        ValidationError);

    // Boundary cases that are valid: r_m = 1, eta = 1.
    CHECK_NOTHROW(parse_config(replaced("\"R_m_power\": 0.995", "\"R_m_power\": 1.0")));
    CHECK_NOTHROW(parse_config(replaced("\"eta_power\": 0.775", "\"eta_power\": 1.0")));
}

TEST_CASE("a stage needs exactly one of eta_power or src_reflection") {
    CHECK_THROWS_AS(parse_config(replaced(
                        "{\"name\": \"mode_overlap\", \"eta_power\": 0.960}",
                        "{\"name\": \"mode_overlap\"}")),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(replaced(
            "{\"name\": \"mode_overlap\", \"eta_power\": 0.960}",
            "{\"name\": \"mode_overlap\", \"eta_power\": 0.96, \"src_reflection\": true}")),
        ConfigError);
}

TEST_CASE("serialize and parse round-trip bit-exactly") {
    // Exercise explicit anti-squeezing, lines and half_fringe on the way.
    std::string s = replaced("\"source_sqz_db\": 9.3",
                             "\"source_sqz_db\": 9.3, \"source_antisqz_db\": 12.7");
    const auto lp = s.find("\"lines\": []");
    s.replace(lp, std::string("\"lines\": []").size(),
              "\"lines\": [{\"f_hz\": 50.0, \"amp_m_per_sqrthz\": 1.5e-17, "
              "\"width_hz\": 2.5}]");

    const Config a = parse_config(s);
    const std::string canon = serialize(a);
    const Config b = parse_config(canon);

    CHECK(serialize(b) == canon); // canonical form is a fixed point
    CHECK(b.detector.r_s == a.detector.r_s);
    CHECK(b.detector.r_m == a.detector.r_m);
    CHECK(b.detector.michelson_offset == a.detector.michelson_offset);
    CHECK(b.squeezer.source_antisqz_db == a.squeezer.source_antisqz_db);
    CHECK(b.squeezer.antisqz_assumed_pure == a.squeezer.antisqz_assumed_pure);
    CHECK(b.classical.amp_1hz == a.classical.amp_1hz);
    CHECK(b.classical.lines.size() == 1);
    CHECK(b.classical.lines[0].amp == a.classical.lines[0].amp);
    CHECK(b.chains.at("injection").stages[3].eta ==
          a.chains.at("injection").stages[3].eta);

    // The pure-flag survives the trip: antisqz stays implicit when defaulted.
    const Config pure = parse_config(kBase);
    const Config pure2 = parse_config(serialize(pure));
    CHECK(pure2.squeezer.antisqz_assumed_pure);
    CHECK(pure2.squeezer.source_antisqz_db == pure.squeezer.source_antisqz_db);
}

TEST_CASE("load_config reads files and reports unreadable paths") {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / "sqzsim_test_config.json";
    {
        std::ofstream out(p);
        out << kBase;
    }
    const Config c = load_config(p.string());
    CHECK(c.detector.power_bs == 0.057);
    fs::remove(p);

    CHECK_THROWS_AS(load_config((p.string() + ".missing")), ConfigError);
}

TEST_CASE("validate returns an empty list only for a sound config") {
    Config c = parse_config(kBase);
    CHECK(validate(c).empty());
    c.detector.wavelength = -1.0;
    c.classical.slope = 0.0;
    const auto v = validate(c);
    CHECK(v.size() == 2);
    CHECK(v[0].field == "detector.wavelength_m");
    CHECK(v[1].field == "classical.slope");
}
