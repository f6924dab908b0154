#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqzsim/errors.hpp"

namespace sqzsim {

// How the static Michelson offset enters the dark-port and SRC-reflection
// models. "one_way_phase" reads the configured value as a one-way arm phase
// (dark-port transmission sin^2(offset), carrier reflectivity reduced by
// cos(2*offset)); "half_fringe" reads it as a full fringe offset
// (sin^2(offset/2), cos(offset)). Neither is asserted correct; reports name
// the active one.
enum class OffsetConvention { one_way_phase, half_fringe };

struct DetectorConfig {
    double wavelength = 0.0;       // m
    double power_bs = 0.0;         // W at the beamsplitter
    double r_s = 0.0;              // amplitude reflectivity, recycling mirror
    double r_m = 0.0;              // amplitude reflectivity, Michelson
    double detuning = 0.0;         // rad
    double michelson_offset = 0.0; // rad
    double eta_det = 0.0;          // power efficiency
    double mirror_mass = 0.0;      // kg (reduced mass)
    OffsetConvention offset_convention = OffsetConvention::one_way_phase;
};

struct SqueezerConfig {
    double source_sqz_db = 0.0;
    double source_antisqz_db = 0.0;
    bool antisqz_assumed_pure = true; // true when source_antisqz_db was defaulted
    double phase_jitter_rms = 0.0;    // rad
};

struct ClassicalLine {
    double f = 0.0;     // Hz
    double amp = 0.0;   // m/rtHz at line center
    double width = 10.0; // Lorentzian half width, Hz
};

struct ClassicalNoiseConfig {
    double amp_1hz = 0.0; // power-law coefficient, m/rtHz at 1 Hz
    double slope = 2.0;   // exponent of the f^{-slope} floor
    std::vector<ClassicalLine> lines;
};

struct EfficiencyStage {
    std::string name;
    double eta = 1.0;
    // Stage eta computed from the detector (SRC reflection) rather than
    // given as a literal in the config file.
    bool from_detector = false;
};

struct EfficiencyChain {
    std::vector<EfficiencyStage> stages;
};

struct ReadoutConfig {
    double dark_noise_db_below_shot = 6.0;
    bool include_dark_noise = false;
};

struct Config {
    DetectorConfig detector;
    SqueezerConfig squeezer;
    ClassicalNoiseConfig classical;
    std::map<std::string, EfficiencyChain> chains;
    ReadoutConfig readout;
};

// Load + validate a JSON config file. Throws ConfigError on parse problems,
// unknown keys, or missing required keys; ValidationError when invariants
// fail. Reflectivities accept either amplitude (r_s_amplitude) or power
// (R_s_power) form and are normalized to amplitude.
Config load_config(const std::string& path);

// Same contract on an in-memory JSON string.
Config parse_config(const std::string& json_text);

// Canonical JSON text (amplitude reflectivities, all fields explicit,
// round-trip decimal precision). parse_config(serialize(c)) == c on all
// fields, bit-exact.
std::string serialize(const Config& c);

// Invariant check; empty list iff the config is valid.
std::vector<Violation> validate(const Config& c);

const char* to_string(OffsetConvention c);

} // namespace sqzsim
