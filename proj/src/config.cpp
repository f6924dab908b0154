#include "sqzsim/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sqzsim/loss_chain.hpp"

namespace sqzsim {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object())
        throw ConfigError("'" + (where.empty() ? std::string("config root") : where) +
                          "' must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + where + it.key() + "'");
    }
}

double get_num(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key))
        throw ConfigError("missing required key '" + where + key + "'");
    if (!obj.at(key).is_number())
        throw ConfigError("key '" + where + key + "' must be a number");
    return obj.at(key).get<double>();
}

double get_num_or(const json& obj, const std::string& where, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number())
        throw ConfigError("key '" + where + key + "' must be a number");
    return obj.at(key).get<double>();
}

// Exactly one of the amplitude/power spellings; power is converted with a
// square root.
double get_reflectivity(const json& obj, const std::string& where,
                        const std::string& amp_key, const std::string& pow_key) {
    const bool has_amp = obj.contains(amp_key);
    const bool has_pow = obj.contains(pow_key);
    if (has_amp && has_pow)
        throw ConfigError("'" + where + amp_key + "' and '" + where + pow_key +
                          "' are mutually exclusive");
    if (!has_amp && !has_pow)
        throw ConfigError("missing required key '" + where + amp_key + "' (or '" +
                          pow_key + "')");
    if (has_amp) return get_num(obj, where, amp_key);
    const double p = get_num(obj, where, pow_key);
    if (p < 0.0)
        throw ConfigError("'" + where + pow_key + "' must be >= 0");
    return std::sqrt(p);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void check(std::vector<Violation>& out, bool ok, const std::string& field, double value,
           const std::string& rule) {
    if (!ok) out.push_back({field, fmt(value), rule});
}

} // namespace

const char* to_string(OffsetConvention c) {
    return c == OffsetConvention::one_way_phase ? "one_way_phase" : "half_fringe";
}

Config parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    require_keys(root, "", {"detector", "squeezer", "classical", "chains", "readout"});

    Config cfg;

    if (!root.contains("detector"))
        throw ConfigError("missing required section 'detector'");
    {
        const json& d = root.at("detector");
        require_keys(d, "detector.",
                     {"wavelength_m", "power_bs_w", "r_s_amplitude", "R_s_power",
                      "r_m_amplitude", "R_m_power", "detuning_rad",
                      "michelson_offset_rad", "eta_det", "mirror_mass_kg",
                      "offset_convention"});
        cfg.detector.wavelength = get_num(d, "detector.", "wavelength_m");
        cfg.detector.power_bs = get_num(d, "detector.", "power_bs_w");
        cfg.detector.r_s = get_reflectivity(d, "detector.", "r_s_amplitude", "R_s_power");
        cfg.detector.r_m = get_reflectivity(d, "detector.", "r_m_amplitude", "R_m_power");
        cfg.detector.detuning = get_num_or(d, "detector.", "detuning_rad", 0.0);
        cfg.detector.michelson_offset =
            get_num_or(d, "detector.", "michelson_offset_rad", 0.0);
        cfg.detector.eta_det = get_num(d, "detector.", "eta_det");
        // Required-explicit: no nominal mass is assumed for the optics.
        cfg.detector.mirror_mass = get_num(d, "detector.", "mirror_mass_kg");
        if (d.contains("offset_convention")) {
            const std::string s = d.at("offset_convention").get<std::string>();
            if (s == "one_way_phase")
                cfg.detector.offset_convention = OffsetConvention::one_way_phase;
            else if (s == "half_fringe")
                cfg.detector.offset_convention = OffsetConvention::half_fringe;
            else
                throw ConfigError("detector.offset_convention must be 'one_way_phase' "
                                  "or 'half_fringe', got '" + s + "'");
        }
    }

    if (root.contains("squeezer")) {
        const json& s = root.at("squeezer");
        require_keys(s, "squeezer.",
                     {"source_sqz_db", "source_antisqz_db", "phase_jitter_rms_rad"});
        cfg.squeezer.source_sqz_db = get_num_or(s, "squeezer.", "source_sqz_db", 0.0);
        if (s.contains("source_antisqz_db")) {
            cfg.squeezer.source_antisqz_db = get_num(s, "squeezer.", "source_antisqz_db");
            cfg.squeezer.antisqz_assumed_pure = false;
        } else {
            // Pure-state default; flagged in reports.
            cfg.squeezer.source_antisqz_db = cfg.squeezer.source_sqz_db;
            cfg.squeezer.antisqz_assumed_pure = true;
        }
        cfg.squeezer.phase_jitter_rms =
            get_num_or(s, "squeezer.", "phase_jitter_rms_rad", 0.0);
    }

    if (root.contains("classical")) {
        const json& c = root.at("classical");
        require_keys(c, "classical.", {"amp_1hz_m_per_sqrthz", "slope", "lines"});
        cfg.classical.amp_1hz = get_num_or(c, "classical.", "amp_1hz_m_per_sqrthz", 0.0);
        cfg.classical.slope = get_num_or(c, "classical.", "slope", 2.0);
        if (c.contains("lines")) {
            if (!c.at("lines").is_array())
                throw ConfigError("classical.lines must be an array");
            size_t i = 0;
            for (const json& l : c.at("lines")) {
                const std::string where = "classical.lines[" + std::to_string(i) + "].";
                require_keys(l, where, {"f_hz", "amp_m_per_sqrthz", "width_hz"});
                ClassicalLine line;
                line.f = get_num(l, where, "f_hz");
                line.amp = get_num(l, where, "amp_m_per_sqrthz");
                line.width = get_num_or(l, where, "width_hz", 10.0);
                cfg.classical.lines.push_back(line);
                ++i;
            }
        }
    }

    if (root.contains("chains")) {
        const json& ch = root.at("chains");
        if (!ch.is_object()) throw ConfigError("'chains' must be an object");
        for (auto it = ch.begin(); it != ch.end(); ++it) {
            if (!it.value().is_array())
                throw ConfigError("chains." + it.key() + " must be an array of stages");
            EfficiencyChain chain;
            size_t i = 0;
            for (const json& st : it.value()) {
                const std::string where =
                    "chains." + it.key() + "[" + std::to_string(i) + "].";
                require_keys(st, where, {"name", "eta_power", "src_reflection"});
                if (!st.contains("name"))
                    throw ConfigError("missing required key '" + where + "name'");
                EfficiencyStage stage;
                stage.name = st.at("name").get<std::string>();
                const bool has_eta = st.contains("eta_power");
                const bool has_src =
                    st.contains("src_reflection") && st.at("src_reflection").get<bool>();
                if (has_eta == has_src)
                    throw ConfigError("stage '" + where +
                                      "' needs exactly one of eta_power or "
                                      "src_reflection:true");
                if (has_eta) {
                    stage.eta = get_num(st, where, "eta_power");
                } else {
                    stage.from_detector = true;
                    stage.eta = std::numeric_limits<double>::quiet_NaN();
                }
                chain.stages.push_back(stage);
                ++i;
            }
            cfg.chains[it.key()] = chain;
        }
    }

    if (root.contains("readout")) {
        const json& r = root.at("readout");
        require_keys(r, "readout.", {"dark_noise_db_below_shot", "include_dark_noise"});
        cfg.readout.dark_noise_db_below_shot =
            get_num_or(r, "readout.", "dark_noise_db_below_shot", 6.0);
        if (r.contains("include_dark_noise"))
            cfg.readout.include_dark_noise = r.at("include_dark_noise").get<bool>();
    }

    // Resolve SRC-reflection stages once the detector parameters are known
    // to be usable; otherwise leave them NaN so validation names them.
    const DetectorConfig& det = cfg.detector;
    const bool det_usable = det.r_s > 0.0 && det.r_s < 1.0 && det.r_m > 0.0 &&
                            det.r_m <= 1.0;
    for (auto& [name, chain] : cfg.chains) {
        for (auto& stage : chain.stages) {
            if (stage.from_detector && det_usable) {
                stage.eta = src_reflection_efficiency(det.r_s, det.r_m, det.detuning,
                                                      det.michelson_offset,
                                                      det.offset_convention);
            }
        }
    }

    auto violations = validate(cfg);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<Violation> validate(const Config& cfg) {
    std::vector<Violation> v;
    const DetectorConfig& d = cfg.detector;
    check(v, d.wavelength > 0.0, "detector.wavelength_m", d.wavelength, "must be > 0");
    check(v, d.power_bs > 0.0, "detector.power_bs_w", d.power_bs, "must be > 0");
    check(v, d.r_s > 0.0 && d.r_s < 1.0, "detector.r_s_amplitude", d.r_s,
          "must satisfy 0 < r_s < 1");
    check(v, d.r_m > 0.0 && d.r_m <= 1.0, "detector.r_m_amplitude", d.r_m,
          "must satisfy 0 < r_m <= 1");
    check(v, d.eta_det > 0.0 && d.eta_det <= 1.0, "detector.eta_det", d.eta_det,
          "must satisfy 0 < eta <= 1");
    check(v, d.mirror_mass > 0.0, "detector.mirror_mass_kg", d.mirror_mass,
          "must be > 0");

    const SqueezerConfig& s = cfg.squeezer;
    check(v, s.source_sqz_db >= 0.0, "squeezer.source_sqz_db", s.source_sqz_db,
          "must be >= 0");
    check(v, s.source_antisqz_db >= s.source_sqz_db, "squeezer.source_antisqz_db",
          s.source_antisqz_db, "must be >= source_sqz_db (Heisenberg)");
    check(v, s.phase_jitter_rms >= 0.0, "squeezer.phase_jitter_rms_rad",
          s.phase_jitter_rms, "must be >= 0");

    const ClassicalNoiseConfig& c = cfg.classical;
    check(v, c.amp_1hz >= 0.0, "classical.amp_1hz_m_per_sqrthz", c.amp_1hz,
          "must be >= 0");
    check(v, c.slope > 0.0, "classical.slope", c.slope, "must be > 0");
    std::set<double> seen;
    for (size_t i = 0; i < c.lines.size(); ++i) {
        const std::string field = "classical.lines[" + std::to_string(i) + "]";
        check(v, c.lines[i].f > 0.0, field + ".f_hz", c.lines[i].f, "must be > 0");
        check(v, c.lines[i].amp >= 0.0, field + ".amp_m_per_sqrthz", c.lines[i].amp,
              "must be >= 0");
        check(v, c.lines[i].width > 0.0, field + ".width_hz", c.lines[i].width,
              "must be > 0");
        if (!seen.insert(c.lines[i].f).second)
            v.push_back({field + ".f_hz", fmt(c.lines[i].f),
                         "line frequencies must be distinct"});
    }

    for (const auto& [name, chain] : cfg.chains) {
        for (size_t i = 0; i < chain.stages.size(); ++i) {
            const EfficiencyStage& st = chain.stages[i];
            const std::string field =
                "chains." + name + "[" + std::to_string(i) + "] (" + st.name + ")";
            check(v, st.eta > 0.0 && st.eta <= 1.0, field, st.eta,
                  "stage eta must be in (0, 1]");
        }
    }

    const ReadoutConfig& r = cfg.readout;
    check(v, r.dark_noise_db_below_shot >= 0.0, "readout.dark_noise_db_below_shot",
          r.dark_noise_db_below_shot, "must be >= 0");
    return v;
}

std::string serialize(const Config& cfg) {
    json root;
    json d;
    d["wavelength_m"] = cfg.detector.wavelength;
    d["power_bs_w"] = cfg.detector.power_bs;
    d["r_s_amplitude"] = cfg.detector.r_s;
    d["r_m_amplitude"] = cfg.detector.r_m;
    d["detuning_rad"] = cfg.detector.detuning;
    d["michelson_offset_rad"] = cfg.detector.michelson_offset;
    d["eta_det"] = cfg.detector.eta_det;
    d["mirror_mass_kg"] = cfg.detector.mirror_mass;
    d["offset_convention"] = to_string(cfg.detector.offset_convention);
    root["detector"] = d;

    json s;
    s["source_sqz_db"] = cfg.squeezer.source_sqz_db;
    if (!cfg.squeezer.antisqz_assumed_pure)
        s["source_antisqz_db"] = cfg.squeezer.source_antisqz_db;
    s["phase_jitter_rms_rad"] = cfg.squeezer.phase_jitter_rms;
    root["squeezer"] = s;

    json c;
    c["amp_1hz_m_per_sqrthz"] = cfg.classical.amp_1hz;
    c["slope"] = cfg.classical.slope;
    c["lines"] = json::array();
    for (const auto& l : cfg.classical.lines) {
        json jl;
        jl["f_hz"] = l.f;
        jl["amp_m_per_sqrthz"] = l.amp;
        jl["width_hz"] = l.width;
        c["lines"].push_back(jl);
    }
    root["classical"] = c;

    json ch = json::object();
    for (const auto& [name, chain] : cfg.chains) {
        json arr = json::array();
        for (const auto& st : chain.stages) {
            json js;
            js["name"] = st.name;
            if (st.from_detector)
                js["src_reflection"] = true;
            else
                js["eta_power"] = st.eta;
            arr.push_back(js);
        }
        ch[name] = arr;
    }
    root["chains"] = ch;

    json r;
    r["dark_noise_db_below_shot"] = cfg.readout.dark_noise_db_below_shot;
    r["include_dark_noise"] = cfg.readout.include_dark_noise;
    root["readout"] = r;

    return root.dump(2) + "\n";
}

} // namespace sqzsim
