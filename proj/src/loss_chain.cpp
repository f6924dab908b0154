#include "sqzsim/loss_chain.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "json.hpp"

#include "sqzsim/errors.hpp"
#include "sqzsim/noise_model.hpp"

namespace sqzsim {

using nlohmann::json;

double composite(const EfficiencyChain& chain) {
    if (chain.stages.empty())
        throw std::invalid_argument("composite: chain has no stages");
    double eta = 1.0;
    for (const auto& st : chain.stages) {
        if (!(st.eta > 0.0 && st.eta <= 1.0))
            throw std::domain_error("composite: stage '" + st.name +
                                    "' eta must be in (0,1], got " +
                                    std::to_string(st.eta));
        eta *= st.eta;
    }
    return eta;
}

double src_reflection_efficiency(double r_s, double r_m, double phi, double offset,
                                 OffsetConvention conv) {
    if (!(r_s >= 0.0 && r_s < 1.0))
        throw std::domain_error("src_reflection_efficiency: r_s must be in [0,1)");
    if (!(r_m >= 0.0 && r_m <= 1.0))
        throw std::domain_error("src_reflection_efficiency: r_m must be in [0,1]");
    // The static offset moves carrier off the dark fringe, reducing the
    // effective Michelson reflectivity seen by the cavity.
    const double r_m_eff =
        r_m * std::cos(conv == OffsetConvention::one_way_phase ? 2.0 * offset : offset);
    const std::complex<double> rot = std::exp(std::complex<double>(0.0, -2.0 * phi));
    const std::complex<double> denom = 1.0 - r_s * r_m_eff * rot;
    if (std::abs(denom) < 1e-12)
        throw SingularityError("src_reflection_efficiency: cavity denominator vanishes");
    const std::complex<double> r_cav = (r_m_eff * rot - r_s) / denom;
    return std::norm(r_cav);
}

PropagationResult propagate(const SqueezerConfig& sqz, const EfficiencyChain& chain,
                            double jitter_sigma,
                            std::optional<double> dark_noise_variance) {
    const double r = db_to_r(sqz.source_sqz_db);
    const double r_anti = db_to_r(sqz.source_antisqz_db);
    QuadratureState s = squeezed(r, r_anti, 0.0);
    const double eta = composite(chain);
    s = apply_loss(s, eta);
    s = dephase(s, jitter_sigma);
    if (dark_noise_variance) {
        if (!(*dark_noise_variance >= 0.0))
            throw std::domain_error("propagate: dark noise variance must be >= 0");
        s.v_min += *dark_noise_variance;
        s.v_max += *dark_noise_variance;
    }
    PropagationResult out;
    out.state = s;
    out.detected = SqueezeLevel{variance_to_db(s.v_min)};
    out.r_eff = -std::log(s.v_min) / 2.0;
    out.composite_eta = eta;
    return out;
}

SqueezeLevel infer_source(SqueezeLevel measured, const EfficiencyChain& monitor_chain) {
    const double eta = composite(monitor_chain);
    const double v_meas = db_to_variance(measured.db);
    const double v_src = (v_meas - (1.0 - eta)) / eta;
    if (!(v_src > 0.0))
        throw InfeasibleMeasurementError(
            "infer_source: measured " + std::to_string(measured.db) +
            " dB is too deep for composite efficiency " + std::to_string(eta) +
            " (source variance would be <= 0)");
    return SqueezeLevel{variance_to_db(v_src)};
}

double dark_port_power(double P, double offset, double r_s, double r_m, double phi,
                       OffsetConvention conv) {
    if (!(P >= 0.0)) throw std::domain_error("dark_port_power: P must be >= 0");
    if (!(r_s >= 0.0 && r_s < 1.0))
        throw std::domain_error("dark_port_power: r_s must be in [0,1)");
    const std::complex<double> denom =
        1.0 - r_s * r_m * std::exp(std::complex<double>(0.0, -2.0 * phi));
    if (std::abs(denom) < 1e-12)
        throw SingularityError("dark_port_power: cavity denominator vanishes");
    const double t_src = (1.0 - r_s * r_s) / std::norm(denom);
    const double half = conv == OffsetConvention::one_way_phase ? offset : offset / 2.0;
    const double sn = std::sin(half);
    return P * sn * sn * t_src;
}

const EfficiencyChain& chain_preset(const Config& cfg, const std::string& name) {
    auto it = cfg.chains.find(name);
    if (it == cfg.chains.end())
        throw std::invalid_argument("no chain preset named '" + name + "' in config");
    return it->second;
}

std::string chain_report_json(const Config& cfg, const std::string& preset,
                              std::optional<double> measured_db) {
    const EfficiencyChain& chain = chain_preset(cfg, preset);
    const SqueezerConfig& sqz = cfg.squeezer;
    const DetectorConfig& det = cfg.detector;

    json report;
    report["preset"] = preset;
    report["source_sqz_db"] = sqz.source_sqz_db;
    report["source_antisqz_db"] = sqz.source_antisqz_db;
    report["anti_squeezing_assumed_pure"] = sqz.antisqz_assumed_pure;
    report["phase_jitter_rms_rad"] = sqz.phase_jitter_rms;

    // Per-stage walk, dark noise and jitter applied after the last stage.
    json stages = json::array();
    {
        QuadratureState s =
            squeezed(db_to_r(sqz.source_sqz_db), db_to_r(sqz.source_antisqz_db), 0.0);
        double cum = 1.0;
        for (const auto& st : chain.stages) {
            s = apply_loss(s, st.eta);
            cum *= st.eta;
            json j;
            j["name"] = st.name;
            j["eta"] = st.eta;
            j["from_detector"] = st.from_detector;
            j["cumulative_eta"] = cum;
            j["cumulative_db"] = variance_to_db(s.v_min);
            stages.push_back(j);
        }
    }
    report["stages"] = stages;

    std::optional<double> dark;
    if (cfg.readout.include_dark_noise)
        dark = db_to_variance(cfg.readout.dark_noise_db_below_shot);
    const PropagationResult prop =
        propagate(sqz, chain, sqz.phase_jitter_rms, dark);
    report["composite_eta"] = prop.composite_eta;
    report["detected_db"] = prop.detected.db;
    report["detected_v_min"] = prop.state.v_min;
    report["detected_v_max"] = prop.state.v_max;
    report["r_eff"] = prop.r_eff;
    report["dark_noise"] = {
        {"included", cfg.readout.include_dark_noise},
        {"db_below_shot", cfg.readout.dark_noise_db_below_shot},
        {"variance_shot_units", db_to_variance(cfg.readout.dark_noise_db_below_shot)},
    };

    if (measured_db) {
        const SqueezeLevel inferred = infer_source(SqueezeLevel{*measured_db}, chain);
        report["inverse"] = {
            {"measured_db", *measured_db},
            {"inferred_source_db", inferred.db},
            {"residual_vs_config_source_db", inferred.db - sqz.source_sqz_db},
        };
    }

    // Dark-port carrier model, printed under both offset conventions with
    // the measured value it overshoots so the gap is never hidden.
    {
        const double active = dark_port_power(det.power_bs, det.michelson_offset,
                                              det.r_s, det.r_m, det.detuning,
                                              det.offset_convention);
        const OffsetConvention other =
            det.offset_convention == OffsetConvention::one_way_phase
                ? OffsetConvention::half_fringe
                : OffsetConvention::one_way_phase;
        const double alternate = dark_port_power(det.power_bs, det.michelson_offset,
                                                 det.r_s, det.r_m, det.detuning, other);
        report["dark_port"] = {
            {"offset_convention", to_string(det.offset_convention)},
            {"model_power_w", active},
            {"alternate_convention", to_string(other)},
            {"alternate_model_power_w", alternate},
            {"note", "effective model, not a calibrated prediction; compare against "
                     "the measured output power before trusting absolute values"},
        };
    }
    return report.dump(2) + "\n";
}

} // namespace sqzsim
