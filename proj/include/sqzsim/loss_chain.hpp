#pragma once

#include <optional>
#include <string>

#include "sqzsim/config.hpp"
#include "sqzsim/gaussian_state.hpp"

namespace sqzsim {

// Product of stage power efficiencies. Throws std::invalid_argument on an
// empty chain and std::domain_error if a stage eta is outside (0, 1].
double composite(const EfficiencyChain& chain);

// Power efficiency of the squeezed field's reflection off the
// signal-recycling cavity, |r_cav|^2 with
//   r_cav = (r_m_eff e^{-2i phi} - r_s) / (1 - r_s r_m_eff e^{-2i phi}),
// where the Michelson offset reduces the carrier reflectivity per the
// configured convention (cos(2*offset) for one-way phase, cos(offset) for
// half-fringe). Throws SingularityError when the cavity denominator
// vanishes.
double src_reflection_efficiency(double r_s, double r_m, double phi, double offset,
                                 OffsetConvention conv = OffsetConvention::one_way_phase);

struct PropagationResult {
    SqueezeLevel detected;  // -10 log10(v_min) after the chain
    QuadratureState state;  // full detected state
    double r_eff = 0.0;     // -ln(v_min)/2, the squeeze factor seen by the readout
    double composite_eta = 1.0;
};

// Builds the source state from the squeezer dB levels, applies the chain's
// composite loss, then the phase-jitter average, and optionally an additive
// dark-noise variance (shot units) on both quadratures.
PropagationResult propagate(const SqueezerConfig& sqz, const EfficiencyChain& chain,
                            double jitter_sigma,
                            std::optional<double> dark_noise_variance = std::nullopt);

// Inverts V_meas = eta V_src + (1 - eta) through the monitor chain.
// Throws InfeasibleMeasurementError when the inversion gives V_src <= 0.
SqueezeLevel infer_source(SqueezeLevel measured, const EfficiencyChain& monitor_chain);

// Carrier power at the dark port, P sin^2(offset_eff) * T_src with
// T_src = t_s^2 / |1 - r_s r_m e^{-2i phi}|^2. A model, not a calibrated
// prediction; see the chain report's model-gap note.
double dark_port_power(double P, double offset, double r_s, double r_m, double phi,
                       OffsetConvention conv = OffsetConvention::one_way_phase);

// Fetches a named chain preset from the config. Throws
// std::invalid_argument if the preset does not exist.
const EfficiencyChain& chain_preset(const Config& cfg, const std::string& name);

// JSON chain report: per-stage eta and cumulative eta/dB, detected level,
// effective r_eff, dark-noise and anti-squeezing flags, dark-port model
// values, and (when measured_db is given) the inferred source level with
// its residual against the configured source.
std::string chain_report_json(const Config& cfg, const std::string& preset,
                              std::optional<double> measured_db = std::nullopt);

} // namespace sqzsim
