#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sqzsim/config.hpp"

namespace sqzsim {

// Per-component displacement ASDs on a common grid, all m/rtHz, one-sided.
// total is the quadrature sum of the four components at every point.
struct NoiseBudget {
    std::vector<double> frequencies;
    std::vector<double> shot;               // frequency-flat SRMI shot noise
    std::vector<double> radiation_pressure; // model-only, never observed
    std::vector<double> classical;          // smooth power-law floor
    std::vector<double> lines;              // Lorentzian narrow features
    std::vector<double> total;
    double r_eff = 0.0; // squeeze factor used for the shot component
};

// Simple-Michelson quantum noise: sqrt(hbar c lambda / (pi P)).
double shot_noise_asd(double P, double lambda);

// Simple-Michelson radiation pressure:
// sqrt(hbar P / (pi^3 c lambda m_red^2 f^4)).
double radiation_pressure_asd(double P, double lambda, double m_red, double f);

// Signal-recycling gain |t_s / (1 - r_s r_m e^{-2i phi})|^2 with
// t_s = sqrt(1 - r_s^2). Throws SingularityError when the denominator
// magnitude drops below 1e-12.
double recycling_gain(double r_s, double r_m, double phi);

// Shot-noise-limited SRMI displacement ASD,
// (1/sqrt(G)) sqrt(hbar c lambda / (pi eta P)) e^{-r_eff}.
double srmi_shot_asd(const DetectorConfig& det, double r_eff);

// Power-law floor plus registered Lorentzian lines in quadrature.
double classical_floor_asd(const ClassicalNoiseConfig& cfg, double f);
double classical_powerlaw_asd(const ClassicalNoiseConfig& cfg, double f);
double classical_lines_asd(const ClassicalNoiseConfig& cfg, double f);

// Logarithmic grid, inclusive endpoints.
std::vector<double> log_grid(double fmin, double fmax, int points);
std::vector<double> linear_grid(double fmin, double fmax, int points);

// Assembles the budget on the grid. With squeezing on, the shot component
// uses r_eff propagated through the chain (source dBs, composite loss,
// phase jitter) unless r_eff_override is given; with squeezing off,
// r_eff = 0. Classical and radiation-pressure components are independent
// of the squeezing switch.
NoiseBudget assemble_budget(const DetectorConfig& det, const SqueezerConfig& sqz,
                            const ClassicalNoiseConfig& cls, const EfficiencyChain& chain,
                            const std::vector<double>& grid, bool squeezing_on,
                            std::optional<double> r_eff_override = std::nullopt);

struct SnrGain {
    double snr_ratio;            // e^{r_eff}
    double detection_rate_ratio; // e^{3 r_eff}
};
SnrGain snr_gain(double r_eff);

// CSV schema: f_hz,shot,rad_pressure,classical,total with full round-trip
// precision. The classical column folds the Lorentzian lines in quadrature
// so the four columns stay self-consistent.
std::string budget_csv(const NoiseBudget& b);

} // namespace sqzsim
