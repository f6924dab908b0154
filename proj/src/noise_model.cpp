#include "sqzsim/noise_model.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sqzsim/constants.hpp"
#include "sqzsim/errors.hpp"
#include "sqzsim/loss_chain.hpp"

namespace sqzsim {

namespace {
constexpr double pi = std::numbers::pi;

void require_positive(double v, const char* name) {
    if (!(v > 0.0))
        throw std::domain_error(std::string(name) + " must be > 0, got " +
                                std::to_string(v));
}
} // namespace

double shot_noise_asd(double P, double lambda) {
    require_positive(P, "P");
    require_positive(lambda, "lambda");
    return std::sqrt(codata.hbar * codata.c * lambda / (pi * P));
}

double radiation_pressure_asd(double P, double lambda, double m_red, double f) {
    require_positive(P, "P");
    require_positive(lambda, "lambda");
    require_positive(m_red, "m_red");
    require_positive(f, "f");
    const double f2 = f * f;
    return std::sqrt(codata.hbar * P /
                     (pi * pi * pi * codata.c * lambda * m_red * m_red * f2 * f2));
}

double recycling_gain(double r_s, double r_m, double phi) {
    if (!(r_s >= 0.0 && r_s < 1.0))
        throw std::domain_error("recycling_gain: r_s must be in [0,1)");
    if (!(r_m >= 0.0 && r_m <= 1.0))
        throw std::domain_error("recycling_gain: r_m must be in [0,1]");
    const std::complex<double> denom =
        1.0 - r_s * r_m * std::exp(std::complex<double>(0.0, -2.0 * phi));
    const double mag2 = std::norm(denom);
    if (std::sqrt(mag2) < 1e-12)
        throw SingularityError("recycling_gain: cavity denominator vanishes "
                               "(r_s r_m e^{-2i phi} too close to 1)");
    return (1.0 - r_s * r_s) / mag2;
}

double srmi_shot_asd(const DetectorConfig& det, double r_eff) {
    if (!(r_eff >= 0.0))
        throw std::domain_error("srmi_shot_asd: r_eff must be >= 0");
    require_positive(det.eta_det, "eta_det");
    const double G = recycling_gain(det.r_s, det.r_m, det.detuning);
    return shot_noise_asd(det.power_bs, det.wavelength) /
           std::sqrt(det.eta_det) / std::sqrt(G) * std::exp(-r_eff);
}

double classical_powerlaw_asd(const ClassicalNoiseConfig& cfg, double f) {
    require_positive(f, "f");
    if (cfg.amp_1hz == 0.0) return 0.0;
    return cfg.amp_1hz * std::pow(f, -cfg.slope);
}

double classical_lines_asd(const ClassicalNoiseConfig& cfg, double f) {
    require_positive(f, "f");
    double p = 0.0; // quadrature accumulation
    for (const auto& l : cfg.lines) {
        const double d = f - l.f;
        const double asd = l.amp * l.width / std::sqrt(d * d + l.width * l.width);
        p += asd * asd;
    }
    return std::sqrt(p);
}

double classical_floor_asd(const ClassicalNoiseConfig& cfg, double f) {
    const double a = classical_powerlaw_asd(cfg, f);
    const double b = classical_lines_asd(cfg, f);
    return std::sqrt(a * a + b * b);
}

std::vector<double> log_grid(double fmin, double fmax, int points) {
    require_positive(fmin, "fmin");
    if (!(fmax > fmin)) throw std::domain_error("log_grid: fmax must exceed fmin");
    if (points < 1) throw std::domain_error("log_grid: points must be >= 1");
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = fmin;
        return g;
    }
    const double lo = std::log(fmin), hi = std::log(fmax);
    for (int i = 0; i < points; ++i)
        g[i] = std::exp(lo + (hi - lo) * i / (points - 1));
    g.front() = fmin;
    g.back() = fmax;
    return g;
}

std::vector<double> linear_grid(double fmin, double fmax, int points) {
    require_positive(fmin, "fmin");
    if (!(fmax > fmin)) throw std::domain_error("linear_grid: fmax must exceed fmin");
    if (points < 1) throw std::domain_error("linear_grid: points must be >= 1");
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = fmin;
        return g;
    }
    for (int i = 0; i < points; ++i)
        g[i] = fmin + (fmax - fmin) * i / (points - 1);
    g.back() = fmax;
    return g;
}

NoiseBudget assemble_budget(const DetectorConfig& det, const SqueezerConfig& sqz,
                            const ClassicalNoiseConfig& cls, const EfficiencyChain& chain,
                            const std::vector<double>& grid, bool squeezing_on,
                            std::optional<double> r_eff_override) {
    if (grid.empty()) throw std::domain_error("assemble_budget: empty grid");
    for (size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::domain_error("assemble_budget: grid must be strictly increasing");

    double r_eff = 0.0;
    if (squeezing_on) {
        if (r_eff_override) {
            if (!(*r_eff_override >= 0.0))
                throw std::domain_error("assemble_budget: r_eff override must be >= 0");
            r_eff = *r_eff_override;
        } else {
            r_eff = propagate(sqz, chain, sqz.phase_jitter_rms).r_eff;
        }
    }

    NoiseBudget b;
    b.r_eff = r_eff;
    b.frequencies = grid;
    const size_t n = grid.size();
    b.shot.resize(n);
    b.radiation_pressure.resize(n);
    b.classical.resize(n);
    b.lines.resize(n);
    b.total.resize(n);

    const double shot = srmi_shot_asd(det, r_eff);
    for (size_t i = 0; i < n; ++i) {
        const double f = grid[i];
        b.shot[i] = shot;
        b.radiation_pressure[i] =
            radiation_pressure_asd(det.power_bs, det.wavelength, det.mirror_mass, f);
        b.classical[i] = classical_powerlaw_asd(cls, f);
        b.lines[i] = classical_lines_asd(cls, f);
        b.total[i] = std::sqrt(b.shot[i] * b.shot[i] +
                               b.radiation_pressure[i] * b.radiation_pressure[i] +
                               b.classical[i] * b.classical[i] +
                               b.lines[i] * b.lines[i]);
    }
    return b;
}

SnrGain snr_gain(double r_eff) {
    if (!(r_eff >= 0.0)) throw std::domain_error("snr_gain: r_eff must be >= 0");
    const double s = std::exp(r_eff);
    return {s, s * s * s};
}

std::string budget_csv(const NoiseBudget& b) {
    std::ostringstream os;
    os.precision(17);
    os << "f_hz,shot,rad_pressure,classical,total\n";
    for (size_t i = 0; i < b.frequencies.size(); ++i) {
        const double cls =
            std::sqrt(b.classical[i] * b.classical[i] + b.lines[i] * b.lines[i]);
        os << b.frequencies[i] << ',' << b.shot[i] << ',' << b.radiation_pressure[i]
           << ',' << cls << ',' << b.total[i] << '\n';
    }
    return os.str();
}

} // namespace sqzsim
