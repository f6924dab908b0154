#include "sqzsim/gaussian_state.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sqzsim {

namespace {
constexpr double pi = std::numbers::pi;
}

QuadratureState vacuum() { return {1.0, 1.0, 0.0}; }

QuadratureState squeezed(double r, double r_anti, double theta) {
    if (!(r >= 0.0))
        throw std::domain_error("squeezed: r must be >= 0, got " + std::to_string(r));
    if (r_anti < r)
        throw std::domain_error("squeezed: r_anti (" + std::to_string(r_anti) +
                                ") must be >= r (" + std::to_string(r) + ")");
    return {std::exp(-2.0 * r), std::exp(2.0 * r_anti), theta};
}

QuadratureState rotate(const QuadratureState& s, double phi) {
    double t = std::fmod(s.theta + phi, pi);
    if (t < 0.0) t += pi;
    return {s.v_min, s.v_max, t};
}

QuadratureState apply_loss(const QuadratureState& s, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::domain_error("apply_loss: eta must be in [0,1], got " + std::to_string(eta));
    return {eta * s.v_min + (1.0 - eta), eta * s.v_max + (1.0 - eta), s.theta};
}

QuadratureState dephase(const QuadratureState& s, double sigma) {
    if (!(sigma >= 0.0))
        throw std::domain_error("dephase: sigma must be >= 0, got " + std::to_string(sigma));
    const double mix = (1.0 - std::exp(-2.0 * sigma * sigma)) / 2.0; // E[sin^2 theta]
    const double split = s.v_max - s.v_min;
    return {s.v_min + split * mix, s.v_max - split * mix, s.theta};
}

double measured_variance(const QuadratureState& s, double theta_lo) {
    const double d = theta_lo - s.theta;
    const double c = std::cos(d);
    const double sn = std::sin(d);
    return s.v_min * c * c + s.v_max * sn * sn;
}

double db_to_variance(double db) { return std::pow(10.0, -db / 10.0); }

double variance_to_db(double v) {
    if (!(v > 0.0))
        throw std::domain_error("variance_to_db: v must be > 0, got " + std::to_string(v));
    return -10.0 * std::log10(v);
}

double r_to_db(double r) {
    if (!(r >= 0.0))
        throw std::domain_error("r_to_db: r must be >= 0, got " + std::to_string(r));
    return 20.0 * r * std::log10(std::numbers::e);
}

double db_to_r(double db) { return db / (20.0 * std::log10(std::numbers::e)); }

} // namespace sqzsim
