#pragma once

namespace sqzsim {

// Single-mode Gaussian sideband state in principal-axis form: the two
// principal quadrature variances in shot-noise units (vacuum = 1) and the
// orientation of the squeezed axis relative to the readout quadrature.
// Every operation below is closed on this form; v_min * v_max >= 1 is
// preserved throughout (equality for pure states).
struct QuadratureState {
    double v_min = 1.0;
    double v_max = 1.0;
    double theta = 0.0; // rad
};

// Squeezing depth in dB, -10*log10(v_min); positive below shot noise.
struct SqueezeLevel {
    double db = 0.0;
};

QuadratureState vacuum();

// v_min = e^{-2r}, v_max = e^{+2 r_anti}. ASD convention: amplitude scales
// by e^{-r}, so dB = 20 r log10(e). Throws std::domain_error unless
// r_anti >= r >= 0.
QuadratureState squeezed(double r, double r_anti, double theta = 0.0);

QuadratureState rotate(const QuadratureState& s, double phi);

// Beamsplitter loss model, V' = eta*V + (1 - eta) on both principal
// variances. eta is a power efficiency in [0, 1].
QuadratureState apply_loss(const QuadratureState& s, double eta);

// Gaussian phase-jitter average: with theta ~ N(0, sigma^2),
// E[sin^2 theta] = (1 - e^{-2 sigma^2})/2, so both variances move toward
// their midpoint by that fraction of the split.
QuadratureState dephase(const QuadratureState& s, double sigma);

// Homodyne projection onto the quadrature at angle theta_lo:
// v_min cos^2(d) + v_max sin^2(d), d = theta_lo - theta.
double measured_variance(const QuadratureState& s, double theta_lo);

double db_to_variance(double db); // 10^{-db/10}
double variance_to_db(double v);  // -10 log10(v), v > 0
double r_to_db(double r);         // 20 r log10(e), r >= 0
double db_to_r(double db);        // inverse of r_to_db

} // namespace sqzsim
