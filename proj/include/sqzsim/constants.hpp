#pragma once

namespace sqzsim {

// CODATA values, fixed at build time and never mutated at runtime.
struct PhysicalConstants {
    double c = 299792458.0;        // speed of light, m/s
    double hbar = 1.054571817e-34; // reduced Planck constant, J*s
};

inline constexpr PhysicalConstants codata{};

} // namespace sqzsim
