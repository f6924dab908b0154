#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sqzsim/noise_model.hpp"

namespace sqzsim {

struct TimeSeries {
    double sample_rate = 0.0; // Hz
    std::vector<double> samples; // displacement, m
    std::uint64_t seed = 0;   // generator seed used
};

// One-sided ASD on a strictly increasing grid within (0, fs/2].
struct Spectrum {
    std::vector<double> frequencies; // Hz
    std::vector<double> asd;         // m/rtHz
    double resolution = 0.0;         // Hz between bins
    int n_averages = 0;
};

// Deterministic standard normals: mt19937_64 with the trigonometric
// Box-Muller transform, uniforms mapped as ((x >> 11) + 1) * 2^-53 so they
// land in (0, 1]. The id string is recorded in output metadata; bit-exact
// reproducibility holds within this implementation.
inline constexpr char kGeneratorId[] = "mt19937_64/box-muller/v1";

class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
    double next();

private:
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

struct LineSpec {
    double f0 = 0.0;        // Hz
    double amplitude = 0.0; // m, peak of the injected sinusoid
};

struct Band {
    double lo = 0.0;
    double hi = 0.0;
};

// Colors white Gaussian noise in the frequency domain to the budget's total
// ASD (linearly interpolated onto the synthesis bins), then adds the
// optional line in the time domain as amplitude*sin(2 pi f0 t). When band
// is given only bins inside [lo, hi] are colored; outside bins are zeroed.
// This keeps steep power-law walls from leaking across the whole band
// through window sidelobes when the result is re-estimated.
//
// duration*sample_rate must be >= 4096; the internal transform length is
// padded to the next power of two and the output truncated back. Each
// frequency bin consumes two draws from the seeded stream in bin order, so
// two budgets synthesized from the same seed share the same white core and
// differ only by the coloring.
//
// Throws std::domain_error if line.f0 >= sample_rate/2 (aliasing) and
// std::invalid_argument if the budget grid does not cover the bins to be
// colored (grid coverage).
TimeSeries synthesize(const NoiseBudget& budget, double sample_rate, double duration,
                      std::uint64_t seed, std::optional<LineSpec> line = std::nullopt,
                      std::optional<Band> band = std::nullopt);

// Averaged-periodogram one-sided ASD. Windows: "hann" (periodic,
// w[n] = 0.5 - 0.5 cos(2 pi n / L)) or "rectangular". Per segment the PSD is
// 2 |X_k|^2 / (fs * sum w^2) for interior bins, factor 1 at Nyquist; the DC
// bin is dropped. No detrending. Segment averages use pairwise summation so
// the result is reduction-order-independent to <= 4 ulp. resolution = fs/L.
// Throws std::invalid_argument on degenerate segmenting (L < 4, L > length,
// overlap outside [0, 1), unknown window).
Spectrum welch_asd(const TimeSeries& ts, std::size_t segment_length = 8192,
                   double overlap_fraction = 0.5, const std::string& window = "hann");

// Median ASD over bins with f in [f_lo, f_hi]. Throws std::invalid_argument
// when the band holds fewer than 5 bins.
double band_median(const Spectrum& spec, double f_lo, double f_hi);

struct LineEstimate {
    double snr = 0.0;       // peak ASD / floor median
    double amplitude = 0.0; // m, Parseval-based estimate over f0 +- 2 bins
    double peak_asd = 0.0;  // m/rtHz
    double floor_asd = 0.0; // m/rtHz
    double f_peak = 0.0;    // Hz, bin where the peak was found
};

// Peak search over f0 +- 1 bins against band_median(floor band). The floor
// band must exclude f0 +- 3 bins. Amplitude comes from the floor-subtracted
// power in f0 +- 2 bins: A = sqrt(2 df sum(max(PSD - floor^2, 0))), which is
// exact for a bin-centered tone under the Hann window. Throws
// LineNotFoundError when the peak is below twice the floor.
LineEstimate line_snr(const Spectrum& spec, double f0, double floor_lo, double floor_hi);

// CSV schema: f_hz,asd_m_per_sqrthz with round-trip precision.
std::string spectrum_csv(const Spectrum& s);
Spectrum parse_spectrum_csv(const std::string& text);
Spectrum read_spectrum_csv(const std::string& path);

// Raw little-endian float64 frames at `path`, JSON sidecar at `path.json`
// carrying sample_rate_hz, n_samples, seed, units and the generator id.
void write_timeseries(const TimeSeries& ts, const std::string& path);
TimeSeries read_timeseries(const std::string& path);

} // namespace sqzsim
