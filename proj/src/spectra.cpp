#include "sqzsim/spectra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>

#include "json.hpp"

#include "sqzsim/errors.hpp"
#include "sqzsim/manifest.hpp"

static_assert(std::endian::native == std::endian::little,
              "time-series export assumes a little-endian host");

namespace sqzsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Linear interpolation of the budget's total ASD; the grid is strictly
// increasing by construction (NoiseBudget invariant).
double interp_asd(const std::vector<double>& fs, const std::vector<double>& asd, double f) {
    auto hi = std::lower_bound(fs.begin(), fs.end(), f);
    if (hi == fs.begin()) return asd.front();
    if (hi == fs.end()) return asd.back();
    const std::size_t i = static_cast<std::size_t>(hi - fs.begin());
    const double t = (f - fs[i - 1]) / (fs[i] - fs[i - 1]);
    return asd[i - 1] + t * (asd[i] - asd[i - 1]);
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Pairwise sum of rows[lo, hi) into out (element-wise). Fixed recursion
// shape, so any future parallel split over the same shape reproduces the
// serial result to the last ulp.
void pairwise_accumulate(const std::vector<std::vector<double>>& rows, std::size_t lo,
                         std::size_t hi, std::vector<double>& out) {
    if (hi - lo == 1) {
        out = rows[lo];
        return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::vector<double> right;
    pairwise_accumulate(rows, lo, mid, out);
    pairwise_accumulate(rows, mid, hi, right);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += right[i];
}

} // namespace

double GaussianStream::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // (x >> 11) + 1 scaled by 2^-53 gives uniforms in (0, 1], so log() below
    // never sees zero.
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = kTwoPi * u2;
    cached_ = rad * std::sin(ang);
    has_cached_ = true;
    return rad * std::cos(ang);
}

TimeSeries synthesize(const NoiseBudget& budget, double sample_rate, double duration,
                      std::uint64_t seed, std::optional<LineSpec> line,
                      std::optional<Band> band) {
    if (!(sample_rate > 0.0)) throw std::domain_error("synthesize: sample_rate must be > 0");
    if (!(duration > 0.0)) throw std::domain_error("synthesize: duration must be > 0");
    if (line && !(line->f0 < sample_rate / 2.0))
        throw std::domain_error("synthesize: line at " + std::to_string(line->f0) +
                                " Hz aliases; need f0 < sample_rate/2 = " +
                                std::to_string(sample_rate / 2.0));
    if (band && !(band->lo >= 0.0 && band->hi > band->lo))
        throw std::invalid_argument("synthesize: band must satisfy 0 <= lo < hi");
    if (budget.frequencies.empty() || budget.total.size() != budget.frequencies.size())
        throw std::invalid_argument("synthesize: budget grid and total must be nonempty "
                                    "and the same length");

    const std::size_t n_req = static_cast<std::size_t>(std::llround(duration * sample_rate));
    if (n_req < 4096)
        throw std::invalid_argument("synthesize: duration*sample_rate must be >= 4096, got " +
                                    std::to_string(n_req));
    const std::size_t n = next_pow2(n_req);
    const std::size_t n_half = n / 2;
    const double df = sample_rate / static_cast<double>(n);

    const double lo = band ? band->lo : df;
    const double hi = band ? std::min(band->hi, sample_rate / 2.0) : sample_rate / 2.0;
    if (budget.frequencies.front() > lo || budget.frequencies.back() < hi)
        throw std::invalid_argument(
            "synthesize: budget grid [" + std::to_string(budget.frequencies.front()) + ", " +
            std::to_string(budget.frequencies.back()) + "] Hz does not cover the band [" +
            std::to_string(lo) + ", " + std::to_string(hi) + "] Hz to be colored");

    // Hermitian half spectrum for the unnormalized inverse transform
    // x[j] = sum_k X_k e^{2 pi i jk/n}. A pair of conjugate bins carrying
    // E|X_k|^2 = S_k fs / (2n) contributes S_k * df to the variance, which
    // realizes the one-sided PSD S. Every bin consumes two draws whether or
    // not it is colored, keeping the stream aligned across bands/budgets.
    GaussianStream g(seed);
    std::vector<std::complex<double>> half(n_half + 1, {0.0, 0.0});
    for (std::size_t k = 1; k <= n_half; ++k) {
        const double a = g.next();
        const double b = g.next();
        const double f = df * static_cast<double>(k);
        if (f < lo || f > hi) continue;
        const double s_asd = interp_asd(budget.frequencies, budget.total, f);
        if (k == n_half) {
            // Nyquist bin is real and unpaired: E[X^2] = S fs / n.
            half[k] = {std::sqrt(s_asd * s_asd * sample_rate / static_cast<double>(n)) * a,
                       0.0};
        } else {
            const double sigma =
                std::sqrt(s_asd * s_asd * sample_rate / (2.0 * static_cast<double>(n)));
            half[k] = {sigma * a * std::numbers::sqrt2 / 2.0,
                       sigma * b * std::numbers::sqrt2 / 2.0};
        }
    }

    std::vector<double> out(n);
    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(n),
                                          reinterpret_cast<fftw_complex*>(half.data()),
                                          out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    TimeSeries ts;
    ts.sample_rate = sample_rate;
    ts.seed = seed;
    ts.samples.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_req));
    if (line) {
        const double w = kTwoPi * line->f0 / sample_rate;
        for (std::size_t i = 0; i < n_req; ++i)
            ts.samples[i] += line->amplitude * std::sin(w * static_cast<double>(i));
    }
    return ts;
}

Spectrum welch_asd(const TimeSeries& ts, std::size_t segment_length,
                   double overlap_fraction, const std::string& window) {
    const std::size_t L = segment_length;
    if (!(ts.sample_rate > 0.0)) throw std::invalid_argument("welch_asd: sample_rate must be > 0");
    if (L < 4 || L % 2 != 0)
        throw std::invalid_argument("welch_asd: segment_length must be even and >= 4");
    if (L > ts.samples.size())
        throw std::invalid_argument("welch_asd: segment_length " + std::to_string(L) +
                                    " exceeds series length " +
                                    std::to_string(ts.samples.size()));
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
        throw std::invalid_argument("welch_asd: overlap_fraction must be in [0, 1)");

    std::vector<double> w(L);
    if (window == "hann") {
        for (std::size_t i = 0; i < L; ++i)
            w[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) /
                                        static_cast<double>(L));
    } else if (window == "rectangular") {
        std::fill(w.begin(), w.end(), 1.0);
    } else {
        throw std::invalid_argument("welch_asd: unknown window '" + window +
                                    "' (use hann or rectangular)");
    }
    double wsq = 0.0;
    for (double v : w) wsq += v * v;

    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                     static_cast<double>(L) * (1.0 - overlap_fraction))));
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + L <= ts.samples.size(); s += hop) starts.push_back(s);

    const std::size_t n_bins = L / 2; // DC dropped, Nyquist kept
    std::vector<double> seg(L);
    std::vector<std::complex<double>> spec(L / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(L), seg.data(),
                                          reinterpret_cast<fftw_complex*>(spec.data()),
                                          FFTW_ESTIMATE);

    std::vector<std::vector<double>> psds(starts.size());
    for (std::size_t si = 0; si < starts.size(); ++si) {
        const double* x = ts.samples.data() + starts[si];
        for (std::size_t i = 0; i < L; ++i) seg[i] = x[i] * w[i];
        fftw_execute(plan);
        auto& psd = psds[si];
        psd.resize(n_bins);
        const double norm = 1.0 / (ts.sample_rate * wsq);
        for (std::size_t k = 1; k < L / 2; ++k)
            psd[k - 1] = 2.0 * std::norm(spec[k]) * norm;
        psd[n_bins - 1] = std::norm(spec[L / 2]) * norm; // one-sided factor 1 at Nyquist
    }
    fftw_destroy_plan(plan);

    std::vector<double> mean;
    pairwise_accumulate(psds, 0, psds.size(), mean);
    const double inv = 1.0 / static_cast<double>(psds.size());

    Spectrum s;
    s.resolution = ts.sample_rate / static_cast<double>(L);
    s.n_averages = static_cast<int>(psds.size());
    s.frequencies.resize(n_bins);
    s.asd.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        s.frequencies[k] = s.resolution * static_cast<double>(k + 1);
        s.asd[k] = std::sqrt(mean[k] * inv);
    }
    return s;
}

double band_median(const Spectrum& spec, double f_lo, double f_hi) {
    if (!(f_lo < f_hi)) throw std::invalid_argument("band_median: need f_lo < f_hi");
    std::vector<double> vals;
    for (std::size_t i = 0; i < spec.frequencies.size(); ++i)
        if (spec.frequencies[i] >= f_lo && spec.frequencies[i] <= f_hi)
            vals.push_back(spec.asd[i]);
    if (vals.size() < 5)
        throw std::invalid_argument("band_median: band [" + std::to_string(f_lo) + ", " +
                                    std::to_string(f_hi) + "] Hz holds " +
                                    std::to_string(vals.size()) + " bins, need >= 5");
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size() / 2;
    return vals.size() % 2 == 1 ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
}

LineEstimate line_snr(const Spectrum& spec, double f0, double floor_lo, double floor_hi) {
    const auto& fs = spec.frequencies;
    if (fs.size() < 8) throw std::invalid_argument("line_snr: spectrum too short");
    if (!(f0 >= fs.front() && f0 <= fs.back()))
        throw std::invalid_argument("line_snr: f0 outside the spectrum");
    auto it = std::lower_bound(fs.begin(), fs.end(), f0);
    std::size_t i0 = static_cast<std::size_t>(it - fs.begin());
    if (i0 > 0 && (i0 == fs.size() || fs[i0] - f0 > f0 - fs[i0 - 1])) --i0;

    // The floor band must not touch the line cluster.
    const double guard_lo = fs[i0 >= 3 ? i0 - 3 : 0];
    const double guard_hi = fs[std::min(i0 + 3, fs.size() - 1)];
    if (floor_lo <= guard_hi && floor_hi >= guard_lo)
        throw std::invalid_argument("line_snr: floor band overlaps f0 +- 3 bins");

    const double floor = band_median(spec, floor_lo, floor_hi);

    double peak = 0.0;
    double f_peak = fs[i0];
    for (std::size_t i = (i0 >= 1 ? i0 - 1 : 0); i <= std::min(i0 + 1, fs.size() - 1); ++i) {
        if (spec.asd[i] > peak) {
            peak = spec.asd[i];
            f_peak = fs[i];
        }
    }
    if (!(peak >= 2.0 * floor))
        throw LineNotFoundError("line_snr: peak " + std::to_string(peak) + " at " +
                                std::to_string(f_peak) + " Hz is below twice the floor " +
                                std::to_string(floor));

    double excess = 0.0;
    for (std::size_t i = (i0 >= 2 ? i0 - 2 : 0); i <= std::min(i0 + 2, fs.size() - 1); ++i)
        excess += std::max(spec.asd[i] * spec.asd[i] - floor * floor, 0.0);

    LineEstimate e;
    e.snr = peak / floor;
    e.amplitude = std::sqrt(2.0 * spec.resolution * excess);
    e.peak_asd = peak;
    e.floor_asd = floor;
    e.f_peak = f_peak;
    return e;
}

std::string spectrum_csv(const Spectrum& s) {
    std::ostringstream out;
    out.precision(17);
    out << "f_hz,asd_m_per_sqrthz\n";
    for (std::size_t i = 0; i < s.frequencies.size(); ++i)
        out << s.frequencies[i] << ',' << s.asd[i] << '\n';
    return out.str();
}

Spectrum parse_spectrum_csv(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header) || header != "f_hz,asd_m_per_sqrthz")
        throw std::invalid_argument("spectrum CSV: bad header, expected f_hz,asd_m_per_sqrthz");
    Spectrum s;
    std::string row;
    while (std::getline(in, row)) {
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("spectrum CSV: malformed row '" + row + "'");
        std::size_t pos = 0;
        const double f = std::stod(row.substr(0, comma), &pos);
        const double a = std::stod(row.substr(comma + 1));
        if (!s.frequencies.empty() && f <= s.frequencies.back())
            throw std::invalid_argument("spectrum CSV: frequencies must strictly increase");
        if (!(a >= 0.0)) throw std::invalid_argument("spectrum CSV: negative ASD");
        s.frequencies.push_back(f);
        s.asd.push_back(a);
    }
    if (s.frequencies.size() < 2) throw std::invalid_argument("spectrum CSV: too few rows");
    s.resolution = s.frequencies[1] - s.frequencies[0];
    s.n_averages = 0; // unknown after a round trip through CSV
    return s;
}

Spectrum read_spectrum_csv(const std::string& path) {
    return parse_spectrum_csv(read_file(path));
}

void write_timeseries(const TimeSeries& ts, const std::string& path) {
    std::string raw(ts.samples.size() * sizeof(double), '\0');
    std::memcpy(raw.data(), ts.samples.data(), raw.size());
    write_file_atomic(path, raw);

    nlohmann::json side;
    side["sample_rate_hz"] = ts.sample_rate;
    side["n_samples"] = ts.samples.size();
    side["seed"] = ts.seed;
    side["units"] = "m";
    side["sample_format"] = "float64";
    side["byte_order"] = "little";
    side["generator"] = kGeneratorId;
    write_file_atomic(path + ".json", side.dump(2) + "\n");
}

TimeSeries read_timeseries(const std::string& path) {
    const auto side = nlohmann::json::parse(read_file(path + ".json"));
    TimeSeries ts;
    ts.sample_rate = side.at("sample_rate_hz").get<double>();
    ts.seed = side.at("seed").get<std::uint64_t>();
    const std::size_t n = side.at("n_samples").get<std::size_t>();
    const std::string raw = read_file(path);
    if (raw.size() != n * sizeof(double))
        throw std::invalid_argument("time series " + path + ": size " +
                                    std::to_string(raw.size()) + " does not match sidecar (" +
                                    std::to_string(n) + " float64 frames)");
    ts.samples.resize(n);
    std::memcpy(ts.samples.data(), raw.data(), raw.size());
    return ts;
}

} // namespace sqzsim
