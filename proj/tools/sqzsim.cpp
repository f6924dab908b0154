// Command-line front end: noise budgets, loss-chain reports, time-series
// synthesis, spectrum fits and two-spectrum SNR comparison, all as pure
// file-to-file pipelines.
//
// Exit codes: 0 success, 2 input/config error, 3 model singularity,
// 4 analysis failure.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sqzsim/config.hpp"
#include "sqzsim/errors.hpp"
#include "sqzsim/fitting.hpp"
#include "sqzsim/loss_chain.hpp"
#include "sqzsim/manifest.hpp"
#include "sqzsim/noise_model.hpp"
#include "sqzsim/spectra.hpp"

namespace {

using namespace sqzsim;
using nlohmann::json;

constexpr int kExitInput = 2;
constexpr int kExitSingularity = 3;
constexpr int kExitAnalysis = 4;

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

// --config default comes from SQZSIM_CONFIG when the flag is omitted.
std::string default_config_path() {
    const char* env = std::getenv("SQZSIM_CONFIG");
    return env ? env : "";
}

Config load_config_or_die(const std::string& path) {
    if (path.empty())
        throw ConfigError("no config given: pass --config or set SQZSIM_CONFIG");
    return load_config(path);
}

double round3(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double mag = std::pow(10.0, 2 - std::floor(std::log10(std::abs(v))));
    return std::round(v * mag) / mag;
}

// Shared band defaults for synth/fit; the acceptance band of the shipped
// config lives inside it.
constexpr double kSynthBandLo = 20e3;
constexpr double kSynthBandHi = 100e3;

int cmd_budget(int argc, char** argv, std::string config_path,
               double fmin, double fmax, int points, const std::string& grid_kind,
               bool squeezing, std::optional<double> r_eff_override,
               const std::string& out) {
    const Config cfg = load_config_or_die(config_path);
    const std::vector<double> grid = grid_kind == "log" ? log_grid(fmin, fmax, points)
                                                        : linear_grid(fmin, fmax, points);
    const EfficiencyChain& chain = chain_preset(cfg, "injection");
    const NoiseBudget b = assemble_budget(cfg.detector, cfg.squeezer, cfg.classical, chain,
                                          grid, squeezing, r_eff_override);
    write_file_atomic(out, budget_csv(b));

    // Floor = shot component (frequency flat); crossover = first grid point
    // where the classical power-law drops below it.
    const double floor = b.shot.front();
    std::optional<double> crossover;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (b.classical[i] <= b.shot[i]) {
            crossover = grid[i];
            break;
        }
    }
    const SnrGain gain = snr_gain(b.r_eff);

    json summary;
    summary["squeezing"] = squeezing;
    summary["r_eff"] = b.r_eff;
    summary["shot_floor_m_per_sqrthz"] = floor;
    if (crossover) summary["classical_shot_crossover_hz"] = *crossover;
    summary["snr_gain"] = gain.snr_ratio;
    summary["detection_rate_gain"] = gain.detection_rate_ratio;
    summary["rows"] = grid.size();
    const std::string summary_path = out + ".summary.json";
    write_file_atomic(summary_path, summary.dump(2) + "\n");

    const RunManifest m = make_manifest(join_args(argc, argv), serialize(cfg));
    write_manifest(m, out);

    std::cout << "budget: " << grid.size() << " rows -> " << out << "\n"
              << "  shot floor " << round3(floor) << " m/rtHz";
    if (crossover) std::cout << ", crossover " << round3(*crossover) << " Hz";
    std::cout << ", snr gain " << round3(gain.snr_ratio) << "\n";
    return 0;
}

int cmd_chain(int argc, char** argv, std::string config_path, const std::string& preset,
              std::optional<double> measured_db, const std::string& out) {
    const Config cfg = load_config_or_die(config_path);
    const std::string report = chain_report_json(cfg, preset, measured_db);
    if (out.empty()) {
        std::cout << report;
    } else {
        write_file_atomic(out, report);
        const RunManifest m = make_manifest(join_args(argc, argv), serialize(cfg));
        write_manifest(m, out);
        const auto j = json::parse(report);
        std::cout << "chain " << preset << ": detected "
                  << round3(j["detected_db"].get<double>()) << " dB -> " << out << "\n";
    }
    return 0;
}

int cmd_synth(int argc, char** argv, std::string config_path, double rate, double duration,
              std::uint64_t seed, const std::vector<double>& line_arg, bool squeezing,
              std::optional<double> r_eff_override, const std::vector<double>& band_arg,
              std::size_t segment, double overlap, const std::string& out) {
    const Config cfg = load_config_or_die(config_path);
    std::optional<LineSpec> line;
    if (!line_arg.empty()) {
        if (line_arg.size() != 2)
            throw std::invalid_argument("--line expects f0_hz,amplitude_m");
        line = LineSpec{line_arg[0], line_arg[1]};
    }
    Band band{kSynthBandLo, std::min(kSynthBandHi, rate / 2.0)};
    if (!band_arg.empty()) {
        if (band_arg.size() != 2) throw std::invalid_argument("--band expects lo_hz,hi_hz");
        band = Band{band_arg[0], band_arg[1]};
    }

    // Budget grid: dense log grid over the synthesis band (plus a little
    // margin so edge bins interpolate instead of extrapolating).
    const std::vector<double> grid =
        log_grid(std::max(1.0, band.lo * 0.9), std::min(rate / 2.0, band.hi * 1.1), 2048);
    const EfficiencyChain& chain = chain_preset(cfg, "injection");
    const NoiseBudget b = assemble_budget(cfg.detector, cfg.squeezer, cfg.classical, chain,
                                          grid, squeezing, r_eff_override);

    const TimeSeries ts = synthesize(b, rate, duration, seed, line, band);
    write_timeseries(ts, out);
    const Spectrum spec = welch_asd(ts, segment, overlap, "hann");
    const std::string spec_path = out + ".spectrum.csv";
    write_file_atomic(spec_path, spectrum_csv(spec));

    const RunManifest m = make_manifest(join_args(argc, argv), serialize(cfg), {seed});
    write_manifest(m, out);

    std::cout << "synth: " << ts.samples.size() << " samples at " << rate << " Hz (seed "
              << seed << ") -> " << out << "\n"
              << "  spectrum " << spec.n_averages << " averages, resolution "
              << round3(spec.resolution) << " Hz -> " << spec_path << "\n";
    return 0;
}

int cmd_fit(int argc, char** argv, std::string config_path, const std::string& spectrum_path,
            const std::vector<std::string>& free_names, const std::vector<double>& inits,
            const std::vector<double>& bounds, double band_lo, double band_hi,
            double r_eff_data, const std::vector<double>& mask, const std::string& out) {
    const Config cfg = load_config_or_die(config_path);

    FitProblem problem;
    problem.spectrum = read_spectrum_csv(spectrum_path);
    problem.config = cfg;
    problem.band_lo = band_lo;
    problem.band_hi = band_hi;
    problem.r_eff_fixed = r_eff_data;
    problem.mask_lines = mask;

    if (free_names.empty()) throw std::invalid_argument("--free needs at least one parameter");
    if (!inits.empty() && inits.size() != free_names.size())
        throw std::invalid_argument("--init must match --free in length");
    if (!bounds.empty() && bounds.size() != 2 * free_names.size())
        throw std::invalid_argument("--bounds needs lo,hi per free parameter");

    for (std::size_t i = 0; i < free_names.size(); ++i) {
        BoundedParam bp;
        bp.param = parse_fit_param(free_names[i]);
        switch (bp.param) {
        case FitParam::power_bs: bp.lo = 1e-3; bp.hi = 1.0; bp.init = cfg.detector.power_bs; break;
        case FitParam::detuning: bp.lo = -0.5; bp.hi = 0.5; bp.init = cfg.detector.detuning; break;
        case FitParam::amp_1hz:
            bp.lo = cfg.classical.amp_1hz / 100.0;
            bp.hi = cfg.classical.amp_1hz * 100.0;
            bp.init = cfg.classical.amp_1hz;
            break;
        case FitParam::slope: bp.lo = 0.0; bp.hi = 40.0; bp.init = cfg.classical.slope; break;
        case FitParam::r_eff: bp.lo = 0.0; bp.hi = 2.0; bp.init = 0.3; break;
        case FitParam::eta_det: bp.lo = 0.0; bp.hi = 1.0; bp.init = cfg.detector.eta_det; break;
        }
        if (!bounds.empty()) {
            bp.lo = bounds[2 * i];
            bp.hi = bounds[2 * i + 1];
        }
        if (!inits.empty()) bp.init = inits[i];
        problem.free.push_back(bp);
    }

    const FitResult result = fit(problem);
    const std::string report = fit_report_json(problem, result);
    if (out.empty()) {
        std::cout << report;
    } else {
        write_file_atomic(out, report);
        const RunManifest m = make_manifest(join_args(argc, argv), serialize(cfg));
        write_manifest(m, out);
    }
    std::ostringstream brief;
    brief << "fit: " << (result.converged ? "converged" : "not converged") << " in "
          << result.n_evals << " evals, residual rms " << round3(result.residual_rms) << "\n";
    for (const auto& e : result.estimates)
        brief << "  " << fit_param_name(e.param) << " = " << round3(e.value) << " +- "
              << round3(e.uncertainty) << "\n";
    std::cout << brief.str();
    return 0;
}

int cmd_snr(int argc, char** argv, const std::string& spec_a, const std::string& spec_b,
            double f0, const std::vector<double>& floor_band, const std::string& out) {
    if (floor_band.size() != 2)
        throw std::invalid_argument("--floor-band expects lo_hz,hi_hz");
    const Spectrum a = read_spectrum_csv(spec_a);
    const Spectrum b = read_spectrum_csv(spec_b);
    const LineEstimate ea = line_snr(a, f0, floor_band[0], floor_band[1]);
    const LineEstimate eb = line_snr(b, f0, floor_band[0], floor_band[1]);

    const double snr_ratio = eb.snr / ea.snr;
    json j;
    j["f0_hz"] = f0;
    j["floor_band_hz"] = {floor_band[0], floor_band[1]};
    j["a"] = {{"snr", ea.snr}, {"amplitude_m", ea.amplitude}, {"floor", ea.floor_asd}};
    j["b"] = {{"snr", eb.snr}, {"amplitude_m", eb.amplitude}, {"floor", eb.floor_asd}};
    j["floor_ratio_b_over_a"] = eb.floor_asd / ea.floor_asd;
    j["amplitude_ratio_b_over_a"] = eb.amplitude / ea.amplitude;
    j["snr_ratio_b_over_a"] = snr_ratio;
    j["implied_r_eff"] = std::log(snr_ratio);
    j["implied_detection_rate_gain"] = snr_ratio * snr_ratio * snr_ratio;

    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
        const RunManifest m = make_manifest(join_args(argc, argv), "");
        write_manifest(m, out);
        std::cout << "snr: ratio " << round3(snr_ratio) << ", implied r_eff "
                  << round3(std::log(snr_ratio)) << " -> " << out << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-noise budget, squeezing chain and spectrum toolkit"};
    app.require_subcommand(1);

    std::string config_path = default_config_path();
    std::string out;

    // budget
    auto* budget = app.add_subcommand("budget", "noise budget CSV plus summary JSON");
    double fmin = 1e3, fmax = 128e3;
    int points = 512;
    std::string grid_kind = "log";
    bool squeezing_on = false;
    std::optional<double> r_eff_override;
    double r_eff_flag = 0.0;
    budget->add_option("--config", config_path, "config JSON path (or SQZSIM_CONFIG)");
    budget->add_option("--fmin", fmin, "grid start, Hz")->check(CLI::PositiveNumber);
    budget->add_option("--fmax", fmax, "grid end, Hz")->check(CLI::PositiveNumber);
    budget->add_option("--points", points, "grid size")->check(CLI::PositiveNumber);
    budget->add_option("--grid", grid_kind, "log or linear")
        ->check(CLI::IsMember({"log", "linear"}));
    budget->add_option("--squeezing", [&](const CLI::results_t& r) {
        if (r[0] == "on") squeezing_on = true;
        else if (r[0] == "off") squeezing_on = false;
        else return false;
        return true;
    }, "on or off (default off)");
    auto* reff_opt = budget->add_option("--r-eff", r_eff_flag,
                                        "override the squeeze factor used for the shot floor");
    budget->add_option("--out", out, "budget CSV path")->required();

    // chain
    auto* chain = app.add_subcommand("chain", "efficiency-chain report JSON");
    std::string preset = "injection";
    double measured_db_flag = 0.0;
    chain->add_option("--config", config_path, "config JSON path (or SQZSIM_CONFIG)");
    chain->add_option("--preset", preset, "chain preset name (e.g. injection, monitor)");
    auto* measured_opt = chain->add_option(
        "--measured-db", measured_db_flag, "invert this measured level through the chain");
    chain->add_option("--report", out, "write the JSON report here instead of stdout");

    // synth
    auto* synth = app.add_subcommand("synth", "synthesize a time series and its spectrum");
    double rate = 256e3, duration = 4.0, overlap = 0.5;
    std::uint64_t seed = 1;
    std::size_t segment = 8192;
    std::vector<double> line_arg, band_arg;
    synth->add_option("--config", config_path, "config JSON path (or SQZSIM_CONFIG)");
    synth->add_option("--rate", rate, "sample rate, Hz")->check(CLI::PositiveNumber);
    synth->add_option("--duration", duration, "seconds")->check(CLI::PositiveNumber);
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--line", line_arg, "injected tone f0_hz,amplitude_m")->delimiter(',');
    bool synth_squeezing = false;
    synth->add_option("--squeezing", [&](const CLI::results_t& r) {
        if (r[0] == "on") synth_squeezing = true;
        else if (r[0] == "off") synth_squeezing = false;
        else return false;
        return true;
    }, "on or off (default off)");
    auto* synth_reff_opt = synth->add_option("--r-eff", r_eff_flag,
                                             "override the squeeze factor");
    synth->add_option("--band", band_arg,
                      "colored band lo_hz,hi_hz (default 20000,100000)")->delimiter(',');
    synth->add_option("--segment", segment, "welch segment length")->check(CLI::PositiveNumber);
    synth->add_option("--overlap", overlap, "welch overlap fraction");
    synth->add_option("--out", out, "time-series path (.f64)")->required();

    // fit
    auto* fitc = app.add_subcommand("fit", "fit model parameters to a spectrum CSV");
    std::string spectrum_path;
    std::vector<std::string> free_names;
    std::vector<double> inits, bounds, mask;
    double band_lo = 10e3, band_hi = 100e3, r_eff_data = 0.0;
    fitc->add_option("--config", config_path, "config JSON path (or SQZSIM_CONFIG)");
    fitc->add_option("--spectrum", spectrum_path, "input spectrum CSV")->required();
    fitc->add_option("--free", free_names, "parameters to fit, e.g. P,phi")
        ->required()
        ->delimiter(',');
    fitc->add_option("--init", inits, "initial values, one per free parameter")->delimiter(',');
    fitc->add_option("--bounds", bounds, "lo,hi per free parameter")->delimiter(',');
    std::vector<double> fit_band;
    fitc->add_option("--band", fit_band, "fit band lo_hz,hi_hz (default 10000,100000)")
        ->delimiter(',');
    fitc->add_option("--r-eff-data", r_eff_data,
                     "squeeze factor of the data when r_eff is not free (default 0)");
    fitc->add_option("--mask", mask, "extra line centers to mask, Hz")->delimiter(',');
    fitc->add_option("--out", out, "fit report JSON path (stdout if omitted)");

    // snr
    auto* snr = app.add_subcommand("snr", "compare a line between two spectra");
    std::string spec_a, spec_b;
    double f0 = 50e3;
    std::vector<double> floor_band{44e3, 49e3};
    snr->add_option("--spectrum-a", spec_a, "reference spectrum CSV")->required();
    snr->add_option("--spectrum-b", spec_b, "comparison spectrum CSV")->required();
    snr->add_option("--f0", f0, "line frequency, Hz")->required();
    snr->add_option("--floor-band", floor_band, "floor band lo_hz,hi_hz")->delimiter(',');
    snr->add_option("--out", out, "comparison JSON path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput; // keep the documented input-error code
    }

    try {
        if (budget->parsed()) {
            if (reff_opt->count()) r_eff_override = r_eff_flag;
            return cmd_budget(argc, argv, config_path, fmin, fmax, points, grid_kind,
                              squeezing_on, r_eff_override, out);
        }
        if (chain->parsed()) {
            std::optional<double> measured;
            if (measured_opt->count()) measured = measured_db_flag;
            return cmd_chain(argc, argv, config_path, preset, measured, out);
        }
        if (synth->parsed()) {
            if (synth_reff_opt->count()) r_eff_override = r_eff_flag;
            return cmd_synth(argc, argv, config_path, rate, duration, seed, line_arg,
                             synth_squeezing, r_eff_override, band_arg, segment, overlap, out);
        }
        if (fitc->parsed()) {
            if (!fit_band.empty()) {
                if (fit_band.size() != 2)
                    throw std::invalid_argument("--band expects lo_hz,hi_hz");
                band_lo = fit_band[0];
                band_hi = fit_band[1];
            }
            return cmd_fit(argc, argv, config_path, spectrum_path, free_names, inits, bounds,
                           band_lo, band_hi, r_eff_data, mask, out);
        }
        if (snr->parsed())
            return cmd_snr(argc, argv, spec_a, spec_b, f0, floor_band, out);
    } catch (const SingularityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSingularity;
    } catch (const AnalysisError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAnalysis;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
