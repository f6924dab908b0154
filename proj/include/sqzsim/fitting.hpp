#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sqzsim/config.hpp"
#include "sqzsim/spectra.hpp"

namespace sqzsim {

// Parameters the fitter knows how to vary or pin. eta_det is listed so
// profile() can pin it, but it is never accepted in the free set: the model
// depends on eta and power_bs only through their product, so freeing eta
// (with or without power_bs) asks for an unidentifiable fit.
enum class FitParam { power_bs, detuning, amp_1hz, slope, r_eff, eta_det };

const char* fit_param_name(FitParam p);
// Accepts canonical names plus the short aliases P, power, phi, eta.
FitParam parse_fit_param(const std::string& name);

struct BoundedParam {
    FitParam param;
    double lo = 0.0;
    double hi = 0.0;
    double init = 0.0;
};

// The model fitted to the data is the smooth budget
// sqrt(shot^2 + radiation_pressure^2 + powerlaw^2); Lorentzian line bins
// (f +- 3 bins around config lines and mask_lines) are excluded from the
// objective instead of modeled.
struct FitProblem {
    Spectrum spectrum;
    Config config; // source of every parameter not in `free`
    std::vector<BoundedParam> free;
    double band_lo = 10e3; // Hz
    double band_hi = 100e3;
    std::string loss = "mean_sq_log10_ratio";
    double r_eff_fixed = 0.0; // used unless r_eff is free
    std::vector<double> mask_lines; // extra line centers to mask, Hz
    int max_evals = 20000;
};

struct FitEstimate {
    FitParam param;
    double value = 0.0;
    double uncertainty = 0.0; // curvature proxy, same units as value
};

struct FitResult {
    std::vector<FitEstimate> estimates;
    double residual_rms = 0.0; // sqrt of the mean squared log10 ratio
    int n_evals = 0;
    bool converged = false;
    // Accepted objective after each improving step, starting at the initial
    // point; non-increasing by construction.
    std::vector<double> objective_trace;
};

// Minimizes the mean of log10(model/data)^2 over unmasked bins in the fit
// band with a damped finite-difference Gauss-Newton search in box-scaled
// coordinates, followed by one restart pass from the solution. Converged
// means the last accepted step moved every scaled parameter by < 1e-6 and
// the objective by < 1e-12; running out of max_evals returns best-so-far
// with converged = false. Deterministic for identical inputs.
//
// When power_bs and detuning are both free the objective is exactly flat
// along the curve G(detuning)*power = const (the shot floor has no
// frequency shape to separate them), so the minimizer set is a 1-D curve.
// Like minimum-norm least squares on rank-deficient systems, fit() then
// reports the canonical representative: the zero-detuning point, adopted
// whenever it ties the found minimum within the convergence resolution.
// objective_trace records the descent iterations; the adopted
// representative can differ from the last entry by at most that tolerance.
//
// Uncertainties are a diagonal curvature proxy,
// residual_rms / sqrt((J^T J)_ii), mapped back to physical units; they
// ignore parameter correlations (and degenerate to infinity where a
// column's first derivative vanishes, e.g. detuning at exactly zero).
//
// Throws std::invalid_argument on an empty or out-of-contract free set
// (eta_det free, bounds not lo < hi, init outside bounds, band outside the
// spectrum) and DegenerateDataError when an unmasked in-band bin has
// nonpositive ASD.
FitResult fit(const FitProblem& problem);

struct ProfilePoint {
    double value = 0.0;
    double objective = 0.0;
};

// Objective along a 1-D slice with `parameter` pinned at each grid value.
// With reoptimize the remaining free parameters are re-fit at every point
// (profile style); without it they are held at their initial values. The
// pinned parameter may come from the free set or from the config (eta_det
// included; this is where the eta*P degeneracy becomes visible as a flat
// profile).
std::vector<ProfilePoint> profile(const FitProblem& problem, FitParam parameter,
                                  const std::vector<double>& grid, bool reoptimize = true);

// Report JSON: estimates with uncertainties, residual_rms, evaluation
// count, convergence flag, fit band and masked line centers.
std::string fit_report_json(const FitProblem& problem, const FitResult& result);

} // namespace sqzsim
