#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sqzsim {

// Error taxonomy, mapped to CLI exit codes:
//   input/config problems (ConfigError, ValidationError, std::domain_error,
//   std::invalid_argument) -> 2, model singularities -> 3, analysis
//   failures -> 4.

// Malformed or unreadable config file (parse-level problems, unknown keys,
// missing required keys).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Violation {
    std::string field;
    std::string value;
    std::string rule;
};

// Config parsed but one or more invariants do not hold; carries every
// violation so a user can fix the file in one pass.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<Violation> v)
        : std::runtime_error(format(v)), violations_(std::move(v)) {}
    const std::vector<Violation>& violations() const { return violations_; }

private:
    static std::string format(const std::vector<Violation>& v) {
        std::string msg = "config validation failed:";
        for (const auto& x : v)
            msg += "\n  " + x.field + " = " + x.value + ": " + x.rule;
        return msg;
    }
    std::vector<Violation> violations_;
};

// Cavity denominator |1 - r_s r_m e^{-2i phi}| below threshold.
struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Base for failures of an analysis on otherwise valid inputs.
struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Measured squeezing too deep for the claimed losses (inversion gives
// a nonpositive source variance).
struct InfeasibleMeasurementError : AnalysisError {
    using AnalysisError::AnalysisError;
};

// No line above threshold at the requested frequency.
struct LineNotFoundError : AnalysisError {
    using AnalysisError::AnalysisError;
};

// Nonpositive data ASD inside the fit band.
struct DegenerateDataError : AnalysisError {
    using AnalysisError::AnalysisError;
};

} // namespace sqzsim
