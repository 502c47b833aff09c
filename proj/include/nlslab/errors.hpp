#pragma once

#include <stdexcept>
#include <string>

namespace nlslab {

/// Base class for all domain errors raised by the laboratory.
/// `kind()` is a stable machine-readable tag used by the CLI exit path.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

/// Shooting bracket endpoints do not exhibit undershoot/overshoot behavior.
struct NoBracket : Error {
    explicit NoBracket(const std::string& w) : Error("NoBracket", w) {}
};

/// Computed profile fails the far-field decay requirement.
struct TailDivergence : Error {
    explicit TailDivergence(const std::string& w) : Error("TailDivergence", w) {}
};

/// A derived ground-state identity failed its internal consistency bar.
struct IdentityViolation : Error {
    explicit IdentityViolation(const std::string& w) : Error("IdentityViolation", w) {}
};

/// Requested analysis requires p > 1 + 4/N.
struct NotSupercritical : Error {
    explicit NotSupercritical(const std::string& w) : Error("NotSupercritical", w) {}
};

/// Hypotheses of the localized virial route are violated (e.g. no margin
/// below the threshold, or an endpoint exponent).
struct TechnicalRestriction : Error {
    explicit TechnicalRestriction(const std::string& w) : Error("TechnicalRestriction", w) {}
};

/// Spectral evolution path requested outside its supported dimension.
struct UnsupportedDimension : Error {
    explicit UnsupportedDimension(const std::string& w) : Error("UnsupportedDimension", w) {}
};

/// Field amplitude exceeded the hard overflow guard during a step.
struct Overflow : Error {
    explicit Overflow(const std::string& w) : Error("Overflow", w) {}
};

/// Power-law fit attempted on insufficient or degenerate data.
struct FitIllConditioned : Error {
    explicit FitIllConditioned(const std::string& w) : Error("FitIllConditioned", w) {}
};

/// Trace analysis requested on too few (or nonuniform) samples.
struct InsufficientSamples : Error {
    explicit InsufficientSamples(const std::string& w) : Error("InsufficientSamples", w) {}
};

/// Window construction on an identically-zero field.
struct ZeroField : Error {
    explicit ZeroField(const std::string& w) : Error("ZeroField", w) {}
};

/// One or more audited identities exceeded their tolerance.
struct AuditFailure : Error {
    explicit AuditFailure(const std::string& w) : Error("AuditFailure", w) {}
};

/// A term pair that must cancel identically failed to do so.
struct CancellationFailure : Error {
    explicit CancellationFailure(const std::string& w) : Error("CancellationFailure", w) {}
};

/// Malformed CLI invocation or config file.
struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error("UsageError", w) {}
};

} // namespace nlslab
