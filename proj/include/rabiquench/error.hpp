#pragma once

#include <stdexcept>
#include <string>

namespace rabiquench {

/// Violated precondition on an argument (non-normalized state, |x| > 1, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Severity { Warning, Error };

/// Rejected model configuration. Warning-level rejections cover physically
/// questionable but computable settings (impact duration exceeding the
/// sampling step); callers may choose to proceed after inspecting them.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what, Severity severity = Severity::Error)
        : std::invalid_argument(what), severity_(severity) {}

    Severity severity() const noexcept { return severity_; }

private:
    Severity severity_;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or mismatched CSV/JSON input.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rabiquench
