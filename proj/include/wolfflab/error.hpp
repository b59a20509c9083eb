#pragma once

#include <stdexcept>
#include <string>

namespace wolfflab {

enum class ErrorCode {
    invalid_domain,
    empty_region,
    invalid_exponent,
    unsupported_representation,
    atom_on_boundary,
    ellipticity_violation,
    under_resolved_radius,
    insufficient_samples,
    invalid_parameter,
    geometry,
    degenerate_fit,
    hard_failure,
    chart_radius_exceeded,
    parse,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_domain: return "invalid-domain";
    case ErrorCode::empty_region: return "empty-region";
    case ErrorCode::invalid_exponent: return "invalid-exponent";
    case ErrorCode::unsupported_representation: return "unsupported-representation";
    case ErrorCode::atom_on_boundary: return "atom-on-boundary";
    case ErrorCode::ellipticity_violation: return "ellipticity-violation";
    case ErrorCode::under_resolved_radius: return "under-resolved-radius";
    case ErrorCode::insufficient_samples: return "insufficient-samples";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::geometry: return "geometry";
    case ErrorCode::degenerate_fit: return "degenerate-fit";
    case ErrorCode::hard_failure: return "hard-failure";
    case ErrorCode::chart_radius_exceeded: return "chart-radius-exceeded";
    case ErrorCode::parse: return "parse";
    }
    return "unknown";
}

// Every library failure carries a machine-checkable code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace wolfflab
