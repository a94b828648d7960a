#pragma once

#include <stdexcept>
#include <string>

namespace csf {

enum class ErrorCode {
    invalid_curve,
    invalid_argument,
    unsupported_topology,
    diagonal_pair,
    numerical_failure,
    domain,
    not_on_sphere,
    indicator_undefined,
    io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_curve: return "invalid curve";
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::unsupported_topology: return "unsupported topology";
        case ErrorCode::diagonal_pair: return "diagonal pair";
        case ErrorCode::numerical_failure: return "numerical failure";
        case ErrorCode::domain: return "domain error";
        case ErrorCode::not_on_sphere: return "curve not on sphere";
        case ErrorCode::indicator_undefined: return "indicator undefined";
        case ErrorCode::io: return "io error";
    }
    return "error";
}

/// Every failure in the library is reported through this type; `code()` tells
/// callers (and the CLI exit-code mapping) which contract was broken.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace csf
