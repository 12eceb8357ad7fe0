#pragma once

#include <stdexcept>
#include <string>

namespace ffnet {

enum class errc {
    degenerate_degree,
    invalid_mu,
    invalid_lambda,
    invalid_params,
    non_positive_shifted_mu,
    non_convergence,
    blowup,
    internal,
    config,
    io,
};

/// Coarse grouping used for CLI exit codes.
enum class error_family { config, numeric, io };

inline const char* to_string(errc c) {
    switch (c) {
    case errc::degenerate_degree: return "DegenerateDegree";
    case errc::invalid_mu: return "InvalidMu";
    case errc::invalid_lambda: return "InvalidLambda";
    case errc::invalid_params: return "InvalidParams";
    case errc::non_positive_shifted_mu: return "NonPositiveShiftedMu";
    case errc::non_convergence: return "NonConvergence";
    case errc::blowup: return "Blowup";
    case errc::internal: return "InternalError";
    case errc::config: return "ConfigError";
    case errc::io: return "IoError";
    }
    return "UnknownError";
}

inline error_family family_of(errc c) {
    switch (c) {
    case errc::io: return error_family::io;
    case errc::non_convergence:
    case errc::blowup:
    case errc::internal: return error_family::numeric;
    default: return error_family::config;
    }
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }
    error_family family() const noexcept { return family_of(code_); }

private:
    errc code_;
};

} // namespace ffnet
