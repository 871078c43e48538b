#pragma once

#include "hsplit/analysis.hpp"
#include "hsplit/boundary.hpp"
#include "hsplit/core.hpp"
#include "hsplit/itsp.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace hsplit {

/// A configuration problem tied to one key (missing, unknown, malformed or
/// out of range).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class Method { Itsp, Fd2d };

std::string to_string(Method m);
Method parse_method(std::string_view name);

/// Named parameter sets table1, table3 and table5 (all with T = 2).
HestonParams preset_params(std::string_view name);

struct RunConfig {
    std::optional<std::string> preset;
    HestonParams params;
    double s_max = 4.0;
    double v_max = 4.0;
    std::optional<double> h; // uniform step; otherwise I/J/N
    int I = 0, J = 0, N = 0;
    Method method = Method::Itsp;
    BoundaryKind bc = BoundaryKind::MApABC2;
    ItspConfig itsp;
    ErrorNodes error_nodes = ErrorNodes::All;
    // Evaluation point: either s_tilde directly or spot (at t = 0); v defaults to theta.
    std::optional<double> s_tilde;
    std::optional<double> spot;
    std::optional<double> v;

    GridSpec grid() const;
    /// S~ of the evaluation point (s_tilde, or spot e^{rT}/K, or 1).
    double point_s_tilde() const;
    double point_v() const;
};

/// Flat key=value text. '#' starts a comment; blank lines are ignored.
/// Model keys kappa, theta, sigma, rho, T are required unless `preset` is
/// given, in which case they override the preset. Grid: h, or all of I, J, N
/// (default h = 0.1).
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Config for a named preset with all other keys at their defaults.
RunConfig preset_config(std::string_view name);

} // namespace hsplit
