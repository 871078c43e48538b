#include "hsplit/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>

namespace hsplit {

std::string to_string(Method m) { return m == Method::Fd2d ? "fd2d" : "itsp"; }

Method parse_method(std::string_view name) {
    if (name == "itsp") return Method::Itsp;
    if (name == "fd2d") return Method::Fd2d;
    throw DomainError("unknown method '" + std::string(name) + "'");
}

HestonParams preset_params(std::string_view name) {
    HestonParams p;
    if (name == "table1") {
        p.kappa = 5.0, p.theta = 0.08, p.sigma = 0.1, p.rho = -0.6;
    } else if (name == "table3") {
        p.kappa = 0.003, p.theta = 0.5, p.sigma = 0.02, p.rho = 0.2;
    } else if (name == "table5") {
        p.kappa = 3.0, p.theta = 0.2, p.sigma = 0.06, p.rho = -0.3;
    } else {
        throw DomainError("unknown preset '" + std::string(name) + "' (expected table1, table3 or table5)");
    }
    p.maturity = 2.0;
    return p;
}

GridSpec RunConfig::grid() const {
    if (h) return GridSpec::uniform(s_max, v_max, params.maturity, *h);
    return GridSpec(s_max, v_max, I, J, N, params.maturity);
}

double RunConfig::point_s_tilde() const {
    if (s_tilde) return *s_tilde;
    if (spot) return to_transformed(*spot, 0.0, params).s_tilde;
    return 1.0;
}

double RunConfig::point_v() const { return v ? *v : params.theta; }

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& text) {
    double x = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, x);
    if (ec != std::errc() || ptr != end || !std::isfinite(x)) {
        throw ConfigError(key, "expected a decimal number, got '" + text + "'");
    }
    return x;
}

int to_int(const std::string& key, const std::string& text) {
    int x = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, x);
    if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected an integer, got '" + text + "'");
    return x;
}

template <class F>
auto parse_enum(const std::string& key, const std::string& text, F parse) {
    try {
        return parse(text);
    } catch (const DomainError& e) {
        throw ConfigError(key, e.what());
    }
}

const std::set<std::string> kKnownKeys{
    "preset", "kappa", "theta", "sigma", "rho", "T", "r", "K", "s_max", "v_max", "h", "I", "J", "N",
    "method", "bc", "tol", "max_iter", "algorithm", "q1_mode", "norm", "error_nodes",
    "s_tilde", "spot", "v"};

} // namespace

RunConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no), "expected key=value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (!kKnownKeys.count(key)) throw ConfigError(key, "unknown key");
        if (value.empty()) throw ConfigError(key, "empty value");
        if (!kv.emplace(key, value).second) throw ConfigError(key, "duplicate key");
    }

    RunConfig cfg;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto number = [&](const char* key, double& slot) {
        if (const auto* s = get(key)) slot = to_double(key, *s);
    };

    if (const auto* s = get("preset")) {
        cfg.params = parse_enum("preset", *s, preset_params);
        cfg.preset = *s;
    } else {
        for (const char* key : {"kappa", "theta", "sigma", "rho", "T"}) {
            if (!get(key)) throw ConfigError(key, "missing required key");
        }
    }
    number("kappa", cfg.params.kappa);
    number("theta", cfg.params.theta);
    number("sigma", cfg.params.sigma);
    number("rho", cfg.params.rho);
    number("T", cfg.params.maturity);
    number("r", cfg.params.rate);
    number("K", cfg.params.strike);
    number("s_max", cfg.s_max);
    number("v_max", cfg.v_max);

    const bool has_ijn = get("I") || get("J") || get("N");
    if (const auto* s = get("h")) {
        if (has_ijn) throw ConfigError("h", "give either h or I/J/N, not both");
        cfg.h = to_double("h", *s);
    } else if (has_ijn) {
        for (const char* key : {"I", "J", "N"}) {
            if (!get(key)) throw ConfigError(key, "missing (I, J and N go together)");
        }
        cfg.I = to_int("I", *get("I"));
        cfg.J = to_int("J", *get("J"));
        cfg.N = to_int("N", *get("N"));
    } else {
        cfg.h = 0.1;
    }

    if (const auto* s = get("method")) cfg.method = parse_enum("method", *s, parse_method);
    if (const auto* s = get("bc")) cfg.bc = parse_enum("bc", *s, parse_boundary_kind);
    number("tol", cfg.itsp.tol);
    if (const auto* s = get("max_iter")) cfg.itsp.max_iter = to_int("max_iter", *s);
    if (const auto* s = get("algorithm")) cfg.itsp.algorithm = parse_enum("algorithm", *s, parse_algorithm);
    if (const auto* s = get("q1_mode")) cfg.itsp.q1_mode = parse_enum("q1_mode", *s, parse_q1_mode);
    if (const auto* s = get("norm")) {
        if (*s == "scaled") cfg.itsp.norm = IterationNorm::Scaled;
        else if (*s == "raw") cfg.itsp.norm = IterationNorm::Raw;
        else throw ConfigError("norm", "expected scaled or raw, got '" + *s + "'");
    }
    if (const auto* s = get("error_nodes")) cfg.error_nodes = parse_enum("error_nodes", *s, parse_error_nodes);
    if (const auto* s = get("s_tilde")) cfg.s_tilde = to_double("s_tilde", *s);
    if (const auto* s = get("spot")) cfg.spot = to_double("spot", *s);
    if (const auto* s = get("v")) cfg.v = to_double("v", *s);
    if (cfg.s_tilde && cfg.spot) throw ConfigError("spot", "give either s_tilde or spot, not both");

    // Validation, reported against the key that carries the bad value.
    auto check = [](bool ok, const char* key, const char* msg) {
        if (!ok) throw ConfigError(key, msg);
    };
    const HestonParams& p = cfg.params;
    check(p.kappa >= 0.0, "kappa", "must be >= 0");
    check(p.theta >= 0.0, "theta", "must be >= 0");
    check(p.sigma >= 0.0, "sigma", "must be >= 0");
    check(std::abs(p.rho) <= 1.0, "rho", "must lie in [-1, 1]");
    check(p.maturity > 0.0, "T", "must be > 0");
    check(p.strike > 0.0, "K", "must be > 0");
    check(cfg.s_max > 1.0, "s_max", "must be > 1");
    check(cfg.v_max > 0.0, "v_max", "must be > 0");
    check(cfg.itsp.tol > 0.0, "tol", "must be > 0");
    check(cfg.itsp.max_iter >= 1, "max_iter", "must be >= 1");
    if (cfg.h) {
        check(*cfg.h > 0.0, "h", "must be > 0");
        try {
            cfg.grid();
        } catch (const DomainError& e) {
            throw ConfigError("h", e.what());
        }
    } else {
        check(cfg.I >= 2, "I", "must be >= 2");
        check(cfg.J >= 2, "J", "must be >= 2");
        check(cfg.N >= 2, "N", "must be >= 2");
    }
    const double s = cfg.point_s_tilde();
    const double v = cfg.point_v();
    check(s >= 0.0 && s <= cfg.s_max, cfg.spot ? "spot" : "s_tilde", "point lies outside [0, s_max]");
    check(v >= 0.0 && v <= cfg.v_max, "v", "point lies outside [0, v_max]");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_config(in);
}

RunConfig preset_config(std::string_view name) {
    RunConfig cfg;
    cfg.params = preset_params(name);
    cfg.preset = std::string(name);
    cfg.h = 0.1;
    return cfg;
}

} // namespace hsplit
