#pragma once

// Experiment configuration: `key = value` lines grouped under [section]
// headers, '#' comments. Unknown sections or keys are rejected.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "equation.hpp"
#include "error.hpp"
#include "expression.hpp"
#include "field.hpp"
#include "sampling.hpp"
#include "solver.hpp"

namespace holderlab {

struct EquationConfig {
    std::string spec = "laplace";  // registered name or "custom"
    std::string a11 = "1", a12 = "0", a22 = "1", b = "0";
    std::string boundary;  // empty: zero data
};

struct PsiConfig {
    std::string source = "gradient";  // gradient of the solution, or analytic
    double beta = 1.0;                // exponent of the analytic field
};

struct ExperimentSettings {
    double tau = 0.25;
    std::optional<double> eps;     // default eps0
    std::optional<double> delta0;  // default: empirical
    std::optional<double> alpha;   // default: min{alpha_emp, 0.9}
    Point2 decay_center{0.5, 0.5};
    double decay_d = 0.4;
    int m_max = 40;
    std::vector<double> d_values{0.05, 0.1, 0.2, 0.4};
    std::size_t pair_budget = 20'000'000;
    double subsolution_c = 1.0;  // tolerance C h of the weak check
    double halving_target = 0.95;
};

struct ExperimentConfig {
    EquationConfig equation;
    PsiConfig psi;
    std::size_t nx = 65, ny = 65;
    Rect domain{};
    SolverOptions solver;
    BallSampler balls;
    ExperimentSettings experiment;
    std::string output_dir = "runs";
    std::string canonical;  // sorted key=value lines, hashed for artifact headers
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema{
        {"equation", {"spec", "a11", "a12", "a22", "b", "boundary"}},
        {"psi", {"source", "beta"}},
        {"grid", {"nx", "ny", "domain"}},
        {"solver", {"max_newton_iters", "residual_tol", "damping", "linear_solver_tol", "max_backtracks"}},
        {"balls", {"count", "seed", "r_min", "r_max"}},
        {"experiment",
         {"tau", "eps", "delta0", "alpha", "decay_center", "decay_d", "m_max", "d_values", "pair_budget",
          "subsolution_c", "halving_target"}},
        {"output", {"dir"}},
    };
    return schema;
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(v.substr(used)).size() != 0 || !std::isfinite(out))
        throw InputError(fmt::format("config: {} = '{}' is not a finite number", key, v));
    return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(v.substr(used)).size() != 0)
        throw InputError(fmt::format("config: {} = '{}' is not an integer", key, v));
    return out;
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
}

}  // namespace detail

/// Flat map "section.key" -> raw value.
inline std::map<std::string, std::string> parse_config_text(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    std::size_t lineno = 0;
    const auto& schema = detail::config_schema();
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw InputError(fmt::format("config line {}: malformed section header", lineno));
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!schema.contains(section)) throw InputError(fmt::format("config line {}: unknown section [{}]", lineno, section));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(fmt::format("config line {}: expected key = value", lineno));
        if (section.empty()) throw InputError(fmt::format("config line {}: key outside any section", lineno));
        const std::string key = detail::trim(line.substr(0, eq));
        if (!schema.at(section).contains(key))
            throw InputError(fmt::format("config line {}: unknown key '{}' in [{}]", lineno, key, section));
        const std::string full = section + "." + key;
        if (kv.contains(full)) throw InputError(fmt::format("config line {}: duplicate key {}", lineno, full));
        kv[full] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

/// Builds and validates the configuration; every check runs before any computation.
inline ExperimentConfig make_config(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    auto get = [&](const std::string& k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    using detail::to_double;
    using detail::to_int;
    if (auto v = get("equation.spec")) c.equation.spec = *v;
    if (auto v = get("equation.a11")) c.equation.a11 = *v;
    if (auto v = get("equation.a12")) c.equation.a12 = *v;
    if (auto v = get("equation.a22")) c.equation.a22 = *v;
    if (auto v = get("equation.b")) c.equation.b = *v;
    if (auto v = get("equation.boundary")) c.equation.boundary = *v;
    if (c.equation.spec != "custom") {
        make_spec(c.equation.spec);  // throws on unknown names
        for (const char* k : {"equation.a11", "equation.a12", "equation.a22", "equation.b"})
            if (get(k)) throw InputError(fmt::format("config: {} needs spec = custom", k));
    }
    for (const auto* e : {&c.equation.a11, &c.equation.a12, &c.equation.a22, &c.equation.b}) Expression::parse(*e);
    if (!c.equation.boundary.empty() && Expression::parse(c.equation.boundary).uses_solution())
        throw InputError("config: boundary expression may only use x1, x2");

    if (auto v = get("psi.source")) c.psi.source = *v;
    if (c.psi.source != "gradient" && c.psi.source != "analytic")
        throw InputError(fmt::format("config: psi.source = '{}' (expected gradient or analytic)", c.psi.source));
    if (auto v = get("psi.beta")) c.psi.beta = to_double("psi.beta", *v);
    if (!(c.psi.beta > 0.0 && c.psi.beta <= 1.0)) throw InputError("config: psi.beta must lie in (0, 1]");

    if (auto v = get("grid.nx")) c.nx = static_cast<std::size_t>(std::max(0LL, to_int("grid.nx", *v)));
    if (auto v = get("grid.ny")) c.ny = static_cast<std::size_t>(std::max(0LL, to_int("grid.ny", *v)));
    if (auto v = get("grid.domain")) {
        const auto d = detail::to_list("grid.domain", *v);
        if (d.size() != 4) throw InputError("config: grid.domain needs four numbers a1, b1, a2, b2");
        c.domain = {d[0], d[1], d[2], d[3]};
    }
    Grid2D(c.nx, c.ny, c.domain);  // validates sizes and domain

    if (auto v = get("solver.max_newton_iters")) c.solver.max_newton_iters = static_cast<int>(to_int("solver.max_newton_iters", *v));
    if (auto v = get("solver.residual_tol")) c.solver.residual_tol = to_double("solver.residual_tol", *v);
    if (auto v = get("solver.damping")) c.solver.damping = to_double("solver.damping", *v);
    if (auto v = get("solver.linear_solver_tol")) c.solver.linear_solver_tol = to_double("solver.linear_solver_tol", *v);
    if (auto v = get("solver.max_backtracks")) c.solver.max_backtracks = static_cast<int>(to_int("solver.max_backtracks", *v));
    validate(c.solver);
    if (c.solver.max_backtracks < 0) throw InputError("solver: max_backtracks must be >= 0");

    if (auto v = get("balls.count")) {
        const long long n = to_int("balls.count", *v);
        if (n < 1) throw InputError("config: balls.count must be >= 1");
        c.balls.count = static_cast<std::size_t>(n);
    }
    if (auto v = get("balls.seed")) {
        const long long s = to_int("balls.seed", *v);
        if (s < 0) throw InputError("config: balls.seed must be nonnegative");
        c.balls.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get("balls.r_min")) c.balls.r_min = to_double("balls.r_min", *v);
    if (auto v = get("balls.r_max")) c.balls.r_max = to_double("balls.r_max", *v);
    if (!(c.balls.r_min > 0.0) || c.balls.r_max < c.balls.r_min) throw InputError("config: need 0 < r_min <= r_max");

    auto& e = c.experiment;
    if (auto v = get("experiment.tau")) e.tau = to_double("experiment.tau", *v);
    if (!(e.tau > 0.0 && e.tau < 0.5)) throw InputError("config: experiment.tau must lie in (0, 1/2)");
    if (auto v = get("experiment.eps")) {
        e.eps = to_double("experiment.eps", *v);
        if (!(*e.eps > 0.0)) throw InputError("config: experiment.eps must be positive");
    }
    if (auto v = get("experiment.delta0")) {
        e.delta0 = to_double("experiment.delta0", *v);
        if (!(*e.delta0 > 0.0 && *e.delta0 < 0.5)) throw InputError("config: experiment.delta0 must lie in (0, 1/2)");
    }
    if (auto v = get("experiment.alpha")) {
        e.alpha = to_double("experiment.alpha", *v);
        if (!(*e.alpha > 0.0 && *e.alpha <= 1.0)) throw InputError("config: experiment.alpha must lie in (0, 1]");
    }
    if (auto v = get("experiment.decay_center")) {
        const auto p = detail::to_list("experiment.decay_center", *v);
        if (p.size() != 2) throw InputError("config: experiment.decay_center needs two numbers");
        e.decay_center = {p[0], p[1]};
    }
    if (auto v = get("experiment.decay_d")) e.decay_d = to_double("experiment.decay_d", *v);
    if (!(e.decay_d > 0.0)) throw InputError("config: experiment.decay_d must be positive");
    if (auto v = get("experiment.m_max")) e.m_max = static_cast<int>(to_int("experiment.m_max", *v));
    if (e.m_max < 0) throw InputError("config: experiment.m_max must be >= 0");
    if (auto v = get("experiment.d_values")) e.d_values = detail::to_list("experiment.d_values", *v);
    if (e.d_values.empty()) throw InputError("config: experiment.d_values is empty");
    for (double d : e.d_values)
        if (!(d > 0.0)) throw InputError("config: experiment.d_values must be positive");
    if (auto v = get("experiment.pair_budget")) {
        const long long b = to_int("experiment.pair_budget", *v);
        if (b < 1) throw InputError("config: experiment.pair_budget must be >= 1");
        e.pair_budget = static_cast<std::size_t>(b);
    }
    if (auto v = get("experiment.subsolution_c")) e.subsolution_c = to_double("experiment.subsolution_c", *v);
    if (!(e.subsolution_c >= 0.0)) throw InputError("config: experiment.subsolution_c must be nonnegative");
    if (auto v = get("experiment.halving_target")) e.halving_target = to_double("experiment.halving_target", *v);
    if (!(e.halving_target > 0.0 && e.halving_target <= 1.0)) throw InputError("config: experiment.halving_target must lie in (0, 1]");

    const Grid2D grid(c.nx, c.ny, c.domain);
    if (!ball_inside(grid, e.decay_center, e.decay_d))
        throw InputError(fmt::format("config: decay ball B(({}, {}), {}) leaves the domain", e.decay_center[0],
                                     e.decay_center[1], e.decay_d));

    if (auto v = get("output.dir")) c.output_dir = *v;

    for (const auto& [k, v] : kv) c.canonical += k + "=" + v + "\n";
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("config: cannot read '{}'", path));
    return make_config(parse_config_text(in));
}

inline ExperimentConfig config_from_string(const std::string& text) {
    std::istringstream in(text);
    return make_config(parse_config_text(in));
}

/// FNV-1a, 64 bit, rendered as 16 hex digits.
inline std::string config_hash(const std::string& canonical) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

/// Equation from the configuration: a registered spec, or the custom
/// expressions with finite-difference derivatives.
inline EquationSpec build_equation(const EquationConfig& e) {
    if (e.spec != "custom") return make_spec(e.spec);
    const Expression a11 = Expression::parse(e.a11), a12 = Expression::parse(e.a12), a22 = Expression::parse(e.a22),
                     b = Expression::parse(e.b);
    EquationSpec s;
    s.name = "custom";
    s.A = [a11, a12, a22](const Point2& x, double z, const Point2& p) { return Sym2{a11(x, z, p), a12(x, z, p), a22(x, z, p)}; };
    s.B = [b](const Point2& x, double z, const Point2& p) { return b(x, z, p); };
    return s;
}

inline BoundaryData build_boundary(const EquationConfig& e) {
    if (e.boundary.empty()) return [](const Point2&) { return 0.0; };
    const Expression g = Expression::parse(e.boundary);
    return [g](const Point2& x) { return g(x); };
}

}  // namespace holderlab
