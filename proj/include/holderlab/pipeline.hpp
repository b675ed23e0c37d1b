#pragma once

// Pipeline stages over one run directory. Each stage writes a CSV and a JSON
// summary; later stages read what earlier ones wrote.
//
//   solve              solution.csv, psi1.csv, psi2.csv, solve.json
//   check-subsolution  subsolution.csv, subsolution.json
//   harnack            harnack.csv, harnack.json
//   cover              cover.csv, cover.json         (needs harnack.json)
//   decay              decay.csv, decay.json         (needs cover.json unless delta0 is set)
//   holder             holder.csv, holder.json       (needs decay.json unless alpha is set)
//   report             report.json                   (aggregates the summaries)
//
// Every file starts with "# holderlab <version> config=<hash>"; JSON files
// carry the same text under "header".

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "covering.hpp"
#include "equation.hpp"
#include "error.hpp"
#include "field.hpp"
#include "gamma_metric.hpp"
#include "harnack.hpp"
#include "sampling.hpp"
#include "solver.hpp"
#include "subsolution.hpp"

#ifndef HOLDERLAB_VERSION
#define HOLDERLAB_VERSION "0.0.0"
#endif

namespace holderlab {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kReportSchema = 1;

/// An input another stage should have produced is absent.
class MissingArtifact : public InputError {
public:
    explicit MissingArtifact(const fs::path& p)
        : InputError(fmt::format("missing artifact {} (run the stage that produces it first)", p.string())), path_(p) {}
    const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
};

struct RunContext {
    ExperimentConfig config;
    fs::path dir;
    std::size_t workers = 1;
    std::ostream* log = nullptr;  // null: quiet

    std::string hash() const { return config_hash(config.canonical); }
    std::string header() const { return fmt::format("holderlab {} config={}", HOLDERLAB_VERSION, hash()); }
    Grid2D grid() const { return Grid2D(config.nx, config.ny, config.domain); }

    template <class... Args>
    void info(fmt::format_string<Args...> f, Args&&... args) const {
        if (log) *log << fmt::format(f, std::forward<Args>(args)...) << '\n';
    }
};

/// Stage outcome: property failures are collected, not thrown, so that
/// every artifact is still written.
struct StageResult {
    std::vector<std::string> failures;
    bool ok() const noexcept { return failures.empty(); }
};

namespace detail {

inline std::ofstream open_artifact(const RunContext& ctx, const std::string& name) {
    fs::create_directories(ctx.dir);
    std::ofstream out(ctx.dir / name, std::ios::binary);
    if (!out) throw InputError(fmt::format("cannot write {}", (ctx.dir / name).string()));
    out << "# " << ctx.header() << '\n';
    return out;
}

inline void write_json(const RunContext& ctx, const std::string& name, Json body) {
    fs::create_directories(ctx.dir);
    Json doc;
    doc["header"] = ctx.header();
    doc["config_hash"] = ctx.hash();
    for (auto& [k, v] : body.items()) doc[k] = v;
    std::ofstream out(ctx.dir / name, std::ios::binary);
    if (!out) throw InputError(fmt::format("cannot write {}", (ctx.dir / name).string()));
    out << doc.dump(2) << '\n';
}

inline Json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw MissingArtifact(p);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InputError(fmt::format("{}: malformed JSON ({})", p.string(), e.what()));
    }
}

inline double json_number(const Json& j, const char* key, const fs::path& src) {
    if (!j.contains(key) || !j[key].is_number())
        throw InputError(fmt::format("{}: field '{}' missing or not a number", src.string(), key));
    return j[key].get<double>();
}

inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline Json constants_json(const TheoreticalConstants& c) {
    return Json{{"n", c.n},           {"mu", c.mu},
                {"K", c.K},           {"Nprime", c.Nprime},
                {"Ndprime", c.Ndprime}, {"c0", c.c0},
                {"eps0", c.eps0},     {"delta", c.delta},
                {"delta0", c.delta0}, {"log_delta0", c.log_delta0},
                {"alpha", c.alpha},   {"degenerate", c.degenerate}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Inputs shared by the stages

inline ScalarField load_solution(const RunContext& ctx) {
    const fs::path p = ctx.dir / "solution.csv";
    std::ifstream in(p);
    if (!in) throw MissingArtifact(p);
    return read_field_csv(in).field;
}

/// psi from the configuration: the analytic field, or the gradient of the
/// stored solution.
inline PsiPackage load_psi(const RunContext& ctx) {
    if (ctx.config.psi.source == "analytic") return make_psi_package(analytic_holder_field(ctx.config.psi.beta, ctx.grid()));
    return build_psi(load_solution(ctx));
}

inline std::vector<Ball> config_balls(const RunContext& ctx, const Grid2D& grid) {
    return sample_balls(grid, ctx.config.balls);
}

// ---------------------------------------------------------------------------
// Stages

inline StageResult stage_solve(const RunContext& ctx) {
    StageResult res;
    const auto& cfg = ctx.config;
    if (cfg.psi.source == "analytic") {
        detail::write_json(ctx, "solve.json", Json{{"stage", "solve"}, {"skipped", true}, {"reason", "psi.source = analytic"}});
        ctx.info("solve: skipped (analytic psi)");
        return res;
    }
    const Grid2D grid = ctx.grid();
    const EquationSpec spec = build_equation(cfg.equation);
    const SolveResult sol = newton_solve(spec, build_boundary(cfg.equation), grid, cfg.solver);
    const VectorField du = gradient(sol.u);
    {
        auto out = detail::open_artifact(ctx, "solution.csv");
        write_field_csv(out, sol.u, "u");
    }
    for (std::size_t c = 0; c < 2; ++c) {
        auto out = detail::open_artifact(ctx, fmt::format("psi{}.csv", c + 1));
        write_field_csv(out, du.component(c), fmt::format("psi{}", c + 1));
    }
    const double rho = sol.u.max_abs() + du.sup_norm();
    const StructureBounds sb = theta1_probe(spec, grid.domain(), rho, 256);
    Json j{{"stage", "solve"},
           {"equation", spec.name},
           {"nx", grid.nx()},
           {"ny", grid.ny()},
           {"iterations", sol.iterations},
           {"final_residual", sol.final_residual()},
           {"residual_history", sol.residual_history},
           {"structure", {{"rho", sb.rho}, {"theta1", sb.theta1}, {"lambda_min", sb.lambda_min}, {"Lambda_max", sb.Lambda_max}, {"samples", sb.samples}}}};
    if (spec.name == "mms_quasilinear") {
        const auto exact = sine_product_solution();
        double err = 0.0;
        for (std::size_t n = 0; n < grid.size(); ++n) err = std::max(err, std::abs(sol.u[n] - exact.value(grid.node(n))));
        j["error_vs_exact"] = err;
    }
    detail::write_json(ctx, "solve.json", j);
    ctx.info("solve: {} iterations, residual {:.3e}", sol.iterations, sol.final_residual());
    return res;
}

inline StageResult stage_subsolution(const RunContext& ctx) {
    StageResult res;
    const auto& cfg = ctx.config;
    if (cfg.psi.source == "analytic") {
        detail::write_json(ctx, "subsolution.json",
                           Json{{"stage", "check-subsolution"}, {"skipped", true}, {"reason", "psi.source = analytic"}});
        ctx.info("check-subsolution: skipped (analytic psi)");
        return res;
    }
    const ScalarField u = load_solution(ctx);
    const EquationSpec spec = build_equation(cfg.equation);
    const PsiPackage pkg = build_psi(u);
    const double tol = cfg.experiment.subsolution_c * u.grid().h();

    auto out = detail::open_artifact(ctx, "subsolution.csv");
    out << "k,sign,chi,max_violation,tol,pass,worst_x1,worst_x2,max_g\n";
    Json rows = Json::array();
    for (std::size_t k = 0; k < 2; ++k)
        for (int sign : {1, -1}) {
            const DivergenceData d = divergence_data(spec, u, k, pkg.gamma_star, sign);
            const WeakCheckResult w = weak_subsolution_check(d, d.v, tol);
            double max_g = -std::numeric_limits<double>::infinity();
            for (std::size_t n = 0; n < u.grid().size(); ++n) max_g = std::max(max_g, d.g_unweighted[n]);
            const Point2 worst = u.grid().node(w.worst_node);
            out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{},{:.17g},{:.17g},{:.17g}\n", k + 1, sign, d.chi,
                               w.max_violation, tol, w.pass ? 1 : 0, worst[0], worst[1], max_g);
            rows.push_back({{"k", k + 1}, {"sign", sign}, {"chi", d.chi}, {"max_violation", w.max_violation}, {"pass", w.pass}, {"max_g", max_g}});
            if (!w.pass) res.failures.push_back(fmt::format("weak subsolution check failed for k={} sign={}: {:.3e} > {:.3e}", k + 1, sign, w.max_violation, tol));
            if (max_g > 0.0) res.failures.push_back(fmt::format("g > 0 somewhere for k={} sign={}", k + 1, sign));
        }
    const double identity_defect = v_sum_defect(pkg);
    if (!(identity_defect <= 4.0 * std::numeric_limits<double>::epsilon()))
        res.failures.push_back(fmt::format("v+ + v- differs from 2|psi|^2 by {:.3e} (relative)", identity_defect));
    detail::write_json(ctx, "subsolution.json",
                       Json{{"stage", "check-subsolution"}, {"tol", tol}, {"M", pkg.M}, {"gamma_star", pkg.gamma_star},
                            {"checks", rows}, {"v_sum_identity_defect", identity_defect}, {"pass", res.ok()}});
    ctx.info("check-subsolution: {}", res.ok() ? "pass" : "FAIL");
    return res;
}

inline StageResult stage_harnack(const RunContext& ctx) {
    StageResult res;
    const PsiPackage pkg = load_psi(ctx);
    const auto balls = config_balls(ctx, pkg.psi.grid());
    const HarnackReport rep = estimate_K(pkg, balls, ctx.config.experiment.tau, ctx.workers);
    {
        auto out = detail::open_artifact(ctx, "harnack.csv");
        write_harnack_csv(out, rep);
    }
    std::size_t few = 0;
    for (const auto& s : rep.samples) few += s.result.few_nodes;
    detail::write_json(ctx, "harnack.json",
                       Json{{"stage", "harnack"}, {"K", rep.K}, {"tau", ctx.config.experiment.tau}, {"samples", rep.samples.size()}, {"few_nodes", few}, {"M", pkg.M}, {"gamma_star", pkg.gamma_star}});
    ctx.info("harnack: K = {:.6g} over {} samples", rep.K, rep.samples.size());
    return res;
}

inline StageResult stage_cover(const RunContext& ctx) {
    StageResult res;
    const auto& ex = ctx.config.experiment;
    const fs::path harnack_path = ctx.dir / "harnack.json";
    const double K = detail::json_number(detail::read_json(harnack_path), "K", harnack_path);
    const PsiPackage pkg = load_psi(ctx);
    const GammaMetric m(pkg.gamma_star);
    const auto balls = config_balls(ctx, pkg.psi.grid());

    double mu = 0.0;
    for (const auto& b : balls) mu = std::max(mu, 0.5 * diam(m, restrict(pkg.psi, b.center, b.R)).value);
    const std::size_t Np = measure_Nprime(m, pkg.psi, balls, ctx.workers);
    const TheoreticalConstants first = constants(2, mu, K, Np, 1);
    const std::size_t Ndp = measure_Ndprime(m, pkg.psi, balls, first.eps0, ctx.workers);
    const TheoreticalConstants c = constants(2, mu, K, Np, Ndp);
    for (const auto& v : invariant_violations(c)) res.failures.push_back("constants: " + v);
    const double eps = ex.eps.value_or(c.eps0);

    std::vector<EliminationResult> elim(balls.size());
    parallel_for(balls.size(), ctx.workers, [&](std::size_t b) {
        elim[b] = ball_elimination_probe(m, pkg.psi, balls[b].center, balls[b].R, eps, c.delta, c.eps0);
    });
    const EmpiricalDelta0 emp = empirical_delta0(m, pkg.psi, balls, ex.halving_target, 8, ctx.workers);
    std::vector<HalvingResult> halv(balls.size());
    std::size_t halving_theory_ok = 0;
    for (std::size_t b = 0; b < balls.size(); ++b) {
        const HalvingBall hb = prepare_halving(m, pkg.psi, balls[b].center, balls[b].R);
        halv[b] = halving_check(m, pkg.psi, hb, emp.delta0);
        halving_theory_ok += halving_check(m, pkg.psi, hb, c.delta0).pass;
    }

    auto out = detail::open_artifact(ctx, "cover.csv");
    out << "y1,y2,r,diam,osc1,osc2,pass,valid,N_outer,N_inner_needed,halving_lhs,halving_rhs,halving_pass,skip_reason\n";
    std::size_t valid = 0, passed = 0, halving_ok = 0;
    for (std::size_t b = 0; b < balls.size(); ++b) {
        const auto nodes = ball_nodes(pkg.psi.grid(), balls[b].center, balls[b].R);
        const auto osc = component_oscillations(pkg.psi, nodes);
        const auto& e = elim[b];
        valid += e.valid;
        passed += e.valid && e.pass;
        halving_ok += halv[b].pass;
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{},{:.17g},{:.17g},{},{}\n",
                           balls[b].center[0], balls[b].center[1], balls[b].R, e.diam, osc[0], osc[1], e.pass ? 1 : 0,
                           e.valid ? 1 : 0, e.N_outer, e.N_inner_needed, halv[b].lhs, halv[b].rhs, halv[b].pass ? 1 : 0,
                           detail::csv_quote(e.skip_reason));
        if (e.valid && !(std::max(osc[0], osc[1]) <= component_osc(pkg, e.diam) * (1.0 + 1e-12)))
            res.failures.push_back(fmt::format("component oscillation above diam/(2nM) on ball {}", b));
    }
    const double elim_rate = valid ? static_cast<double>(passed) / static_cast<double>(valid) : 0.0;
    const double halving_rate = balls.empty() ? 0.0 : static_cast<double>(halving_ok) / static_cast<double>(balls.size());
    if (valid > 0 && elim_rate < 0.95)
        res.failures.push_back(fmt::format("ball elimination pass rate {:.3f} < 0.95 over {} valid balls", elim_rate, valid));
    if (halving_rate < ex.halving_target)
        res.failures.push_back(fmt::format("halving pass rate {:.3f} at delta0 = {:.4g} below {:.2f}", halving_rate, emp.delta0, ex.halving_target));

    Json trials = Json::array();
    for (auto [f, r] : emp.trials) trials.push_back({{"delta0", f}, {"pass_rate", r}});
    detail::write_json(
        ctx, "cover.json",
        Json{{"stage", "cover"},
             {"constants", detail::constants_json(c)},
             {"invariants_ok", invariant_violations(c).empty()},
             {"eps", eps},
             {"balls", balls.size()},
             {"elimination", {{"valid", valid}, {"passed", passed}, {"pass_rate", elim_rate}}},
             {"delta0_emp", emp.delta0},
             {"delta0_theory", c.delta0},
             {"log_delta0_theory", c.log_delta0},
             {"halving_pass_rate_emp", halving_rate},
             {"halving_pass_rate_theory", balls.empty() ? 0.0 : static_cast<double>(halving_theory_ok) / static_cast<double>(balls.size())},
             {"bisection", trials}});
    ctx.info("cover: N'={} N''={} elimination {}/{} delta0_emp={:.4g} halving {:.2f}", Np, Ndp, passed, valid, emp.delta0, halving_rate);
    return res;
}

inline StageResult stage_decay(const RunContext& ctx) {
    StageResult res;
    const auto& ex = ctx.config.experiment;
    std::optional<Json> cover;
    const fs::path cover_path = ctx.dir / "cover.json";
    if (!ex.delta0 || fs::exists(cover_path)) {
        try {
            cover = detail::read_json(cover_path);
        } catch (const MissingArtifact&) {
            if (!ex.delta0) throw;
        }
    }
    const double delta0 = ex.delta0 ? *ex.delta0 : detail::json_number(*cover, "delta0_emp", cover_path);
    const PsiPackage pkg = load_psi(ctx);
    const GammaMetric m(pkg.gamma_star);
    if (!(delta0 > 0.0 && delta0 < 0.5)) {
        res.failures.push_back(fmt::format("no usable delta0 ({})", delta0));
        detail::write_json(ctx, "decay.json", Json{{"stage", "decay"}, {"delta0", delta0}, {"error", "no usable delta0"}});
        return res;
    }
    const DecayTrace t = decay_trace(m, pkg.psi, ex.decay_center, ex.decay_d, delta0, ex.m_max);
    {
        auto out = detail::open_artifact(ctx, "decay.csv");
        const DecayTrace traces[] = {t};
        write_decay_csv(out, traces);
    }
    const bool bound_ok = std::all_of(t.bound_pass.begin(), t.bound_pass.end(), [](bool b) { return b; });
    Json j{{"stage", "decay"},
           {"y", {t.y[0], t.y[1]}},
           {"d", t.d},
           {"delta0", delta0},
           {"delta0_emp", cover ? (*cover)["delta0_emp"] : Json(nullptr)},
           {"delta0_theory", cover ? (*cover)["delta0_theory"] : Json(nullptr)},
           {"alpha_emp", t.alpha_emp},
           {"alpha_theory", t.alpha_theory},
           {"steps", t.radii.size()},
           {"truncated", t.truncated},
           {"M", t.M},
           {"domain_diam", t.domain_diam},
           {"bound_holds", bound_ok},
           {"halving_steps_passed", std::count(t.halving_pass.begin(), t.halving_pass.end(), true)},
           {"constants", cover ? (*cover)["constants"] : Json(nullptr)}};
    detail::write_json(ctx, "decay.json", j);
    ctx.info("decay: {} radii, alpha_emp = {:.4f}, alpha_theory = {:.4f}", t.radii.size(), t.alpha_emp, t.alpha_theory);
    return res;
}

inline StageResult stage_holder(const RunContext& ctx) {
    StageResult res;
    const auto& ex = ctx.config.experiment;
    double alpha = 0.0, alpha_emp = std::numeric_limits<double>::quiet_NaN();
    if (ex.alpha) {
        alpha = *ex.alpha;
    } else {
        const fs::path p = ctx.dir / "decay.json";
        alpha_emp = detail::json_number(detail::read_json(p), "alpha_emp", p);
        alpha = std::min(alpha_emp, 0.9);
        if (!(alpha > 0.0)) throw InputError(fmt::format("{}: alpha_emp = {} gives no usable exponent", p.string(), alpha_emp));
    }
    const PsiPackage pkg = load_psi(ctx);
    const auto rows = d_scaling_probe(pkg.psi, alpha, ex.d_values, ex.pair_budget);
    const double ratio = scaling_ratio(rows);
    auto out = detail::open_artifact(ctx, "holder.csv");
    out << "d,seminorm,product,sampled,constant\n";
    Json jr = Json::array();
    for (const auto& r : rows) {
        out << fmt::format("{:.17g},{:.17g},{:.17g},{},{}\n", r.d, r.seminorm, r.product, r.sampled ? 1 : 0, r.constant ? 1 : 0);
        jr.push_back({{"d", r.d}, {"seminorm", r.seminorm}, {"product", r.product}, {"sampled", r.sampled}, {"constant", r.constant}});
    }
    if (!(ratio <= 4.0)) res.failures.push_back(fmt::format("[Du]_alpha d^alpha varies by ratio {:.3f} > 4", ratio));
    detail::write_json(ctx, "holder.json",
                       Json{{"stage", "holder"}, {"alpha", alpha}, {"alpha_emp", std::isfinite(alpha_emp) ? Json(alpha_emp) : Json(nullptr)}, {"ratio", std::isfinite(ratio) ? Json(ratio) : Json("inf")}, {"rows", jr}});
    ctx.info("holder: alpha = {:.4f}, ratio = {:.4f}", alpha, ratio);
    return res;
}

inline const std::vector<std::string>& summary_files() {
    static const std::vector<std::string> names{"solve.json", "subsolution.json", "harnack.json",
                                                "cover.json", "decay.json", "holder.json"};
    return names;
}

/// Aggregates the stage summaries of `dir` into report.json.
inline StageResult stage_report(const RunContext& ctx, const std::vector<std::string>& failures = {}) {
    StageResult res;
    Json stages = Json::object();
    for (const auto& name : summary_files()) {
        const fs::path p = ctx.dir / name;
        if (fs::exists(p)) stages[name.substr(0, name.size() - 5)] = detail::read_json(p);
    }
    if (stages.empty()) throw InputError(fmt::format("report: no stage summaries in {}", ctx.dir.string()));
    Json j{{"schema", kReportSchema}, {"version", HOLDERLAB_VERSION}};
    auto lift = [&](const char* stage, const char* key) {
        if (stages.contains(stage) && stages[stage].contains(key)) j[key] = stages[stage][key];
    };
    lift("decay", "alpha_emp");
    lift("decay", "alpha_theory");
    lift("cover", "delta0_emp");
    lift("cover", "delta0_theory");
    lift("cover", "constants");
    lift("harnack", "K");
    j["failures"] = failures;
    j["stages"] = stages;
    detail::write_json(ctx, "report.json", j);
    return res;
}

}  // namespace holderlab
