// holderlab: command-line driver for the pipeline stages.
//
// Exit codes: 0 success, 2 validation error or missing input, 3 solver
// failure, 4 a checked property failed (artifacts are still written).

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <holderlab/config.hpp>
#include <holderlab/metric_suite.hpp>
#include <holderlab/pipeline.hpp>

namespace fs = std::filesystem;
using namespace holderlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitInvariant = 4;

struct Flags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t workers = 0;
    bool quiet = false;
};

ExperimentConfig read_config(const Flags& f, bool required) {
    std::map<std::string, std::string> kv;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw InputError(fmt::format("config: cannot read '{}'", f.config));
        kv = parse_config_text(in);
    } else if (required) {
        throw InputError("--config is required for this subcommand");
    }
    if (f.seed_set) kv["balls.seed"] = std::to_string(f.seed);
    return make_config(kv);
}

RunContext make_context(const Flags& f, bool config_required) {
    RunContext ctx;
    ctx.config = read_config(f, config_required);
    ctx.dir = f.out.empty() ? fs::path(ctx.config.output_dir) : fs::path(f.out);
    ctx.workers = f.workers ? f.workers : std::max(1u, std::thread::hardware_concurrency());
    ctx.log = f.quiet ? nullptr : &std::cerr;
    return ctx;
}

std::string utc_stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

int finish(const StageResult& r, const RunContext& ctx) {
    for (const auto& msg : r.failures) std::cerr << "property failure: " << msg << '\n';
    if (!r.ok()) return kExitInvariant;
    ctx.info("wrote {}", ctx.dir.string());
    return kExitOk;
}

int cmd_run(const Flags& f) {
    RunContext ctx = make_context(f, true);
    const fs::path parent = ctx.dir;
    fs::path dir = parent / fmt::format("{}_{}", utc_stamp(), ctx.hash());
    for (int k = 2; fs::exists(dir); ++k) dir = parent / fmt::format("{}_{}-{}", utc_stamp(), ctx.hash(), k);
    ctx.dir = dir;
    fs::create_directories(ctx.dir);
    std::vector<std::string> failures;
    for (auto* stage : {&stage_solve, &stage_subsolution, &stage_harnack, &stage_cover, &stage_decay, &stage_holder}) {
        const StageResult r = stage(ctx);
        failures.insert(failures.end(), r.failures.begin(), r.failures.end());
    }
    stage_report(ctx, failures);
    if (!f.quiet) std::cout << ctx.dir.string() << '\n';
    return finish(StageResult{failures}, ctx);
}

int cmd_verify_metric(const Flags& f) {
    MetricSuiteOptions o;
    if (f.seed_set) o.seed = f.seed;
    const MetricSuiteResult res = run_metric_suite(o);
    std::size_t pass = 0, fail = 0;
    for (const auto& c : res.checks) {
        pass += c.passed;
        fail += c.failed;
        if (!f.quiet) std::cout << fmt::format("{:<20} passed {:>7} failed {:>5} worst {:.3e}\n", c.name, c.passed, c.failed, c.worst);
    }
    std::cout << fmt::format("verify-metric: {} passed, {} failed\n", pass, fail);
    return res.ok() ? kExitOk : kExitInvariant;
}

int cmd_report(const Flags& f) {
    RunContext ctx = make_context(f, false);
    if (!fs::is_directory(ctx.dir)) throw InputError(fmt::format("report: {} is not a directory", ctx.dir.string()));
    stage_report(ctx);
    if (!f.quiet) std::cout << (ctx.dir / "report.json").string() << '\n';
    return kExitOk;
}

int dispatch(const std::function<int()>& body) {
    try {
        return body();
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ConvergenceError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const StructureError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"holderlab: covering and oscillation-decay experiments for quasilinear elliptic equations"};
    app.require_subcommand(1);
    Flags f;
    app.add_option("--config", f.config, "experiment configuration (key = value with [sections])");
    app.add_option("--out", f.out, "output directory: parent of run directories for `run`, the run directory otherwise");
    app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { f.seed = s; f.seed_set = true; }, "override the ball sampler seed");
    app.add_option("--workers", f.workers, "maximum worker threads (default: hardware concurrency)");
    app.add_flag("--quiet", f.quiet, "suppress progress output");

    struct Sub {
        const char* name;
        const char* help;
        const char* columns;
        std::function<int()> body;
    };
    auto stage = [&](StageResult (*fn)(const RunContext&)) {
        return [&f, fn] {
            const RunContext ctx = make_context(f, true);
            return finish(fn(ctx), ctx);
        };
    };
    const std::vector<Sub> subs{
        {"run", "run every stage into <out>/<timestamp>_<hash>", "all files of the stages below plus report.json", [&] { return cmd_run(f); }},
        {"verify-metric", "randomised property suite of dist_gamma", "none (prints pass/fail counts)", [&] { return cmd_verify_metric(f); }},
        {"solve", "solve the Dirichlet problem", "solution.csv, psi1.csv, psi2.csv: nx, ny, domain, field header then ny rows of nx values", stage(&stage_solve)},
        {"check-subsolution", "weak subsolution check of v = +-gamma* psi^k + |psi|^2",
         "subsolution.csv: k,sign,chi,max_violation,tol,pass,worst_x1,worst_x2,max_g", stage(&stage_subsolution)},
        {"harnack", "empirical weak Harnack constants",
         "harnack.csv: y1,y2,R,tau,k,sign,numerator,infimum,khat,inner_nodes,few_nodes", stage(&stage_harnack)},
        {"cover", "constants, ball elimination, halving and empirical delta0",
         "cover.csv: y1,y2,r,diam,osc1,osc2,pass,valid,N_outer,N_inner_needed,halving_lhs,halving_rhs,halving_pass,skip_reason",
         stage(&stage_cover)},
        {"decay", "oscillation decay trace on B(y, delta0^m d)", "decay.csv: y1,y2,r,diam,osc1,osc2,pass,r_eff,nodes", stage(&stage_decay)},
        {"holder", "Hoelder seminorm of psi on Omega_d against d", "holder.csv: d,seminorm,product,sampled,constant", stage(&stage_holder)},
        {"report", "aggregate the JSON summaries of a run directory", "report.json (schema 1)", [&] { return cmd_report(f); }},
    };
    std::map<CLI::App*, const Sub*> lookup;
    for (const auto& s : subs) {
        CLI::App* sc = app.add_subcommand(s.name, s.help);
        sc->fallthrough();
        sc->footer(fmt::format("Output: {}\nCSV files start with a '# holderlab <version> config=<hash>' line.", s.columns));
        lookup[sc] = &s;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }
    for (const auto& [sc, s] : lookup)
        if (sc->parsed()) return dispatch(s->body);
    return kExitInput;
}
