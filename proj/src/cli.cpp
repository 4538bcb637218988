#include "isoflow/cli.hpp"

#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "CLI11.hpp"

#include "isoflow/curve.hpp"
#include "isoflow/error.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/hypotheses.hpp"
#include "isoflow/io.hpp"
#include "isoflow/metric_spec.hpp"
#include "isoflow/minimizer.hpp"
#include "isoflow/ricci.hpp"

namespace isoflow {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("ISOFLOW_LOG");
    if (!env || std::string(env).empty() || std::string(env) == "error") return LogLevel::Error;
    if (std::string(env) == "info") return LogLevel::Info;
    if (std::string(env) == "debug") return LogLevel::Debug;
    throw Error(ErrorCode::ConfigError, "ISOFLOW_LOG must be error, info or debug");
}

class Logger {
public:
    Logger(std::ostream& sink, LogLevel level) : sink_(sink), level_(level) {}
    void info(const std::string& msg) const { emit(LogLevel::Info, "info", msg); }
    void debug(const std::string& msg) const { emit(LogLevel::Debug, "debug", msg); }
    bool debug_enabled() const { return level_ >= LogLevel::Debug; }

private:
    void emit(LogLevel at, const char* tag, const std::string& msg) const {
        if (level_ >= at) sink_ << '[' << tag << "] " << msg << '\n';
    }
    std::ostream& sink_;
    LogLevel level_;
};

struct Context {
    const RunConfig& cfg;
    std::ostream& out;
    const Logger& log;
    std::vector<std::string> artifacts;

    void write(const std::string& name, const std::string& content) {
        write_text(cfg.output_dir / name, content);
        artifacts.push_back(name);
        log.info("wrote " + (cfg.output_dir / name).string());
    }
};

std::size_t thread_count(const RunConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

FlowOptions flow_options(const RunConfig& cfg) {
    FlowOptions f;
    if (cfg.el_tol) f.el_tolerance = *cfg.el_tol;
    if (cfg.energy_cap) f.curvature_energy_cap = *cfg.energy_cap;
    if (cfg.max_steps) f.max_steps = *cfg.max_steps;
    f.validate();
    return f;
}

ConformalMetric metric_or(const RunConfig& cfg, const char* fallback) {
    return parse_metric_spec(cfg.metric_spec.empty() ? std::string(fallback) : cfg.metric_spec);
}

ClosedCurve required_curve(const RunConfig& cfg) {
    if (!cfg.curve_path) throw Error(ErrorCode::ConfigError, cfg.command + " needs --curve");
    return ClosedCurve(read_curve_points(*cfg.curve_path));
}

json metrics_json(const CurveMetrics& m) {
    return {{"L", m.length_g},
            {"A_in", m.area_in},
            {"A_out", m.area_out},
            {"I", m.ratio},
            {"k_int", m.total_curvature},
            {"k2_int", m.curvature_energy},
            {"gb_residual", m.gb_residual}};
}

void cmd_check(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    HypothesisReport rep;
    if (cfg.metric_spec.empty()) {
        const Prop2Constants k = prop2_constants(cfg.c1, cfg.c2);
        rep = check_conditions(cusp_envelope(cfg.c1, cfg.c2, k.r0), k.c0, k.b1, k.b2, k.delta, doubling_grid(k.r0, 1e6));
        rep.r0 = k.r0;
        rep.scan_start = k.scan_start;
        rep.scan_ratio = k.scan_ratio;
    } else {
        rep = check_metric(parse_metric_spec(cfg.metric_spec), cfg.c1, cfg.c2);
    }
    const std::string doc = dump_json(rep.to_json());
    ctx.write("report.json", doc);
    ctx.write("margins.csv", rep.margins_csv());
    ctx.out << doc;
    ctx.log.info(std::string("all conditions ") + (rep.all_pass() ? "pass" : "fail"));
}

void cmd_ratio(Context& ctx) {
    const ConformalMetric metric = metric_or(ctx.cfg, "sphere");
    const ClosedCurve curve = required_curve(ctx.cfg);
    const CurveMetrics m = isoperimetric_ratio(curve, metric);
    json doc = metrics_json(m);
    doc["vertices"] = curve.size();
    doc["el_residual"] = el_residual(curve, metric);
    ctx.write("ratio.json", dump_json(doc));
    ctx.out << "L = " << format_number(m.length_g) << '\n'
            << "A_in = " << format_number(m.area_in) << '\n'
            << "A_out = " << format_number(m.area_out) << '\n'
            << "I = " << format_number(m.ratio) << '\n';
}

void cmd_flow(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const ConformalMetric metric = metric_or(cfg, "sphere");
    const FlowOptions opts = flow_options(cfg);
    ClosedCurve curve = required_curve(cfg);
    if (cfg.flow_mode != "csf" && cfg.flow_mode != "ratio")
        throw Error(ErrorCode::ConfigError, "--mode must be csf or ratio");

    FlowState start = make_flow_state(curve, metric);
    std::string trajectory = std::string(kTrajectoryHeader) + '\n' + trajectory_row(start) + '\n';
    auto observer = [&](const FlowState& s) {
        trajectory += trajectory_row(s) + '\n';
        if (ctx.log.debug_enabled())
            ctx.log.debug("step " + std::to_string(s.step_count) + " I=" + format_number(s.metrics.ratio));
    };
    const FlowState final = cfg.flow_mode == "csf" ? lemma9_reduce(std::move(curve), metric, opts, observer)
                                                   : ratio_descent(std::move(start), metric, opts, observer);
    json doc = {{"mode", cfg.flow_mode},
                {"status", std::string(status_name(final.status))},
                {"steps", final.step_count},
                {"tau", final.tau},
                {"metrics", metrics_json(final.metrics)},
                {"el_residual", el_residual(final, metric)}};
    ctx.write("trajectory.csv", trajectory);
    ctx.write("final_curve.csv", curve_csv(final.curve));
    ctx.write("flow.json", dump_json(doc));
    ctx.out << dump_json(doc);
}

void cmd_minimize(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const ConformalMetric metric = metric_or(cfg, "sphere");
    MinimizeOptions opts;
    opts.flow = flow_options(cfg);
    opts.vertices = cfg.vertices;
    opts.threads = thread_count(cfg);
    opts.jitter = cfg.jitter;
    opts.seed = cfg.seed;
    const auto starts = default_starts(metric, metric.half_mass_radius(), cfg.starts);
    ctx.log.info("running " + std::to_string(starts.size()) + " starts");
    MinimizeResult result = minimize(metric, starts, opts);
    json doc = result.to_json();
    doc["metric"] = metric.describe();
    ctx.write("result.json", dump_json(doc));
    ctx.write("best_curve.csv", curve_csv(result.best_curve));
    ctx.out << dump_json(doc);
}

void cmd_ricci(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const ConformalMetric u0 = metric_or(cfg, "log_bump");
    if (u0.centers().size() != 1 || norm(u0.centers().front()) != 0.0)
        throw Error(ErrorCode::DomainError, "the radial solver needs initial data centered at the origin");
    const RicciSolution sol = solve_radial(u0, cfg.t_end, RadialGrid{cfg.r_max, cfg.cells});
    if (sol.not_maximal_regime) ctx.log.info("NotMaximalRegime: initial tail is far below the cusp template");

    json doc = sol.summary();
    const double half = 0.5 * std::min(sol.extinction_estimate, 2.0 * sol.times.back());
    const TailBounds tb = tail_bounds(sol, half, 10.0, std::min(1e3, sol.radii.back()));
    doc["tail_envelope"] = {{"t", half}, {"window", {tb.lo, tb.hi}}, {"c_min", tb.c_min}, {"c_max", tb.c_max}};
    json lower = json::array();
    for (std::size_t k = 1; k < sol.times.size(); ++k) {
        const TailBounds b = tail_bounds(sol, sol.times[k], 10.0, std::min(1e3, sol.radii.back()));
        lower.push_back({{"t", sol.times[k]}, {"min_ratio_to_t", b.c_min / sol.times[k]}});
    }
    doc["lower_template"] = lower;

    ctx.write("field.csv", sol.field_csv());
    ctx.write("mass.csv", sol.mass_csv());
    if (!cfg.track_times.empty()) {
        TrackOptions topts;
        topts.threads = thread_count(cfg);
        topts.minimize.flow = flow_options(cfg);
        if (!cfg.max_steps) topts.minimize.flow.max_steps = TrackOptions::default_minimize().flow.max_steps;
        topts.minimize.seed = cfg.seed;
        const auto rows = track_ratio(sol, cfg.track_times, topts);
        json tracked = json::array();
        for (const auto& r : rows) {
            json e = {{"t", r.t}, {"c1", r.c1}, {"c2", r.c2}, {"area", r.area}, {"below", r.below}};
            e["best_ratio"] = r.best_ratio ? json(*r.best_ratio) : json(nullptr);
            e["b0"] = r.b0 ? json(*r.b0) : json(nullptr);
            if (!r.error.empty()) e["error"] = r.error;
            tracked.push_back(e);
        }
        doc["track"] = tracked;
        ctx.write("track.csv", track_csv(rows));
    }
    ctx.write("ricci.json", dump_json(doc));
    ctx.out << dump_json(doc);
}

json versions() {
    return {{"isoflow", kVersion},
            {"compiler", __VERSION__},
            {"boost", BOOST_LIB_VERSION},
            {"cxx", static_cast<long>(__cplusplus)}};
}

} // namespace

json RunConfig::to_json() const {
    json j = {{"command", command},
              {"metric", metric_spec},
              {"curve", curve_path ? json(curve_path->string()) : json(nullptr)},
              {"out", output_dir.string()},
              {"seed", seed},
              {"starts", starts},
              {"c1", c1},
              {"c2", c2},
              {"t_end", t_end},
              {"el_tol", el_tol ? json(*el_tol) : json(nullptr)},
              {"energy_cap", energy_cap ? json(*energy_cap) : json(nullptr)},
              {"threads", threads},
              {"mode", flow_mode},
              {"max_steps", max_steps ? json(*max_steps) : json(nullptr)},
              {"vertices", vertices},
              {"jitter", jitter},
              {"cells", cells},
              {"r_max", r_max},
              {"track", track_times}};
    return j;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const Logger log(err, log_level());
        Context ctx{config, out, log, {}};
        log.info("command " + config.command);
        if (config.command == "check") cmd_check(ctx);
        else if (config.command == "ratio") cmd_ratio(ctx);
        else if (config.command == "flow") cmd_flow(ctx);
        else if (config.command == "minimize") cmd_minimize(ctx);
        else if (config.command == "ricci") cmd_ricci(ctx);
        else throw Error(ErrorCode::ConfigError, "unknown command '" + config.command + "'");

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json manifest = {{"config", config.to_json()},
                         {"versions", versions()},
                         {"artifacts", ctx.artifacts},
                         {"timing", {{"wall_seconds", wall}}}};
        write_text(config.output_dir / "manifest.json", dump_json(manifest));
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::ConfigError ? 2 : 3;
    } catch (const json::exception& e) {
        err << "error: ConfigError: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: ConfigError: " << e.what() << '\n';
        return 2;
    }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Isoperimetric ratios, curve flows and logarithmic diffusion for conformal plane metrics", "isoflow"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    RunConfig cfg;
    std::string out_dir = cfg.output_dir.string();
    std::string curve;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--metric", cfg.metric_spec,
                        "family name, inline JSON, .json spec file or .csv radial table");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", cfg.threads, "worker threads (0: logical cores)")->capture_default_str();
    };
    auto flow_flags = [&](CLI::App* sub) {
        sub->add_option("--el-tol", cfg.el_tol, "constant-curvature residual tolerance");
        sub->add_option("--energy-cap", cfg.energy_cap, "curvature energy cap for the reduction");
        sub->add_option("--max-steps", cfg.max_steps, "step budget per flow phase");
    };

    CLI::App* check = app.add_subcommand("check", "admissibility report for cusp envelopes");
    common(check);
    check->add_option("--c1", cfg.c1, "lower envelope constant")->capture_default_str();
    check->add_option("--c2", cfg.c2, "upper envelope constant")->capture_default_str();

    CLI::App* ratio = app.add_subcommand("ratio", "isoperimetric ratio of a curve");
    common(ratio);
    ratio->add_option("--curve", curve, "curve CSV (x,y)")->required();

    CLI::App* flow = app.add_subcommand("flow", "run curve shortening or ratio descent");
    common(flow);
    flow_flags(flow);
    flow->add_option("--curve", curve, "curve CSV (x,y)")->required();
    flow->add_option("--mode", cfg.flow_mode, "csf or ratio")->capture_default_str();

    CLI::App* mini = app.add_subcommand("minimize", "multi-start minimization of the ratio");
    common(mini);
    flow_flags(mini);
    mini->add_option("--starts", cfg.starts, "radii per start center")->capture_default_str();
    mini->add_option("--seed", cfg.seed, "seed for start jitter")->capture_default_str();
    mini->add_option("--jitter", cfg.jitter, "relative radial jitter of start circles")->capture_default_str();
    mini->add_option("--vertices", cfg.vertices, "vertices per curve")->capture_default_str();

    CLI::App* ricci = app.add_subcommand("ricci", "radial logarithmic diffusion");
    common(ricci);
    flow_flags(ricci);
    ricci->add_option("--t-end", cfg.t_end, "final time")->capture_default_str();
    ricci->add_option("--cells", cfg.cells, "radial cells")->capture_default_str();
    ricci->add_option("--r-max", cfg.r_max, "outer radius")->capture_default_str();
    ricci->add_option("--track", cfg.track_times, "times at which to minimize the ratio")->delimiter(',');
    ricci->add_option("--seed", cfg.seed, "seed for start jitter")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.output_dir = out_dir;
    if (!curve.empty()) cfg.curve_path = curve;
    return run(cfg, out, err);
}

} // namespace isoflow
