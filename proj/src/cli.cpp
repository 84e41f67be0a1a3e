#include "hysis/cli.hpp"

#include "hysis/errors.hpp"
#include "hysis/estimator.hpp"
#include "hysis/experiments.hpp"
#include "hysis/ingest.hpp"
#include "hysis/io.hpp"
#include "hysis/simulator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef HYSIS_VERSION
#define HYSIS_VERSION "dev"
#endif

namespace fs = std::filesystem;

namespace hysis::cli {
namespace {

std::uint64_t fnv1a64(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v)
{
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << v;
    return s.str();
}

/// Collects what a run read and wrote, then writes the manifest JSON.
class Manifest {
public:
    Manifest(std::string subcommand, std::vector<std::string> args)
        : subcommand_(std::move(subcommand))
        , args_(std::move(args))
        , start_(std::chrono::steady_clock::now())
    {
    }

    void input(const fs::path& path) { inputs_.push_back(path); }
    void output(const fs::path& path) { outputs_.push_back(path); }
    void seed(std::uint64_t seed) { seed_ = seed; }

    void write(const fs::path& path) const
    {
        Json j = Json::object();
        j["tool"] = "hysis";
        j["version"] = HYSIS_VERSION;
        j["subcommand"] = subcommand_;
        j["args"] = args_;
        j["cwd"] = fs::current_path().string();
        Json inputs = Json::array();
        for (const auto& p : inputs_) {
            Json entry = Json::object();
            entry["path"] = p.string();
            entry["bytes"] = fs::exists(p) && fs::is_regular_file(p) ? fs::file_size(p) : 0;
            entry["fnv1a64"] = hex(fnv1a64(p));
            inputs.push_back(std::move(entry));
        }
        j["inputs"] = std::move(inputs);
        Json outputs = Json::array();
        for (const auto& p : outputs_) {
            outputs.push_back(p.string());
        }
        j["outputs"] = std::move(outputs);
        j["seed"] = seed_ ? Json(*seed_) : Json(nullptr);
        std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        j["timings"] = {{"wall_seconds", elapsed.count()}};
        write_json_file(path, j);
    }

private:
    std::string subcommand_;
    std::vector<std::string> args_;
    std::chrono::steady_clock::time_point start_;
    std::vector<fs::path> inputs_;
    std::vector<fs::path> outputs_;
    std::optional<std::uint64_t> seed_;
};

fs::path manifest_path_for(const fs::path& output)
{
    return fs::path(output.string() + ".manifest.json");
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings) {
        err << "warning: " << w << '\n';
    }
}

/// Writes JSON to --out when given (plus its manifest), else to stdout.
void emit_json(const Json& j, const std::string& out_path, Manifest& manifest, std::ostream& out)
{
    if (out_path.empty()) {
        out << j.dump(2) << '\n';
        return;
    }
    write_json_file(out_path, j);
    manifest.output(out_path);
    manifest.write(manifest_path_for(out_path));
}

struct SimulateArgs {
    std::string scenario;
    std::string mode = "dt";
    int substeps = 100;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string integrator = "rk4";
    int precision = kDefaultCsvPrecision;
    bool clamp = false;
};

int cmd_simulate(const SimulateArgs& a, Manifest& manifest, std::ostream& err)
{
    Scenario scenario = load_scenario(a.scenario);
    manifest.input(a.scenario);
    manifest.seed(a.seed);
    SimulationConfig config;
    config.fine_substeps = a.substeps;
    config.seed = a.seed;
    config.integrator = a.integrator == "euler" ? Integrator::Euler : Integrator::Rk4;
    config.range_policy = a.clamp ? RangePolicy::Clamp : RangePolicy::Error;

    Simulation sim = [&] {
        if (a.mode == "dt") {
            return simulate_dt(scenario.spec, scenario.x0, config.range_policy);
        }
        if (a.mode == "ct") {
            return simulate_ct(scenario.spec, scenario.x0, config);
        }
        config.sigma = a.sigma;
        return simulate_sde(scenario.spec, scenario.x0, config);
    }();
    print_warnings(err, sim.warnings);
    Trajectory trajectory = sim.trajectory;
    if (a.mode != "sde" && a.sigma > 0.0) {
        auto noisy = add_observation_noise(trajectory, a.sigma, a.seed);
        print_warnings(err, noisy.warnings);
        trajectory = noisy.trajectory;
    }
    trajectory = trajectory.with_population(scenario.population);
    write_trajectory_csv(fs::path(a.out), trajectory, a.precision);
    manifest.output(a.out);
    manifest.write(manifest_path_for(a.out));
    return kOk;
}

struct TrajectoryArgs {
    std::string traj;
    std::string schedule;
    std::string truth;
    std::string out;
    bool lenient = false;
};

int cmd_identify(const TrajectoryArgs& a, Manifest& manifest, std::ostream& out, std::ostream& err)
{
    auto loaded = read_trajectory_csv(fs::path(a.traj));
    auto schedule = load_schedule(a.schedule);
    manifest.input(a.traj);
    manifest.input(a.schedule);
    if (loaded.clamp_count > 0) {
        err << "warning: " << loaded.clamp_count << " trajectory values clamped into [0, 1]\n";
    }
    auto system = build_regression(loaded.trajectory, schedule);
    auto report = check_identifiability(system, loaded.trajectory, schedule);
    emit_json(to_json(report), a.out, manifest, out);
    if (!report.overall) {
        for (const auto& v : report.intervals) {
            for (const auto& r : v.reasons) {
                err << "interval " << v.interval << ": " << r << '\n';
            }
        }
        return kNotIdentifiable;
    }
    return kOk;
}

int cmd_estimate(const TrajectoryArgs& a, Manifest& manifest, std::ostream& out, std::ostream& err)
{
    auto loaded = read_trajectory_csv(fs::path(a.traj));
    auto schedule = load_schedule(a.schedule);
    manifest.input(a.traj);
    manifest.input(a.schedule);
    auto system = build_regression(loaded.trajectory, schedule);
    auto report = check_identifiability(system, loaded.trajectory, schedule);
    if (!report.overall && !a.lenient) {
        out << to_json(report).dump(2) << '\n';
        err << "error: identifiability conditions fail; rerun with --lenient for a minimum-norm estimate\n";
        return kNotIdentifiable;
    }
    auto result = estimate(system);
    if (!report.overall) {
        err << "WARNING: parameters are NOT uniquely identifiable; the estimate is one of many solutions\n";
    }
    print_warnings(err, result.warnings);
    if (!a.truth.empty()) {
        Scenario truth = load_scenario(a.truth);
        manifest.input(a.truth);
        result.errors = error_metrics(result, truth.spec);
    }
    emit_json(to_json(result, report), a.out, manifest, out);
    return kOk;
}

struct FitArgs {
    std::string data;
    std::string updates;
    std::int64_t population = 0;
    std::string from;
    std::string to;
    bool smooth7 = false;
    bool fill_gaps = false;
    bool lenient = false;
    int holdout = 0;
    std::string out;
    std::string resim_out;
};

int cmd_fit(const FitArgs& a, Manifest& manifest, std::ostream& out, std::ostream& err)
{
    RawSeries series = load_series(a.data);
    auto updates = load_update_dates(a.updates);
    manifest.input(a.data);
    manifest.input(a.updates);
    if (!series.gaps.empty() && a.fill_gaps) {
        std::vector<std::string> log;
        series = fill_gaps(series, &log);
        for (const auto& line : log) {
            err << "note: " << line << '\n';
        }
    }
    DateWindow window;
    if (!a.from.empty()) {
        window.from = parse_date(a.from);
    }
    if (!a.to.empty()) {
        window.to = parse_date(a.to);
    }
    AlignedDataset dataset = align(series, updates, a.population, window, AlignOptions{a.smooth7});
    RealDataOptions options;
    options.lenient = a.lenient;
    if (a.holdout > 0) {
        options.holdout = a.holdout;
    }
    RealDataReport report = run_realdata_study(dataset, options);
    print_warnings(err, report.warnings);
    if (!a.resim_out.empty() && report.resimulated) {
        write_trajectory_csv(fs::path(a.resim_out), *report.resimulated);
        manifest.output(a.resim_out);
    }
    emit_json(to_json(report, dataset), a.out, manifest, out);
    if (!report.estimate) {
        for (const auto& v : report.identifiability.intervals) {
            for (const auto& r : v.reasons) {
                err << "interval " << v.interval << ": " << r << '\n';
            }
        }
        return kNotIdentifiable;
    }
    return kOk;
}

struct ForecastArgs {
    std::string params;
    double x0 = 0.0;
    int horizon = 0;
    int start_step = 0;
    bool stop_at_final = false;
    std::string out;
    int precision = kDefaultCsvPrecision;
};

int cmd_forecast(const ForecastArgs& a, Manifest& manifest, std::ostream& out)
{
    Json j = read_json_file(a.params);
    manifest.input(a.params);
    if (j.is_object() && !j.contains("x0")) {
        j["x0"] = a.x0;
    }
    Scenario scenario = scenario_from_json(j);
    auto extension = a.stop_at_final ? ForecastExtension::Stop : ForecastExtension::ContinueLast;
    Trajectory predicted =
        forecast(scenario.spec, a.x0, a.horizon, a.start_step, extension).with_population(scenario.population);
    if (a.out.empty()) {
        write_trajectory_csv(out, predicted, a.precision);
        return kOk;
    }
    write_trajectory_csv(fs::path(a.out), predicted, a.precision);
    manifest.output(a.out);
    manifest.write(manifest_path_for(a.out));
    return kOk;
}

struct StudyArgs {
    std::string plan;
    std::string out_dir;
    int trials = 0;
    std::optional<std::uint64_t> seed;
};

int cmd_study(const StudyArgs& a, Manifest& manifest, std::ostream& out)
{
    Json j = read_json_file(a.plan);
    manifest.input(a.plan);
    if (j.is_object() && j.contains("scenario") && j["scenario"].is_string()) {
        fs::path scenario_path = fs::path(a.plan).parent_path() / j["scenario"].get<std::string>();
        j["scenario"] = read_json_file(scenario_path);
        manifest.input(scenario_path);
    }
    ExperimentPlan plan = plan_from_json(j);
    if (a.trials > 0) {
        plan.trials = a.trials;
    }
    if (a.seed) {
        plan.seed = *a.seed;
    }
    manifest.seed(plan.seed);
    NoiseStudy study = run_noise_study(plan);

    fs::path dir(a.out_dir);
    fs::create_directories(dir);
    {
        std::ofstream params(dir / "params.csv");
        write_parameter_table(params, study);
        std::ofstream r0(dir / "r0.csv");
        write_r0_table(r0, study);
    }
    Json summary = summary_json(study);
    summary["plan"] = to_json(plan);
    write_json_file(dir / "summary.json", summary);
    for (const char* name : {"params.csv", "r0.csv", "summary.json"}) {
        manifest.output(dir / name);
    }
    manifest.write(dir / "manifest.json");

    for (const auto& s : study.summary) {
        out << to_string(s.regime) << " h=" << format_double(s.h, 6) << " trials=" << s.trials
            << " failed=" << s.failed << " median R0 error:";
        for (double e : s.median_r0_error) {
            out << ' ' << format_double(e, 4);
        }
        out << '\n';
    }
    return kOk;
}

int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err)
{
    Json j = read_json_file(manifest_path);
    if (!j.contains("args") || !j.contains("cwd")) {
        throw ValidationError("manifest lacks \"args\" or \"cwd\"");
    }
    auto args = j["args"].get<std::vector<std::string>>();
    if (!args.empty() && args.front() == "replay") {
        throw ValidationError("refusing to replay a replay manifest");
    }
    fs::path previous = fs::current_path();
    fs::current_path(j["cwd"].get<std::string>());
    int code = kFailure;
    try {
        code = run(args, out, err);
    } catch (...) {
        fs::current_path(previous);
        throw;
    }
    fs::current_path(previous);
    return code;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Hybrid SIS demand model: simulation, identifiability checks and least-squares estimation", "hysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", HYSIS_VERSION);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate a scenario and write a trajectory CSV");
    simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--mode", sim.mode, "dt, ct or sde")->check(CLI::IsMember({"dt", "ct", "sde"}));
    simulate->add_option("--substeps", sim.substeps, "Integration substeps per sample (ct, sde)")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--sigma", sim.sigma, "Process noise (sde) or observation noise (dt, ct)")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--out", sim.out, "Trajectory CSV")->required();
    simulate->add_option("--integrator", sim.integrator, "rk4 or euler (ct)")->check(CLI::IsMember({"rk4", "euler"}));
    simulate->add_option("--precision", sim.precision, "Significant digits in the CSV")->check(CLI::Range(1, 17));
    simulate->add_flag("--clamp", sim.clamp, "Clamp out-of-range jumps instead of failing");

    TrajectoryArgs ident;
    auto* identify = app.add_subcommand("identify", "Check the identifiability conditions on a trajectory");
    identify->add_option("--traj", ident.traj, "Trajectory CSV")->required()->check(CLI::ExistingFile);
    identify->add_option("--schedule", ident.schedule, "Schedule or scenario JSON")->required()->check(CLI::ExistingFile);
    identify->add_option("--out", ident.out, "Report JSON (default stdout)");

    TrajectoryArgs est;
    auto* estimate_cmd = app.add_subcommand("estimate", "Estimate all parameters by least squares");
    estimate_cmd->add_option("--traj", est.traj, "Trajectory CSV")->required()->check(CLI::ExistingFile);
    estimate_cmd->add_option("--schedule", est.schedule, "Schedule or scenario JSON")
        ->required()
        ->check(CLI::ExistingFile);
    estimate_cmd->add_option("--truth", est.truth, "Scenario JSON with the true parameters")
        ->check(CLI::ExistingFile);
    estimate_cmd->add_flag("--lenient", est.lenient, "Estimate even when identifiability fails");
    estimate_cmd->add_option("--out", est.out, "Result JSON (default stdout)");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit daily user counts and re-simulate");
    fit->add_option("--data", fit_args.data, "CSV with date,peak_players")->required()->check(CLI::ExistingFile);
    fit->add_option("--updates", fit_args.updates, "Update dates (one per line or JSON array)")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--population", fit_args.population, "Total population N")->required()->check(CLI::PositiveNumber);
    fit->add_option("--from", fit_args.from, "First day of the window (YYYY-MM-DD)");
    fit->add_option("--to", fit_args.to, "Last day of the window (YYYY-MM-DD)");
    fit->add_flag("--smooth7", fit_args.smooth7, "7-day centered moving average before fitting");
    fit->add_flag("--fill-gaps", fit_args.fill_gaps, "Linearly interpolate missing days");
    fit->add_flag("--lenient", fit_args.lenient, "Estimate even when identifiability fails");
    fit->add_option("--holdout", fit_args.holdout, "Hold out the last K days and forecast them")
        ->check(CLI::NonNegativeNumber);
    fit->add_option("--out", fit_args.out, "Report JSON (default stdout)");
    fit->add_option("--resim-out", fit_args.resim_out, "Re-simulated trajectory CSV");

    ForecastArgs fc;
    auto* forecast_cmd = app.add_subcommand("forecast", "Run the discrete-time model forward");
    forecast_cmd->add_option("--params", fc.params, "Scenario-format JSON with schedule and intervals")
        ->required()
        ->check(CLI::ExistingFile);
    forecast_cmd->add_option("--x0", fc.x0, "Starting state fraction")->required()->check(CLI::Range(0.0, 1.0));
    forecast_cmd->add_option("--horizon", fc.horizon, "Steps to forecast")->required()->check(CLI::PositiveNumber);
    forecast_cmd->add_option("--start-step", fc.start_step, "Step index of the starting state")
        ->check(CLI::NonNegativeNumber);
    forecast_cmd->add_flag("--stop-at-final", fc.stop_at_final, "Do not extend past the schedule's final step");
    forecast_cmd->add_option("--out", fc.out, "Trajectory CSV (default stdout)");
    forecast_cmd->add_option("--precision", fc.precision, "Significant digits")->check(CLI::Range(1, 17));

    StudyArgs st;
    std::uint64_t study_seed = 0;
    auto* study = app.add_subcommand("study", "Step-size sweep over noise regimes");
    study->add_option("--plan", st.plan, "Plan JSON")->required()->check(CLI::ExistingFile);
    study->add_option("--out-dir", st.out_dir, "Output directory")->required();
    study->add_option("--trials", st.trials, "Trials per noisy cell")->check(CLI::PositiveNumber);
    auto* seed_opt = study->add_option("--seed", study_seed, "Base seed");

    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }
    if (seed_opt->count() > 0) {
        st.seed = study_seed;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    Manifest manifest(name, args);
    try {
        if (name == "simulate") {
            return cmd_simulate(sim, manifest, err);
        }
        if (name == "identify") {
            return cmd_identify(ident, manifest, out, err);
        }
        if (name == "estimate") {
            return cmd_estimate(est, manifest, out, err);
        }
        if (name == "fit") {
            return cmd_fit(fit_args, manifest, out, err);
        }
        if (name == "forecast") {
            return cmd_forecast(fc, manifest, out);
        }
        if (name == "study") {
            return cmd_study(st, manifest, out);
        }
        return cmd_replay(manifest_path, out, err);
    } catch (const IdentifiabilityError& e) {
        err << "error: " << e.what() << '\n';
        return kNotIdentifiable;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const StateRangeError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const UndefinedRatioError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

} // namespace hysis::cli
