#include "hysis/experiments.hpp"

#include "hysis/errors.hpp"
#include "hysis/rng.hpp"
#include "hysis/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace hysis {
namespace {

constexpr double kGridSlack = 1e-9;

int grid_steps(double time, double step, const char* what)
{
    double ratio = time / step;
    double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > kGridSlack * std::max(1.0, ratio)) {
        throw ValidationError(std::string(what) + " is not a multiple of the truth grid step");
    }
    return static_cast<int>(rounded);
}

struct Subsampled {
    Trajectory trajectory;
    UpdateSchedule schedule;
};

// Samples the truth grid every h and discretizes the update times with ceil(t_i / h).
Subsampled subsample(const Trajectory& truth, std::span<const double> update_times, double final_time, double h)
{
    int stride = grid_steps(h, truth.step_size(), "step size h");
    int final_step = static_cast<int>(std::floor(final_time / h + kGridSlack));
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(final_step) + 1);
    for (int j = 0; j <= final_step; ++j) {
        values.push_back(truth[static_cast<std::size_t>(j) * static_cast<std::size_t>(stride)]);
    }
    std::vector<int> steps;
    for (double t : update_times) {
        steps.push_back(static_cast<int>(std::ceil(t / h - kGridSlack)));
    }
    return {Trajectory(std::move(values), h), UpdateSchedule(std::move(steps), final_step, h)};
}

CellResult run_cell(Regime regime, double h, int trial, const Trajectory& data, const UpdateSchedule& schedule,
                    const HybridModelSpec& truth)
{
    CellResult cell;
    cell.regime = regime;
    cell.h = h;
    cell.trial = trial;
    auto system = build_regression(data, schedule);
    cell.identifiability = check_identifiability(system, data, schedule);
    if (!cell.identifiability.overall) {
        return cell;
    }
    auto result = estimate(system);
    result.errors = error_metrics(result, truth);
    cell.estimate = std::move(result);
    cell.ok = true;
    return cell;
}

double rmse(std::span<const double> a, std::span<const double> b, std::size_t first, std::size_t last)
{
    double sum = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
        double d = a[k] - b[k];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(last - first + 1));
}

struct Fit {
    IdentifiabilityReport identifiability;
    std::optional<EstimationResult> estimate;
};

Fit fit_dataset(const Trajectory& data, const UpdateSchedule& schedule, bool lenient)
{
    auto system = build_regression(data, schedule);
    Fit fit{check_identifiability(system, data, schedule), std::nullopt};
    if (fit.identifiability.overall || lenient) {
        fit.estimate = estimate(system);
    }
    return fit;
}

} // namespace

std::string to_string(Regime regime)
{
    switch (regime) {
    case Regime::Noiseless:
        return "noiseless";
    case Regime::Observation:
        return "observation";
    case Regime::Process:
        return "process";
    }
    return "unknown";
}

Regime regime_from_string(const std::string& name)
{
    if (name == "noiseless") {
        return Regime::Noiseless;
    }
    if (name == "observation") {
        return Regime::Observation;
    }
    if (name == "process") {
        return Regime::Process;
    }
    throw ValidationError("unknown regime \"" + name + "\" (expected noiseless, observation or process)");
}

ExperimentPlan plan_from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("scenario")) {
        throw ValidationError("plan: missing \"scenario\" object");
    }
    ExperimentPlan plan{scenario_from_json(j["scenario"])};
    try {
        if (j.contains("regimes")) {
            plan.regimes.clear();
            for (const auto& r : j["regimes"]) {
                plan.regimes.push_back(regime_from_string(r.get<std::string>()));
            }
        }
        if (j.contains("h_values")) {
            plan.h_values = j["h_values"].get<std::vector<double>>();
        }
        plan.sigma = j.value("sigma", plan.sigma);
        plan.trials = j.value("trials", plan.trials);
        plan.seed = j.value("seed", plan.seed);
        plan.truth_step = j.value("truth_step", plan.truth_step);
        plan.truth_substeps = j.value("truth_substeps", plan.truth_substeps);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("plan: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        static const std::vector<std::string> known{"scenario", "regimes", "h_values", "sigma", "trials",
                                                    "seed",     "truth_step", "truth_substeps"};
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ValidationError("plan: unknown field \"" + key + "\"");
        }
    }
    return plan;
}

Json to_json(const ExperimentPlan& plan)
{
    Json out = Json::object();
    out["scenario"] = to_json(plan.scenario);
    Json regimes = Json::array();
    for (auto r : plan.regimes) {
        regimes.push_back(to_string(r));
    }
    out["regimes"] = std::move(regimes);
    out["h_values"] = plan.h_values;
    out["sigma"] = plan.sigma;
    out["trials"] = plan.trials;
    out["seed"] = plan.seed;
    out["truth_step"] = plan.truth_step;
    out["truth_substeps"] = plan.truth_substeps;
    return out;
}

const CellSummary* NoiseStudy::find(Regime regime, double h) const
{
    for (const auto& s : summary) {
        if (s.regime == regime && std::abs(s.h - h) <= kGridSlack * h) {
            return &s;
        }
    }
    return nullptr;
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

NoiseStudy run_noise_study(const ExperimentPlan& plan)
{
    if (plan.h_values.empty()) {
        throw ValidationError("plan: h_values is empty");
    }
    for (double h : plan.h_values) {
        if (!(h > 0.0)) {
            throw ValidationError("plan: every h must be positive");
        }
    }
    if (plan.trials < 1) {
        throw ValidationError("plan: trials must be >= 1");
    }
    if (!(plan.sigma >= 0.0)) {
        throw ValidationError("plan: sigma must be nonnegative");
    }
    if (!(plan.truth_step > 0.0) || plan.truth_substeps < 1) {
        throw ValidationError("plan: truth_step must be positive and truth_substeps >= 1");
    }

    const auto& spec = plan.scenario.spec;
    const auto& schedule = spec.schedule();
    const double scenario_h = schedule.step_size();
    std::vector<double> update_times;
    std::vector<int> truth_steps;
    for (int T : schedule.update_steps()) {
        update_times.push_back(T * scenario_h);
        truth_steps.push_back(grid_steps(T * scenario_h, plan.truth_step, "update time"));
    }
    const double final_time = schedule.final_step() * scenario_h;
    const HybridModelSpec truth_spec(
        UpdateSchedule(truth_steps, grid_steps(final_time, plan.truth_step, "final time"), plan.truth_step),
        std::vector<IntervalParams>(spec.intervals().begin(), spec.intervals().end()));

    SimulationConfig ct_config;
    ct_config.fine_substeps = plan.truth_substeps;
    ct_config.integrator = Integrator::Rk4;
    const Trajectory clean = simulate_ct(truth_spec, plan.scenario.x0, ct_config).trajectory;

    NoiseStudy study;
    study.parameter_names = theta_names(schedule.update_count());

    for (Regime regime : plan.regimes) {
        const int trials = regime == Regime::Noiseless ? 1 : plan.trials;
        const auto regime_id = static_cast<std::uint64_t>(regime);

        // Process noise: one sample path per trial on the truth grid, shared by every h.
        std::vector<Simulation> paths;
        if (regime == Regime::Process) {
            for (int trial = 0; trial < trials; ++trial) {
                SimulationConfig sde_config;
                sde_config.fine_substeps = plan.truth_substeps;
                sde_config.sigma = plan.sigma;
                sde_config.seed = derive_seed(plan.seed, {regime_id, static_cast<std::uint64_t>(trial)});
                sde_config.range_policy = RangePolicy::Clamp;
                paths.push_back(simulate_sde(truth_spec, plan.scenario.x0, sde_config));
            }
        }

        for (std::size_t hi = 0; hi < plan.h_values.size(); ++hi) {
            const double h = plan.h_values[hi];
            CellSummary summary;
            summary.regime = regime;
            summary.h = h;
            summary.trials = trials;
            std::vector<std::vector<double>> param_errors(study.parameter_names.size());
            std::vector<std::vector<double>> r0_errors(spec.intervals().size());

            for (int trial = 0; trial < trials; ++trial) {
                std::size_t clamps = 0;
                std::optional<Subsampled> data;
                if (regime == Regime::Process) {
                    data = subsample(paths[static_cast<std::size_t>(trial)].trajectory, update_times, final_time, h);
                    clamps = paths[static_cast<std::size_t>(trial)].clamp_count;
                } else {
                    data = subsample(clean, update_times, final_time, h);
                    if (regime == Regime::Observation) {
                        auto seed = derive_seed(plan.seed, {regime_id, hi, static_cast<std::uint64_t>(trial)});
                        auto noisy = add_observation_noise(data->trajectory, plan.sigma, seed);
                        clamps = noisy.clamp_count;
                        data->trajectory = std::move(noisy.trajectory);
                    }
                }
                CellResult cell = run_cell(regime, h, trial, data->trajectory, data->schedule, spec);
                cell.clamp_count = clamps;
                if (cell.ok) {
                    const auto& errors = *cell.estimate->errors;
                    for (std::size_t j = 0; j < errors.parameters.size(); ++j) {
                        param_errors[j].push_back(errors.parameters[j].error);
                    }
                    for (std::size_t i = 0; i < errors.r0.size(); ++i) {
                        r0_errors[i].push_back(errors.r0[i].error.value_or(std::numeric_limits<double>::infinity()));
                    }
                } else {
                    ++summary.failed;
                }
                study.cells.push_back(std::move(cell));
            }

            auto reduce = [](const std::vector<std::vector<double>>& columns, std::vector<double>& med,
                             std::vector<double>& max) {
                for (const auto& column : columns) {
                    med.push_back(median(column));
                    max.push_back(column.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : *std::max_element(column.begin(), column.end()));
                }
            };
            reduce(param_errors, summary.median_parameter_error, summary.max_parameter_error);
            reduce(r0_errors, summary.median_r0_error, summary.max_r0_error);
            study.summary.push_back(std::move(summary));
        }
    }
    return study;
}

void write_parameter_table(std::ostream& out, const NoiseStudy& study)
{
    out << "regime,h,trial,param,true,estimate,rel_error\n";
    for (const auto& cell : study.cells) {
        if (!cell.ok) {
            continue;
        }
        for (const auto& p : cell.estimate->errors->parameters) {
            out << to_string(cell.regime) << ',' << format_double(cell.h) << ',' << cell.trial << ',' << p.name << ','
                << format_double(p.truth) << ',' << format_double(p.estimate) << ',' << format_double(p.error) << '\n';
        }
    }
}

void write_r0_table(std::ostream& out, const NoiseStudy& study)
{
    out << "regime,h,trial,interval,r0_true,r0_est,rel_error\n";
    auto field = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& cell : study.cells) {
        if (!cell.ok) {
            continue;
        }
        for (const auto& r : cell.estimate->errors->r0) {
            out << to_string(cell.regime) << ',' << format_double(cell.h) << ',' << cell.trial << ',' << r.interval
                << ',' << field(r.truth) << ',' << field(r.estimate) << ',' << field(r.error) << '\n';
        }
    }
}

Json summary_json(const NoiseStudy& study)
{
    Json out = Json::object();
    out["parameters"] = study.parameter_names;
    Json cells = Json::array();
    for (const auto& s : study.summary) {
        Json entry = Json::object();
        entry["regime"] = to_string(s.regime);
        entry["h"] = s.h;
        entry["trials"] = s.trials;
        entry["failed"] = s.failed;
        Json med = Json::object();
        Json max = Json::object();
        for (std::size_t j = 0; j < study.parameter_names.size(); ++j) {
            med[study.parameter_names[j]] = s.median_parameter_error[j];
            max[study.parameter_names[j]] = s.max_parameter_error[j];
        }
        entry["median_rel_error"] = std::move(med);
        entry["max_rel_error"] = std::move(max);
        entry["median_r0_rel_error"] = s.median_r0_error;
        entry["max_r0_rel_error"] = s.max_r0_error;
        cells.push_back(std::move(entry));
    }
    out["cells"] = std::move(cells);
    Json failures = Json::array();
    for (const auto& cell : study.cells) {
        if (!cell.ok) {
            Json entry = Json::object();
            entry["regime"] = to_string(cell.regime);
            entry["h"] = cell.h;
            entry["trial"] = cell.trial;
            entry["identifiability"] = to_json(cell.identifiability);
            failures.push_back(std::move(entry));
        }
    }
    out["failures"] = std::move(failures);
    return out;
}

RealDataReport run_realdata_study(const AlignedDataset& dataset, const RealDataOptions& options)
{
    RealDataReport report;
    const auto& data = dataset.trajectory;
    const auto& schedule = dataset.schedule;
    const double population = static_cast<double>(dataset.population);

    Fit fit = fit_dataset(data, schedule, options.lenient);
    report.identifiability = fit.identifiability;
    if (!fit.estimate) {
        return report;
    }
    report.estimate = std::move(fit.estimate);
    if (!report.identifiability.overall) {
        report.warnings.push_back("identifiability conditions fail; estimates are not unique");
    }

    auto fitted = HybridModelSpec::unchecked(schedule, report.estimate->intervals);
    auto sim = simulate_dt(fitted, data[0], RangePolicy::Clamp);
    for (const auto& w : sim.warnings) {
        report.warnings.push_back("re-simulation: " + w);
    }
    report.resimulated = sim.trajectory.with_population(dataset.population);
    const auto simulated = report.resimulated->values();
    for (std::size_t i = 0; i < schedule.interval_count(); ++i) {
        bool last = i + 1 == schedule.interval_count();
        auto first = static_cast<std::size_t>(schedule.interval_begin(i));
        auto end = static_cast<std::size_t>(last ? schedule.final_step() : schedule.interval_end(i) - 1);
        report.interval_rmse_counts.push_back(rmse(simulated, data.values(), first, end) * population);
    }
    report.rmse_counts = rmse(simulated, data.values(), 0, data.size() - 1) * population;

    if (options.holdout) {
        const int holdout = *options.holdout;
        if (holdout < 1 || holdout >= schedule.final_step()) {
            throw ValidationError("holdout must lie in 1.." + std::to_string(schedule.final_step() - 1));
        }
        HoldoutForecast hf;
        hf.fit_steps = schedule.final_step() - holdout;
        hf.horizon = holdout;
        // An update landing on the last fitted sample would put its jump
        // transition inside the previous interval's rows; stop one step earlier.
        auto steps = schedule.update_steps();
        if (std::find(steps.begin(), steps.end(), hf.fit_steps) != steps.end()) {
            --hf.fit_steps;
            ++hf.horizon;
        }
        std::vector<int> kept;
        for (int T : schedule.update_steps()) {
            if (T < hf.fit_steps) {
                kept.push_back(T);
            } else {
                hf.tail_contains_updates = true;
            }
        }
        UpdateSchedule prefix_schedule(kept, hf.fit_steps, schedule.step_size());
        Trajectory prefix = data.slice(0, static_cast<std::size_t>(hf.fit_steps));
        Fit prefix_fit = fit_dataset(prefix, prefix_schedule, false);
        hf.identifiability = prefix_fit.identifiability;
        if (prefix_fit.estimate) {
            auto prefix_spec = HybridModelSpec::unchecked(prefix_schedule, prefix_fit.estimate->intervals);
            double start = data[static_cast<std::size_t>(hf.fit_steps)];
            Trajectory predicted = forecast(prefix_spec, start, hf.horizon, hf.fit_steps, ForecastExtension::ContinueLast)
                                       .with_population(dataset.population);
            double sum = 0.0;
            for (int j = 1; j <= hf.horizon; ++j) {
                double d = predicted[static_cast<std::size_t>(j)] - data[static_cast<std::size_t>(hf.fit_steps + j)];
                sum += d * d;
            }
            hf.rmse_counts = std::sqrt(sum / hf.horizon) * population;
            hf.forecast = std::move(predicted);
            hf.produced = true;
        }
        if (hf.tail_contains_updates) {
            report.warnings.push_back("held-out tail contains updates; the forecast does not apply their jumps");
        }
        report.holdout = std::move(hf);
    }
    return report;
}

Json to_json(const RealDataReport& report, const AlignedDataset& dataset)
{
    Json out = Json::object();
    out["start_date"] = format_date(dataset.start_date);
    out["population"] = dataset.population;
    out["start_at_update"] = dataset.start_at_update;
    out["schedule"] = to_json(dataset.schedule);
    out["identifiability"] = to_json(report.identifiability);
    if (report.estimate) {
        out["estimate"] = to_json(*report.estimate, report.identifiability);
        out["interval_rmse_counts"] = report.interval_rmse_counts;
        out["rmse_counts"] = report.rmse_counts;
    }
    if (report.holdout) {
        const auto& hf = *report.holdout;
        Json h = Json::object();
        h["fit_steps"] = hf.fit_steps;
        h["horizon"] = hf.horizon;
        h["produced"] = hf.produced;
        h["tail_contains_updates"] = hf.tail_contains_updates;
        h["identifiability"] = to_json(hf.identifiability);
        if (hf.produced) {
            h["rmse_counts"] = hf.rmse_counts;
            std::vector<double> values(hf.forecast->values().begin(), hf.forecast->values().end());
            h["forecast"] = values;
        }
        out["holdout"] = std::move(h);
    }
    Json notes = dataset.notes;
    out["notes"] = std::move(notes);
    out["warnings"] = report.warnings;
    return out;
}

} // namespace hysis
