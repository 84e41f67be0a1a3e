#pragma once

// File formats shared by the CLI, the experiments and the Python module.
//
// Scenario JSON:
//   {"h": 1, "update_steps": [30, 90], "final_step": 150,
//    "intervals": [{"beta": .., "gamma": ..}, {"alpha": .., "beta": .., "gamma": ..}, ...],
//    "x0": 0.05, "population": 1000000}
// "alpha" is forbidden on the first interval and required on every other one.
// "population" is optional. Schedule files use the h / update_steps /
// final_step subset of the same object.
//
// Trajectory CSV: header `step,time,x[,count]`, time = step * h,
// count = round(x * N) only when a population is attached.

#include "hysis/estimator.hpp"
#include "hysis/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace hysis {

using Json = nlohmann::ordered_json;

struct Scenario {
    HybridModelSpec spec;
    double x0 = 0.0;
    std::optional<std::int64_t> population;
};

Scenario scenario_from_json(const Json& j);
Json to_json(const Scenario& scenario);
UpdateSchedule schedule_from_json(const Json& j);
Json to_json(const UpdateSchedule& schedule);
/// Parameter list in scenario form: [{"beta", "gamma"}, {"alpha", "beta", "gamma"}, ...].
Json intervals_to_json(std::span<const IntervalParams> intervals);
std::vector<IntervalParams> intervals_from_json(const Json& j);

/// Reads and parses a JSON file; ValidationError on I/O or syntax errors.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
Scenario load_scenario(const std::filesystem::path& path);
UpdateSchedule load_schedule(const std::filesystem::path& path);

inline constexpr int kDefaultCsvPrecision = 17;

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, int precision = kDefaultCsvPrecision);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          int precision = kDefaultCsvPrecision);

struct LoadedTrajectory {
    Trajectory trajectory;
    std::size_t clamp_count = 0;
};

/// Parses the trajectory CSV. h comes from the time column (time[1] - time[0]);
/// values are clamped into [0, 1].
LoadedTrajectory read_trajectory_csv(std::istream& in);
LoadedTrajectory read_trajectory_csv(const std::filesystem::path& path);

Json to_json(const IdentifiabilityReport& report);
Json to_json(const ErrorTable& errors);
/// {"theta", "intervals", "r0", "residual_norm", "identifiability", "errors"?}
/// plus "unique" and "warnings".
Json to_json(const EstimationResult& result, const IdentifiabilityReport& report);

/// Shortest decimal text that round-trips the double.
std::string format_double(double value, int precision = kDefaultCsvPrecision);

} // namespace hysis
