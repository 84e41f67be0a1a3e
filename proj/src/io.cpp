#include "hysis/io.hpp"

#include "hysis/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hysis {
namespace {

template <typename T>
T required(const Json& j, const char* key, const char* where)
{
    if (!j.is_object() || !j.contains(key)) {
        throw ValidationError(std::string(where) + ": missing field \"" + key + "\"");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string(where) + ": field \"" + key + "\" has the wrong type (" + e.what() + ")");
    }
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
            cell.pop_back();
        }
        while (!cell.empty() && cell.front() == ' ') {
            cell.erase(cell.begin());
        }
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

double parse_double(const std::string& text, std::size_t line_no)
{
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": cannot parse number \"" + text + "\"");
    }
}

// The count column is round(x N); N is the candidate near count / x at the
// largest state that reproduces every row, or unknown if none does.
std::optional<std::int64_t> recover_population(const std::vector<double>& x, const std::vector<double>& counts)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < x.size(); ++k) {
        if (x[k] > x[best]) {
            best = k;
        }
    }
    if (x[best] <= 0.0 || counts[best] <= 0.0) {
        return std::nullopt;
    }
    // Several N can reproduce every rounded count; keep the one whose
    // unrounded products sit closest to the counts.
    const auto guess = std::llround(counts[best] / x[best]);
    std::optional<std::int64_t> found;
    double found_residual = 0.0;
    for (std::int64_t offset : {0, -1, 1, -2, 2}) {
        std::int64_t n = guess + offset;
        if (n <= 0) {
            continue;
        }
        bool consistent = true;
        double residual = 0.0;
        for (std::size_t k = 0; k < x.size() && consistent; ++k) {
            double product = x[k] * static_cast<double>(n);
            consistent = static_cast<double>(std::llround(product)) == counts[k];
            residual += std::abs(product - counts[k]);
        }
        if (consistent && (!found || residual < found_residual)) {
            found = n;
            found_residual = residual;
        }
    }
    if (found) {
        return found;
    }
    return std::nullopt;
}

} // namespace

std::string format_double(double value, int precision)
{
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*g", precision, value);
    return buffer;
}

std::vector<IntervalParams> intervals_from_json(const Json& j)
{
    if (!j.is_array() || j.empty()) {
        throw ValidationError("\"intervals\" must be a nonempty array");
    }
    std::vector<IntervalParams> intervals;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& entry = j[i];
        std::string where = "intervals[" + std::to_string(i) + "]";
        IntervalParams p;
        p.beta = required<double>(entry, "beta", where.c_str());
        p.gamma = required<double>(entry, "gamma", where.c_str());
        if (entry.contains("alpha")) {
            if (i == 0) {
                throw ValidationError("intervals[0]: \"alpha\" is not allowed on the first interval");
            }
            p.alpha = required<double>(entry, "alpha", where.c_str());
        } else if (i > 0) {
            throw ValidationError(where + ": missing field \"alpha\"");
        }
        for (const auto& [key, value] : entry.items()) {
            if (key != "alpha" && key != "beta" && key != "gamma") {
                throw ValidationError(where + ": unknown field \"" + key + "\"");
            }
        }
        intervals.push_back(p);
    }
    return intervals;
}

Json intervals_to_json(std::span<const IntervalParams> intervals)
{
    Json out = Json::array();
    for (const auto& p : intervals) {
        Json entry = Json::object();
        if (p.alpha) {
            entry["alpha"] = *p.alpha;
        }
        entry["beta"] = p.beta;
        entry["gamma"] = p.gamma;
        out.push_back(std::move(entry));
    }
    return out;
}

UpdateSchedule schedule_from_json(const Json& j)
{
    return UpdateSchedule(required<std::vector<int>>(j, "update_steps", "schedule"),
                          required<int>(j, "final_step", "schedule"), required<double>(j, "h", "schedule"));
}

Json to_json(const UpdateSchedule& schedule)
{
    Json out = Json::object();
    out["h"] = schedule.step_size();
    out["update_steps"] = std::vector<int>(schedule.update_steps().begin(), schedule.update_steps().end());
    out["final_step"] = schedule.final_step();
    return out;
}

Scenario scenario_from_json(const Json& j)
{
    if (!j.is_object()) {
        throw ValidationError("scenario must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "h" && key != "update_steps" && key != "final_step" && key != "intervals" && key != "x0" &&
            key != "population") {
            throw ValidationError("scenario: unknown field \"" + key + "\"");
        }
    }
    HybridModelSpec spec(schedule_from_json(j), intervals_from_json(j.contains("intervals") ? j["intervals"] : Json()));
    Scenario scenario{std::move(spec), required<double>(j, "x0", "scenario"), std::nullopt};
    if (!(scenario.x0 >= 0.0 && scenario.x0 <= 1.0)) {
        throw ValidationError("scenario: x0 must lie in [0, 1]");
    }
    if (j.contains("population")) {
        scenario.population = required<std::int64_t>(j, "population", "scenario");
        if (*scenario.population <= 0) {
            throw ValidationError("scenario: population must be positive");
        }
    }
    return scenario;
}

Json to_json(const Scenario& scenario)
{
    Json out = to_json(scenario.spec.schedule());
    out["intervals"] = intervals_to_json(scenario.spec.intervals());
    out["x0"] = scenario.x0;
    if (scenario.population) {
        out["population"] = *scenario.population;
    }
    return out;
}

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j)
{
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

Scenario load_scenario(const std::filesystem::path& path)
{
    return scenario_from_json(read_json_file(path));
}

UpdateSchedule load_schedule(const std::filesystem::path& path)
{
    return schedule_from_json(read_json_file(path));
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, int precision)
{
    const auto& population = trajectory.population();
    out << (population ? "step,time,x,count\n" : "step,time,x\n");
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        double x = trajectory[k];
        out << k << ',' << format_double(static_cast<double>(k) * trajectory.step_size(), precision) << ','
            << format_double(x, precision);
        if (population) {
            out << ',' << std::llround(x * static_cast<double>(*population));
        }
        out << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory, int precision)
{
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    write_trajectory_csv(out, trajectory, precision);
}

LoadedTrajectory read_trajectory_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("trajectory CSV is empty");
    }
    auto header = split_csv_line(line);
    bool with_count = header == std::vector<std::string>{"step", "time", "x", "count"};
    if (!with_count && header != std::vector<std::string>{"step", "time", "x"}) {
        throw ValidationError("trajectory CSV header must be step,time,x[,count]");
    }
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> counts;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                  " columns");
        }
        double step = parse_double(cells[0], line_no);
        if (step != static_cast<double>(values.size())) {
            throw ValidationError("line " + std::to_string(line_no) + ": steps must be 0, 1, 2, ...");
        }
        times.push_back(parse_double(cells[1], line_no));
        values.push_back(parse_double(cells[2], line_no));
        if (with_count) {
            counts.push_back(parse_double(cells[3], line_no));
        }
    }
    if (values.size() < 2) {
        throw ValidationError("trajectory CSV needs at least two rows");
    }
    double h = times[1] - times[0];
    std::optional<std::int64_t> population = with_count ? recover_population(values, counts) : std::nullopt;
    auto clamped = Trajectory::clamped(std::move(values), h, population);
    return {std::move(clamped.trajectory), clamped.clamp_count};
}

LoadedTrajectory read_trajectory_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return read_trajectory_csv(in);
}

Json to_json(const IdentifiabilityReport& report)
{
    Json out = Json::object();
    out["overall"] = report.overall;
    out["psi_rank"] = report.psi_rank;
    out["psi_columns"] = report.psi_columns;
    Json intervals = Json::array();
    for (const auto& v : report.intervals) {
        Json entry = Json::object();
        entry["interval"] = v.interval;
        entry["length_ok"] = v.length_ok;
        entry["variation_ok"] = v.variation_ok;
        entry["jump_state_ok"] = v.jump_state_ok;
        entry["all_states_positive"] = v.all_states_positive;
        entry["rank"] = v.rank;
        entry["expected_rank"] = v.expected_rank;
        entry["reasons"] = v.reasons;
        intervals.push_back(std::move(entry));
    }
    out["intervals"] = std::move(intervals);
    return out;
}

Json to_json(const ErrorTable& errors)
{
    Json out = Json::object();
    Json params = Json::array();
    for (const auto& p : errors.parameters) {
        Json entry = Json::object();
        entry["name"] = p.name;
        entry["true"] = p.truth;
        entry["estimate"] = p.estimate;
        entry["error"] = p.error;
        entry["absolute"] = p.absolute;
        params.push_back(std::move(entry));
    }
    Json r0 = Json::array();
    for (const auto& r : errors.r0) {
        Json entry = Json::object();
        entry["interval"] = r.interval;
        entry["true"] = r.truth ? Json(*r.truth) : Json(nullptr);
        entry["estimate"] = r.estimate ? Json(*r.estimate) : Json(nullptr);
        entry["error"] = r.error ? Json(*r.error) : Json(nullptr);
        entry["absolute"] = r.absolute;
        r0.push_back(std::move(entry));
    }
    out["parameters"] = std::move(params);
    out["r0"] = std::move(r0);
    out["max_parameter_error"] = errors.max_parameter_error();
    out["max_r0_error"] = errors.max_r0_error();
    return out;
}

Json to_json(const EstimationResult& result, const IdentifiabilityReport& report)
{
    Json out = Json::object();
    out["theta"] = result.theta;
    out["intervals"] = intervals_to_json(result.intervals);
    Json r0 = Json::array();
    for (const auto& r : result.r0) {
        r0.push_back(r ? Json(*r) : Json(nullptr));
    }
    out["r0"] = std::move(r0);
    out["residual_norm"] = result.residual_norm;
    out["identifiability"] = to_json(report);
    if (result.errors) {
        out["errors"] = to_json(*result.errors);
    }
    out["unique"] = result.unique;
    out["warnings"] = result.warnings;
    return out;
}

} // namespace hysis
