#include "hysis/ingest.hpp"

#include "hysis/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hysis {
namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename Int>
bool parse_int(std::string_view text, Int& out)
{
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::string at_line(const std::string& source, std::size_t line_no)
{
    return source + ":" + std::to_string(line_no) + ": ";
}

} // namespace

Date parse_date(std::string_view text)
{
    text = trim(text);
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    bool shape = text.size() == 10 && text[4] == '-' && text[7] == '-';
    if (!shape || !parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
        !parse_int(text.substr(8, 2), d)) {
        throw ValidationError("invalid date \"" + std::string(text) + "\" (expected YYYY-MM-DD)");
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw ValidationError("invalid calendar date \"" + std::string(text) + "\"");
    }
    return Date(ymd);
}

std::string format_date(Date date)
{
    std::chrono::year_month_day ymd(date);
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buffer;
}

RawSeries parse_series(std::istream& in, const std::string& source)
{
    std::string line;
    if (!std::getline(in, line) || trim(line) != "date,peak_players") {
        throw ValidationError(source + ": header must be date,peak_players");
    }
    RawSeries series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view row = trim(line);
        if (row.empty()) {
            continue;
        }
        auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
            throw ValidationError(at_line(source, line_no) + "malformed row \"" + std::string(row) + "\"");
        }
        Date date;
        try {
            date = parse_date(row.substr(0, comma));
        } catch (const ValidationError& e) {
            throw ValidationError(at_line(source, line_no) + e.what());
        }
        std::int64_t count = 0;
        if (!parse_int(trim(row.substr(comma + 1)), count)) {
            throw ValidationError(at_line(source, line_no) + "count \"" + std::string(row.substr(comma + 1)) +
                                  "\" is not an integer");
        }
        if (count < 0) {
            throw ValidationError(at_line(source, line_no) + "negative count " + std::to_string(count));
        }
        if (!series.dates.empty()) {
            Date previous = series.dates.back();
            if (date == previous) {
                throw ValidationError(at_line(source, line_no) + "duplicate date " + format_date(date));
            }
            if (date < previous) {
                throw ValidationError(at_line(source, line_no) + "date " + format_date(date) + " precedes " +
                                      format_date(previous));
            }
            int missing = static_cast<int>((date - previous).count()) - 1;
            if (missing > 0) {
                series.gaps.push_back({previous, date, missing});
            }
        }
        series.dates.push_back(date);
        series.counts.push_back(count);
    }
    if (series.dates.empty()) {
        throw ValidationError(source + ": no data rows");
    }
    return series;
}

RawSeries load_series(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return parse_series(in, path.string());
}

RawSeries fill_gaps(const RawSeries& series, std::vector<std::string>* log)
{
    RawSeries filled;
    for (std::size_t j = 0; j < series.size(); ++j) {
        if (j > 0) {
            Date previous = series.dates[j - 1];
            int span = static_cast<int>((series.dates[j] - previous).count());
            if (span > 1) {
                double a = static_cast<double>(series.counts[j - 1]);
                double b = static_cast<double>(series.counts[j]);
                for (int d = 1; d < span; ++d) {
                    double t = static_cast<double>(d) / span;
                    filled.dates.push_back(previous + std::chrono::days(d));
                    filled.counts.push_back(std::llround(a + t * (b - a)));
                }
                if (log) {
                    log->push_back("interpolated " + std::to_string(span - 1) + " day(s) between " +
                                   format_date(previous) + " and " + format_date(series.dates[j]));
                }
            }
        }
        filled.dates.push_back(series.dates[j]);
        filled.counts.push_back(series.counts[j]);
    }
    return filled;
}

std::vector<Date> parse_update_dates(std::istream& in)
{
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    std::string_view body = trim(text);
    while (!body.empty() && (body.front() == '\n' || body.front() == ' ')) {
        body.remove_prefix(1);
    }
    std::vector<Date> dates;
    if (!body.empty() && body.front() == '[') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(std::string("update list: ") + e.what());
        }
        for (const auto& entry : j) {
            if (!entry.is_string()) {
                throw ValidationError("update list: JSON entries must be date strings");
            }
            dates.push_back(parse_date(entry.get<std::string>()));
        }
    } else {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            std::string_view row = trim(line);
            if (row.empty() || row.front() == '#') {
                continue;
            }
            dates.push_back(parse_date(row));
        }
    }
    std::sort(dates.begin(), dates.end());
    if (std::adjacent_find(dates.begin(), dates.end()) != dates.end()) {
        throw ValidationError("update list contains a duplicate date");
    }
    return dates;
}

std::vector<Date> load_update_dates(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return parse_update_dates(in);
}

std::vector<double> moving_average7(std::span<const double> values)
{
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    std::vector<double> out(values.size());
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, k - 3);
        std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, k + 3);
        double sum = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            sum += values[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(k)] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

AlignedDataset align(const RawSeries& series, std::span<const Date> update_dates, std::int64_t population,
                     const DateWindow& window, const AlignOptions& options)
{
    if (population <= 0) {
        throw ValidationError("population N must be positive");
    }
    if (!series.gaps.empty()) {
        const auto& g = series.gaps.front();
        throw ValidationError("series has " + std::to_string(series.gaps.size()) + " gap(s), first after " +
                              format_date(g.last_before) + "; fill or trim them before aligning");
    }
    Date from = window.from.value_or(series.dates.front());
    Date to = window.to.value_or(series.dates.back());
    if (from < series.dates.front() || to > series.dates.back() || to <= from) {
        throw ValidationError("window " + format_date(from) + ".." + format_date(to) + " is not inside the series " +
                              format_date(series.dates.front()) + ".." + format_date(series.dates.back()));
    }
    auto first = static_cast<std::size_t>((from - series.dates.front()).count());
    auto last = static_cast<std::size_t>((to - series.dates.front()).count());

    std::vector<double> x;
    for (std::size_t j = first; j <= last; ++j) {
        if (series.counts[j] > population) {
            throw ValidationError("count " + std::to_string(series.counts[j]) + " on " + format_date(series.dates[j]) +
                                  " exceeds population " + std::to_string(population));
        }
        x.push_back(static_cast<double>(series.counts[j]) / static_cast<double>(population));
    }

    std::vector<std::string> notes;
    if (options.smooth7) {
        x = moving_average7(x);
        notes.push_back("7-day centered moving average applied (not part of the estimation method)");
    }

    const int final_step = static_cast<int>(last - first);
    bool start_at_update = false;
    std::vector<int> steps;
    std::vector<Date> sorted(update_dates.begin(), update_dates.end());
    std::sort(sorted.begin(), sorted.end());
    for (Date d : sorted) {
        if (d < from || d > to) {
            throw ValidationError("update date " + format_date(d) + " lies outside the window " + format_date(from) +
                                  ".." + format_date(to));
        }
        int offset = static_cast<int>((d - from).count());
        if (offset == 0) {
            start_at_update = true;
            notes.push_back("update on " + format_date(d) +
                            " coincides with the window start; its jump precedes the data and is not estimated");
            continue;
        }
        if (offset == final_step) {
            throw ValidationError("update date " + format_date(d) + " falls on the last day of the window");
        }
        steps.push_back(offset);
    }

    return AlignedDataset{Trajectory(std::move(x), 1.0, population), UpdateSchedule(std::move(steps), final_step, 1.0),
                          population, from, start_at_update, std::move(notes)};
}

} // namespace hysis
