#pragma once

// Daily user-count ingestion.
//
// Series CSV: header `date,peak_players`, ISO-8601 dates, integer counts.
// Update list: one ISO-8601 date per line, or a JSON array of date strings.

#include "hysis/model.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hysis {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD; ValidationError otherwise.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Run of missing days between two consecutive observations.
struct Gap {
    Date last_before;
    Date first_after;
    int missing_days = 0;
};

struct RawSeries {
    std::vector<Date> dates;
    std::vector<std::int64_t> counts;
    std::vector<Gap> gaps;

    std::size_t size() const { return dates.size(); }
};

RawSeries parse_series(std::istream& in, const std::string& source = "<stream>");
RawSeries load_series(const std::filesystem::path& path);

/// Linear interpolation across every gap (counts rounded to the nearest
/// integer). One log line per filled gap is appended to `log` when given.
RawSeries fill_gaps(const RawSeries& series, std::vector<std::string>* log = nullptr);

std::vector<Date> parse_update_dates(std::istream& in);
std::vector<Date> load_update_dates(const std::filesystem::path& path);

struct DateWindow {
    std::optional<Date> from;
    std::optional<Date> to;
};

struct AlignOptions {
    /// 7-day centered moving average on x. Not part of the estimation method;
    /// a pre-smoother for weekday/weekend cycles. Truncated at the edges.
    bool smooth7 = false;
};

struct AlignedDataset {
    Trajectory trajectory; ///< x = count / N, h = 1 day
    UpdateSchedule schedule;
    std::int64_t population = 0;
    Date start_date;
    /// An update falls on the window's first day. Its jump happened before
    /// the first sample, so no alpha for it can be estimated; it is left out
    /// of the schedule.
    bool start_at_update = false;
    std::vector<std::string> notes;
};

/// Maps update dates to step offsets from the window start and normalizes
/// counts by `population`. Rejects gaps, counts above N, and update dates
/// outside the window or on its last day.
AlignedDataset align(const RawSeries& series, std::span<const Date> update_dates, std::int64_t population,
                     const DateWindow& window = {}, const AlignOptions& options = {});

std::vector<double> moving_average7(std::span<const double> values);

} // namespace hysis
