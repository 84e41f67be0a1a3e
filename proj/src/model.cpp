#include "hysis/model.hpp"

#include "hysis/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hysis {

void validate(const IntervalParams& params)
{
    if (!(params.beta >= 0.0) || !std::isfinite(params.beta)) {
        throw ValidationError("beta must be a finite nonnegative rate, got " + std::to_string(params.beta));
    }
    if (!(params.gamma >= 0.0) || !std::isfinite(params.gamma)) {
        throw ValidationError("gamma must be a finite nonnegative rate, got " + std::to_string(params.gamma));
    }
    if (params.alpha && (!(*params.alpha >= -1.0) || !std::isfinite(*params.alpha))) {
        throw ValidationError("alpha must be >= -1, got " + std::to_string(*params.alpha));
    }
}

double reproduction_number(const IntervalParams& params)
{
    if (params.gamma == 0.0) {
        throw UndefinedRatioError("reproduction number undefined for gamma = 0");
    }
    return params.beta / params.gamma;
}

double endemic_equilibrium(const IntervalParams& params)
{
    if (params.beta <= 0.0) {
        return 0.0;
    }
    return std::max(0.0, 1.0 - params.gamma / params.beta);
}

UpdateSchedule::UpdateSchedule(std::vector<int> update_steps, int final_step, double step_size)
    : update_steps_(std::move(update_steps))
    , final_step_(final_step)
    , step_size_(step_size)
{
    if (!(step_size_ > 0.0) || !std::isfinite(step_size_)) {
        throw ValidationError("step size h must be positive");
    }
    int previous = 0;
    for (std::size_t i = 0; i < update_steps_.size(); ++i) {
        if (update_steps_[i] <= previous) {
            throw ValidationError("update steps must be strictly increasing and positive (T_" + std::to_string(i + 1) +
                                  " = " + std::to_string(update_steps_[i]) + ")");
        }
        previous = update_steps_[i];
    }
    if (final_step_ <= previous) {
        throw ValidationError("final step " + std::to_string(final_step_) + " must exceed the last update step " +
                              std::to_string(previous));
    }
}

int UpdateSchedule::interval_begin(std::size_t i) const
{
    return i == 0 ? 0 : update_steps_.at(i - 1);
}

int UpdateSchedule::interval_end(std::size_t i) const
{
    return i < update_steps_.size() ? update_steps_[i] : final_step_;
}

std::size_t UpdateSchedule::active_interval(int k) const
{
    auto it = std::upper_bound(update_steps_.begin(), update_steps_.end(), k);
    return static_cast<std::size_t>(it - update_steps_.begin());
}

std::optional<std::size_t> UpdateSchedule::jump_at(int k) const
{
    auto it = std::lower_bound(update_steps_.begin(), update_steps_.end(), k + 1);
    if (it != update_steps_.end() && *it == k + 1) {
        return static_cast<std::size_t>(it - update_steps_.begin()) + 1;
    }
    return std::nullopt;
}

std::vector<double> theta_pack(std::span<const IntervalParams> intervals)
{
    if (intervals.empty()) {
        throw ValidationError("at least one interval is required");
    }
    if (intervals.front().alpha) {
        throw ValidationError("interval 0 must not carry alpha");
    }
    std::vector<double> theta;
    theta.reserve(theta_size(intervals.size() - 1));
    theta.push_back(intervals.front().beta);
    theta.push_back(intervals.front().gamma);
    for (std::size_t i = 1; i < intervals.size(); ++i) {
        if (!intervals[i].alpha) {
            throw ValidationError("interval " + std::to_string(i) + " lacks alpha");
        }
        theta.push_back(*intervals[i].alpha);
        theta.push_back(intervals[i].beta);
        theta.push_back(intervals[i].gamma);
    }
    return theta;
}

std::vector<IntervalParams> theta_unpack(std::span<const double> theta)
{
    if (theta.size() < 2 || (theta.size() - 2) % 3 != 0) {
        throw ValidationError("parameter vector length " + std::to_string(theta.size()) + " is not of the form 2 + 3m");
    }
    std::vector<IntervalParams> intervals;
    intervals.push_back({std::nullopt, theta[0], theta[1]});
    for (std::size_t j = 2; j < theta.size(); j += 3) {
        intervals.push_back({theta[j], theta[j + 1], theta[j + 2]});
    }
    return intervals;
}

std::vector<std::string> theta_names(std::size_t updates)
{
    std::vector<std::string> names{"beta0", "gamma0"};
    for (std::size_t i = 1; i <= updates; ++i) {
        auto s = std::to_string(i);
        names.push_back("alpha" + s);
        names.push_back("beta" + s);
        names.push_back("gamma" + s);
    }
    return names;
}

HybridModelSpec::HybridModelSpec(UpdateSchedule schedule, std::vector<IntervalParams> intervals)
    : HybridModelSpec(std::move(schedule), std::move(intervals), true)
{
}

HybridModelSpec HybridModelSpec::unchecked(UpdateSchedule schedule, std::vector<IntervalParams> intervals)
{
    return HybridModelSpec(std::move(schedule), std::move(intervals), false);
}

HybridModelSpec::HybridModelSpec(UpdateSchedule schedule, std::vector<IntervalParams> intervals, bool check_ranges)
    : schedule_(std::move(schedule))
    , intervals_(std::move(intervals))
{
    if (intervals_.size() != schedule_.interval_count()) {
        throw ValidationError("expected " + std::to_string(schedule_.interval_count()) + " intervals for " +
                              std::to_string(schedule_.update_count()) + " updates, got " +
                              std::to_string(intervals_.size()));
    }
    // Shape checks (alpha presence) live in theta_pack.
    (void)theta_pack(intervals_);
    for (const auto& p : intervals_) {
        if (check_ranges) {
            validate(p);
        } else if (!std::isfinite(p.beta) || !std::isfinite(p.gamma) || (p.alpha && !std::isfinite(*p.alpha))) {
            throw ValidationError("parameters must be finite");
        }
    }
}

HybridModelSpec HybridModelSpec::from_theta(UpdateSchedule schedule, std::span<const double> theta)
{
    return HybridModelSpec(std::move(schedule), theta_unpack(theta));
}

Trajectory::Trajectory(std::vector<double> values, double step_size, std::optional<std::int64_t> population)
    : values_(std::move(values))
    , step_size_(step_size)
    , population_(population)
{
    if (values_.size() < 2) {
        throw ValidationError("a trajectory needs at least two samples");
    }
    if (!(step_size_ > 0.0) || !std::isfinite(step_size_)) {
        throw ValidationError("trajectory step size must be positive");
    }
    if (population_ && *population_ <= 0) {
        throw ValidationError("population must be positive");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) {
            throw ValidationError("non-finite state at step " + std::to_string(k));
        }
    }
}

Trajectory::Clamped Trajectory::clamped(std::vector<double> values, double step_size,
                                        std::optional<std::int64_t> population)
{
    std::size_t count = 0;
    for (double& v : values) {
        if (v < 0.0) {
            v = 0.0;
            ++count;
        } else if (v > 1.0) {
            v = 1.0;
            ++count;
        }
    }
    return {Trajectory(std::move(values), step_size, population), count};
}

Trajectory Trajectory::with_population(std::optional<std::int64_t> population) const
{
    return Trajectory(values_, step_size_, population);
}

Trajectory Trajectory::slice(std::size_t first, std::size_t last) const
{
    if (last >= values_.size() || last <= first) {
        throw ValidationError("invalid trajectory slice");
    }
    return Trajectory(std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                          values_.begin() + static_cast<std::ptrdiff_t>(last) + 1),
                      step_size_, population_);
}

} // namespace hysis
