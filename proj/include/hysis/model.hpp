#pragma once

// Domain types for the hybrid SIS demand model: per-interval parameters,
// update schedules, the flattened parameter vector and sampled trajectories.
//
// State x is the fraction of active users. Between updates it follows
//   dx/dt = beta_i (1 - x) x - gamma_i x
// and at update i it jumps to (1 + alpha_i) x. Interval 0 precedes the first
// update and therefore has no alpha.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hysis {

struct IntervalParams {
    std::optional<double> alpha; ///< jump scale at the update opening this interval; empty for interval 0
    double beta = 0.0;           ///< engagement rate
    double gamma = 0.0;          ///< disinterest rate

    friend bool operator==(const IntervalParams&, const IntervalParams&) = default;
};

/// Throws ValidationError unless beta >= 0, gamma >= 0 and alpha >= -1.
void validate(const IntervalParams& params);

/// beta / gamma. Throws UndefinedRatioError when gamma == 0.
double reproduction_number(const IntervalParams& params);

/// Endemic equilibrium max(0, 1 - gamma/beta); 0 when beta == 0.
double endemic_equilibrium(const IntervalParams& params);

/// Update step indices T_1 < ... < T_m < T_{m+1} on a grid of spacing h.
class UpdateSchedule {
public:
    UpdateSchedule(std::vector<int> update_steps, int final_step, double step_size);

    std::span<const int> update_steps() const { return update_steps_; }
    int final_step() const { return final_step_; }
    double step_size() const { return step_size_; }
    std::size_t update_count() const { return update_steps_.size(); }
    std::size_t interval_count() const { return update_steps_.size() + 1; }

    /// First step of interval i: 0 for i = 0, T_i otherwise.
    int interval_begin(std::size_t i) const;
    /// T_{i+1}, or the final step for the last interval.
    int interval_end(std::size_t i) const;

    /// Interval whose SIS parameters drive step k -> k+1 (largest i with T_i <= k).
    std::size_t active_interval(int k) const;
    /// i when k == T_i - 1, i.e. the step k -> k+1 is the jump of update i.
    std::optional<std::size_t> jump_at(int k) const;

    friend bool operator==(const UpdateSchedule&, const UpdateSchedule&) = default;

private:
    std::vector<int> update_steps_;
    int final_step_;
    double step_size_;
};

/// Length of the flattened parameter vector for m updates: 2 + 3m.
constexpr std::size_t theta_size(std::size_t updates) { return 2 + 3 * updates; }

/// [beta0 gamma0 alpha1 beta1 gamma1 ... alpha_m beta_m gamma_m].
std::vector<double> theta_pack(std::span<const IntervalParams> intervals);
std::vector<IntervalParams> theta_unpack(std::span<const double> theta);
/// Names matching theta_pack order: "beta0", "gamma0", "alpha1", ...
std::vector<std::string> theta_names(std::size_t updates);

class HybridModelSpec {
public:
    HybridModelSpec(UpdateSchedule schedule, std::vector<IntervalParams> intervals);
    static HybridModelSpec from_theta(UpdateSchedule schedule, std::span<const double> theta);
    /// Shape checks only. Estimated parameters may be negative on noisy data and
    /// still need to be simulated.
    static HybridModelSpec unchecked(UpdateSchedule schedule, std::vector<IntervalParams> intervals);

    const UpdateSchedule& schedule() const { return schedule_; }
    std::span<const IntervalParams> intervals() const { return intervals_; }
    const IntervalParams& interval(std::size_t i) const { return intervals_.at(i); }
    std::vector<double> theta() const { return theta_pack(intervals_); }

    friend bool operator==(const HybridModelSpec&, const HybridModelSpec&) = default;

private:
    HybridModelSpec(UpdateSchedule schedule, std::vector<IntervalParams> intervals, bool check_ranges);

    UpdateSchedule schedule_;
    std::vector<IntervalParams> intervals_;
};

/// Uniformly sampled state fractions x^0 ... x^K with spacing h.
class Trajectory {
public:
    Trajectory(std::vector<double> values, double step_size,
               std::optional<std::int64_t> population = std::nullopt);

    struct Clamped;
    /// Clamps every value into [0, 1], reporting how many were moved.
    static Clamped clamped(std::vector<double> values, double step_size,
                           std::optional<std::int64_t> population = std::nullopt);

    std::span<const double> values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    std::size_t size() const { return values_.size(); }
    int final_step() const { return static_cast<int>(values_.size()) - 1; }
    double step_size() const { return step_size_; }
    const std::optional<std::int64_t>& population() const { return population_; }

    Trajectory with_population(std::optional<std::int64_t> population) const;
    /// Samples first..last inclusive.
    Trajectory slice(std::size_t first, std::size_t last) const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
    std::vector<double> values_;
    double step_size_;
    std::optional<std::int64_t> population_;
};

struct Trajectory::Clamped {
    Trajectory trajectory;
    std::size_t clamp_count = 0;
};

} // namespace hysis
