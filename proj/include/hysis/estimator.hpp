#pragma once

// Least-squares identification of the discrete-time hybrid model.
//
// Each transition k -> k+1 contributes one row to y = Psi theta with
// y_k = x^{k+1} - x^k. Rows are grouped per interval:
//
//   interval 0          SIS rows k = 0 .. T_1 - 2
//   interval i (middle) jump row k = T_i - 1, SIS rows k = T_i .. T_{i+1} - 2
//   interval m (last)   jump row k = T_m - 1, SIS rows k = T_m .. T_{m+1} - 1
//
// A jump row is [x^{T_i - 1}] in the alpha column; a SIS row is
// [h (1 - x^k) x^k, -h x^k] in the (beta, gamma) columns. With no updates the
// single interval behaves as the last one. Psi is block diagonal, so every
// block is solved on its own.

#include "hysis/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hysis {

/// |a - b| > kVariationTolerance * max(1, |a|, |b|) counts as "different";
/// |x| > kVariationTolerance counts as "nonzero".
inline constexpr double kVariationTolerance = 1e-12;
/// Singular values above kRankTolerance * sigma_max(Psi) count toward the rank.
inline constexpr double kRankTolerance = 1e-10;

/// Inclusive step range; empty when last < first.
struct StepRange {
    int first = 0;
    int last = -1;

    int size() const { return last >= first ? last - first + 1 : 0; }
    bool empty() const { return size() == 0; }
    friend bool operator==(const StepRange&, const StepRange&) = default;
};

/// Steps k whose SIS transition k -> k+1 belongs to interval i. The last
/// interval runs through T_{m+1} - 1, the others stop at T_{i+1} - 2.
StepRange sis_step_range(const UpdateSchedule& schedule, std::size_t interval);

struct BlockLayout {
    std::size_t interval = 0;
    Eigen::Index row_begin = 0;
    Eigen::Index row_count = 0;
    Eigen::Index col_begin = 0;
    Eigen::Index col_count = 0;
    std::optional<int> jump_step; ///< k = T_i - 1 for i >= 1
    StepRange sis_steps;
};

struct RegressionSystem {
    Eigen::VectorXd y;
    Eigen::MatrixXd psi;
    std::vector<BlockLayout> blocks;
    double step_size = 0.0;

    std::size_t update_count() const { return blocks.empty() ? 0 : blocks.size() - 1; }
    Eigen::MatrixXd block_matrix(std::size_t i) const;
    Eigen::VectorXd block_rhs(std::size_t i) const;
};

/// Throws ValidationError when the trajectory is shorter than the schedule
/// requires (naming the first interval it cannot cover) or when the step sizes
/// disagree.
RegressionSystem build_regression(const Trajectory& trajectory, const UpdateSchedule& schedule);

struct IntervalVerdict {
    std::size_t interval = 0;
    bool length_ok = false;
    bool variation_ok = false;
    bool jump_state_ok = true; ///< vacuously true for interval 0
    bool all_states_positive = false; ///< all states positive, so x^{k1} != x^{k2} was tested directly
    Eigen::Index rank = 0;
    Eigen::Index expected_rank = 0;
    std::vector<std::string> reasons;

    bool ok() const { return length_ok && variation_ok && jump_state_ok; }
};

struct IdentifiabilityReport {
    std::vector<IntervalVerdict> intervals;
    bool overall = false;
    Eigen::Index psi_rank = 0;
    Eigen::Index psi_columns = 0;
};

/// True when some pair in values satisfies a b (a - b) != 0 at kVariationTolerance.
bool has_variation(std::span<const double> values);

/// Symbolic conditions (length, pairwise variation, nonzero pre-jump state)
/// plus the numeric rank of every block. Never throws on degenerate data.
IdentifiabilityReport check_identifiability(const RegressionSystem& system, const Trajectory& trajectory,
                                            const UpdateSchedule& schedule);

/// Per-parameter errors; absolute (flagged) where the true value is zero.
struct ParameterError {
    std::string name;
    double truth = 0.0;
    double estimate = 0.0;
    double error = 0.0;
    bool absolute = false;
};

struct R0Error {
    std::size_t interval = 0;
    std::optional<double> truth;
    std::optional<double> estimate;
    std::optional<double> error; ///< empty when either side is undefined
    bool absolute = false;
};

struct ErrorTable {
    std::vector<ParameterError> parameters;
    std::vector<R0Error> r0;

    double max_parameter_error() const;
    double max_r0_error() const;
};

struct EstimationResult {
    std::vector<double> theta;
    std::vector<IntervalParams> intervals;
    std::vector<std::optional<double>> r0; ///< empty where gamma_hat == 0
    double residual_norm = 0.0;
    bool unique = true;
    Eigen::Index rank = 0;
    std::vector<std::string> warnings;
    std::optional<ErrorTable> errors;
};

/// Block-wise least squares through a column-pivoted complete orthogonal
/// decomposition. Rank-deficient blocks yield the minimum-norm solution and
/// clear `unique`.
EstimationResult estimate(const RegressionSystem& system);

/// |estimate - truth| / |truth| per parameter and per interval R0.
ErrorTable error_metrics(const EstimationResult& result, const HybridModelSpec& truth);

enum class ForecastExtension {
    Stop,         ///< no samples past the schedule's final step
    ContinueLast, ///< keep the last interval's (beta, gamma) with no further jumps
};

/// Runs the discrete-time model forward for `horizon` steps from x_start at
/// step start_step. Jumps inside the schedule are applied; none are invented
/// beyond it.
Trajectory forecast(const HybridModelSpec& params, double x_start, int horizon, int start_step = 0,
                    ForecastExtension extension = ForecastExtension::ContinueLast);

} // namespace hysis
