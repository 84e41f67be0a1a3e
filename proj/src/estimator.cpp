#include "hysis/estimator.hpp"

#include "hysis/errors.hpp"
#include "hysis/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace hysis {
namespace {

bool nonzero(double x)
{
    return std::abs(x) > kVariationTolerance;
}

bool differ(double a, double b)
{
    return std::abs(a - b) > kVariationTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

// Highest sample index interval i reads when building its rows.
int last_sample_needed(const UpdateSchedule& schedule, std::size_t i)
{
    bool last = i + 1 == schedule.interval_count();
    return last ? schedule.final_step() : schedule.interval_end(i) - 1;
}

// Solves one block. Near extinction the beta and gamma columns h(1-x)x and
// -hx are almost parallel, so the solve runs on their sum -hx^2 and on hx,
// whose coefficients are beta and beta - gamma, with every column scaled to
// unit norm. Both steps are exact column operations on Psi, so the
// least-squares problem and its homogeneity are unchanged.
std::pair<Eigen::VectorXd, Eigen::Index> solve_block(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs)
{
    const Eigen::Index beta = a.cols() - 2;
    const Eigen::Index gamma = beta + 1;
    Eigen::MatrixXd b = a;
    b.col(beta) = -a.col(gamma);
    b.col(gamma) = a.col(beta) + a.col(gamma);
    Eigen::VectorXd scale = b.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
        if (scale(j) == 0.0) {
            scale(j) = 1.0;
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankTolerance);
    cod.compute(b * scale.cwiseInverse().asDiagonal());
    Eigen::VectorXd z = cod.solve(rhs).cwiseQuotient(scale);
    Eigen::VectorXd theta = z;
    theta(beta) = z(gamma);
    theta(gamma) = z(gamma) - z(beta);
    return {theta, cod.rank()};
}

} // namespace

StepRange sis_step_range(const UpdateSchedule& schedule, std::size_t interval)
{
    if (interval >= schedule.interval_count()) {
        throw ValidationError("interval index out of range");
    }
    bool last = interval + 1 == schedule.interval_count();
    int first = schedule.interval_begin(interval);
    int end = schedule.interval_end(interval);
    return {first, last ? end - 1 : end - 2};
}

Eigen::MatrixXd RegressionSystem::block_matrix(std::size_t i) const
{
    const auto& b = blocks.at(i);
    return psi.block(b.row_begin, b.col_begin, b.row_count, b.col_count);
}

Eigen::VectorXd RegressionSystem::block_rhs(std::size_t i) const
{
    const auto& b = blocks.at(i);
    return y.segment(b.row_begin, b.row_count);
}

RegressionSystem build_regression(const Trajectory& trajectory, const UpdateSchedule& schedule)
{
    const double h = schedule.step_size();
    if (std::abs(trajectory.step_size() - h) > 1e-9 * std::max(h, trajectory.step_size())) {
        std::ostringstream msg;
        msg << "trajectory step size " << trajectory.step_size() << " differs from schedule step size " << h;
        throw ValidationError(msg.str());
    }
    for (std::size_t i = 0; i < schedule.interval_count(); ++i) {
        int needed = last_sample_needed(schedule, i);
        if (needed > trajectory.final_step()) {
            throw ValidationError("trajectory too short for interval " + std::to_string(i) + ": needs sample " +
                                  std::to_string(needed) + ", has samples 0.." +
                                  std::to_string(trajectory.final_step()));
        }
    }

    const int rows = schedule.final_step();
    const auto cols = static_cast<Eigen::Index>(theta_size(schedule.update_count()));
    RegressionSystem system;
    system.step_size = h;
    system.y.resize(rows);
    system.psi = Eigen::MatrixXd::Zero(rows, cols);
    for (int k = 0; k < rows; ++k) {
        system.y(k) = trajectory[static_cast<std::size_t>(k) + 1] - trajectory[static_cast<std::size_t>(k)];
    }

    for (std::size_t i = 0; i < schedule.interval_count(); ++i) {
        BlockLayout block;
        block.interval = i;
        block.sis_steps = sis_step_range(schedule, i);
        if (i == 0) {
            block.col_begin = 0;
            block.col_count = 2;
            block.row_begin = 0;
        } else {
            block.col_begin = static_cast<Eigen::Index>(theta_size(i - 1));
            block.col_count = 3;
            block.jump_step = schedule.interval_begin(i) - 1;
            block.row_begin = *block.jump_step;
            system.psi(*block.jump_step, block.col_begin) = trajectory[static_cast<std::size_t>(*block.jump_step)];
        }
        block.row_count = block.sis_steps.last + 1 - block.row_begin;

        const Eigen::Index beta_col = block.col_begin + block.col_count - 2;
        for (int k = block.sis_steps.first; k <= block.sis_steps.last; ++k) {
            double x = trajectory[static_cast<std::size_t>(k)];
            system.psi(k, beta_col) = h * (1.0 - x) * x;
            system.psi(k, beta_col + 1) = -h * x;
        }
        system.blocks.push_back(block);
    }
    return system;
}

bool has_variation(std::span<const double> values)
{
    std::vector<double> candidates;
    for (double v : values) {
        if (nonzero(v)) {
            candidates.push_back(v);
        }
    }
    if (candidates.size() < 2) {
        return false;
    }
    bool nonnegative = std::all_of(candidates.begin(), candidates.end(), [](double v) { return v >= 0.0; });
    if (nonnegative) {
        // For nonnegative values the extreme pair has the largest relative gap.
        auto [lo, hi] = std::minmax_element(candidates.begin(), candidates.end());
        return differ(*lo, *hi);
    }
    for (std::size_t a = 0; a < candidates.size(); ++a) {
        for (std::size_t b = a + 1; b < candidates.size(); ++b) {
            if (differ(candidates[a], candidates[b])) {
                return true;
            }
        }
    }
    return false;
}

IdentifiabilityReport check_identifiability(const RegressionSystem& system, const Trajectory& trajectory,
                                            const UpdateSchedule& schedule)
{
    IdentifiabilityReport report;
    report.psi_columns = system.psi.cols();

    std::vector<Eigen::VectorXd> singular_values;
    double sigma_max = 0.0;
    for (std::size_t i = 0; i < system.blocks.size(); ++i) {
        Eigen::MatrixXd block = system.block_matrix(i);
        Eigen::VectorXd sv = block.rows() > 0 ? Eigen::VectorXd(block.jacobiSvd().singularValues()) : Eigen::VectorXd();
        if (sv.size() > 0) {
            sigma_max = std::max(sigma_max, sv.maxCoeff());
        }
        singular_values.push_back(std::move(sv));
    }
    const double cutoff = kRankTolerance * sigma_max;

    report.overall = true;
    for (std::size_t i = 0; i < system.blocks.size(); ++i) {
        const auto& block = system.blocks[i];
        IntervalVerdict verdict;
        verdict.interval = i;
        verdict.expected_rank = block.col_count;

        const StepRange range = block.sis_steps;
        verdict.length_ok = range.size() >= 2;
        if (!verdict.length_ok) {
            bool last = i + 1 == schedule.interval_count();
            std::ostringstream msg;
            if (i == 0 && !last) {
                msg << "length: T_1 = " << schedule.interval_end(0) << " must exceed 2";
            } else if (last) {
                msg << "length: T_{m+1} - T_m = " << schedule.final_step() - schedule.interval_begin(i)
                    << " must exceed 1";
            } else {
                msg << "length: T_" << i + 1 << " - T_" << i << " = "
                    << schedule.interval_end(i) - schedule.interval_begin(i) << " must exceed 2";
            }
            verdict.reasons.push_back(msg.str());
        }

        std::span<const double> states;
        if (!range.empty()) {
            states = trajectory.values().subspan(static_cast<std::size_t>(range.first),
                                                 static_cast<std::size_t>(range.size()));
        }
        verdict.variation_ok = has_variation(states);
        if (!verdict.variation_ok) {
            verdict.reasons.push_back("variation: no pair k1, k2 in " + std::to_string(range.first) + ".." +
                                      std::to_string(range.last) +
                                      " with x^k1 (1 - x^k2) x^k2 != x^k2 (1 - x^k1) x^k1");
        }

        bool all_positive = std::all_of(states.begin(), states.end(), [](double v) { return v > kVariationTolerance; });
        if (block.jump_step) {
            double pre_jump = trajectory[static_cast<std::size_t>(*block.jump_step)];
            verdict.jump_state_ok = nonzero(pre_jump);
            all_positive = all_positive && pre_jump > kVariationTolerance;
            if (!verdict.jump_state_ok) {
                verdict.reasons.push_back("jump state: x^{T_" + std::to_string(i) + " - 1} = x^" +
                                          std::to_string(*block.jump_step) + " is zero");
            }
        }
        verdict.all_states_positive = all_positive && !states.empty();

        const auto& sv = singular_values[i];
        verdict.rank = static_cast<Eigen::Index>((sv.array() > cutoff).count());
        if (sigma_max == 0.0) {
            verdict.rank = 0;
        }
        report.psi_rank += verdict.rank;
        report.overall = report.overall && verdict.ok();
        report.intervals.push_back(std::move(verdict));
    }
    return report;
}

double ErrorTable::max_parameter_error() const
{
    double worst = 0.0;
    for (const auto& p : parameters) {
        worst = std::max(worst, p.error);
    }
    return worst;
}

double ErrorTable::max_r0_error() const
{
    double worst = 0.0;
    for (const auto& r : r0) {
        worst = std::max(worst, r.error.value_or(std::numeric_limits<double>::infinity()));
    }
    return worst;
}

EstimationResult estimate(const RegressionSystem& system)
{
    const Eigen::Index cols = system.psi.cols();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(cols);
    EstimationResult result;

    for (std::size_t i = 0; i < system.blocks.size(); ++i) {
        const auto& block = system.blocks[i];
        Eigen::Index rank = 0;
        if (block.row_count > 0) {
            Eigen::MatrixXd a = system.block_matrix(i);
            if (a.isZero(0.0)) {
                rank = 0;
            } else {
                auto [solution, block_rank] = solve_block(a, system.block_rhs(i));
                theta.segment(block.col_begin, block.col_count) = solution;
                rank = block_rank;
            }
        }
        result.rank += rank;
        if (rank < block.col_count) {
            result.unique = false;
            result.warnings.push_back("interval " + std::to_string(i) + " block has rank " + std::to_string(rank) +
                                      " < " + std::to_string(block.col_count) +
                                      "; parameters are not identifiable, minimum-norm solution returned");
        }
    }

    result.theta.assign(theta.data(), theta.data() + theta.size());
    result.intervals = theta_unpack(result.theta);
    for (const auto& p : result.intervals) {
        result.r0.push_back(p.gamma != 0.0 ? std::optional<double>(p.beta / p.gamma) : std::nullopt);
    }
    result.residual_norm = (system.y - system.psi * theta).norm();
    return result;
}

ErrorTable error_metrics(const EstimationResult& result, const HybridModelSpec& truth)
{
    const auto true_theta = truth.theta();
    if (true_theta.size() != result.theta.size()) {
        throw ValidationError("ground truth has " + std::to_string(true_theta.size()) +
                              " parameters, estimate has " + std::to_string(result.theta.size()));
    }
    ErrorTable table;
    const auto names = theta_names(truth.schedule().update_count());
    for (std::size_t j = 0; j < true_theta.size(); ++j) {
        ParameterError e{names[j], true_theta[j], result.theta[j], 0.0, true_theta[j] == 0.0};
        double diff = std::abs(result.theta[j] - true_theta[j]);
        e.error = e.absolute ? diff : diff / std::abs(true_theta[j]);
        table.parameters.push_back(e);
    }
    for (std::size_t i = 0; i < truth.intervals().size(); ++i) {
        R0Error e;
        e.interval = i;
        if (truth.interval(i).gamma != 0.0) {
            e.truth = reproduction_number(truth.interval(i));
        }
        e.estimate = result.r0.at(i);
        if (e.truth && e.estimate) {
            double diff = std::abs(*e.estimate - *e.truth);
            e.absolute = *e.truth == 0.0;
            e.error = e.absolute ? diff : diff / std::abs(*e.truth);
        }
        table.r0.push_back(e);
    }
    return table;
}

Trajectory forecast(const HybridModelSpec& params, double x_start, int horizon, int start_step,
                    ForecastExtension extension)
{
    if (horizon < 1) {
        throw ValidationError("forecast horizon must be >= 1");
    }
    if (start_step < 0) {
        throw ValidationError("forecast start step must be >= 0");
    }
    if (!(x_start >= 0.0 && x_start <= 1.0)) {
        throw ValidationError("forecast start state must lie in [0, 1]");
    }
    const auto& schedule = params.schedule();
    int end_step = start_step + horizon;
    if (extension == ForecastExtension::Stop) {
        end_step = std::min(end_step, schedule.final_step());
        if (end_step <= start_step) {
            throw ValidationError("forecast start lies at or beyond the final step and extension is disabled");
        }
    }
    const double h = schedule.step_size();
    std::vector<double> x{x_start};
    x.reserve(static_cast<std::size_t>(end_step - start_step) + 1);
    for (int k = start_step; k < end_step; ++k) {
        double xk = x.back();
        if (auto update = schedule.jump_at(k)) {
            x.push_back(std::clamp((1.0 + *params.interval(*update).alpha) * xk, 0.0, 1.0));
        } else {
            const auto& p = params.interval(schedule.active_interval(k));
            x.push_back(xk + h * sis_rate(xk, p.beta, p.gamma));
        }
    }
    return Trajectory(std::move(x), h);
}

} // namespace hysis
