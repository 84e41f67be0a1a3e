#pragma once

#include "hysis/errors.hpp"
#include "hysis/estimator.hpp"
#include "hysis/model.hpp"
#include "hysis/rng.hpp"
#include "hysis/simulator.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace hysis::testing {

inline HybridModelSpec reference_spec(double h = 1.0)
{
    auto steps = [h](double t) { return static_cast<int>(std::ceil(t / h - 1e-9)); };
    return HybridModelSpec(UpdateSchedule({steps(30), steps(90)}, steps(150), h),
                           {{std::nullopt, 0.50, 0.20}, {0.50, 0.19, 0.15}, {-0.30, 0.25, 0.15}});
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * rng.uniform();
}

inline int uniform_int(Rng& rng, int lo, int hi)
{
    return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

/// Column rank of the full regression matrix by SVD, independent of the
/// per-block bookkeeping in the library.
inline Eigen::Index dense_rank(const Eigen::MatrixXd& psi, double relative_tolerance)
{
    if (psi.size() == 0) {
        return 0;
    }
    Eigen::VectorXd sv = psi.jacobiSvd().singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) {
        return 0;
    }
    return (sv.array() > relative_tolerance * sv(0)).count();
}

struct RandomCase {
    HybridModelSpec spec;
    double x0;
    Trajectory trajectory;
};

/// Draws a spec whose schedule meets the interval length conditions and
/// whose discrete-time trajectory stays inside [0, 1] and is identifiable by
/// both the symbolic conditions and the numeric rank of Psi; retries
/// otherwise. The two disagree near extinction (states below ~1e-9), where
/// the x^2 term that separates beta from gamma is lost to rounding.
inline RandomCase random_identifiable_case(Rng& rng, std::size_t m, int* rejected = nullptr)
{
    for (;;) {
        std::vector<int> steps;
        int t = uniform_int(rng, 3, 40);
        for (std::size_t i = 0; i < m; ++i) {
            steps.push_back(t);
            t += uniform_int(rng, 3, 40);
        }
        UpdateSchedule schedule(steps, t, 1.0);
        std::vector<IntervalParams> intervals{{std::nullopt, uniform(rng, 0.05, 1.0), uniform(rng, 0.05, 1.0)}};
        for (std::size_t i = 0; i < m; ++i) {
            intervals.push_back({uniform(rng, -0.5, 1.0), uniform(rng, 0.05, 1.0), uniform(rng, 0.05, 1.0)});
        }
        HybridModelSpec spec(schedule, intervals);
        double x0 = uniform(rng, 0.01, 0.9);
        try {
            auto x = simulate_dt(spec, x0).trajectory;
            auto system = build_regression(x, schedule);
            if (check_identifiability(system, x, schedule).overall &&
                dense_rank(system.psi, kRankTolerance) == system.psi.cols()) {
                return {spec, x0, x};
            }
        } catch (const StateRangeError&) {
        }
        if (rejected) {
            ++*rejected;
        }
    }
}

} // namespace hysis::testing
