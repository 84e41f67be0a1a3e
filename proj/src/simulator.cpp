#include "hysis/simulator.hpp"

#include "hysis/errors.hpp"
#include "hysis/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hysis {
namespace {

void check_x0(double x0)
{
    if (!(x0 >= 0.0 && x0 <= 1.0)) {
        throw ValidationError("initial state must lie in [0, 1], got " + std::to_string(x0));
    }
}

void check_config(const SimulationConfig& config)
{
    if (config.fine_substeps < 1) {
        throw ValidationError("fine_substeps must be >= 1");
    }
    if (!(config.sigma >= 0.0) || !std::isfinite(config.sigma)) {
        throw ValidationError("sigma must be a finite nonnegative value");
    }
}

double apply_jump(double x, double alpha, std::size_t update, RangePolicy policy, Simulation& out)
{
    double jumped = (1.0 + alpha) * x;
    if (jumped > 1.0 || jumped < 0.0) {
        if (policy == RangePolicy::Error) {
            std::ostringstream msg;
            msg << "jump of update " << update << " maps " << x << " to " << jumped << ", outside [0, 1]";
            throw StateRangeError(msg.str());
        }
        ++out.clamp_count;
        out.warnings.push_back("jump of update " + std::to_string(update) + " clamped into [0, 1]");
        jumped = std::clamp(jumped, 0.0, 1.0);
    }
    return jumped;
}

void warn_if_unstable(const HybridModelSpec& spec, double dt, Simulation& out)
{
    if (dt >= euler_stability_bound(spec)) {
        std::ostringstream msg;
        msg << "step " << dt << " violates the Euler stability bound h (beta + gamma) < 2";
        out.warnings.push_back(msg.str());
    }
}

double rk4_step(double x, double beta, double gamma, double dt)
{
    double k1 = sis_rate(x, beta, gamma);
    double k2 = sis_rate(x + 0.5 * dt * k1, beta, gamma);
    double k3 = sis_rate(x + 0.5 * dt * k2, beta, gamma);
    double k4 = sis_rate(x + dt * k3, beta, gamma);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Simulation empty_simulation(const HybridModelSpec& spec)
{
    // Placeholder trajectory, replaced once the run finishes.
    return Simulation{Trajectory({0.0, 0.0}, spec.schedule().step_size()), 0, {}};
}

} // namespace

double euler_stability_bound(const HybridModelSpec& spec)
{
    double worst = 0.0;
    for (const auto& p : spec.intervals()) {
        worst = std::max(worst, p.beta + p.gamma);
    }
    return worst > 0.0 ? 2.0 / worst : std::numeric_limits<double>::infinity();
}

Simulation simulate_dt(const HybridModelSpec& spec, double x0, RangePolicy policy)
{
    check_x0(x0);
    const auto& schedule = spec.schedule();
    const double h = schedule.step_size();
    Simulation out = empty_simulation(spec);
    warn_if_unstable(spec, h, out);

    std::vector<double> x(static_cast<std::size_t>(schedule.final_step()) + 1);
    x[0] = x0;
    for (int k = 0; k < schedule.final_step(); ++k) {
        double xk = x[static_cast<std::size_t>(k)];
        if (auto update = schedule.jump_at(k)) {
            x[static_cast<std::size_t>(k) + 1] = apply_jump(xk, *spec.interval(*update).alpha, *update, policy, out);
        } else {
            const auto& p = spec.interval(schedule.active_interval(k));
            x[static_cast<std::size_t>(k) + 1] = xk + h * sis_rate(xk, p.beta, p.gamma);
        }
    }
    out.trajectory = Trajectory(std::move(x), h);
    return out;
}

Simulation simulate_ct(const HybridModelSpec& spec, double x0, const SimulationConfig& config)
{
    check_x0(x0);
    check_config(config);
    const auto& schedule = spec.schedule();
    const double h = schedule.step_size();
    const double dt = h / config.fine_substeps;
    Simulation out = empty_simulation(spec);
    if (config.integrator == Integrator::Euler) {
        warn_if_unstable(spec, dt, out);
    }

    std::vector<double> x(static_cast<std::size_t>(schedule.final_step()) + 1);
    x[0] = x0;
    double state = x0;
    for (int k = 0; k < schedule.final_step(); ++k) {
        const auto& p = spec.interval(schedule.active_interval(k));
        for (int s = 0; s < config.fine_substeps; ++s) {
            if (config.integrator == Integrator::Rk4) {
                state = rk4_step(state, p.beta, p.gamma, dt);
            } else {
                state = state + sis_rate(state, p.beta, p.gamma) * dt;
            }
        }
        if (auto update = schedule.jump_at(k)) {
            state = apply_jump(state, *spec.interval(*update).alpha, *update, config.range_policy, out);
        }
        x[static_cast<std::size_t>(k) + 1] = state;
    }
    out.trajectory = Trajectory(std::move(x), h);
    return out;
}

Simulation simulate_sde(const HybridModelSpec& spec, double x0, const SimulationConfig& config)
{
    check_x0(x0);
    check_config(config);
    const auto& schedule = spec.schedule();
    const double h = schedule.step_size();
    const double dt = h / config.fine_substeps;
    const double sqrt_dt = std::sqrt(dt);
    Simulation out = empty_simulation(spec);
    warn_if_unstable(spec, dt, out);
    Rng rng(config.seed);

    std::vector<double> x(static_cast<std::size_t>(schedule.final_step()) + 1);
    x[0] = x0;
    double state = x0;
    for (int k = 0; k < schedule.final_step(); ++k) {
        const auto& p = spec.interval(schedule.active_interval(k));
        for (int s = 0; s < config.fine_substeps; ++s) {
            double z = rng.normal();
            state = state + sis_rate(state, p.beta, p.gamma) * dt + config.sigma * state * sqrt_dt * z;
            if (state < 0.0 || state > 1.0) {
                state = std::clamp(state, 0.0, 1.0);
                ++out.clamp_count;
            }
        }
        if (auto update = schedule.jump_at(k)) {
            state = apply_jump(state, *spec.interval(*update).alpha, *update, config.range_policy, out);
        }
        x[static_cast<std::size_t>(k) + 1] = state;
    }
    if (out.clamp_count > 0) {
        out.warnings.push_back(std::to_string(out.clamp_count) + " SDE states clamped into [0, 1]");
    }
    out.trajectory = Trajectory(std::move(x), h);
    return out;
}

Simulation add_observation_noise(const Trajectory& trajectory, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("observation noise sigma must be a finite nonnegative value");
    }
    Rng rng(seed);
    std::vector<double> noisy(trajectory.values().begin(), trajectory.values().end());
    for (double& v : noisy) {
        v += sigma * rng.normal();
    }
    auto clamped = Trajectory::clamped(std::move(noisy), trajectory.step_size(), trajectory.population());
    Simulation out{std::move(clamped.trajectory), clamped.clamp_count, {}};
    if (out.clamp_count > 0) {
        out.warnings.push_back(std::to_string(out.clamp_count) + " noisy samples clamped into [0, 1]");
    }
    return out;
}

} // namespace hysis
