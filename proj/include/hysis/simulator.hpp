#pragma once

#include "hysis/model.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hysis {

enum class Integrator { Rk4, Euler };

/// What to do when a jump (1 + alpha) x leaves [0, 1].
enum class RangePolicy { Error, Clamp };

struct SimulationConfig {
    double sigma = 0.0;     ///< process-noise strength for simulate_sde
    std::uint64_t seed = 0; ///< RNG seed for simulate_sde
    int fine_substeps = 1;  ///< integration substeps per output sample
    Integrator integrator = Integrator::Rk4;
    RangePolicy range_policy = RangePolicy::Error;
};

/// A generated trajectory plus diagnostics collected while producing it.
struct Simulation {
    Trajectory trajectory;
    std::size_t clamp_count = 0;
    std::vector<std::string> warnings;
};

/// Right-hand side of the SIS flow: beta (1 - x) x - gamma x.
inline double sis_rate(double x, double beta, double gamma)
{
    return beta * (1.0 - x) * x - gamma * x;
}

/// Largest h for which explicit Euler is stable on every interval: 2 / max(beta + gamma).
double euler_stability_bound(const HybridModelSpec& spec);

/// Discrete-time model: Euler SIS steps, with x^{T_i} = (1 + alpha_i) x^{T_i - 1}
/// at every update. Produces samples 0..T_{m+1}.
Simulation simulate_dt(const HybridModelSpec& spec, double x0, RangePolicy policy = RangePolicy::Error);

/// Continuous-time hybrid model sampled every h. The flow over (k h, (k+1) h) is
/// integrated with config.fine_substeps fixed steps of the chosen integrator
/// using the parameters of the interval active on that span; the jump of update
/// i is applied at t_i = T_i h, so sample T_i holds x(t_i) = (1 + alpha_i) x(t_i^-).
Simulation simulate_ct(const HybridModelSpec& spec, double x0, const SimulationConfig& config);

/// Euler-Maruyama on dx = (beta (1 - x) x - gamma x) dt + sigma x dW with the
/// same sampling and jump placement as simulate_ct. States pushed outside
/// [0, 1] are clamped and counted.
Simulation simulate_sde(const HybridModelSpec& spec, double x0, const SimulationConfig& config);

/// x^k + eps^k with eps^k ~ N(0, sigma^2) i.i.d., clamped into [0, 1].
Simulation add_observation_noise(const Trajectory& trajectory, double sigma, std::uint64_t seed);

} // namespace hysis
