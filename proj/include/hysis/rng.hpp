#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>

namespace hysis {

/// Portable seeded generator.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniforms take the top 53 bits, u = (bits >> 11 + 0.5) * 2^-53,
/// so u lies strictly inside (0, 1). Normals use the Box-Muller transform
///   z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
/// returning z0 first and caching z1 for the next call. Nothing depends on
/// std::normal_distribution, whose algorithm is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : engine_(seed)
    {
    }

    double uniform();
    double normal();

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a sub-stream: folds each coordinate into the base seed through mix64.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coordinates);

} // namespace hysis
