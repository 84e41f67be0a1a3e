#include "hysis/rng.hpp"

#include <cmath>
#include <numbers>

namespace hysis {

double Rng::uniform()
{
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal()
{
    if (spare_) {
        double z = *spare_;
        spare_.reset();
        return z;
    }
    double u1 = uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coordinates)
{
    std::uint64_t h = mix64(base);
    for (auto c : coordinates) {
        h = mix64(h ^ mix64(c));
    }
    return h;
}

} // namespace hysis
