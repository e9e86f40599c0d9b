#include "sdlab/rng.hpp"

#include <cmath>

namespace sdlab {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t x = seed + (counter + 1) * kGoldenGamma;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

std::uint64_t Rng::next_u64() { return mix(seed_, counter_++); }

double Rng::next_unit() {
    // Top 53 bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    // u1 in (0, 1] so the log is always finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Rng Rng::derive(std::uint64_t index) const {
    // Child seed re-mixes the parent seed under a fixed salt so child streams
    // differ from the parent's own output sequence.
    return Rng(mix(seed_ ^ 0xD1B54A32D192ED03ull, index));
}

}  // namespace sdlab
