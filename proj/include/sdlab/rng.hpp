#pragma once

#include <cstdint>

namespace sdlab {

// Counter-based random generator. Each output is a pure function of
// (seed, counter): the counter is advanced and fed through a fixed 64-bit
// avalanche hash (the splitmix64 finaliser over seed + counter * golden-gamma).
// That makes every draw sequence reproducible from the seed alone, lets tests
// replay internal draw order, and allows cheap derivation of independent child
// streams for parallel work.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit();

    // Standard normal via Box-Muller; consumes exactly two raw draws, so the
    // counter position stays a simple function of the draw history.
    double next_gaussian();

    // Independent child stream; index selects the stream. Children of the same
    // parent with different indices do not collide with each other or with the
    // parent's own draw sequence in any way that matters at simulation scale.
    Rng derive(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter);

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace sdlab
