#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace divret {

/// Seeded generator whose output stream is identical on every conforming
/// platform. Only the raw mt19937_64 engine is used; bounded integers and
/// normal deviates are derived here rather than through <random>
/// distributions, whose algorithms are implementation-defined.
class Rng {
public:
    static constexpr std::string_view kName = "mt19937_64";
    static constexpr int kVersion = 1;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Standard normal deviate (Box-Muller, one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// "mt19937_64/v1" - recorded in output metadata so runs can be replayed.
std::string_view rng_identity();

}  // namespace divret
