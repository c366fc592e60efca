#include "common/rng.hpp"

#include <cmath>

namespace pixeltext {

namespace {
constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    inc_ = (stream << 1u) | 1u;
    state_ = 0;
    next_u32();
    state_ += seed;
    next_u32();
}

Rng::Rng(std::uint64_t seed, RngStream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

std::uint32_t Rng::next_u32() {
    std::uint64_t old = state_;
    state_ = old * kMultiplier + inc_;
    std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

std::uint32_t Rng::below(std::uint32_t bound) {
    if (bound <= 1) {
        return 0;
    }
    std::uint32_t threshold = (0u - bound) % bound;
    for (;;) {
        std::uint32_t r = next_u32();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

float Rng::uniform() {
    return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f;
}

double Rng::uniform_double() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform_double();
    } while (u1 <= 0.0);
    double u2 = uniform_double();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

float Rng::truncated_normal(float stddev) {
    for (;;) {
        double v = normal();
        if (v >= -2.0 && v <= 2.0) {
            return static_cast<float>(v * stddev);
        }
    }
}

}  // namespace pixeltext
