#pragma once

#include <cstdint>
#include <vector>

namespace pixeltext {

// Purpose-scoped RNG streams. Every randomized component draws from its own
// stream so that, e.g., changing the masking schedule cannot shift parameter
// initialization for the same seed.
enum class RngStream : std::uint64_t {
    init = 1,
    masking = 2,
    shuffling = 3,
    perturbation = 4,
    dropout = 5,
    mlm = 6,
    synthesis = 7,
};

// PCG32 (O'Neill): 64-bit state, 64-bit odd increment, 32-bit output via
// XSH-RR. Chosen over std:: distributions because its output is identical
// on every platform and toolchain.
class Rng {
public:
    Rng(std::uint64_t seed, RngStream stream);
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();

    // Uniform in [0, bound) via rejection sampling (unbiased).
    std::uint32_t below(std::uint32_t bound);

    // Uniform in [0, 1) with 24 bits of precision.
    float uniform();

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform_double();

    // Standard normal via Box-Muller; one spare value is cached.
    double normal();

    // Normal(0, stddev) with samples outside [-2*stddev, 2*stddev] redrawn.
    float truncated_normal(float stddev);

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = below(static_cast<std::uint32_t>(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pixeltext
