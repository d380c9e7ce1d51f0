#ifndef OCNNA_RNG_HPP
#define OCNNA_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ocnna {

// Deterministic random helpers on top of mt19937. std::shuffle and the
// std <random> distributions are implementation-defined, so every draw
// here is spelled out explicitly; the same seed gives the same stream on
// every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

    std::uint32_t next_u32() { return engine_(); }

    // Uniform integer in [0, n), n > 0.
    std::uint32_t bounded(std::uint32_t n) {
        // rejection sampling keeps the result unbiased
        const std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
        std::uint32_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform in [0, 1) with 24 bits of mantissa.
    float uniform() { return static_cast<float>(engine_() >> 8) * 0x1.0p-24f; }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call, the pair partner is cached.
    float normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        float u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 1e-12f);
        u2 = uniform();
        const float r = std::sqrt(-2.0f * std::log(u1));
        const float a = 6.2831853071795864769f * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        // Fisher-Yates
        for (std::size_t i = xs.size(); i > 1; --i) {
            const std::size_t j = bounded(static_cast<std::uint32_t>(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    std::mt19937 engine_;
    float spare_ = 0.0f;
    bool have_spare_ = false;
};

} // namespace ocnna

#endif
