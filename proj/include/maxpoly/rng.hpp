#ifndef MAXPOLY_RNG_HPP_
#define MAXPOLY_RNG_HPP_

#include <cstdint>
#include <random>

namespace maxpoly {

// mt19937_64 engine with portable integer/real conversions. The standard
// distributions are implementation-defined, so bounded draws use Lemire's
// multiply-shift rejection and reals use the top 53 bits.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64+lemire";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        __uint128_t m = static_cast<__uint128_t>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<__uint128_t>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform real in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

}  // namespace maxpoly

#endif  // MAXPOLY_RNG_HPP_
