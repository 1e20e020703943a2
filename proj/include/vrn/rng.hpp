#pragma once
// Seeded randomness with named sub-streams. Every random choice in the
// project flows from one root seed through derive_seed(root, "stream"),
// so components reproduce independently of each other's draw counts.
//
// Distribution sampling is written out explicitly (no std::*_distribution)
// to keep sequences stable across standard-library versions.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace vrn {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    // Knuth's product method; fine for the small means used here.
    std::uint32_t poisson(double mean);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in random order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

Rng make_rng(std::uint64_t root, std::string_view stream);

}  // namespace vrn
