#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ftreg {

/// One splitmix64 round; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic RNG. The engine sequence is fixed by the standard and all
/// value mappings are implemented here, so results are reproducible across
/// platforms and library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via Box-Muller (cosine branch only).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Uniform integer in [0, n). Modulo bias is irrelevant at the sizes used.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace ftreg
