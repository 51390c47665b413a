// Deterministic random sampling for simulations and sweeps.
//
// std::mt19937_64 produces a standard-specified stream, but the standard
// distributions do not, so all transforms (uniform, normal, binomial) are
// implemented here. Identical seeds give identical results on every
// platform, which the sweep harness relies on for reproducible output
// files and per-trial seed derivation.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace qwalk {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derive an independent stream seed from a master seed and an index path
// (e.g. {cell, trial}). Order-sensitive and collision-resistant enough for
// Monte-Carlo stream separation.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    for (std::uint64_t p : path) {
        s ^= p + 0x9E3779B97F4A7C15ULL + (s << 6) + (s >> 2);
        h ^= splitmix64(s);
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double ang = 2.0 * M_PI * u2;
        spare_ = r * std::sin(ang);
        have_spare_ = true;
        return r * std::cos(ang);
    }

    std::complex<double> complex_normal() {
        return {normal() * M_SQRT1_2, normal() * M_SQRT1_2};
    }

    // Binomial(n, p). Exact CDF inversion when the mean is small; otherwise
    // a continuity-corrected normal approximation (mean and variance exact,
    // tails adequate for the count statistics simulated here).
    long long binomial(long long n, double p) {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        if (p > 0.5) return n - binomial(n, 1.0 - p);
        const double np = static_cast<double>(n) * p;
        if (np < 30.0) {
            const double q = 1.0 - p;
            double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
            double cdf = pmf;
            const double u = uniform();
            long long k = 0;
            while (cdf < u && k < n) {
                pmf *= (static_cast<double>(n - k) / static_cast<double>(k + 1)) * (p / q);
                cdf += pmf;
                ++k;
            }
            return k;
        }
        const double sd = std::sqrt(np * (1.0 - p));
        double k = std::round(np + sd * normal());
        if (k < 0) k = 0;
        if (k > static_cast<double>(n)) k = static_cast<double>(n);
        return static_cast<long long>(k);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Haar-uniform unit vector in C^n: i.i.d. standard complex Gaussians, normalized.
inline std::vector<std::complex<double>> haar_unit_vector(int n, Rng& rng) {
    std::vector<std::complex<double>> v(static_cast<std::size_t>(n));
    double norm2 = 0.0;
    for (auto& z : v) {
        z = rng.complex_normal();
        norm2 += std::norm(z);
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& z : v) z *= inv;
    return v;
}

}  // namespace qwalk
