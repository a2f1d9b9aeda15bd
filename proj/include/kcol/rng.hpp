#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace kcol {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Operation tags keep the streams of different operations apart.
enum class Tag : std::uint64_t {
    gnp = 1, gnm, planted_p, planted_m, gw_tree, popdyn, bethe_mc, stats, test
};

// Stream seed from (master seed, operation tag, task index).
inline std::uint64_t stream_seed(std::uint64_t master, Tag tag, std::uint64_t index = 0)
{
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    return splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t master, Tag tag, std::uint64_t index = 0)
{
    return Rng(stream_seed(master, tag, index));
}

// 53-bit uniform in [0,1).
inline double uniform01(Rng &r)
{
    return static_cast<double>(r() >> 11) * 0x1.0p-53;
}

// Poisson variate by inversion of a given uniform. Monotone in both u and
// lambda, which is what common random numbers across parameters rely on.
inline std::uint64_t poisson_inv(double lambda, double u)
{
    if (lambda <= 0.0) return 0;
    if (lambda > 600.0) {
        // work in log space to avoid exp underflow
        double lp = -lambda, lc = lp;
        double c = std::exp(lc);
        std::uint64_t x = 0;
        while (c <= u && x < 100000) {
            ++x;
            lp += std::log(lambda / static_cast<double>(x));
            c += std::exp(lp);
        }
        return x;
    }
    double p = std::exp(-lambda), c = p;
    std::uint64_t x = 0;
    while (c <= u) {
        ++x;
        p *= lambda / static_cast<double>(x);
        double nc = c + p;
        if (nc == c && p < 1e-300) break;
        c = nc;
    }
    return x;
}

inline std::uint64_t poisson(Rng &r, double lambda)
{
    return poisson_inv(lambda, uniform01(r));
}

} // namespace kcol
