#include "rdvla/rng.hpp"

#include <cmath>

namespace rdvla {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : st_.s) w = splitmix64(sm);
    // All-zero state is invalid for xoshiro; splitmix64 never yields it for
    // four consecutive outputs, but keep the guard anyway.
    if ((st_.s[0] | st_.s[1] | st_.s[2] | st_.s[3]) == 0) st_.s[0] = 1;
}

uint64_t Rng::next_u64() {
    auto& s = st_.s;
    const uint64_t result = rotl(s[1] * 5, 7) * 9;
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::uniform_int(uint64_t n) {
    if (n == 0) throw UsageError("uniform_int: n must be positive");
    // Rejection to kill modulo bias; loops are astronomically short.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    if (st_.has_spare) {
        st_.has_spare = false;
        return st_.spare;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    st_.spare = r * std::sin(a);
    st_.has_spare = true;
    return r * std::cos(a);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

double Rng::trunc_normal(double stddev, double trunc) {
    if (stddev <= 0.0) throw ConfigError("trunc_normal: stddev must be positive");
    if (trunc <= 0.0) throw ConfigError("trunc_normal: trunc must be positive");
    double z;
    do {
        z = normal();
    } while (std::fabs(z) > trunc);
    return stddev * z;
}

uint64_t Rng::poisson(double lambda) {
    if (lambda < 0.0) throw UsageError("poisson: lambda must be non-negative");
    if (lambda == 0.0) return 0;
    if (lambda > 500.0) {
        // Normal approximation; never reached at desk-scale rates but keeps
        // the product method from underflowing.
        const double v = lambda + std::sqrt(lambda) * normal();
        return v <= 0.0 ? 0 : static_cast<uint64_t>(std::llround(v));
    }
    const double limit = std::exp(-lambda);
    uint64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform();
    } while (p > limit);
    return k - 1;
}

uint64_t seed_mix(uint64_t a, uint64_t b) {
    uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(x);
}

uint64_t seed_mix(uint64_t a, uint64_t b, uint64_t c) { return seed_mix(seed_mix(a, b), c); }

}  // namespace rdvla
