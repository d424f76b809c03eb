#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>

#include "rdvla/common.hpp"

namespace rdvla {

// Deterministic, serializable PRNG (xoshiro256** seeded via splitmix64).
// The normal() spare is part of the state so that a checkpointed stream
// resumes bit-exactly; std::normal_distribution hides that state, which is
// why this is hand-rolled.
class Rng {
  public:
    Rng() : Rng(0x9e3779b97f4a7c15ULL) {}
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n);
    // Standard normal via Box-Muller; one spare cached.
    double normal();
    double normal(double mean, double stddev);
    // Normal(0, stddev) rejected outside +/- trunc*stddev.
    double trunc_normal(double stddev, double trunc);
    // Knuth product method; exact for the rates used here.
    uint64_t poisson(double lambda);

    struct State {
        std::array<uint64_t, 4> s{};
        bool has_spare = false;
        double spare = 0.0;
    };
    State state() const { return st_; }
    void set_state(const State& s) { st_ = s; }

  private:
    State st_;
};

// Deterministic mix for deriving independent stream seeds from components.
uint64_t seed_mix(uint64_t a, uint64_t b);
uint64_t seed_mix(uint64_t a, uint64_t b, uint64_t c);

}  // namespace rdvla
