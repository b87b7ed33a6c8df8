#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fairdisc {

// splitmix64 step, used to derive independent stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

// Deterministic random source. The engine (mt19937_64) is specified exactly by
// the standard and the value transforms are our own, so sequences are
// reproducible across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller. One draw consumes two uniforms; no
    // cached spare, so the stream position is a pure function of call count.
    double normal();

    std::vector<double> normal_vec(std::size_t n);

    // Uniform index in [0, n).
    std::size_t index(std::size_t n);

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    // Independent stream derived from this generator's seed and a stream tag.
    Rng fork(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace fairdisc
