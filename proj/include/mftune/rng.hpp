#ifndef MFTUNE_RNG_HPP
#define MFTUNE_RNG_HPP

#include <cstdint>
#include <limits>

namespace mftune {

/// Counter-based generator: the n-th output is a pure function of (key, n),
/// using the SplitMix64 output mix. `split` derives an independent child
/// stream from the key alone, so per-trial streams do not depend on how much
/// the parent has been consumed or in what order trials run.
///
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0);

    result_type operator()();

    CounterRng split(std::uint64_t stream) const;

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Uniform double in [0, 1) built from the top 53 bits.
double uniform01(CounterRng& rng);

} // namespace mftune

#endif // MFTUNE_RNG_HPP
