#include "mftune/rng.hpp"

namespace mftune {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + kGolden)))
{
}

CounterRng::result_type CounterRng::operator()()
{
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

CounterRng CounterRng::split(std::uint64_t stream) const
{
    return CounterRng(key_, stream);
}

double uniform01(CounterRng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace mftune
