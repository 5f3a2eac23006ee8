#pragma once

#include <cstdint>
#include <random>

namespace hcorr {

/// SplitMix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x);

/// Seed of the independent stream `stream` under `base_seed`. Trial m of a study
/// uses derive_seed(base, m); sub-streams of a trial (diffusion, jumps) derive
/// again from that value, so any path is reproducible regardless of the order
/// in which trials are executed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream);

/// Standard-normal source bound to one derived stream.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double operator()() { return normal_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hcorr
