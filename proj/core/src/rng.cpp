#include "hybridcorr/rng.hpp"

namespace hcorr {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream) {
    return mix64(mix64(base_seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace hcorr
