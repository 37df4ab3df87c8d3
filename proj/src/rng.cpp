#include "agzsl/rng.hpp"

#include <cmath>
#include <numbers>

namespace agzsl::num {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
    key_ = splitmix64(splitmix64(seed) ^ splitmix64(stream * 0xD2B74407B1CE6E93ull + 1));
}

std::uint64_t Rng::next_u64() {
    return splitmix64(key_ + counter_++ * 0x2545F4914F6CDD1Dull);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::gaussian() {
    // Box-Muller; u1 kept strictly positive. The sine branch is discarded so
    // the draw count per gaussian is a fixed two, which keeps the counter a
    // simple function of the number of values produced.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor Rng::gaussian_tensor(std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = gaussian();
    return t;
}

std::size_t Rng::index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
}

}  // namespace agzsl::num
