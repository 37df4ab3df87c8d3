#pragma once

#include <cstdint>
#include <vector>

#include "agzsl/tensor.hpp"

namespace agzsl::num {

// Counter-based deterministic PRNG. The output sequence is a pure function of
// (seed, stream, counter), so saving and restoring the counter reproduces the
// stream exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);
    double gaussian();                      // standard normal
    Tensor gaussian_tensor(std::vector<std::size_t> shape);
    std::size_t index(std::size_t n);       // uniform in [0, n)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t c) { counter_ = c; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace agzsl::num
