#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace stepgan {

// Derives an independent 64-bit seed for a named substream of a run seed, so
// that data shuffling, noise and initialization never share a generator.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

class RandomStream {
public:
    RandomStream() : RandomStream(0, "default") {}
    RandomStream(std::uint64_t seed, std::string_view name) : engine_(substream_seed(seed, name)) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

    // Uniformly random permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);
    // k distinct indices from 0..n-1 (k <= n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace stepgan
