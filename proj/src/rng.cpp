#include "stepgan/rng.hpp"

#include <algorithm>
#include <numeric>

namespace stepgan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
    // FNV-1a over the stream name, mixed with the run seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(seed) ^ h);
}

std::vector<std::size_t> RandomStream::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    // Explicit Fisher-Yates: std::shuffle's draw pattern is library-specific.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = index(i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

std::vector<std::size_t> RandomStream::sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = 0; i < k && i < n; ++i) {
        const std::size_t j = i + index(n - i);
        std::swap(p[i], p[j]);
    }
    p.resize(std::min(k, n));
    return p;
}

}  // namespace stepgan
