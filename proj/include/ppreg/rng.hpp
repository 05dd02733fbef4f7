#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ppreg {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Deterministic random stream. Child streams are derived from the seed and a
/// stream key only, so per-sequence results do not depend on the order in
/// which sibling streams are consumed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed)
        : seed_(seed), gen_(detail::splitmix64(seed)) {}

    Rng child(std::uint64_t stream) const {
        return Rng(detail::splitmix64(seed_ ^ (0x9e3779b97f4a7c15ull * (stream + 1))));
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential with the given rate; rate 0 yields +infinity.
    double exponential(double rate) {
        if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
        return -std::log1p(-uniform()) / rate;
    }

    /// Uniform on {0, ..., n-1}, unbiased.
    int uniform_int(int n) {
        const std::uint64_t limit = ~0ull - ~0ull % static_cast<std::uint64_t>(n);
        std::uint64_t u;
        do { u = gen_(); } while (u >= limit);
        return static_cast<int>(u % static_cast<std::uint64_t>(n));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace ppreg
