#pragma once

#include <cstdint>
#include <vector>

namespace argus {

/// Seeded splitmix64 stream. Replays must be byte-reproducible, so all
/// randomness goes through this instead of stdlib distributions (whose
/// output is implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n). n must be > 0.
    uint64_t bounded(uint64_t n) { return next() % n; }

    /// Uniform in [lo, hi] inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(bounded(static_cast<uint64_t>(hi - lo + 1)));
    }

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[bounded(v.size())];
    }

    /// Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[bounded(i)]);
        }
    }

    /// Derive an independent child stream, e.g. one per repetition.
    static uint64_t derive(uint64_t seed, uint64_t salt) {
        Rng r(seed ^ (0x6a09e667f3bcc909ULL + salt * 0x9e3779b97f4a7c15ULL));
        return r.next();
    }

private:
    uint64_t state_;
};

} // namespace argus
