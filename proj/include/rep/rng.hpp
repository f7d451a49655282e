#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

namespace rep {

// Deterministic PRNG used everywhere randomness is needed. All bounded draws
// are implemented here (not with std distributions, whose output is
// implementation defined) so artifacts are reproducible bit for bit.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix(seed)) {}

    // Derive an independent stream, e.g. per epoch or per document.
    Rng fork(uint64_t salt) const {
        return Rng(state_ ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    }

    uint64_t next() {
        // xorshift64* over a splitmix-seeded state
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit(), u2 = unit();
        while (u1 <= 1e-300) u1 = unit();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586 * u2);
        have_spare_ = true;
        return mag * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        x = x ^ (x >> 31);
        return x ? x : 0x4d595df4d0f33173ULL;
    }

    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rep
