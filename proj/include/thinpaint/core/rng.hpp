#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace thinpaint {

// xoshiro256++ with splitmix64 seeding. Chosen over std::mt19937_64 because the
// 4-word state serializes directly into checkpoints and draws are identical across
// platforms (std distributions are implementation-defined).
class Rng {
public:
    Rng() : Rng(0) {}

    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : s_) s = splitmix64(x);
    }

    // Independent stream derived from (seed, stream_id). Streams with distinct ids
    // are decorrelated by the splitmix64 avalanche.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t x = seed;
        std::uint64_t a = splitmix64(x);
        std::uint64_t y = stream_id ^ 0x9e3779b97f4a7c15ull;
        std::uint64_t b = splitmix64(y);
        Rng r;
        std::uint64_t z = a ^ (b + 0x632be59bd9b4e019ull);
        for (auto& s : r.s_) s = splitmix64(z);
        return r;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Debiased multiply-shift (Lemire).
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        std::uint64_t l = static_cast<std::uint64_t>(m);
        if (l < n) {
            std::uint64_t t = (0 - n) % n;
            while (l < t) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                l = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_range(int lo, int hi) {
        return lo + static_cast<int>(uniform_int(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller. No cached spare, so the state alone
    /// determines every future draw.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    std::array<std::uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

} // namespace thinpaint
