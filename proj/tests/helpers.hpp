#pragma once

// Shared test utilities: a seeded splitmix64 RNG (independent of the library
// and of std::rand) and random raster builders.

#include <cmath>
#include <cstdint>

#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"

namespace testutil {

struct Rng {
    uint64_t s;
    explicit Rng(uint64_t seed) : s(seed) {}
    double next() {
        s += 0x9e3779b97f4a7c15ULL;
        uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * (1.0 / 9007199254740992.0);
    }
    double range(double lo, double hi) { return lo + (hi - lo) * next(); }
};

inline flowcast::Frame random_frame(Rng& rng, int w, int h, int c) {
    flowcast::Frame f(w, h, c);
    for (float& v : f.data) v = static_cast<float>(rng.next());
    return f;
}

inline flowcast::FlowField random_flow(Rng& rng, int w, int h, double amp) {
    flowcast::FlowField f(w, h);
    for (float& v : f.v) v = static_cast<float>(rng.range(-amp, amp));
    return f;
}

inline flowcast::Mask random_mask(Rng& rng, int w, int h, double density) {
    flowcast::Mask m(w, h);
    for (auto& b : m.bits) b = rng.next() < density ? 1 : 0;
    return m;
}

inline double max_abs_diff(const flowcast::Frame& a, const flowcast::Frame& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
    return m;
}

inline bool same_bits(const flowcast::Mask& a, const flowcast::Mask& b) {
    if (a.width != b.width || a.height != b.height) return false;
    for (size_t i = 0; i < a.bits.size(); ++i)
        if ((a.bits[i] != 0) != (b.bits[i] != 0)) return false;
    return true;
}

/// Relative gap that degrades to absolute near zero.
inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace testutil
