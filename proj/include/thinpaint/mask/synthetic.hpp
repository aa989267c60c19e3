#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "thinpaint/core/image.hpp"
#include "thinpaint/core/rng.hpp"
#include "thinpaint/metrics/metrics.hpp"

namespace thinpaint {

struct SynthConfig {
    std::uint64_t seed = 0;
    int canvas_height = 512;
    int canvas_width = 512;
    int stem_count = 3;
    double branch_prob = 0.03;     // per walker step
    double step_jitter_deg = 12.0; // heading jitter per step
    int thickness = 3;
    double min_length = 500.0; // required total skeleton length, pixels

    void validate() const {
        if (canvas_height < 64 || canvas_width < 64)
            throw ConfigError("SynthConfig: canvas must be at least 64x64");
        if (branch_prob < 0.0 || branch_prob > 1.0)
            throw ConfigError("SynthConfig: branch_prob must be in [0,1]");
        if (thickness < 1) throw ConfigError("SynthConfig: thickness must be >= 1");
        if (stem_count < 1) throw ConfigError("SynthConfig: stem_count must be >= 1");
        if (min_length < 0.0) throw ConfigError("SynthConfig: min_length must be >= 0");
    }
};

namespace detail {

inline void stamp_disc(BinaryMask& m, double cr, double cc, int thickness) {
    if (thickness <= 1) {
        const int r = static_cast<int>(std::lround(cr));
        const int c = static_cast<int>(std::lround(cc));
        if (m.in_bounds(r, c)) m(r, c) = 1;
        return;
    }
    const double radius = thickness / 2.0;
    const int lo_r = static_cast<int>(std::floor(cr - radius));
    const int hi_r = static_cast<int>(std::ceil(cr + radius));
    const int lo_c = static_cast<int>(std::floor(cc - radius));
    const int hi_c = static_cast<int>(std::ceil(cc + radius));
    for (int r = lo_r; r <= hi_r; ++r)
        for (int c = lo_c; c <= hi_c; ++c) {
            if (!m.in_bounds(r, c)) continue;
            const double dr = r - cr, dc = c - cc;
            if (dr * dr + dc * dc <= radius * radius) m(r, c) = 1;
        }
}

struct Walker {
    double r, c;
    double heading; // radians, 0 = straight down (+row)
};

// Walk one stem (and any branches it spawns) across the canvas, stamping discs.
inline void run_walkers(BinaryMask& mask, std::vector<Walker> frontier, const SynthConfig& cfg,
                        Rng& rng) {
    constexpr double kPi = 3.14159265358979323846;
    const double jitter = cfg.step_jitter_deg * kPi / 180.0;
    const double max_tilt = 75.0 * kPi / 180.0; // keep walkers descending
    const int max_steps = 4 * (cfg.canvas_height + cfg.canvas_width);
    const int max_walkers = 256;
    int spawned = static_cast<int>(frontier.size());

    while (!frontier.empty()) {
        Walker w = frontier.back();
        frontier.pop_back();
        for (int step = 0; step < max_steps; ++step) {
            stamp_disc(mask, w.r, w.c, cfg.thickness);
            w.heading += rng.uniform(-jitter, jitter);
            w.heading = std::clamp(w.heading, -max_tilt, max_tilt);
            w.r += std::cos(w.heading);
            w.c += std::sin(w.heading);
            if (w.r < 0.0 || w.r >= cfg.canvas_height || w.c < 0.0 ||
                w.c >= cfg.canvas_width)
                break;
            if (cfg.branch_prob > 0.0 && spawned < max_walkers &&
                rng.uniform() < cfg.branch_prob) {
                const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
                const double split = rng.uniform(20.0, 55.0) * kPi / 180.0;
                frontier.push_back({w.r, w.c, std::clamp(w.heading + side * split,
                                                         -max_tilt, max_tilt)});
                ++spawned;
            }
        }
    }
}

} // namespace detail

/// Generate a branching thin structure: stems descend from a crown point on the top
/// edge, jittering and branching as they go, each stamped with a disc of the
/// configured thickness. The result is a single 8-connected component whose
/// skeleton length is at least cfg.min_length. Deterministic in cfg.seed.
inline BinaryMask generate_structure(const SynthConfig& cfg) {
    cfg.validate();
    const double area = static_cast<double>(cfg.canvas_height) * cfg.canvas_width;
    if (cfg.min_length > area)
        throw DataError("generate_structure: min_length exceeds canvas capacity");

    Rng rng(cfg.seed);
    BinaryMask mask(cfg.canvas_height, cfg.canvas_width);

    constexpr double kPi = 3.14159265358979323846;
    const double crown_col =
        cfg.canvas_width / 2.0 + rng.uniform(-0.1, 0.1) * cfg.canvas_width;

    auto make_stems = [&](int count) {
        std::vector<detail::Walker> stems;
        for (int k = 0; k < count; ++k) {
            double fan = 0.0;
            if (count > 1) fan = (-50.0 + 100.0 * k / (count - 1)) * kPi / 180.0;
            fan += rng.uniform(-0.08, 0.08);
            stems.push_back({0.0, crown_col, fan});
        }
        return stems;
    };

    detail::run_walkers(mask, make_stems(cfg.stem_count), cfg, rng);

    double length = root_traits(mask).length;
    double prev_length = -1.0;
    int extra_rounds = 0;
    while (length < cfg.min_length) {
        if (extra_rounds++ >= 16 || length <= prev_length)
            throw DataError("generate_structure: canvas too small for min_length " +
                            std::to_string(cfg.min_length));
        prev_length = length;
        detail::run_walkers(mask, make_stems(1 + extra_rounds % cfg.stem_count), cfg, rng);
        length = root_traits(mask).length;
    }
    return mask;
}

} // namespace thinpaint
