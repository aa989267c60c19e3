#pragma once

#include "thinpaint/core/image.hpp"

namespace thinpaint {

namespace detail {

// Neighbours in the Zhang-Suen order p2..p9: N, NE, E, SE, S, SW, W, NW.
inline void zs_neighbours(const BinaryMask& m, int r, int c, int n[8]) {
    n[0] = m.at_or_zero(r - 1, c);
    n[1] = m.at_or_zero(r - 1, c + 1);
    n[2] = m.at_or_zero(r, c + 1);
    n[3] = m.at_or_zero(r + 1, c + 1);
    n[4] = m.at_or_zero(r + 1, c);
    n[5] = m.at_or_zero(r + 1, c - 1);
    n[6] = m.at_or_zero(r, c - 1);
    n[7] = m.at_or_zero(r - 1, c - 1);
}

inline bool zs_removable(const BinaryMask& m, int r, int c, int subpass) {
    int n[8];
    zs_neighbours(m, r, c, n);

    int count = 0;
    for (int i = 0; i < 8; ++i) count += n[i];
    if (count < 2 || count > 6) return false;

    int transitions = 0;
    for (int i = 0; i < 8; ++i)
        if (n[i] == 0 && n[(i + 1) % 8] == 1) ++transitions;
    if (transitions != 1) return false;

    const int p2 = n[0], p4 = n[2], p6 = n[4], p8 = n[6];
    if (subpass == 0) {
        if (p2 * p4 * p6 != 0) return false;
        if (p4 * p6 * p8 != 0) return false;
    } else {
        if (p2 * p4 * p8 != 0) return false;
        if (p2 * p6 * p8 != 0) return false;
    }
    return true;
}

inline int zs_transitions(const BinaryMask& m, int r, int c) {
    int n[8];
    zs_neighbours(m, r, c, n);
    int transitions = 0;
    for (int i = 0; i < 8; ++i)
        if (n[i] == 0 && n[(i + 1) % 8] == 1) ++transitions;
    return transitions;
}

inline bool in_full_block(const BinaryMask& m, int r, int c) {
    for (int dr = -1; dr <= 0; ++dr)
        for (int dc = -1; dc <= 0; ++dc)
            if (m.at_or_zero(r + dr, c + dc) && m.at_or_zero(r + dr, c + dc + 1) &&
                m.at_or_zero(r + dr + 1, c + dc) && m.at_or_zero(r + dr + 1, c + dc + 1))
                return true;
    return false;
}

} // namespace detail

/// Zhang-Suen thinning plus a residue sweep. The simultaneous-deletion passes can
/// leave fully-foreground 2x2 blocks; the sweep first removes block pixels whose
/// neighbour ring forms a single arc (one 0-to-1 transition, keeps local
/// connectivity), and when a block survives even that (e.g. two diagonals crossing
/// through it) it drops the block member with the fewest foreground neighbours.
/// The result is a subset of the input, at most one pixel wide, and a fixed point
/// of the whole procedure.
inline BinaryMask skeletonize(const BinaryMask& mask) {
    BinaryMask cur = mask;
    if (cur.empty()) return cur;

    std::vector<std::pair<int, int>> to_delete;
    bool outer_changed = true;
    while (outer_changed) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (int subpass = 0; subpass < 2; ++subpass) {
                to_delete.clear();
                for (int r = 0; r < cur.height(); ++r)
                    for (int c = 0; c < cur.width(); ++c)
                        if (cur.at(r, c) && detail::zs_removable(cur, r, c, subpass))
                            to_delete.emplace_back(r, c);
                for (auto [r, c] : to_delete) cur(r, c) = 0;
                if (!to_delete.empty()) changed = true;
            }
        }

        outer_changed = false;
        for (int r = 0; r < cur.height(); ++r)
            for (int c = 0; c < cur.width(); ++c)
                if (cur.at(r, c) && detail::in_full_block(cur, r, c) &&
                    detail::zs_transitions(cur, r, c) == 1) {
                    cur(r, c) = 0;
                    outer_changed = true;
                }
        if (outer_changed) continue;

        // Stubborn block: no member is safely removable.
        for (int r = 0; r + 1 < cur.height() && !outer_changed; ++r)
            for (int c = 0; c + 1 < cur.width() && !outer_changed; ++c) {
                if (!(cur.at(r, c) && cur.at(r, c + 1) && cur.at(r + 1, c) &&
                      cur.at(r + 1, c + 1)))
                    continue;
                int best_r = r, best_c = c, best_deg = 9;
                for (auto [dr, dc] : {std::pair{0, 0}, {0, 1}, {1, 0}, {1, 1}}) {
                    int n[8];
                    detail::zs_neighbours(cur, r + dr, c + dc, n);
                    int deg = 0;
                    for (int i = 0; i < 8; ++i) deg += n[i];
                    if (deg < best_deg) {
                        best_deg = deg;
                        best_r = r + dr;
                        best_c = c + dc;
                    }
                }
                cur(best_r, best_c) = 0;
                outer_changed = true;
            }
    }
    return cur;
}

/// true when some pixel has a fully-foreground 2x2 neighbourhood, i.e. the mask is
/// thicker than one pixel somewhere.
inline bool has_two_by_two_block(const BinaryMask& m) {
    for (int r = 0; r + 1 < m.height(); ++r)
        for (int c = 0; c + 1 < m.width(); ++c)
            if (m.at(r, c) && m.at(r, c + 1) && m.at(r + 1, c) && m.at(r + 1, c + 1))
                return true;
    return false;
}

} // namespace thinpaint
