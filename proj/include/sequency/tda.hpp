#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sequency/wft.hpp"

namespace sequency {

struct PersistencePair {
    double birth;
    double death;

    bool operator==(const PersistencePair&) const = default;
    auto operator<=>(const PersistencePair&) const = default;
};

/// 0-dimensional persistence diagram; points are kept in emission order.
struct PersistenceDiagram {
    std::vector<PersistencePair> points;
};

/**
 * Sampled first-order persistence landscape on the uniform grid
 * g(l) = lo + l * (hi - lo) / (L - 1), l = 0..L-1.
 */
struct Landscape {
    std::vector<double> samples;
    double lo = 0.0;
    double hi = 0.0;
};

/// Grid point l (0-based) of an L-point grid over [lo, hi].
inline double grid_point(double lo, double hi, std::size_t L, std::size_t l) {
    return lo + static_cast<double>(l) * (hi - lo) / static_cast<double>(L - 1);
}

/**
 * Persistence of the sublevel-set filtration of the piecewise-linear function
 * through `f` (a path graph over the samples).
 *
 * Components are born at local minima. When two meet, the one with the higher
 * birth dies (equal births: the one whose minimum has the larger sample index).
 * Zero-length pairs from plateaus and regular points are not emitted. The
 * surviving component is closed at the global maximum, so the diagram always
 * contains (min f, max f); a single sample yields {(c, c)}.
 *
 * Throws std::invalid_argument on empty input or non-finite samples.
 */
PersistenceDiagram sublevel_persistence(std::span<const double> f);

/**
 * PL(g) = max_i min(g - b_i, d_i - g)_+ sampled on the grid over [lo, hi].
 * An empty diagram gives an all-zero landscape. Requires L >= 2 and lo < hi.
 */
Landscape landscape_from_diagram(const PersistenceDiagram& diagram, double lo, double hi, std::size_t L);

/**
 * Closed form for a sublevel diagram, whose landscape is the single tent of
 * its (min, max) point: PL(g) = min(g - r.min, r.max - g)_+.
 * Requires lo <= r.min <= r.max <= hi, lo < hi, L >= 2.
 */
Landscape landscape_closed_form(const SeriesRange& r, double lo, double hi, std::size_t L);

/// Writes the closed-form samples into `out` (size L) without allocating.
/// Same preconditions as landscape_closed_form except lo == hi is allowed.
void closed_form_into(const SeriesRange& r, double lo, double hi, std::span<double> out);

}  // namespace sequency
