#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sequency/matrix.hpp"
#include "sequency/series.hpp"
#include "sequency/wft.hpp"

namespace sequency {

inline constexpr std::size_t kDefaultLandscapeLength = 100;

/// Extremes of the Walsh-Fourier coefficients over every series of the dataset.
struct GlobalRange {
    double lo = 0.0;
    double hi = 0.0;

    bool encloses(const SeriesRange& r) const { return lo <= r.min && r.max <= hi; }
    bool operator==(const GlobalRange&) const = default;
};

/// Phase one on a shard: WFT range of each member series, in member order.
std::vector<SeriesRange> local_ranges(const Dataset& dataset, std::span<const std::size_t> members);

/// Barrier between the phases: min of mins and max of maxes over all shards.
GlobalRange reduce_global_range(std::span<const std::vector<SeriesRange>> per_shard);

/**
 * Phase two: one landscape row of length L per series on the shared grid.
 * Throws std::invalid_argument if a range is not enclosed by `global` (a stale
 * reduction) or L < 2. A degenerate global range (lo == hi) yields zero rows.
 */
Matrix build_features(std::span<const SeriesRange> ranges, const GlobalRange& global, std::size_t L);

/// Both phases for one shard against an already reduced global range.
Matrix build_features(const Dataset& dataset, std::span<const std::size_t> members, const GlobalRange& global,
                      std::size_t L);

/// Feature matrices of every shard of a plan, computed with the global-range barrier.
struct ShardedFeatures {
    GlobalRange range;
    std::vector<std::vector<SeriesRange>> local;
    std::vector<Matrix> shards;
    std::size_t landscape_length = 0;
};

ShardedFeatures extract_features(const Dataset& dataset, const ShardPlan& plan, std::size_t L);

/// Serial reference kernels. Slow and straightforward; used to check the parallel paths.
namespace reference {

/// O(T2^2) product with the walsh_value table.
std::vector<double> naive_wft(std::span<const double> values);

std::vector<SeriesRange> local_ranges(const Dataset& dataset, std::span<const std::size_t> members);
Matrix build_features(std::span<const SeriesRange> ranges, const GlobalRange& global, std::size_t L);

}  // namespace reference

}  // namespace sequency
