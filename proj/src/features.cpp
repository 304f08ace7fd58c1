#include "sequency/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sequency/parallel.hpp"
#include "sequency/tda.hpp"

namespace sequency {

namespace {

void check_enclosed(std::span<const SeriesRange> ranges, const GlobalRange& global, std::size_t L) {
    if (L < 2) {
        throw std::invalid_argument("build_features: L must be at least 2");
    }
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (!global.encloses(ranges[i])) {
            throw std::invalid_argument("build_features: series " + std::to_string(i) +
                                        " lies outside the global range (stale reduction?)");
        }
    }
}

}  // namespace

std::vector<SeriesRange> local_ranges(const Dataset& dataset, std::span<const std::size_t> members) {
    std::vector<SeriesRange> out(members.size());
    const auto n = static_cast<std::ptrdiff_t>(members.size());
#pragma omp parallel if (parallel_enabled())
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            out[static_cast<std::size_t>(i)] =
                wft_range(dataset[members[static_cast<std::size_t>(i)]].values, scratch);
        }
    }
    return out;
}

GlobalRange reduce_global_range(std::span<const std::vector<SeriesRange>> per_shard) {
    bool any = false;
    GlobalRange g;
    for (const auto& shard : per_shard) {
        for (const auto& r : shard) {
            if (!any) {
                g = {r.min, r.max};
                any = true;
            } else {
                g.lo = std::min(g.lo, r.min);
                g.hi = std::max(g.hi, r.max);
            }
        }
    }
    if (!any) {
        throw std::invalid_argument("reduce_global_range: no ranges");
    }
    return g;
}

Matrix build_features(std::span<const SeriesRange> ranges, const GlobalRange& global, std::size_t L) {
    check_enclosed(ranges, global, L);
    Matrix out(ranges.size(), L);
    const auto n = static_cast<std::ptrdiff_t>(ranges.size());
#pragma omp parallel for schedule(static) if (parallel_enabled())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        closed_form_into(ranges[r], global.lo, global.hi, out.row(r));
    }
    return out;
}

Matrix build_features(const Dataset& dataset, std::span<const std::size_t> members, const GlobalRange& global,
                      std::size_t L) {
    const auto ranges = local_ranges(dataset, members);
    return build_features(ranges, global, L);
}

ShardedFeatures extract_features(const Dataset& dataset, const ShardPlan& plan, std::size_t L) {
    ShardedFeatures out;
    out.landscape_length = L;
    out.local.reserve(plan.shard_count);
    for (std::size_t s = 0; s < plan.shard_count; ++s) {
        out.local.push_back(local_ranges(dataset, plan.members(s)));
    }
    out.range = reduce_global_range(out.local);
    out.shards.reserve(plan.shard_count);
    for (std::size_t s = 0; s < plan.shard_count; ++s) {
        out.shards.push_back(build_features(out.local[s], out.range, L));
    }
    return out;
}

namespace reference {

std::vector<double> naive_wft(std::span<const double> values) {
    const std::size_t n = values.size();
    if (!is_pow2(n)) {
        throw std::invalid_argument("naive_wft: length is not a power of two");
    }
    std::vector<double> out(n, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            acc += values[t] * walsh_value(t, j, n);
        }
        out[j] = acc * scale;
    }
    return out;
}

std::vector<SeriesRange> local_ranges(const Dataset& dataset, std::span<const std::size_t> members) {
    std::vector<SeriesRange> out;
    out.reserve(members.size());
    for (const auto idx : members) {
        out.push_back(series_range(wft_of_levels(dataset[idx].values)));
    }
    return out;
}

Matrix build_features(std::span<const SeriesRange> ranges, const GlobalRange& global, std::size_t L) {
    check_enclosed(ranges, global, L);
    Matrix out(ranges.size(), L);
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        for (std::size_t l = 0; l < L; ++l) {
            const double g = grid_point(global.lo, global.hi, L, l);
            const double up = g - ranges[i].min;
            const double down = ranges[i].max - g;
            out(i, l) = std::max(0.0, std::min(up, down));
        }
    }
    return out;
}

}  // namespace reference

}  // namespace sequency
