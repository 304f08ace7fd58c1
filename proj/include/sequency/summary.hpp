#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sequency/matrix.hpp"
#include "sequency/series.hpp"

namespace sequency {

/// Per-minute level proportions of one cluster: T rows by J columns, each row summing to 1.
struct ProportionTable {
    std::uint32_t cluster = 0;  ///< 0-based
    std::size_t members = 0;
    double total_weight = 0.0;
    bool weighted = true;  ///< false when every member weight is zero and plain counts were used
    Matrix proportions;
};

/// One table per non-empty cluster, in cluster order. Labels are 0-based, dataset order.
std::vector<ProportionTable> cluster_proportions(const Dataset& dataset, std::span<const std::uint32_t> labels,
                                                 std::size_t K);

struct CompositionRow {
    std::string group;  ///< value of the grouping attribute, "all" when ungrouped
    std::string value;  ///< attribute value, "(missing)" when absent
    std::uint32_t cluster = 0;
    double weighted_count = 0.0;
    double share_within_value = 0.0;    ///< normalized over clusters for (group, value)
    double share_within_cluster = 0.0;  ///< normalized over values for (group, cluster)
};

/**
 * Weighted composition of clusters by an attribute, optionally split by a
 * second attribute (e.g. composition by generation within each survey wave).
 * Both normalizations are reported. Groups whose total weight is zero fall
 * back to plain counts. Throws DataError for an unknown attribute.
 */
struct CompositionTable {
    std::string attribute;
    std::string group_by;
    std::vector<CompositionRow> rows;
};

CompositionTable composition(const Dataset& dataset, std::span<const std::uint32_t> labels, std::size_t K,
                             const std::string& attribute, const std::optional<std::string>& group_by = {});

}  // namespace sequency
