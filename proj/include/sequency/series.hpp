#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sequency {

/// One respondent: a per-minute sequence of categorical levels plus a survey weight.
struct CategoricalSeries {
    std::string id;
    std::vector<std::uint8_t> values;  ///< levels in [0, J-1]
    double weight = 1.0;
    std::map<std::string, std::string> attributes;

    bool operator==(const CategoricalSeries&) const = default;
};

/**
 * An ordered collection of series sharing the same length T and level count J.
 *
 * The stored order is the ingestion order; every label file produced
 * downstream is aligned to it.
 */
class Dataset {
public:
    Dataset() = default;

    /// Validates the invariants (uniform T, levels < J, weight >= 0, J >= 2, unique ids).
    Dataset(std::vector<CategoricalSeries> series, std::size_t levels);

    std::size_t size() const { return series_.size(); }
    std::size_t length() const { return length_; }
    std::size_t levels() const { return levels_; }

    const CategoricalSeries& operator[](std::size_t i) const { return series_[i]; }
    std::span<const CategoricalSeries> series() const { return series_; }

    /// Sorted union of attribute names across all series.
    std::vector<std::string> attribute_names() const;

    bool operator==(const Dataset&) const = default;

private:
    std::vector<CategoricalSeries> series_;
    std::size_t length_ = 0;
    std::size_t levels_ = 0;
};

enum class DatasetFormat { csv, binary };

/// Picks binary for a `.bin` extension, csv otherwise.
DatasetFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DatasetFormat format);

Dataset read_csv(std::istream& in);
void write_csv(const Dataset& dataset, std::ostream& out);
Dataset read_binary(std::istream& in);
void write_binary(const Dataset& dataset, std::ostream& out);

// ---------------------------------------------------------------------------
// Synthetic data

enum class Archetype : std::uint8_t { in_home = 0, night_out = 1, home_and_work = 2 };

inline constexpr std::size_t kArchetypeCount = 3;
inline constexpr std::size_t kSyntheticLevels = 3;  // 0 home, 1 travel, 2 out of home

const char* archetype_name(Archetype a);

/// Transition minutes of one archetype day. Each segment is [start, end).
struct DaySchedule {
    std::size_t leave;         ///< first travel minute
    std::size_t arrive;        ///< first out-of-home minute
    std::size_t depart;        ///< first minute of the trip back (== T for night_out)
    std::size_t home;          ///< first minute back home (== T for night_out)
};

/// Unjittered schedule of an archetype for a day of length T.
DaySchedule canonical_schedule(Archetype a, std::size_t T);

/// Expands a schedule into levels: 0 before leave, 1 on trips, 2 while out.
std::vector<std::uint8_t> render_schedule(const DaySchedule& s, std::size_t T);

struct SyntheticData {
    Dataset dataset;
    /// Per-series noise-free (but jittered) level sequence, same order as dataset.
    std::vector<std::vector<std::uint8_t>> clean;
};

/**
 * Planted three-archetype data. Series are emitted archetype-major
 * (all in_home, then night_out, then home_and_work) with attributes["truth"]
 * holding the archetype name. Transition minutes are jittered uniformly by at
 * most floor(noise * T / 4) minutes, then each minute is replaced by a
 * uniformly chosen other level with probability `noise`.
 */
SyntheticData generate_synthetic_detailed(std::size_t n_per_archetype, std::size_t T, double noise,
                                          std::uint64_t seed);

Dataset generate_synthetic(std::size_t n_per_archetype, std::size_t T, double noise, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sharding

/**
 * Random division of N series into S shards.
 *
 * `order` is the sampled permutation of dataset indices (0-based); shard s
 * receives the consecutive block order[offset(s) .. offset(s) + size(s)).
 * The first S-1 shards hold floor(N/S) series each and the last holds the rest.
 */
struct ShardPlan {
    std::size_t shard_count = 0;
    std::vector<std::size_t> order;
    std::vector<std::size_t> shard_sizes;
    std::vector<std::size_t> shard_of;  ///< dataset index -> shard

    std::size_t offset(std::size_t shard) const;
    std::span<const std::size_t> members(std::size_t shard) const;

    /// Maps values given in shard-concatenation order back to dataset order.
    template <typename T>
    std::vector<T> to_dataset_order(std::span<const T> concatenated) const {
        std::vector<T> out(concatenated.size());
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            out[order[pos]] = concatenated[pos];
        }
        return out;
    }

    bool operator==(const ShardPlan&) const = default;
};

ShardPlan make_shard_plan(std::size_t N, std::size_t S, std::uint64_t seed);

}  // namespace sequency
