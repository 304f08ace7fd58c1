#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sequency/dcc.hpp"
#include "sequency/series.hpp"

namespace sequency::cli {

/// Process exit codes.
enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2, kProtocolFault = 3 };

struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path out;
    std::size_t K = 3;
    std::size_t S = 1;
    std::size_t L = kDefaultLandscapeLength;
    std::size_t I = 100;
    std::uint64_t seed = 0;
    std::optional<DatasetFormat> format;  ///< unset: by file extension
    Transport transport = Transport::in_process;
    bool weight_by_shard_size = false;

    // synth
    std::size_t n_per_archetype = 100;
    std::size_t T = 1440;
    double noise = 0.05;

    // elbow
    std::vector<std::size_t> Ks;

    // summarize
    std::filesystem::path labels;
    std::vector<std::string> attributes;
    std::optional<std::string> group_by;
    std::map<std::uint32_t, std::string> cluster_names;  ///< 1-based cluster -> display name
};

/// Validates counts (K, S, L, I positive; L >= 2). Throws std::invalid_argument.
void validate(const RunConfig& config);

/// Writes a synthetic dataset to `out` (a file).
void cmd_synth(const RunConfig& config);

/// Writes features.csv, order.csv and range.json into the `out` directory.
void cmd_features(const RunConfig& config);

/// Writes labels.csv, labels.bin, centroids.csv, worker_centroids.csv, order.csv and metrics.json.
ClusterResult cmd_cluster(const RunConfig& config);

/// Writes elbow.csv and elbow_long.csv.
std::vector<ElbowPoint> cmd_elbow(const RunConfig& config);

/// Writes proportions_c<k>.csv per non-empty cluster and composition_<attr>.csv per attribute.
void cmd_summarize(const RunConfig& config);

/// Reads a labels.csv written by cmd_cluster; returns 0-based labels in file order.
std::vector<std::uint32_t> read_labels(const std::filesystem::path& path, const Dataset& dataset);

/// Parses "1=C1-in home,2=C2-night" style maps.
std::map<std::uint32_t, std::string> parse_names(const std::string& text);

/// Parses "2:5" or "2,3,4,5".
std::vector<std::size_t> parse_k_list(const std::string& text);

}  // namespace sequency::cli
