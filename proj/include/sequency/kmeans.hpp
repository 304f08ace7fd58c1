#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sequency/matrix.hpp"

namespace sequency {

/// K centroids of length L, one per row.
using CentroidSet = Matrix;

/// Hard assignment of points to clusters (0-based labels) and its within-cluster sum of squares.
struct Assignment {
    std::vector<std::uint32_t> labels;
    double wcss = 0.0;

    bool operator==(const Assignment&) const = default;
};

struct LloydResult {
    Assignment assignment;
    CentroidSet centroids;
    std::vector<double> wcss_trace;  ///< WCSS after every assignment step
    std::size_t iterations = 0;
    bool converged = false;
};

inline constexpr std::size_t kDefaultLloydIterations = 1000;

/**
 * Random initial centroids: component l of every centroid is drawn uniformly
 * between the column minimum and maximum of `points`. Draws run centroid-major.
 */
CentroidSet init_uniform(const Matrix& points, std::size_t K, std::uint64_t seed);

/**
 * Lloyd iterations from `init` until a full pass changes no label or
 * `max_iters` updates have run.
 *
 * Distances are squared Euclidean; ties go to the lowest cluster index. A
 * cluster left empty by an assignment is reseeded with the point farthest from
 * its own centroid (ties: lowest point index), taken from a cluster that keeps
 * at least one member; if every point sits exactly on its centroid the empty
 * cluster keeps its previous centroid.
 *
 * Optional per-point `weights` turn means and WCSS into weighted ones.
 */
LloydResult lloyd(const Matrix& points, CentroidSet init, std::size_t max_iters = kDefaultLloydIterations,
                  std::span<const double> weights = {});

/// Nearest-centroid labels; optionally the squared distance of each point to its centroid.
std::vector<std::uint32_t> assign_nearest(const Matrix& points, const CentroidSet& centroids,
                                          std::vector<double>* distances = nullptr);

/// Sum over points of the squared distance to the centroid of their label.
double compute_wcss(const Matrix& points, const CentroidSet& centroids, std::span<const std::uint32_t> labels);

/// Total WCSS from per-shard values.
double wcss_total(std::span<const double> per_shard);

}  // namespace sequency
