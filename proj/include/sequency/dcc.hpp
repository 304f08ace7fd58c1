#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sequency/features.hpp"
#include "sequency/kmeans.hpp"
#include "sequency/series.hpp"

namespace sequency {

/// What a worker reports to the coordinator after each round.
struct RoundMessage {
    std::uint32_t worker_id = 0;  ///< 1..S
    std::uint32_t round = 0;      ///< 1..I
    CentroidSet centroids;        ///< K x L, post-Lloyd
    bool flag = true;             ///< labels changed this round (always set on round 1)
};

/// Seed of worker `worker_id` (1-based) under a run seed.
std::uint64_t worker_seed(std::uint64_t seed, std::uint32_t worker_id);

/// Seed of the coordinator's consensus K-means under a run seed.
std::uint64_t master_seed(std::uint64_t seed);

/**
 * One shard's K-means participant. Owns its labels between rounds.
 *
 * Round 1 starts from init_uniform on the shard with the worker's own seed;
 * later rounds start from the broadcast consensus centroids. The flag is
 * forced on round 1 and afterwards reports whether any label changed.
 */
class Worker {
public:
    Worker(std::uint32_t worker_id, const Matrix& features, std::size_t K, std::uint64_t seed,
           std::size_t lloyd_iters = kDefaultLloydIterations);

    /// `incoming` must be empty on round 1 and present afterwards.
    RoundMessage run_round(std::uint32_t round, const std::optional<CentroidSet>& incoming);

    std::uint32_t id() const { return id_; }
    const Assignment& assignment() const { return assignment_; }
    const CentroidSet& centroids() const { return centroids_; }

private:
    std::uint32_t id_;
    const Matrix* features_;
    std::size_t K_;
    std::uint64_t seed_;
    std::size_t lloyd_iters_;
    Assignment assignment_;
    CentroidSet centroids_;
    std::uint32_t last_round_ = 0;
};

/**
 * Consensus step: K-means with K clusters over the S*K gathered worker
 * centroids, taken in worker-id order, initialized by init_uniform(seed).
 *
 * The resulting clusters are numbered by the first gathered centroid they
 * contain, so worker 1's numbering carries over to the consensus; clusters
 * without members go last in their original order.
 *
 * Throws ProtocolError when the message set is not exactly workers 1..S of
 * one round with K x L centroids each. `weights`, when given, holds one
 * weight per worker applied to each of its centroids.
 */
CentroidSet master_consensus(std::span<const RoundMessage> messages, std::size_t K, std::uint64_t seed,
                             std::size_t expected_workers, std::span<const double> worker_weights = {},
                             std::size_t lloyd_iters = kDefaultLloydIterations);

enum class Transport { in_process, socket };

struct DccConfig {
    std::size_t K = 3;
    std::size_t S = 1;
    std::size_t L = kDefaultLandscapeLength;
    std::uint64_t seed = 0;
    std::size_t max_rounds = 100;
    std::size_t lloyd_iters = kDefaultLloydIterations;
    Transport transport = Transport::in_process;
    /// Weight worker centroids by shard size in the consensus step. Off by default.
    bool weight_by_shard_size = false;
};

struct ClusterResult {
    std::vector<std::uint32_t> labels;  ///< 0-based, in dataset order
    double wcss = 0.0;
    CentroidSet centroids;                ///< last consensus broadcast
    std::size_t rounds_used = 0;
    bool converged = false;
    std::size_t consensus_calls = 0;

    std::vector<double> shard_wcss;
    std::vector<CentroidSet> worker_centroids;  ///< final per-worker centroids, worker order
    std::vector<std::vector<std::uint32_t>> shard_labels;

    double feature_seconds = 0.0;
    double kmeans_seconds = 0.0;
};

/// Shard plan plus features, reusable across K.
struct PreparedRun {
    ShardPlan plan;
    ShardedFeatures features;
    double feature_seconds = 0.0;
};

PreparedRun prepare_run(const Dataset& dataset, std::size_t S, std::size_t L, std::uint64_t seed);

/// The round loop on already extracted features. Labels are realigned through the plan.
ClusterResult cluster_prepared(const PreparedRun& prepared, const DccConfig& config);

/// Sharding, features with the global-range barrier, then the round loop.
ClusterResult run_dcc(const Dataset& dataset, const DccConfig& config);

struct ElbowPoint {
    std::size_t K = 0;
    double wcss = 0.0;
    double feature_seconds = 0.0;
    double kmeans_seconds = 0.0;
    std::size_t rounds_used = 0;
    bool converged = false;
};

/// One clustering per K over features computed once.
std::vector<ElbowPoint> elbow_sweep(const Dataset& dataset, std::span<const std::size_t> Ks, const DccConfig& base);

// ---------------------------------------------------------------------------
// Worker pools: how the coordinator reaches its workers.

struct WorkerReport {
    std::uint32_t worker_id = 0;
    std::vector<std::uint32_t> labels;
    double wcss = 0.0;
};

class WorkerPool {
public:
    virtual ~WorkerPool() = default;
    virtual std::size_t size() const = 0;
    /// Runs one round on every worker; messages come back in worker-id order.
    virtual std::vector<RoundMessage> round(std::uint32_t round, const std::optional<CentroidSet>& incoming) = 0;
    /// Ends the run; each worker returns its retained labels and WCSS.
    virtual std::vector<WorkerReport> finish() = 0;
};

std::unique_ptr<WorkerPool> make_in_process_pool(std::span<const Matrix> shards, std::size_t K, std::uint64_t seed,
                                                 std::size_t lloyd_iters);

/// One forked process per worker, connected by a Unix socket pair and speaking wire frames.
std::unique_ptr<WorkerPool> make_socket_pool(std::span<const Matrix> shards, std::size_t K, std::uint64_t seed,
                                             std::size_t lloyd_iters);

}  // namespace sequency
