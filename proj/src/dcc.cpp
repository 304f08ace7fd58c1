#include "sequency/dcc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sequency/errors.hpp"
#include "sequency/parallel.hpp"
#include "sequency/rng.hpp"

namespace sequency {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    return std::round(s * 1000.0) / 1000.0;
}

}  // namespace

std::uint64_t worker_seed(std::uint64_t seed, std::uint32_t worker_id) { return derive_seed(seed, "worker", worker_id); }

std::uint64_t master_seed(std::uint64_t seed) { return derive_seed(seed, "master"); }

// ---------------------------------------------------------------------------
// Worker

Worker::Worker(std::uint32_t worker_id, const Matrix& features, std::size_t K, std::uint64_t seed,
               std::size_t lloyd_iters)
    : id_(worker_id), features_(&features), K_(K), seed_(seed), lloyd_iters_(lloyd_iters) {
    if (K_ < 1) {
        throw std::invalid_argument("Worker: K must be at least 1");
    }
    if (features.empty()) {
        throw std::invalid_argument("Worker " + std::to_string(worker_id) + ": empty shard");
    }
}

RoundMessage Worker::run_round(std::uint32_t round, const std::optional<CentroidSet>& incoming) {
    if (round != last_round_ + 1) {
        throw ProtocolError("worker " + std::to_string(id_) + ": expected round " + std::to_string(last_round_ + 1) +
                            ", got " + std::to_string(round));
    }
    if ((round == 1) == incoming.has_value()) {
        throw ProtocolError("worker " + std::to_string(id_) +
                            ": consensus centroids must be absent on round 1 and present afterwards");
    }
    CentroidSet start;
    if (round == 1) {
        start = init_uniform(*features_, K_, seed_);
    } else {
        if (incoming->rows() != K_ || incoming->cols() != features_->cols()) {
            throw ProtocolError("worker " + std::to_string(id_) + ": consensus centroids are " +
                                std::to_string(incoming->rows()) + "x" + std::to_string(incoming->cols()) +
                                ", expected " + std::to_string(K_) + "x" + std::to_string(features_->cols()));
        }
        start = *incoming;
    }
    LloydResult fit = lloyd(*features_, std::move(start), lloyd_iters_);

    const bool changed = round == 1 || fit.assignment.labels != assignment_.labels;
    assignment_ = std::move(fit.assignment);
    centroids_ = std::move(fit.centroids);
    last_round_ = round;
    return RoundMessage{id_, round, centroids_, changed};
}

// ---------------------------------------------------------------------------
// Coordinator consensus

namespace {

void validate_round(std::span<const RoundMessage> messages, std::size_t expected_workers, std::size_t K,
                    std::optional<std::uint32_t> round, std::optional<std::size_t> L) {
    if (messages.size() != expected_workers) {
        throw ProtocolError("expected " + std::to_string(expected_workers) + " worker messages, got " +
                            std::to_string(messages.size()));
    }
    std::vector<char> seen(expected_workers + 1, 0);
    const std::uint32_t r = round.value_or(messages.empty() ? 0 : messages.front().round);
    const std::size_t cols = L.value_or(messages.empty() ? 0 : messages.front().centroids.cols());
    for (const auto& m : messages) {
        if (m.worker_id < 1 || m.worker_id > expected_workers || seen[m.worker_id]) {
            throw ProtocolError("missing or duplicate worker message (worker " + std::to_string(m.worker_id) + ")");
        }
        seen[m.worker_id] = 1;
        if (m.round != r) {
            throw ProtocolError("worker " + std::to_string(m.worker_id) + " reported round " +
                                std::to_string(m.round) + " during round " + std::to_string(r));
        }
        if (m.centroids.rows() != K || m.centroids.cols() != cols) {
            throw ProtocolError("worker " + std::to_string(m.worker_id) + " sent a centroid set of the wrong shape");
        }
        if (r == 1 && !m.flag) {
            throw ProtocolError("worker " + std::to_string(m.worker_id) + " cleared its flag on round 1");
        }
    }
}

}  // namespace

CentroidSet master_consensus(std::span<const RoundMessage> messages, std::size_t K, std::uint64_t seed,
                             std::size_t expected_workers, std::span<const double> worker_weights,
                             std::size_t lloyd_iters) {
    validate_round(messages, expected_workers, K, std::nullopt, std::nullopt);
    if (!worker_weights.empty() && worker_weights.size() != expected_workers) {
        throw std::invalid_argument("master_consensus: one weight per worker required");
    }

    std::vector<const RoundMessage*> ordered(messages.size());
    for (const auto& m : messages) {
        ordered[m.worker_id - 1] = &m;
    }
    const std::size_t L = ordered.front()->centroids.cols();
    Matrix points(expected_workers * K, L);
    std::vector<double> weights;
    for (std::size_t s = 0; s < expected_workers; ++s) {
        for (std::size_t k = 0; k < K; ++k) {
            const auto src = ordered[s]->centroids.row(k);
            std::copy(src.begin(), src.end(), points.row(s * K + k).begin());
            if (!worker_weights.empty()) {
                weights.push_back(worker_weights[s]);
            }
        }
    }

    LloydResult fit = lloyd(points, init_uniform(points, K, seed), lloyd_iters, weights);

    // Number consensus clusters by their first member in gathered order.
    std::vector<std::size_t> first(K, points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto& f = first[fit.assignment.labels[i]];
        f = std::min(f, i);
    }
    std::vector<std::size_t> perm(K);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return first[a] < first[b]; });

    CentroidSet out(K, L);
    for (std::size_t k = 0; k < K; ++k) {
        const auto src = fit.centroids.row(perm[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// In-process pool

namespace {

class InProcessPool final : public WorkerPool {
public:
    InProcessPool(std::span<const Matrix> shards, std::size_t K, std::uint64_t seed, std::size_t lloyd_iters) {
        workers_.reserve(shards.size());
        for (std::size_t s = 0; s < shards.size(); ++s) {
            const auto id = static_cast<std::uint32_t>(s + 1);
            workers_.emplace_back(id, shards[s], K, worker_seed(seed, id), lloyd_iters);
        }
    }

    std::size_t size() const override { return workers_.size(); }

    std::vector<RoundMessage> round(std::uint32_t round, const std::optional<CentroidSet>& incoming) override {
        std::vector<RoundMessage> out(workers_.size());
        std::vector<std::exception_ptr> errors(workers_.size());
        const auto n = static_cast<std::ptrdiff_t>(workers_.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel_enabled())
        for (std::ptrdiff_t s = 0; s < n; ++s) {
            const auto i = static_cast<std::size_t>(s);
            try {
                out[i] = workers_[i].run_round(round, incoming);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
        return out;
    }

    std::vector<WorkerReport> finish() override {
        std::vector<WorkerReport> out;
        out.reserve(workers_.size());
        for (const auto& w : workers_) {
            out.push_back({w.id(), w.assignment().labels, w.assignment().wcss});
        }
        return out;
    }

private:
    std::vector<Worker> workers_;
};

}  // namespace

std::unique_ptr<WorkerPool> make_in_process_pool(std::span<const Matrix> shards, std::size_t K, std::uint64_t seed,
                                                 std::size_t lloyd_iters) {
    return std::make_unique<InProcessPool>(shards, K, seed, lloyd_iters);
}

// ---------------------------------------------------------------------------
// Driver

PreparedRun prepare_run(const Dataset& dataset, std::size_t S, std::size_t L, std::uint64_t seed) {
    const auto start = Clock::now();
    PreparedRun p;
    p.plan = make_shard_plan(dataset.size(), S, seed);
    p.features = extract_features(dataset, p.plan, L);
    p.feature_seconds = seconds_since(start);
    return p;
}

ClusterResult cluster_prepared(const PreparedRun& prepared, const DccConfig& config) {
    if (config.K < 1) {
        throw std::invalid_argument("K must be at least 1");
    }
    if (config.max_rounds < 1) {
        throw std::invalid_argument("the round limit I must be at least 1");
    }
    const auto start = Clock::now();
    const auto& shards = prepared.features.shards;
    const std::size_t S = shards.size();
    const std::size_t L = prepared.features.landscape_length;

    auto pool = config.transport == Transport::socket
                    ? make_socket_pool(shards, config.K, config.seed, config.lloyd_iters)
                    : make_in_process_pool(shards, config.K, config.seed, config.lloyd_iters);

    std::vector<double> weights;
    if (config.weight_by_shard_size) {
        for (const auto n : prepared.plan.shard_sizes) {
            weights.push_back(static_cast<double>(n));
        }
    }

    ClusterResult res;
    std::optional<CentroidSet> consensus;
    std::vector<RoundMessage> last;
    for (std::uint32_t i = 1; i <= config.max_rounds; ++i) {
        last = pool->round(i, consensus);
        validate_round(last, S, config.K, i, L);
        res.rounds_used = i;
        const bool any_changed = std::any_of(last.begin(), last.end(), [](const RoundMessage& m) { return m.flag; });
        if (!any_changed) {
            res.converged = true;
            break;
        }
        if (i == config.max_rounds) {
            break;
        }
        consensus = master_consensus(last, config.K, master_seed(config.seed), S, weights, config.lloyd_iters);
        ++res.consensus_calls;
    }

    auto reports = pool->finish();
    if (reports.size() != S) {
        throw ProtocolError("expected " + std::to_string(S) + " worker reports, got " + std::to_string(reports.size()));
    }
    std::vector<std::uint32_t> concatenated;
    concatenated.reserve(prepared.plan.order.size());
    for (std::size_t s = 0; s < S; ++s) {
        auto& r = reports[s];
        if (r.worker_id != s + 1 || r.labels.size() != prepared.plan.shard_sizes[s]) {
            throw ProtocolError("worker " + std::to_string(s + 1) + " returned a malformed final report");
        }
        concatenated.insert(concatenated.end(), r.labels.begin(), r.labels.end());
        res.shard_wcss.push_back(r.wcss);
        res.shard_labels.push_back(std::move(r.labels));
        res.worker_centroids.push_back(last[s].centroids);
    }
    res.labels = prepared.plan.to_dataset_order<std::uint32_t>(concatenated);
    res.wcss = wcss_total(res.shard_wcss);
    // With I == 1 no consensus was ever broadcast; report the would-be consensus.
    res.centroids = consensus ? std::move(*consensus)
                              : master_consensus(last, config.K, master_seed(config.seed), S, weights,
                                                 config.lloyd_iters);
    res.feature_seconds = prepared.feature_seconds;
    res.kmeans_seconds = seconds_since(start);
    return res;
}

ClusterResult run_dcc(const Dataset& dataset, const DccConfig& config) {
    const PreparedRun prepared = prepare_run(dataset, config.S, config.L, config.seed);
    return cluster_prepared(prepared, config);
}

std::vector<ElbowPoint> elbow_sweep(const Dataset& dataset, std::span<const std::size_t> Ks, const DccConfig& base) {
    if (Ks.empty()) {
        throw std::invalid_argument("elbow_sweep: empty K list");
    }
    const PreparedRun prepared = prepare_run(dataset, base.S, base.L, base.seed);
    std::vector<ElbowPoint> out;
    out.reserve(Ks.size());
    for (const auto K : Ks) {
        DccConfig cfg = base;
        cfg.K = K;
        const ClusterResult r = cluster_prepared(prepared, cfg);
        out.push_back({K, r.wcss, prepared.feature_seconds, r.kmeans_seconds, r.rounds_used, r.converged});
    }
    return out;
}

}  // namespace sequency
