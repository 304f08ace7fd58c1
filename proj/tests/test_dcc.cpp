#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sequency/dcc.hpp"
#include "sequency/errors.hpp"
#include "sequency/rng.hpp"

using namespace sequency;

namespace {

Matrix col(std::vector<double> v) {
    const auto n = v.size();
    return Matrix(n, 1, std::move(v));
}

RoundMessage msg(std::uint32_t id, std::uint32_t round, Matrix c, bool flag = true) {
    return RoundMessage{id, round, std::move(c), flag};
}

/// Features of every series in dataset order.
Matrix dataset_order_features(const PreparedRun& p) {
    Matrix out(p.plan.order.size(), p.features.landscape_length);
    std::size_t pos = 0;
    for (const auto& shard : p.features.shards) {
        for (std::size_t i = 0; i < shard.rows(); ++i, ++pos) {
            std::copy(shard.row(i).begin(), shard.row(i).end(), out.row(p.plan.order[pos]).begin());
        }
    }
    return out;
}

/// Sum over series of the squared distance to its own worker's centroid.
double flat_recompute(const PreparedRun& p, const ClusterResult& r) {
    const auto x = dataset_order_features(p);
    double s = 0.0;
    for (std::size_t n = 0; n < x.rows(); ++n) {
        const auto& c = r.worker_centroids[p.plan.shard_of[n]];
        s += squared_distance(x.row(n), c.row(r.labels[n]));
    }
    return s;
}

const Dataset& planted() {
    static const Dataset d = generate_synthetic(100, 1440, 0.05, 21);
    return d;
}

}  // namespace

TEST_CASE("worker round 1 always raises the flag") {
    Rng rng(1);
    Matrix x(20, 3);
    for (auto& v : x.data()) v = rng.uniform(0, 1);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Worker w(1, x, 3, seed);
        CHECK(w.run_round(1, std::nullopt).flag);
    }
}

TEST_CASE("worker at a fixed point clears its flag and returns the centroids unchanged") {
    const auto x = col({0.0, 0.2, 10.0, 10.2});
    Worker w(1, x, 2, 5);
    const auto first = w.run_round(1, std::nullopt);
    const auto second = w.run_round(2, first.centroids);
    CHECK_FALSE(second.flag);
    CHECK(second.centroids == first.centroids);
}

TEST_CASE("worker on two separated blobs") {
    // six points, two blobs; round 1 from a poor init, round 2 from near-blob centroids
    const Matrix x(6, 2, std::vector<double>{0, 0, 0.5, 0, 0, 0.5, 8, 8, 8.5, 8, 8, 8.5});
    Worker w(1, x, 2, 3);
    const auto r1 = w.run_round(1, std::nullopt);
    const auto after1 = w.assignment().labels;
    const Matrix near(2, 2, std::vector<double>{0.2, 0.2, 8.2, 8.2});
    const auto r2 = w.run_round(2, near);
    const std::vector<std::uint32_t> blob_ids{0, 0, 0, 1, 1, 1};
    CHECK(w.assignment().labels == blob_ids);
    CHECK(r2.flag == (after1 != blob_ids));
    CHECK(r1.flag);
}

TEST_CASE("worker protocol errors") {
    const auto x = col({0.0, 1.0, 2.0});
    Worker w(2, x, 2, 1);
    CHECK_THROWS_AS(w.run_round(2, std::nullopt), ProtocolError);
    CHECK_THROWS_AS(w.run_round(1, col({0.0, 1.0})), ProtocolError);
    w.run_round(1, std::nullopt);
    CHECK_THROWS_AS(w.run_round(2, std::nullopt), ProtocolError);
    CHECK_THROWS_AS(w.run_round(2, Matrix(2, 3, 0.0)), ProtocolError);
    CHECK_THROWS_AS(w.run_round(2, Matrix(3, 1, 0.0)), ProtocolError);
}

TEST_CASE("consensus of two workers in one dimension") {
    const std::vector<RoundMessage> m{msg(1, 1, col({0.0, 10.0})), msg(2, 1, col({0.2, 9.8}))};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto c = master_consensus(m, 2, seed, 2);
        CHECK(c(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(c(1, 0) == doctest::Approx(9.9).epsilon(1e-12));
    }
}

TEST_CASE("consensus with one worker is the identity") {
    Rng rng(2);
    for (int rep = 0; rep < 50; ++rep) {
        Matrix c(4, 6);
        for (auto& v : c.data()) v = rng.uniform(-3, 3);
        const std::vector<RoundMessage> m{msg(1, 1, c)};
        CHECK(master_consensus(m, 4, static_cast<std::uint64_t>(rep), 1) == c);
    }
}

TEST_CASE("identical worker centroid sets reproduce that set") {
    Rng rng(3);
    Matrix c(3, 2);
    for (auto& v : c.data()) v = rng.uniform(-5, 5);
    const std::vector<RoundMessage> m{msg(1, 4, c), msg(2, 4, c), msg(3, 4, c)};
    const auto out = master_consensus(m, 3, 17, 3);
    // brute force: every consensus row must equal some input row, each used once
    std::vector<bool> used(3, false);
    for (std::size_t k = 0; k < 3; ++k) {
        bool found = false;
        for (std::size_t j = 0; j < 3 && !found; ++j) {
            if (!used[j] && std::equal(c.row(j).begin(), c.row(j).end(), out.row(k).begin())) {
                used[j] = found = true;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("consensus rejects malformed rounds") {
    const auto c = col({0.0, 1.0});
    const std::vector<RoundMessage> missing{msg(1, 1, c)};
    CHECK_THROWS_AS(master_consensus(missing, 2, 0, 2), ProtocolError);
    const std::vector<RoundMessage> dup{msg(1, 1, c), msg(1, 1, c)};
    CHECK_THROWS_AS(master_consensus(dup, 2, 0, 2), ProtocolError);
    const std::vector<RoundMessage> rounds{msg(1, 1, c), msg(2, 2, c)};
    CHECK_THROWS_AS(master_consensus(rounds, 2, 0, 2), ProtocolError);
    const std::vector<RoundMessage> shape{msg(1, 1, c), msg(2, 1, col({0.0, 1.0, 2.0}))};
    CHECK_THROWS_AS(master_consensus(shape, 2, 0, 2), ProtocolError);
    const std::vector<RoundMessage> cleared{msg(1, 1, c), msg(2, 1, c, false)};
    CHECK_THROWS_AS(master_consensus(cleared, 2, 0, 2), ProtocolError);
}

TEST_CASE("S=1 reproduces a single Lloyd run") {
    for (const std::uint64_t seed : {1ull, 2ull, 99ull}) {
        DccConfig cfg;
        cfg.K = 3;
        cfg.S = 1;
        cfg.seed = seed;
        const auto prepared = prepare_run(planted(), 1, cfg.L, seed);
        const auto r = cluster_prepared(prepared, cfg);
        const auto& x = prepared.features.shards[0];
        const auto single = lloyd(x, init_uniform(x, 3, worker_seed(seed, 1)));
        CHECK(r.shard_labels[0] == single.assignment.labels);
        CHECK(r.wcss == single.assignment.wcss);
        CHECK(r.labels == prepared.plan.to_dataset_order<std::uint32_t>(single.assignment.labels));
    }
}

TEST_CASE("run is deterministic and both transports agree") {
    DccConfig cfg;
    cfg.K = 3;
    cfg.S = 4;
    cfg.seed = 5;
    const auto a = run_dcc(planted(), cfg);
    const auto b = run_dcc(planted(), cfg);
    cfg.transport = Transport::socket;
    const auto c = run_dcc(planted(), cfg);
    for (const auto* other : {&b, &c}) {
        CHECK(other->labels == a.labels);
        CHECK(other->wcss == a.wcss);
        CHECK(other->centroids == a.centroids);
        CHECK(other->worker_centroids == a.worker_centroids);
        CHECK(other->rounds_used == a.rounds_used);
        CHECK(other->converged == a.converged);
    }
}

TEST_CASE("wcss additivity, round bound and flag soundness") {
    for (const std::size_t S : {1u, 3u, 8u}) {
        for (const std::size_t K : {1u, 2u, 3u, 5u}) {
            for (const std::size_t I : {1u, 2u, 100u}) {
                DccConfig cfg;
                cfg.K = K;
                cfg.S = S;
                cfg.seed = 40 + S + K;
                cfg.max_rounds = I;
                const auto prepared = prepare_run(planted(), S, cfg.L, cfg.seed);
                const auto r = cluster_prepared(prepared, cfg);
                CHECK(r.labels.size() == planted().size());
                CHECK(std::abs(r.wcss - flat_recompute(prepared, r)) <= 1e-9 * std::max(1.0, r.wcss));
                CHECK(r.rounds_used <= I);
                CHECK(r.rounds_used >= 1);
                if (r.converged) {
                    CHECK(r.consensus_calls + 1 == r.rounds_used);
                } else {
                    CHECK(r.rounds_used == I);
                    CHECK(r.consensus_calls + 1 == I);
                }
                for (const auto l : r.labels) CHECK(l < K);
            }
        }
    }
}

TEST_CASE("labels follow series through the shuffle") {
    const Dataset d = generate_synthetic(20, 128, 0.3, 4);
    DccConfig cfg;
    cfg.K = 3;
    cfg.S = 4;
    cfg.seed = 8;
    const auto prepared = prepare_run(d, cfg.S, cfg.L, cfg.seed);
    const auto r = cluster_prepared(prepared, cfg);
    const auto x = dataset_order_features(prepared);
    for (std::size_t s = 0; s < cfg.S; ++s) {
        const auto members = prepared.plan.members(s);
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto n = members[i];
            CHECK(r.labels[n] == r.shard_labels[s][i]);
            // the shard row really is series n
            CHECK(std::equal(x.row(n).begin(), x.row(n).end(), prepared.features.shards[s].row(i).begin()));
        }
    }
    // converged workers hold labels that are nearest to their own centroids
    if (r.converged) {
        for (std::size_t n = 0; n < d.size(); ++n) {
            const auto& c = r.worker_centroids[prepared.plan.shard_of[n]];
            const Matrix one(1, x.cols(), std::vector<double>(x.row(n).begin(), x.row(n).end()));
            CHECK(assign_nearest(one, c)[0] == r.labels[n]);
        }
    }
}

TEST_CASE("K=1 gives the grand SSE") {
    DccConfig cfg;
    cfg.K = 1;
    cfg.S = 4;
    cfg.seed = 3;
    const auto prepared = prepare_run(planted(), cfg.S, cfg.L, cfg.seed);
    const auto r = cluster_prepared(prepared, cfg);
    // each worker's single centroid is its shard mean, so the total is the sum of shard SSEs
    double expect = 0.0;
    for (const auto& shard : prepared.features.shards) expect += oracle::grand_sse(shard);
    CHECK(r.wcss == doctest::Approx(expect).epsilon(1e-9));
    for (const auto l : r.labels) CHECK(l == 0);

    cfg.S = 1;
    const auto one = cluster_prepared(prepare_run(planted(), 1, cfg.L, cfg.seed), cfg);
    CHECK(one.wcss == doctest::Approx(oracle::grand_sse(dataset_order_features(prepared))).epsilon(1e-9));
}

TEST_CASE("planted archetypes are recovered") {
    DccConfig cfg;
    cfg.K = 3;
    cfg.S = 4;
    cfg.seed = 7;
    const auto r = run_dcc(planted(), cfg);
    std::vector<std::uint32_t> truth;
    for (const auto& s : planted().series()) {
        const auto& t = s.attributes.at("truth");
        truth.push_back(t == "in_home" ? 0 : t == "night_out" ? 1 : 2);
    }
    CHECK(oracle::best_agreement(r.labels, truth, 3) >= 0.95);
}

TEST_CASE("elbow reuses features") {
    DccConfig cfg;
    cfg.S = 2;
    cfg.seed = 4;
    const std::vector<std::size_t> Ks{1, 2, 3, 4};
    const auto pts = elbow_sweep(planted(), Ks, cfg);
    REQUIRE(pts.size() == 4);
    for (const auto& p : pts) CHECK(p.feature_seconds == pts[0].feature_seconds);
    CHECK(pts[0].wcss > pts[1].wcss);
    CHECK_THROWS_AS(elbow_sweep(planted(), std::vector<std::size_t>{}, cfg), std::invalid_argument);
}

TEST_CASE("shard-size weighting is optional and still deterministic") {
    DccConfig cfg;
    cfg.K = 3;
    cfg.S = 3;
    cfg.seed = 12;
    cfg.weight_by_shard_size = true;
    const auto a = run_dcc(planted(), cfg);
    const auto b = run_dcc(planted(), cfg);
    CHECK(a.labels == b.labels);
}
