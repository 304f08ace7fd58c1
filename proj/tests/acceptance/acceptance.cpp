// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "../oracles.hpp"
#include "sequency/cli.hpp"
#include "sequency/dcc.hpp"
#include "sequency/features.hpp"
#include "sequency/parallel.hpp"
#include "sequency/rng.hpp"
#include "sequency/tda.hpp"
#include "sequency/wft.hpp"

using namespace sequency;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = since(t0);
    std::printf("[%s] %2d %-28s %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), s);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Matrix dataset_order(const PreparedRun& p) {
    Matrix out(p.plan.order.size(), p.features.landscape_length);
    std::size_t pos = 0;
    for (const auto& shard : p.features.shards) {
        for (std::size_t i = 0; i < shard.rows(); ++i, ++pos) {
            std::copy(shard.row(i).begin(), shard.row(i).end(), out.row(p.plan.order[pos]).begin());
        }
    }
    return out;
}

/// Largest |reported - flat| / max(1, reported) over every run checked.
double worst_additivity = 0.0;
std::size_t additivity_runs = 0;

void note_additivity(const PreparedRun& p, const ClusterResult& r) {
    const auto x = dataset_order(p);
    double flat = 0.0;
    for (std::size_t n = 0; n < x.rows(); ++n) {
        flat += squared_distance(x.row(n), r.worker_centroids[p.plan.shard_of[n]].row(r.labels[n]));
    }
    worst_additivity = std::max(worst_additivity, std::abs(flat - r.wcss) / std::max(1.0, r.wcss));
    ++additivity_runs;
}

std::vector<double> piecewise(Rng& rng) {
    const std::size_t m = 1 + rng.below(2048);
    std::vector<double> f(m);
    std::size_t t = 0;
    while (t < m) {
        const std::size_t len = 1 + rng.below(std::max<std::size_t>(1, m / 8));
        const double a = rng.uniform(-10, 10);
        const double b = rng.below(2) ? a : rng.uniform(-10, 10);  // constant or linear piece
        for (std::size_t i = 0; i < len && t < m; ++i, ++t) {
            f[t] = a + (b - a) * static_cast<double>(i) / static_cast<double>(len);
        }
    }
    return f;
}

}  // namespace

int main() {
    report(1, "shard arithmetic", [] {
        // median of 5 calls to the full plan: permutation, sizes and membership
        std::vector<double> times;
        ShardPlan p;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = Clock::now();
            p = make_shard_plan(250882, 100, 1);
            times.push_back(since(t0));
        }
        std::sort(times.begin(), times.end());
        const double s = times[2];
        bool ok = p.shard_sizes.size() == 100 && p.shard_sizes.back() == 2590;
        for (std::size_t i = 0; i + 1 < p.shard_sizes.size(); ++i) ok = ok && p.shard_sizes[i] == 2508;
        return Outcome{ok && s < 1e-3, fmt("sizes 99 x 2508 + %.0f, make_shard_plan %.3f ms (budget 1 ms)",
                                           static_cast<double>(p.shard_sizes.back()), s * 1e3)};
    });

    report(2, "WFT padding", [] {
        const auto v = next_pow2(1440);
        return Outcome{v == 2048, fmt("next_pow2(1440) = %.0f", static_cast<double>(v))};
    });

    report(3, "WFT correctness", [] {
        const auto t0 = Clock::now();
        Rng rng(3);
        double worst = 0.0;
        for (std::size_t T2 = 2; T2 <= 64; T2 *= 2) {
            for (int rep = 0; rep < 200; ++rep) {
                std::vector<double> x(T2);
                for (auto& v : x) v = rng.uniform(-10, 10);
                const auto fast = fast_wft(x).coeffs;
                const auto slow = oracle::matrix_wft(x);
                for (std::size_t j = 0; j < T2; ++j) worst = std::max(worst, std::abs(fast[j] - slow[j]));
            }
        }
        double parseval = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<double> x(2048);
            for (auto& v : x) v = rng.uniform(-10, 10);
            double a = 0.0;
            double b = 0.0;
            for (const double v : x) a += v * v;
            for (const double v : fast_wft(x).coeffs) b += v * v;
            parseval = std::max(parseval, std::abs(a - b) / a);
        }
        const double s = since(t0);
        return Outcome{worst <= 1e-12 && parseval <= 1e-9 && s < 5.0,
                       fmt("max |fast-naive| %.2e, Parseval rel %.2e", worst, parseval)};
    });

    report(4, "Walsh system validity", [] {
        for (std::size_t T2 = 1; T2 <= 256; T2 *= 2) {
            for (std::size_t j = 0; j < T2; ++j) {
                for (std::size_t k = j; k < T2; ++k) {
                    long dot = 0;
                    for (std::size_t t = 0; t < T2; ++t) {
                        const int a = walsh_value(t, j, T2);
                        if (a != 1 && a != -1) return Outcome{false, "value not +-1"};
                        dot += a * walsh_value(t, k, T2);
                    }
                    if (dot != (j == k ? static_cast<long>(T2) : 0)) {
                        return Outcome{false, fmt("T2=%.0f not orthogonal", static_cast<double>(T2))};
                    }
                }
            }
        }
        return Outcome{true, "W W^T = T2 I for T2 = 1..256"};
    });

    report(5, "TDA oracle identity", [] {
        const auto t0 = Clock::now();
        Rng rng(5);
        double worst = 0.0;
        for (int rep = 0; rep < 1000; ++rep) {
            const auto f = piecewise(rng);
            const auto r = series_range(f);
            double lo = r.min;
            double hi = r.max;
            if (rep % 2) {
                lo -= rng.uniform(0, 5);
                hi += rng.uniform(0, 5);
            }
            if (!(lo < hi)) hi = lo + 1.0;
            const auto a = landscape_closed_form(r, lo, hi, 100).samples;
            const auto b = landscape_from_diagram(sublevel_persistence(f), lo, hi, 100).samples;
            for (std::size_t l = 0; l < 100; ++l) worst = std::max(worst, std::abs(a[l] - b[l]));
        }
        auto d = sublevel_persistence(std::vector<double>{0, 1, 0.5, 1.5, 0.5, 2}).points;
        std::sort(d.begin(), d.end());
        const bool walk = d == std::vector<PersistencePair>{{0, 2}, {0.5, 1}, {0.5, 1.5}};
        const double s = since(t0);
        return Outcome{worst <= 1e-12 && walk && s < 10.0,
                       fmt("max diff %.2e over 1000 functions, walkthrough ", worst) + (walk ? "ok" : "WRONG")};
    });

    const Dataset planted = generate_synthetic(1000, 1440, 0.05, 7);

    report(6, "protocol degeneracy (S=1)", [&] {
        const Dataset d = generate_synthetic(200, 1440, 0.05, 6);
        bool ok = true;
        for (const std::uint64_t seed : {1ull, 6ull, 42ull}) {
            DccConfig cfg;
            cfg.K = 3;
            cfg.S = 1;
            cfg.seed = seed;
            const auto p = prepare_run(d, 1, 100, seed);
            const auto r = cluster_prepared(p, cfg);
            note_additivity(p, r);
            const auto& x = p.features.shards[0];
            const auto single = lloyd(x, init_uniform(x, 3, worker_seed(seed, 1)));
            ok = ok && r.labels == p.plan.to_dataset_order<std::uint32_t>(single.assignment.labels) &&
                 r.wcss == single.assignment.wcss;
        }
        return Outcome{ok, "labels and WCSS identical to a single Lloyd run (3 seeds)"};
    });

    report(7, "planted-cluster recovery", [&] {
        const auto t0 = Clock::now();
        DccConfig cfg;
        cfg.K = 3;
        cfg.S = 4;
        cfg.L = 100;
        cfg.seed = 7;
        const auto p = prepare_run(planted, cfg.S, cfg.L, cfg.seed);
        const auto r = cluster_prepared(p, cfg);
        note_additivity(p, r);
        std::vector<std::uint32_t> truth;
        for (const auto& s : planted.series()) {
            const auto& t = s.attributes.at("truth");
            truth.push_back(t == "in_home" ? 0 : t == "night_out" ? 1 : 2);
        }
        const double agree = oracle::best_agreement(r.labels, truth, 3);

        std::vector<double> w;
        for (const std::size_t K : {2u, 3u, 4u, 5u}) {
            DccConfig c = cfg;
            c.K = K;
            const auto rk = cluster_prepared(p, c);
            note_additivity(p, rk);
            w.push_back(rk.wcss);
        }
        const double d23 = (w[0] - w[1]) / w[0];
        const double d34 = (w[1] - w[2]) / w[1];
        const double d45 = (w[2] - w[3]) / w[2];
        const bool elbow = d23 >= 2 * d34 && d23 > d45;
        const double s = since(t0);
        return Outcome{agree >= 0.95 && elbow && s < 60.0,
                       fmt("agreement %.4f, relative drops 2>3 %.4f 3>4 %.4f", agree, d23, d34)};
    });

    report(8, "determinism", [&] {
        const auto dir = fs::temp_directory_path() / ("sequency_accept_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        const auto input = dir / "data.csv";
        save_dataset(generate_synthetic(200, 1440, 0.05, 8), input, DatasetFormat::csv);
        cli::RunConfig c;
        c.input = input;
        c.K = 3;
        c.S = 4;
        c.seed = 8;
        c.out = dir / "a";
        cli::cmd_cluster(c);
        c.out = dir / "b";
        cli::cmd_cluster(c);
        auto slurp = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        const bool ok = slurp(dir / "a" / "labels.csv") == slurp(dir / "b" / "labels.csv") &&
                        slurp(dir / "a" / "labels.bin") == slurp(dir / "b" / "labels.bin") &&
                        !slurp(dir / "a" / "labels.csv").empty();
        fs::remove_all(dir);
        return Outcome{ok, "labels.csv and labels.bin byte-identical"};
    });

    report(9, "performance smoke", [&] {
        // one worker, serial kernels
        const Dataset d = generate_synthetic(836, 1440, 0.05, 9);
        std::vector<std::size_t> idx(2508);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        const bool was = parallel_enabled();
        set_parallel_enabled(false);
        const auto t0 = Clock::now();
        const auto ranges = local_ranges(d, idx);
        std::vector<std::vector<SeriesRange>> all{ranges};
        const auto m = build_features(ranges, reduce_global_range(all), 100);
        const double s = since(t0);
        set_parallel_enabled(was);
        return Outcome{m.rows() == 2508 && s < 10.0, fmt("2508 series, T2=2048, single thread: %.3f s", s)};
    });

    report(10, "WCSS additivity", [] {
        return Outcome{additivity_runs > 0 && worst_additivity <= 1e-9,
                       fmt("worst rel diff %.2e over %.0f runs", worst_additivity, static_cast<double>(additivity_runs))};
    });

    std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
