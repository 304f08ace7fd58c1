#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "sequency/errors.hpp"
#include "sequency/rng.hpp"
#include "sequency/series.hpp"

using namespace sequency;

namespace {

Dataset tiny() {
    std::vector<CategoricalSeries> s{
        {"p1", {0, 0, 1, 2}, 1.5, {{"wave", "2017"}, {"gen", "X"}}},
        {"p2,\"q\"", {2, 1, 0, 0}, 0.0, {{"wave", "2009"}}},
        {"p3", {1, 1, 1, 1}, 3.25, {}},
    };
    return Dataset(std::move(s), 3);
}

Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

}  // namespace

TEST_CASE("csv well-formed row") {
    const auto d = parse("# levels=3\nid,x1,x2,x3\np1,0,1,2\np2,2,2,0\n");
    CHECK(d.size() == 2);
    CHECK(d.length() == 3);
    CHECK(d.levels() == 3);
    CHECK(d[0].id == "p1");
    CHECK(d[1].values == std::vector<std::uint8_t>{2, 2, 0});
    CHECK(d[0].weight == 1.0);
}

TEST_CASE("csv level count inferred without declaration") {
    CHECK(parse("id,x1,x2\na,0,1\n").levels() == 2);
    CHECK(parse("id,x1,x2\na,0,4\n").levels() == 5);
    CHECK(parse("id,x1\na,0\n").levels() == 2);
}

TEST_CASE("csv errors name the row") {
    auto message = [](const std::string& text) {
        try {
            parse(text);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("# levels=3\nid,x1,x2\na,0,1\nb,0,3\n").find("level out of range at row 2") != std::string::npos);
    CHECK(message("id,x1,x2\na,0,1\nb,0,1,1\n").find("inconsistent series length") != std::string::npos);
    CHECK(message("id,w,x1\na,-1,0\n").find("negative weight at row 1") != std::string::npos);
    CHECK(message("id,x1\na,z\n").find("malformed row 1") != std::string::npos);
    CHECK(message("id,x1\na,0\na,1\n").find("duplicate id") != std::string::npos);
}

TEST_CASE("round trip preserves values, weights, attributes and order") {
    const auto d = tiny();
    std::stringstream a;
    write_csv(d, a);
    CHECK(read_csv(a) == d);

    std::stringstream b(std::ios::in | std::ios::out | std::ios::binary);
    write_binary(d, b);
    CHECK(read_binary(b) == d);

    const auto synth = generate_synthetic(20, 96, 0.1, 3);
    std::stringstream c;
    write_csv(synth, c);
    CHECK(read_csv(c) == synth);
}

TEST_CASE("truncated binary is a data error") {
    std::stringstream b(std::ios::in | std::ios::out | std::ios::binary);
    write_binary(tiny(), b);
    std::string bytes = b.str();
    bytes.resize(bytes.size() - 3);
    std::stringstream cut(bytes);
    CHECK_THROWS_AS(read_binary(cut), DataError);
    std::stringstream junk("nope");
    CHECK_THROWS_AS(read_binary(junk), DataError);
}

TEST_CASE("synthetic home_and_work template at T=8") {
    const auto d = generate_synthetic(1, 8, 0.0, 42);
    REQUIRE(d.size() == 3);
    const CategoricalSeries* hw = nullptr;
    for (const auto& s : d.series()) {
        if (s.attributes.at("truth") == "home_and_work") hw = &s;
    }
    REQUIRE(hw != nullptr);
    CHECK(hw->values == std::vector<std::uint8_t>{0, 0, 1, 2, 2, 2, 1, 0});
}

TEST_CASE("zero noise returns templates and truth is the nearest template") {
    const auto data = generate_synthetic_detailed(30, 1440, 0.0, 9);
    std::vector<std::vector<std::uint8_t>> templates;
    for (const auto a : {Archetype::in_home, Archetype::night_out, Archetype::home_and_work}) {
        templates.push_back(render_schedule(canonical_schedule(a, 1440), 1440));
    }
    for (std::size_t n = 0; n < data.dataset.size(); ++n) {
        const auto& s = data.dataset[n];
        CHECK(s.values == data.clean[n]);
        std::size_t best = 0;
        std::size_t best_d = SIZE_MAX;
        for (std::size_t a = 0; a < templates.size(); ++a) {
            std::size_t dist = 0;
            for (std::size_t t = 0; t < 1440; ++t) dist += s.values[t] != templates[a][t];
            if (dist < best_d) {
                best_d = dist;
                best = a;
            }
        }
        CHECK(s.attributes.at("truth") == archetype_name(static_cast<Archetype>(best)));
    }
}

TEST_CASE("night_out stays out through the final minute, in_home starts and ends home") {
    const auto d = generate_synthetic(50, 1440, 0.0, 5);
    for (const auto& s : d.series()) {
        const auto& truth = s.attributes.at("truth");
        if (truth == "night_out") CHECK(s.values.back() == 2);
        if (truth == "in_home") {
            CHECK(s.values.front() == 0);
            CHECK(s.values.back() == 0);
        }
    }
}

TEST_CASE("synthetic generation is deterministic") {
    CHECK(generate_synthetic(10, 200, 0.05, 1) == generate_synthetic(10, 200, 0.05, 1));
    CHECK_FALSE(generate_synthetic(10, 200, 0.05, 1) == generate_synthetic(10, 200, 0.05, 2));
}

TEST_CASE("per-minute noise concentration") {
    // Each minute is flipped independently with probability `noise`, so the
    // per-minute flip fraction over 1000 series is Binomial(1000, noise)/1000.
    // The bound noise + 3 sqrt(noise/1000) is a per-minute 3-sigma statement:
    // it holds at about 99.9% of minutes, not at every one of the 4320.
    const double noise = 0.05;
    const auto data = generate_synthetic_detailed(1000, 1440, noise, 7);
    const double bound = noise + 3.0 * std::sqrt(noise / 1000.0);
    std::size_t within = 0;
    std::size_t total_flips = 0;
    double worst = 0.0;
    for (std::size_t a = 0; a < kArchetypeCount; ++a) {
        for (std::size_t m = 0; m < 1440; ++m) {
            std::size_t flips = 0;
            for (std::size_t i = 0; i < 1000; ++i) {
                const auto n = a * 1000 + i;
                flips += data.dataset[n].values[m] != data.clean[n][m];
            }
            total_flips += flips;
            const double p = static_cast<double>(flips) / 1000.0;
            within += p <= bound;
            worst = std::max(worst, std::abs(p - noise));
        }
    }
    CHECK(static_cast<double>(within) / 4320.0 >= 0.995);
    // 5 sigma on every minute
    CHECK(worst <= 5.0 * std::sqrt(noise * (1 - noise) / 1000.0));
    const double pooled = static_cast<double>(total_flips) / (4320.0 * 1000.0);
    CHECK(std::abs(pooled - noise) <= 3.0 * std::sqrt(noise * (1 - noise) / 4.32e6));
}

TEST_CASE("synthetic preconditions") {
    CHECK_THROWS_AS(generate_synthetic(1, 1, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(1, 8, 0.5, 0), std::invalid_argument);
}

TEST_CASE("shard plan arithmetic") {
    const auto big = make_shard_plan(250882, 100, 11);
    REQUIRE(big.shard_sizes.size() == 100);
    for (std::size_t s = 0; s < 99; ++s) CHECK(big.shard_sizes[s] == 2508);
    CHECK(big.shard_sizes[99] == 2590);

    CHECK(make_shard_plan(7, 3, 0).shard_sizes == std::vector<std::size_t>{2, 2, 3});

    const auto one = make_shard_plan(10, 1, 4);
    CHECK(one.shard_sizes == std::vector<std::size_t>{10});
    std::set<std::size_t> seen(one.order.begin(), one.order.end());
    CHECK(seen.size() == 10);
    CHECK(*seen.rbegin() == 9);

    CHECK_THROWS_AS(make_shard_plan(3, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_shard_plan(3, 0, 0), std::invalid_argument);
}

TEST_CASE("shard plan determinism, membership and realignment") {
    const auto a = make_shard_plan(1000, 7, 99);
    CHECK(a == make_shard_plan(1000, 7, 99));
    CHECK_FALSE(a.order == make_shard_plan(1000, 7, 100).order);

    std::size_t pos = 0;
    for (std::size_t s = 0; s < a.shard_count; ++s) {
        CHECK(a.offset(s) == pos);
        for (const auto idx : a.members(s)) {
            CHECK(a.shard_of[idx] == s);
            CHECK(a.order[pos++] == idx);
        }
    }
    // concatenated shard order carries dataset indices; realigning must give 0..N-1
    std::vector<std::size_t> tagged(a.order.begin(), a.order.end());
    const auto back = a.to_dataset_order<std::size_t>(tagged);
    for (std::size_t n = 0; n < back.size(); ++n) CHECK(back[n] == n);
}

TEST_CASE("rng helpers") {
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.below(7);
        CHECK(v < 7);
        const double u = r.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(derive_seed(1, "worker", 1) != derive_seed(1, "worker", 2));
    CHECK(derive_seed(1, "worker", 1) != derive_seed(1, "master", 1));
    CHECK(derive_seed(1, "worker", 1) == derive_seed(1, "worker", 1));
}
