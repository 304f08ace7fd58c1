#include "sequency/series.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "sequency/csv.hpp"
#include "sequency/errors.hpp"
#include "sequency/rng.hpp"

namespace sequency {

namespace {

std::string at_row(std::size_t row) { return " at row " + std::to_string(row); }

}  // namespace

Dataset::Dataset(std::vector<CategoricalSeries> series, std::size_t levels)
    : series_(std::move(series)), levels_(levels) {
    if (levels_ < 2) {
        throw DataError("level count J must be at least 2");
    }
    if (!series_.empty()) {
        length_ = series_.front().values.size();
    }
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < series_.size(); ++i) {
        const auto& s = series_[i];
        if (s.values.size() != length_) {
            throw DataError("inconsistent series length" + at_row(i + 1));
        }
        if (length_ == 0) {
            throw DataError("empty series" + at_row(i + 1));
        }
        for (const auto v : s.values) {
            if (v >= levels_) {
                throw DataError("level out of range" + at_row(i + 1));
            }
        }
        if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
            throw DataError("negative weight" + at_row(i + 1));
        }
        if (!ids.insert(s.id).second) {
            throw DataError("duplicate id '" + s.id + "'" + at_row(i + 1));
        }
    }
}

std::vector<std::string> Dataset::attribute_names() const {
    std::set<std::string> names;
    for (const auto& s : series_) {
        for (const auto& [k, v] : s.attributes) {
            names.insert(k);
        }
    }
    return {names.begin(), names.end()};
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".bin" ? DatasetFormat::binary : DatasetFormat::csv;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path, format == DatasetFormat::binary ? std::ios::binary : std::ios::in);
    if (!in) {
        throw DataError("cannot open dataset '" + path.string() + "'");
    }
    return format == DatasetFormat::binary ? read_binary(in) : read_csv(in);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DatasetFormat format) {
    std::ofstream out(path, format == DatasetFormat::binary ? std::ios::binary : std::ios::out);
    if (!out) {
        throw DataError("cannot create '" + path.string() + "'");
    }
    if (format == DatasetFormat::binary) {
        write_binary(dataset, out);
    } else {
        write_csv(dataset, out);
    }
    out.flush();
    if (!out) {
        throw DataError("write failed for '" + path.string() + "'");
    }
}

// ---------------------------------------------------------------------------
// CSV

Dataset read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t declared_levels = 0;

    // Leading comment lines; "# levels=J" declares the level count.
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const auto pos = line.find("levels=");
            if (pos != std::string::npos) {
                const char* first = line.data() + pos + 7;
                const char* last = line.data() + line.size();
                auto [ptr, ec] = std::from_chars(first, last, declared_levels);
                if (ec != std::errc{} || declared_levels < 2) {
                    throw DataError("bad levels declaration at line " + std::to_string(line_no));
                }
            }
            continue;
        }
        header = csv::split(line);
        break;
    }
    if (header.empty() || header.front() != "id") {
        throw DataError("missing header row starting with 'id'");
    }

    std::size_t weight_col = 0;  // 0 = absent
    std::vector<std::pair<std::size_t, std::string>> attr_cols;
    std::size_t first_level_col = 1;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto& name = header[c];
        if (name == "w" && weight_col == 0 && attr_cols.empty()) {
            weight_col = c;
        } else if (name.starts_with("attr:")) {
            attr_cols.emplace_back(c, name.substr(5));
        } else {
            break;
        }
        first_level_col = c + 1;
    }
    if (first_level_col >= header.size()) {
        throw DataError("header declares no level columns");
    }
    const std::size_t T = header.size() - first_level_col;

    std::vector<CategoricalSeries> rows;
    std::size_t max_level = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        ++row;
        const auto fields = csv::split(line);
        if (fields.size() != header.size()) {
            throw DataError("inconsistent series length" + at_row(row) + " (line " + std::to_string(line_no) +
                            ": expected " + std::to_string(T) + " levels, got " +
                            std::to_string(fields.size() < first_level_col ? 0 : fields.size() - first_level_col) +
                            ")");
        }
        CategoricalSeries s;
        s.id = fields[0];
        if (s.id.empty()) {
            throw DataError("malformed row " + std::to_string(row) + ": empty id");
        }
        if (weight_col != 0 && !fields[weight_col].empty()) {
            const auto& f = fields[weight_col];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), s.weight);
            if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(s.weight)) {
                throw DataError("malformed row " + std::to_string(row) + ": bad weight '" + f + "'");
            }
            if (s.weight < 0.0) {
                throw DataError("negative weight" + at_row(row));
            }
        }
        for (const auto& [col, name] : attr_cols) {
            if (!fields[col].empty()) {
                s.attributes.emplace(name, fields[col]);
            }
        }
        s.values.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            const auto& f = fields[first_level_col + t];
            unsigned v = 0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty()) {
                throw DataError("malformed row " + std::to_string(row) + ": bad level '" + f + "'");
            }
            if (declared_levels != 0 ? v >= declared_levels : v > 255) {
                throw DataError("level out of range" + at_row(row));
            }
            max_level = std::max<std::size_t>(max_level, v);
            s.values[t] = static_cast<std::uint8_t>(v);
        }
        rows.push_back(std::move(s));
    }

    const std::size_t J = declared_levels != 0 ? declared_levels : std::max<std::size_t>(2, max_level + 1);
    return Dataset(std::move(rows), J);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    const auto attrs = dataset.attribute_names();
    out << "# levels=" << dataset.levels() << '\n';
    out << "id,w";
    for (const auto& a : attrs) {
        out << ',' << csv::quote("attr:" + a);
    }
    for (std::size_t t = 1; t <= dataset.length(); ++t) {
        out << ",x" << t;
    }
    out << '\n';
    for (const auto& s : dataset.series()) {
        out << csv::quote(s.id) << ',' << csv::format_double(s.weight);
        for (const auto& a : attrs) {
            out << ',';
            if (auto it = s.attributes.find(a); it != s.attributes.end()) {
                out << csv::quote(it->second);
            }
        }
        for (const auto v : s.values) {
            out << ',' << static_cast<unsigned>(v);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Binary: little-endian, see docs/formats.md.

namespace {

constexpr std::array<char, 4> kMagic{'S', 'Q', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kAbsent = 0xFFFFFFFFu;

template <typename T>
void put(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    auto u = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>(u & 0xFF));
        if constexpr (sizeof(T) > 1) {
            u >>= 8;
        }
    }
}

template <typename T>
T get(std::istream& in) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    std::array<unsigned char, sizeof(T)> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), sizeof(T))) {
        throw DataError("truncated binary dataset");
    }
    U u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        if constexpr (sizeof(T) > 1) {
            u <<= 8;
        }
        u |= buf[i];
    }
    return std::bit_cast<T>(u);
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, std::uint32_t len) {
    std::string s(len, '\0');
    if (len != 0 && !in.read(s.data(), len)) {
        throw DataError("truncated binary dataset");
    }
    return s;
}

}  // namespace

void write_binary(const Dataset& dataset, std::ostream& out) {
    const auto attrs = dataset.attribute_names();
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, dataset.size());
    put<std::uint64_t>(out, dataset.length());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.levels()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(attrs.size()));
    for (const auto& a : attrs) {
        put_string(out, a);
    }
    for (const auto& s : dataset.series()) {
        put_string(out, s.id);
        put<double>(out, s.weight);
        for (const auto& a : attrs) {
            if (auto it = s.attributes.find(a); it != s.attributes.end()) {
                put_string(out, it->second);
            } else {
                put<std::uint32_t>(out, kAbsent);
            }
        }
        out.write(reinterpret_cast<const char*>(s.values.data()), static_cast<std::streamsize>(s.values.size()));
    }
}

Dataset read_binary(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw DataError("not a binary dataset (bad magic)");
    }
    if (const auto v = get<std::uint32_t>(in); v != kVersion) {
        throw DataError("unsupported binary dataset version " + std::to_string(v));
    }
    const auto N = get<std::uint64_t>(in);
    const auto T = get<std::uint64_t>(in);
    const auto J = get<std::uint32_t>(in);
    const auto A = get<std::uint32_t>(in);
    std::vector<std::string> attrs(A);
    for (auto& a : attrs) {
        a = get_string(in, get<std::uint32_t>(in));
    }
    std::vector<CategoricalSeries> rows;
    rows.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(N, 1u << 20)));
    for (std::uint64_t n = 0; n < N; ++n) {
        CategoricalSeries s;
        s.id = get_string(in, get<std::uint32_t>(in));
        s.weight = get<double>(in);
        for (const auto& a : attrs) {
            const auto len = get<std::uint32_t>(in);
            if (len != kAbsent) {
                s.attributes.emplace(a, get_string(in, len));
            }
        }
        s.values.resize(static_cast<std::size_t>(T));
        if (T != 0 && !in.read(reinterpret_cast<char*>(s.values.data()), static_cast<std::streamsize>(T))) {
            throw DataError("truncated binary dataset" + at_row(n + 1));
        }
        rows.push_back(std::move(s));
    }
    return Dataset(std::move(rows), J);
}

// ---------------------------------------------------------------------------
// Synthetic archetypes

const char* archetype_name(Archetype a) {
    switch (a) {
        case Archetype::in_home: return "in_home";
        case Archetype::night_out: return "night_out";
        case Archetype::home_and_work: return "home_and_work";
    }
    return "unknown";
}

namespace {

std::size_t trip_length(std::size_t T) { return std::max<std::size_t>(1, T / 48); }

}  // namespace

DaySchedule canonical_schedule(Archetype a, std::size_t T) {
    const std::size_t trip = trip_length(T);
    DaySchedule s{};
    switch (a) {
        case Archetype::in_home:
            s.leave = T / 2;
            s.depart = 5 * T / 8;
            break;
        case Archetype::night_out:
            s.leave = T / 3;
            s.depart = T;
            break;
        case Archetype::home_and_work:
            s.leave = T / 4;
            s.depart = 3 * T / 4;
            break;
    }
    s.arrive = std::min(s.leave + trip, T);
    s.depart = std::max(s.depart, s.arrive);
    s.home = std::min(s.depart == T ? T : s.depart + trip, T);
    return s;
}

std::vector<std::uint8_t> render_schedule(const DaySchedule& s, std::size_t T) {
    std::vector<std::uint8_t> v(T, 0);
    for (std::size_t t = 0; t < T; ++t) {
        if (t < s.leave || t >= s.home) {
            v[t] = 0;
        } else if (t < s.arrive || t >= s.depart) {
            v[t] = 1;
        } else {
            v[t] = 2;
        }
    }
    return v;
}

SyntheticData generate_synthetic_detailed(std::size_t n_per_archetype, std::size_t T, double noise,
                                          std::uint64_t seed) {
    if (T < 2) {
        throw std::invalid_argument("generate_synthetic: T must be at least 2");
    }
    if (!(noise >= 0.0 && noise < 0.5)) {
        throw std::invalid_argument("generate_synthetic: noise must be in [0, 0.5)");
    }
    Rng rng(seed);
    const auto jitter = static_cast<std::int64_t>(std::floor(noise * static_cast<double>(T) / 4.0));
    const std::size_t trip = trip_length(T);
    auto shift = [&](std::size_t minute) {
        if (jitter == 0) {
            return minute;
        }
        const auto d = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * jitter + 1))) - jitter;
        return static_cast<std::size_t>(std::clamp<std::int64_t>(static_cast<std::int64_t>(minute) + d, 0,
                                                                 static_cast<std::int64_t>(T)));
    };

    SyntheticData out;
    std::vector<CategoricalSeries> rows;
    rows.reserve(kArchetypeCount * n_per_archetype);
    out.clean.reserve(kArchetypeCount * n_per_archetype);
    for (std::size_t a = 0; a < kArchetypeCount; ++a) {
        const auto arch = static_cast<Archetype>(a);
        const DaySchedule base = canonical_schedule(arch, T);
        for (std::size_t i = 0; i < n_per_archetype; ++i) {
            DaySchedule s = base;
            s.leave = shift(base.leave);
            s.arrive = std::min(s.leave + trip, T);
            if (base.depart < T) {
                s.depart = std::max(shift(base.depart), s.arrive);
                s.home = std::min(s.depart + trip, T);
            }
            auto clean = render_schedule(s, T);
            auto values = clean;
            if (noise > 0.0) {
                for (auto& v : values) {
                    if (rng.uniform01() < noise) {
                        v = static_cast<std::uint8_t>((v + 1 + rng.below(kSyntheticLevels - 1)) % kSyntheticLevels);
                    }
                }
            }
            CategoricalSeries series;
            series.id = std::string(archetype_name(arch)) + "-" + std::to_string(i + 1);
            series.values = std::move(values);
            series.attributes.emplace("truth", archetype_name(arch));
            rows.push_back(std::move(series));
            out.clean.push_back(std::move(clean));
        }
    }
    out.dataset = Dataset(std::move(rows), kSyntheticLevels);
    return out;
}

Dataset generate_synthetic(std::size_t n_per_archetype, std::size_t T, double noise, std::uint64_t seed) {
    return generate_synthetic_detailed(n_per_archetype, T, noise, seed).dataset;
}

// ---------------------------------------------------------------------------
// Sharding

std::size_t ShardPlan::offset(std::size_t shard) const {
    return std::accumulate(shard_sizes.begin(), shard_sizes.begin() + static_cast<std::ptrdiff_t>(shard),
                           std::size_t{0});
}

std::span<const std::size_t> ShardPlan::members(std::size_t shard) const {
    return std::span<const std::size_t>(order).subspan(offset(shard), shard_sizes[shard]);
}

ShardPlan make_shard_plan(std::size_t N, std::size_t S, std::uint64_t seed) {
    if (S < 1 || S > N) {
        throw std::invalid_argument("make_shard_plan: need 1 <= S <= N (S=" + std::to_string(S) +
                                    ", N=" + std::to_string(N) + ")");
    }
    ShardPlan plan;
    plan.shard_count = S;
    plan.order.resize(N);
    std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});

    // Sampling without replacement: position k receives a uniform draw from the
    // indices not yet taken (forward Fisher-Yates).
    Rng rng(seed);
    for (std::size_t k = 0; k + 1 < N; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(N - k));
        std::swap(plan.order[k], plan.order[j]);
    }

    const std::size_t base = N / S;
    plan.shard_sizes.assign(S, base);
    plan.shard_sizes.back() = N - (S - 1) * base;

    plan.shard_of.resize(N);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t k = 0; k < plan.shard_sizes[s]; ++k) {
            plan.shard_of[plan.order[pos++]] = s;
        }
    }
    return plan;
}

}  // namespace sequency
