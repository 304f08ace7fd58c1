#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sequency/cli.hpp"
#include "sequency/csv.hpp"
#include "sequency/errors.hpp"
#include "sequency/summary.hpp"

namespace sequency::cli {

namespace fs = std::filesystem;
using csv::format_double;

namespace {

/**
 * Output files of one command. Everything is written to hidden temporaries
 * and renamed into place by commit(); an uncommitted batch removes its
 * temporaries, so a failing command leaves no partial files behind.
 */
class OutputBatch {
public:
    explicit OutputBatch(fs::path dir) : dir_(std::move(dir)) {
        if (!dir_.empty()) {
            fs::create_directories(dir_);
        }
    }

    OutputBatch(const OutputBatch&) = delete;
    OutputBatch& operator=(const OutputBatch&) = delete;

    ~OutputBatch() {
        if (committed_) {
            return;
        }
        for (auto& f : files_) {
            f.stream->close();
            std::error_code ec;
            fs::remove(f.tmp, ec);
        }
    }

    std::ofstream& open(const std::string& name, bool binary = false) {
        File f;
        f.final = dir_ / name;
        f.tmp = dir_ / ("." + name + ".partial");
        f.stream = std::make_unique<std::ofstream>(f.tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!*f.stream) {
            throw DataError("cannot create '" + f.final.string() + "'");
        }
        files_.push_back(std::move(f));
        return *files_.back().stream;
    }

    void commit() {
        for (auto& f : files_) {
            f.stream->flush();
            if (!*f.stream) {
                throw DataError("write failed for '" + f.final.string() + "'");
            }
            f.stream->close();
        }
        for (auto& f : files_) {
            fs::rename(f.tmp, f.final);
        }
        committed_ = true;
    }

private:
    struct File {
        fs::path final;
        fs::path tmp;
        std::unique_ptr<std::ofstream> stream;
    };
    fs::path dir_;
    std::vector<File> files_;
    bool committed_ = false;
};

DatasetFormat resolve_format(const RunConfig& c, const fs::path& path) {
    return c.format.value_or(format_from_path(path));
}

Dataset load_input(const RunConfig& c) {
    if (c.input.empty()) {
        throw std::invalid_argument("--input is required");
    }
    return load_dataset(c.input, resolve_format(c, c.input));
}

void require_out(const RunConfig& c) {
    if (c.out.empty()) {
        throw std::invalid_argument("--out is required");
    }
}

DccConfig dcc_config(const RunConfig& c) {
    DccConfig d;
    d.K = c.K;
    d.S = c.S;
    d.L = c.L;
    d.seed = c.seed;
    d.max_rounds = c.I;
    d.transport = c.transport;
    d.weight_by_shard_size = c.weight_by_shard_size;
    return d;
}

void check_shards(const RunConfig& c, const Dataset& d) {
    if (d.size() == 0) {
        throw DataError("dataset is empty");
    }
    if (c.S > d.size()) {
        throw std::invalid_argument("S=" + std::to_string(c.S) + " exceeds the number of series N=" +
                                    std::to_string(d.size()));
    }
}

void write_row(std::ostream& out, std::span<const double> values) {
    for (const double v : values) {
        out << ',' << format_double(v);
    }
    out << '\n';
}

void write_grid_header(std::ostream& out, std::string_view lead, std::size_t L, std::string_view prefix) {
    out << lead;
    for (std::size_t l = 1; l <= L; ++l) {
        out << ',' << prefix << l;
    }
    out << '\n';
}

void write_order(std::ostream& out, const ShardPlan& plan) {
    out << "position,index,shard\n";
    for (std::size_t pos = 0; pos < plan.order.size(); ++pos) {
        const auto idx = plan.order[pos];
        out << pos + 1 << ',' << idx + 1 << ',' << plan.shard_of[idx] + 1 << '\n';
    }
}

void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.put(static_cast<char>(v & 0xFF));
        v >>= 8;
    }
}

std::string cluster_name(const RunConfig& c, std::uint32_t cluster0) {
    auto it = c.cluster_names.find(cluster0 + 1);
    return it == c.cluster_names.end() ? "C" + std::to_string(cluster0 + 1) : it->second;
}

std::string file_safe(std::string s) {
    for (auto& ch : s) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) {
            ch = '_';
        }
    }
    return s;
}

}  // namespace

void validate(const RunConfig& c) {
    if (c.K < 1) throw std::invalid_argument("K must be positive");
    if (c.S < 1) throw std::invalid_argument("S must be positive");
    if (c.I < 1) throw std::invalid_argument("I must be positive");
    if (c.L < 2) throw std::invalid_argument("L must be at least 2");
}

void cmd_synth(const RunConfig& c) {
    require_out(c);
    const Dataset d = generate_synthetic(c.n_per_archetype, c.T, c.noise, c.seed);
    OutputBatch batch(c.out.parent_path());
    const auto format = resolve_format(c, c.out);
    auto& out = batch.open(c.out.filename().string(), format == DatasetFormat::binary);
    if (format == DatasetFormat::binary) {
        write_binary(d, out);
    } else {
        write_csv(d, out);
    }
    batch.commit();
}

void cmd_features(const RunConfig& c) {
    validate(c);
    require_out(c);
    const Dataset d = load_input(c);
    check_shards(c, d);
    const PreparedRun run = prepare_run(d, c.S, c.L, c.seed);

    OutputBatch batch(c.out);
    auto& f = batch.open("features.csv");
    write_grid_header(f, "position,shard,index,id", c.L, "pl");
    std::size_t pos = 0;
    for (std::size_t s = 0; s < run.plan.shard_count; ++s) {
        const auto members = run.plan.members(s);
        for (std::size_t i = 0; i < members.size(); ++i, ++pos) {
            f << pos + 1 << ',' << s + 1 << ',' << members[i] + 1 << ',' << csv::quote(d[members[i]].id);
            write_row(f, run.features.shards[s].row(i));
        }
    }
    write_order(batch.open("order.csv"), run.plan);
    nlohmann::ordered_json meta{{"D_min", run.features.range.lo}, {"D_max", run.features.range.hi},
                                {"L", c.L},
                                {"S", c.S},
                                {"seed", c.seed},
                                {"N", d.size()},
                                {"T", d.length()},
                                {"T2", next_pow2(d.length())}};
    batch.open("range.json") << meta.dump(2) << '\n';
    batch.commit();
}

ClusterResult cmd_cluster(const RunConfig& c) {
    validate(c);
    require_out(c);
    const Dataset d = load_input(c);
    check_shards(c, d);
    const PreparedRun run = prepare_run(d, c.S, c.L, c.seed);
    ClusterResult r = cluster_prepared(run, dcc_config(c));

    OutputBatch batch(c.out);
    auto& labels = batch.open("labels.csv");
    labels << "id,label\n";
    for (std::size_t n = 0; n < d.size(); ++n) {
        labels << csv::quote(d[n].id) << ',' << r.labels[n] + 1 << '\n';
    }
    auto& bin = batch.open("labels.bin", true);
    bin.write("SQLB", 4);
    std::uint64_t n = d.size();
    for (int i = 0; i < 8; ++i) {
        bin.put(static_cast<char>(n & 0xFF));
        n >>= 8;
    }
    for (const auto l : r.labels) {
        put_u32(bin, l + 1);
    }

    auto& cent = batch.open("centroids.csv");
    write_grid_header(cent, "cluster", c.L, "c");
    for (std::size_t k = 0; k < r.centroids.rows(); ++k) {
        cent << k + 1;
        write_row(cent, r.centroids.row(k));
    }
    auto& wc = batch.open("worker_centroids.csv");
    write_grid_header(wc, "worker,cluster", c.L, "c");
    for (std::size_t s = 0; s < r.worker_centroids.size(); ++s) {
        for (std::size_t k = 0; k < r.worker_centroids[s].rows(); ++k) {
            wc << s + 1 << ',' << k + 1;
            write_row(wc, r.worker_centroids[s].row(k));
        }
    }
    write_order(batch.open("order.csv"), run.plan);

    std::vector<std::size_t> sizes(c.K, 0);
    for (const auto l : r.labels) {
        ++sizes[l];
    }
    nlohmann::ordered_json m{
        {"N", d.size()},
        {"T", d.length()},
        {"J", d.levels()},
        {"K", c.K},
        {"S", c.S},
        {"L", c.L},
        {"I", c.I},
        {"seed", c.seed},
        {"transport", c.transport == Transport::socket ? "socket" : "inproc"},
        {"wcss", r.wcss},
        {"shard_wcss", r.shard_wcss},
        {"shard_sizes", run.plan.shard_sizes},
        {"cluster_sizes", sizes},
        {"rounds_used", r.rounds_used},
        {"converged", r.converged},
        {"consensus_calls", r.consensus_calls},
        {"D_min", run.features.range.lo},
        {"D_max", run.features.range.hi},
        {"feature_seconds", r.feature_seconds},
        {"kmeans_seconds", r.kmeans_seconds},
    };
    batch.open("metrics.json") << m.dump(2) << '\n';
    batch.commit();
    return r;
}

std::vector<ElbowPoint> cmd_elbow(const RunConfig& c) {
    validate(c);
    require_out(c);
    if (c.Ks.empty()) {
        throw std::invalid_argument("--Ks must list at least one K");
    }
    for (const auto K : c.Ks) {
        if (K < 1) throw std::invalid_argument("every K must be positive");
    }
    const Dataset d = load_input(c);
    check_shards(c, d);
    const auto points = elbow_sweep(d, c.Ks, dcc_config(c));

    OutputBatch batch(c.out);
    auto& wide = batch.open("elbow.csv");
    wide << "K,wcss,fe_seconds,kmeans_seconds,rounds,converged\n";
    auto& lng = batch.open("elbow_long.csv");
    lng << "K,metric,value\n";
    for (const auto& p : points) {
        wide << p.K << ',' << format_double(p.wcss) << ',' << format_double(p.feature_seconds) << ','
             << format_double(p.kmeans_seconds) << ',' << p.rounds_used << ',' << (p.converged ? 1 : 0) << '\n';
        lng << p.K << ",wcss," << format_double(p.wcss) << '\n'
            << p.K << ",fe_seconds," << format_double(p.feature_seconds) << '\n'
            << p.K << ",kmeans_seconds," << format_double(p.kmeans_seconds) << '\n';
    }
    batch.commit();
    return points;
}

std::vector<std::uint32_t> read_labels(const fs::path& path, const Dataset& dataset) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open labels '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || csv::split(line) != std::vector<std::string>{"id", "label"}) {
        throw DataError("labels file must start with the header 'id,label'");
    }
    std::vector<std::uint32_t> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        ++row;
        const auto f = csv::split(line);
        unsigned v = 0;
        if (f.size() != 2 || std::from_chars(f[1].data(), f[1].data() + f[1].size(), v).ec != std::errc{} || v < 1) {
            throw DataError("malformed label row " + std::to_string(row));
        }
        if (row > dataset.size() || f[0] != dataset[row - 1].id) {
            throw DataError("label/dataset mismatch at row " + std::to_string(row));
        }
        labels.push_back(v - 1);
    }
    if (labels.size() != dataset.size()) {
        throw DataError("label/dataset mismatch: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(dataset.size()) + " series");
    }
    return labels;
}

void cmd_summarize(const RunConfig& c) {
    require_out(c);
    const Dataset d = load_input(c);
    const auto labels = read_labels(c.labels, d);
    std::size_t K = 0;
    for (const auto l : labels) {
        K = std::max<std::size_t>(K, l + 1);
    }
    for (const auto& [k, name] : c.cluster_names) {
        K = std::max<std::size_t>(K, k);
    }

    const auto tables = cluster_proportions(d, labels, K);
    std::vector<CompositionTable> comps;
    for (const auto& a : c.attributes) {
        comps.push_back(composition(d, labels, K, a, c.group_by));
    }

    OutputBatch batch(c.out);
    auto& idx = batch.open("clusters.csv");
    idx << "cluster,name,members,total_weight,weighted\n";
    for (const auto& t : tables) {
        idx << t.cluster + 1 << ',' << csv::quote(cluster_name(c, t.cluster)) << ',' << t.members << ','
            << format_double(t.total_weight) << ',' << (t.weighted ? 1 : 0) << '\n';
        auto& p = batch.open("proportions_c" + std::to_string(t.cluster + 1) + ".csv");
        p << "minute";
        for (std::size_t j = 0; j < d.levels(); ++j) {
            p << ",level_" << j;
        }
        p << '\n';
        for (std::size_t m = 0; m < t.proportions.rows(); ++m) {
            p << m + 1;
            write_row(p, t.proportions.row(m));
        }
    }
    for (const auto& comp : comps) {
        auto& out = batch.open("composition_" + file_safe(comp.attribute) + ".csv");
        out << "group,value,cluster,cluster_name,weighted_count,share_within_value,share_within_cluster\n";
        for (const auto& r : comp.rows) {
            out << csv::quote(r.group) << ',' << csv::quote(r.value) << ',' << r.cluster + 1 << ','
                << csv::quote(cluster_name(c, r.cluster)) << ',' << format_double(r.weighted_count) << ','
                << format_double(r.share_within_value) << ',' << format_double(r.share_within_cluster) << '\n';
        }
    }
    batch.commit();
}

std::map<std::uint32_t, std::string> parse_names(const std::string& text) {
    std::map<std::uint32_t, std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        const auto eq = item.find('=');
        unsigned k = 0;
        if (eq == std::string::npos || std::from_chars(item.data(), item.data() + eq, k).ec != std::errc{} || k < 1) {
            throw std::invalid_argument("bad cluster name entry '" + item + "' (expected <cluster>=<name>)");
        }
        out[k] = item.substr(eq + 1);
    }
    return out;
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
    auto parse = [&](std::string_view s) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1) {
            throw std::invalid_argument("bad K list '" + text + "'");
        }
        return v;
    };
    std::vector<std::size_t> out;
    if (const auto colon = text.find(':'); colon != std::string::npos) {
        const auto lo = parse(std::string_view(text).substr(0, colon));
        const auto hi = parse(std::string_view(text).substr(colon + 1));
        if (hi < lo) {
            throw std::invalid_argument("bad K range '" + text + "'");
        }
        for (auto k = lo; k <= hi; ++k) {
            out.push_back(k);
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse(item));
    }
    if (out.empty()) {
        throw std::invalid_argument("empty K list");
    }
    return out;
}

}  // namespace sequency::cli
