// sequency: synthesize, featurize, cluster and summarize categorical day series.

#include <cstdio>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "sequency/cli.hpp"
#include "sequency/errors.hpp"

using namespace sequency;
using namespace sequency::cli;

namespace {

constexpr const char* kEnvPrefix = "SEQUENCY_";

std::string env_name(const std::string& flag) {
    std::string out = kEnvPrefix;
    for (const char c : flag) {
        out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& target, const std::string& help) {
    return app->add_option("--" + name, target, help)->envname(env_name(name))->capture_default_str();
}

void add_io(CLI::App* app, RunConfig& c, std::string& format) {
    flag(app, "input", c.input, "input dataset (.csv or .bin)");
    flag(app, "out", c.out, "output directory");
    flag(app, "format", format, "dataset format: csv or bin (default: by extension)")
        ->check(CLI::IsMember({"", "csv", "bin"}));
}

void add_run(CLI::App* app, RunConfig& c, std::string& transport) {
    flag(app, "S", c.S, "number of shards / workers");
    flag(app, "L", c.L, "landscape grid length");
    flag(app, "I", c.I, "maximum coordinator rounds");
    flag(app, "seed", c.seed, "run seed");
    flag(app, "transport", transport, "worker transport")->check(CLI::IsMember({"inproc", "socket"}));
    app->add_flag("--weight-by-shard-size", c.weight_by_shard_size,
                  "weight worker centroids by shard size in the consensus step")
        ->envname(env_name("weight-by-shard-size"));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustering of categorical daily sequences via Walsh transforms and persistence landscapes"};
    app.require_subcommand(1);
    app.footer(std::string("Every option may also be set through the environment as ") + kEnvPrefix +
               "<NAME>, e.g. SEQUENCY_SEED=7.\nExit codes: 0 success, 1 usage, 2 data error, 3 protocol fault.");

    RunConfig c;
    std::string format;
    std::string transport = "inproc";
    std::string ks = "2:5";
    std::string names;
    std::string group_by;

    auto* synth = app.add_subcommand("synth", "write a synthetic three-archetype dataset");
    flag(synth, "out", c.out, "output file")->required();
    flag(synth, "n", c.n_per_archetype, "series per archetype");
    flag(synth, "T", c.T, "minutes per series");
    flag(synth, "noise", c.noise, "per-minute flip probability")->check(CLI::Range(0.0, 1.0));
    flag(synth, "seed", c.seed, "generator seed");
    flag(synth, "format", format, "csv or bin (default: by extension)")->check(CLI::IsMember({"", "csv", "bin"}));

    auto* features = app.add_subcommand("features", "extract landscape features");
    add_io(features, c, format);
    flag(features, "S", c.S, "number of shards");
    flag(features, "L", c.L, "landscape grid length");
    flag(features, "seed", c.seed, "run seed");

    auto* cluster = app.add_subcommand("cluster", "run the divide-and-combine clustering");
    add_io(cluster, c, format);
    flag(cluster, "K", c.K, "number of clusters");
    add_run(cluster, c, transport);

    auto* elbow = app.add_subcommand("elbow", "WCSS across a range of K");
    add_io(elbow, c, format);
    flag(elbow, "Ks", ks, "K values: lo:hi or a comma list");
    add_run(elbow, c, transport);

    auto* summarize = app.add_subcommand("summarize", "per-cluster proportions and attribute composition");
    add_io(summarize, c, format);
    flag(summarize, "labels", c.labels, "labels.csv from cluster")->required();
    summarize->add_option("--attributes", c.attributes, "attributes to tabulate")
        ->delimiter(',')
        ->envname(env_name("attributes"));
    flag(summarize, "by", group_by, "attribute to group composition by (e.g. wave)");
    flag(summarize, "names", names, "cluster names, e.g. '1=C1-in home,2=C2-night out'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kSuccess : kUsage;
    }

    try {
        if (format == "csv") c.format = DatasetFormat::csv;
        if (format == "bin") c.format = DatasetFormat::binary;
        c.transport = transport == "socket" ? Transport::socket : Transport::in_process;
        if (!group_by.empty()) c.group_by = group_by;
        if (!names.empty()) c.cluster_names = parse_names(names);

        if (synth->parsed()) {
            cmd_synth(c);
        } else if (features->parsed()) {
            cmd_features(c);
        } else if (cluster->parsed()) {
            const auto r = cmd_cluster(c);
            std::printf("wcss=%.17g rounds=%zu converged=%d\n", r.wcss, r.rounds_used, r.converged ? 1 : 0);
        } else if (elbow->parsed()) {
            c.Ks = parse_k_list(ks);
            for (const auto& p : cmd_elbow(c)) {
                std::printf("K=%zu wcss=%.17g\n", p.K, p.wcss);
            }
        } else if (summarize->parsed()) {
            cmd_summarize(c);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol fault: " << e.what() << '\n';
        return kProtocolFault;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kSuccess;
}
