#include "sequency/summary.hpp"

#include <map>
#include <set>
#include <utility>

#include "sequency/errors.hpp"

namespace sequency {

namespace {

void check_labels(const Dataset& dataset, std::span<const std::uint32_t> labels, std::size_t K) {
    if (labels.size() != dataset.size()) {
        throw DataError("label/dataset mismatch: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(dataset.size()) + " series");
    }
    for (const auto l : labels) {
        if (l >= K) {
            throw DataError("label " + std::to_string(l + 1) + " exceeds K=" + std::to_string(K));
        }
    }
}

bool has_attribute(const Dataset& dataset, const std::string& name) {
    for (const auto& s : dataset.series()) {
        if (s.attributes.contains(name)) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<ProportionTable> cluster_proportions(const Dataset& dataset, std::span<const std::uint32_t> labels,
                                                 std::size_t K) {
    check_labels(dataset, labels, K);
    const std::size_t T = dataset.length();
    const std::size_t J = dataset.levels();

    std::vector<Matrix> weighted(K, Matrix(T, J));
    std::vector<Matrix> counts(K, Matrix(T, J));
    std::vector<double> mass(K, 0.0);
    std::vector<std::size_t> members(K, 0);
    for (std::size_t n = 0; n < dataset.size(); ++n) {
        const auto k = labels[n];
        const auto& s = dataset[n];
        for (std::size_t t = 0; t < T; ++t) {
            weighted[k](t, s.values[t]) += s.weight;
            counts[k](t, s.values[t]) += 1.0;
        }
        mass[k] += s.weight;
        ++members[k];
    }

    std::vector<ProportionTable> out;
    for (std::size_t k = 0; k < K; ++k) {
        if (members[k] == 0) {
            continue;
        }
        ProportionTable p;
        p.cluster = static_cast<std::uint32_t>(k);
        p.members = members[k];
        p.total_weight = mass[k];
        p.weighted = mass[k] > 0.0;
        const Matrix& src = p.weighted ? weighted[k] : counts[k];
        const double denom = p.weighted ? mass[k] : static_cast<double>(members[k]);
        p.proportions = Matrix(T, J);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < J; ++j) {
                p.proportions(t, j) = src(t, j) / denom;
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

CompositionTable composition(const Dataset& dataset, std::span<const std::uint32_t> labels, std::size_t K,
                             const std::string& attribute, const std::optional<std::string>& group_by) {
    check_labels(dataset, labels, K);
    if (!has_attribute(dataset, attribute)) {
        throw DataError("unknown attribute '" + attribute + "'");
    }
    if (group_by && !has_attribute(dataset, *group_by)) {
        throw DataError("unknown attribute '" + *group_by + "'");
    }

    auto value_of = [](const CategoricalSeries& s, const std::string& name) {
        auto it = s.attributes.find(name);
        return it == s.attributes.end() ? std::string("(missing)") : it->second;
    };

    using Key = std::pair<std::string, std::string>;  // (group, value)
    std::map<Key, std::vector<double>> weight;
    std::map<Key, std::vector<double>> count;
    for (std::size_t n = 0; n < dataset.size(); ++n) {
        const auto& s = dataset[n];
        const Key key{group_by ? value_of(s, *group_by) : std::string("all"), value_of(s, attribute)};
        auto& w = weight.try_emplace(key, K, 0.0).first->second;
        auto& c = count.try_emplace(key, K, 0.0).first->second;
        w[labels[n]] += s.weight;
        c[labels[n]] += 1.0;
    }

    // Per group: use weights unless the whole group carries zero weight.
    std::map<std::string, bool> group_weighted;
    for (const auto& [key, w] : weight) {
        double total = 0.0;
        for (const double x : w) {
            total += x;
        }
        group_weighted[key.first] = group_weighted[key.first] || total > 0.0;
    }

    CompositionTable table;
    table.attribute = attribute;
    table.group_by = group_by.value_or("");
    std::map<std::pair<std::string, std::uint32_t>, double> cluster_total;
    for (const auto& [key, w] : weight) {
        const auto& src = group_weighted[key.first] ? w : count.at(key);
        double value_total = 0.0;
        for (const double x : src) {
            value_total += x;
        }
        // A value whose members all weigh zero inside a weighted group: fall back to counts for its shares.
        const auto& share_src = value_total > 0.0 ? src : count.at(key);
        double share_total = 0.0;
        for (const double x : share_src) {
            share_total += x;
        }
        for (std::uint32_t k = 0; k < K; ++k) {
            CompositionRow row;
            row.group = key.first;
            row.value = key.second;
            row.cluster = k;
            row.weighted_count = w[k];
            row.share_within_value = share_src[k] / share_total;
            row.share_within_cluster = src[k];  // normalized below
            cluster_total[{key.first, k}] += src[k];
            table.rows.push_back(std::move(row));
        }
    }
    for (auto& row : table.rows) {
        const double total = cluster_total[{row.group, row.cluster}];
        row.share_within_cluster = total > 0.0 ? row.share_within_cluster / total : 0.0;
    }
    return table;
}

}  // namespace sequency
