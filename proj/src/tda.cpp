#include "sequency/tda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sequency {

namespace {

void check_grid(double lo, double hi, std::size_t L) {
    if (L < 2) {
        throw std::invalid_argument("landscape: L must be at least 2");
    }
    if (!(lo < hi)) {
        throw std::invalid_argument("landscape: grid needs lo < hi");
    }
}

/// Union-find over sample indices; the root of each set is its oldest minimum.
class Components {
public:
    explicit Components(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void attach(std::size_t child_root, std::size_t parent_root) { parent_[child_root] = parent_root; }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

PersistenceDiagram sublevel_persistence(std::span<const double> f) {
    const std::size_t m = f.size();
    if (m == 0) {
        throw std::invalid_argument("sublevel_persistence: empty function");
    }
    for (const double v : f) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("sublevel_persistence: non-finite sample");
        }
    }

    std::vector<std::size_t> by_value(m);
    std::iota(by_value.begin(), by_value.end(), std::size_t{0});
    std::sort(by_value.begin(), by_value.end(), [&](std::size_t a, std::size_t b) {
        return f[a] < f[b] || (f[a] == f[b] && a < b);
    });

    // A root's own index is its birth vertex. Processing order is (value, index),
    // so the lexicographically smaller (f[root], root) is the elder.
    auto elder = [&](std::size_t a, std::size_t b) { return f[a] < f[b] || (f[a] == f[b] && a < b); };

    PersistenceDiagram diagram;
    Components uf(m);
    std::vector<char> present(m, 0);
    for (const std::size_t v : by_value) {
        present[v] = 1;
        const double level = f[v];
        for (const std::size_t u : {v - 1, v + 1}) {
            if (u >= m || !present[u]) {  // v - 1 wraps for v == 0
                continue;
            }
            const std::size_t ru = uf.find(u);
            const std::size_t rv = uf.find(v);
            if (ru == rv) {
                continue;
            }
            const std::size_t keep = elder(ru, rv) ? ru : rv;
            const std::size_t dies = keep == ru ? rv : ru;
            if (f[dies] < level) {
                diagram.points.push_back({f[dies], level});
            }
            uf.attach(dies, keep);
        }
    }
    const double global_max = *std::max_element(f.begin(), f.end());
    diagram.points.push_back({f[by_value.front()], global_max});
    return diagram;
}

Landscape landscape_from_diagram(const PersistenceDiagram& diagram, double lo, double hi, std::size_t L) {
    check_grid(lo, hi, L);
    Landscape out{std::vector<double>(L, 0.0), lo, hi};
    for (std::size_t l = 0; l < L; ++l) {
        const double g = grid_point(lo, hi, L, l);
        double best = 0.0;
        for (const auto& p : diagram.points) {
            best = std::max(best, std::min(g - p.birth, p.death - g));
        }
        out.samples[l] = best;
    }
    return out;
}

void closed_form_into(const SeriesRange& r, double lo, double hi, std::span<double> out) {
    const std::size_t L = out.size();
    for (std::size_t l = 0; l < L; ++l) {
        const double g = grid_point(lo, hi, L, l);
        out[l] = std::max(0.0, std::min(g - r.min, r.max - g));
    }
}

Landscape landscape_closed_form(const SeriesRange& r, double lo, double hi, std::size_t L) {
    check_grid(lo, hi, L);
    if (!(lo <= r.min && r.min <= r.max && r.max <= hi)) {
        throw std::invalid_argument("landscape_closed_form: range outside the grid bounds");
    }
    Landscape out{std::vector<double>(L), lo, hi};
    closed_form_into(r, lo, hi, out.samples);
    return out;
}

}  // namespace sequency
