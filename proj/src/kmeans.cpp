#include "sequency/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sequency/parallel.hpp"
#include "sequency/rng.hpp"

namespace sequency {

CentroidSet init_uniform(const Matrix& points, std::size_t K, std::uint64_t seed) {
    if (K < 1) {
        throw std::invalid_argument("init_uniform: K must be at least 1");
    }
    if (points.empty()) {
        throw std::invalid_argument("init_uniform: no points");
    }
    const std::size_t L = points.cols();
    std::vector<double> lo(points.row(0).begin(), points.row(0).end());
    std::vector<double> hi = lo;
    for (std::size_t i = 1; i < points.rows(); ++i) {
        const auto r = points.row(i);
        for (std::size_t l = 0; l < L; ++l) {
            lo[l] = std::min(lo[l], r[l]);
            hi[l] = std::max(hi[l], r[l]);
        }
    }
    Rng rng(seed);
    CentroidSet c(K, L);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t l = 0; l < L; ++l) {
            c(k, l) = rng.uniform(lo[l], hi[l]);
        }
    }
    return c;
}

std::vector<std::uint32_t> assign_nearest(const Matrix& points, const CentroidSet& centroids,
                                          std::vector<double>* distances) {
    const std::size_t n = points.rows();
    const std::size_t K = centroids.rows();
    std::vector<std::uint32_t> labels(n);
    if (distances != nullptr) {
        distances->resize(n);
    }
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (parallel_enabled() && n * K * points.cols() > 200000)
    for (std::ptrdiff_t si = 0; si < sn; ++si) {
        const auto i = static_cast<std::size_t>(si);
        const auto p = points.row(i);
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const double d = squared_distance(p, centroids.row(k));
            if (d < best) {
                best = d;
                arg = static_cast<std::uint32_t>(k);
            }
        }
        labels[i] = arg;
        if (distances != nullptr) {
            (*distances)[i] = best;
        }
    }
    return labels;
}

double compute_wcss(const Matrix& points, const CentroidSet& centroids, std::span<const std::uint32_t> labels) {
    double acc = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        acc += squared_distance(points.row(i), centroids.row(labels[i]));
    }
    return acc;
}

double wcss_total(std::span<const double> per_shard) {
    double acc = 0.0;
    for (const double w : per_shard) {
        if (w < 0.0) {
            throw std::invalid_argument("wcss_total: negative WCSS");
        }
        acc += w;
    }
    return acc;
}

namespace {

double weighted_sum(std::span<const double> d, std::span<const double> weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        acc += weights.empty() ? d[i] : weights[i] * d[i];
    }
    return acc;
}

/// Mean update with empty-cluster repair. May relabel reseeded points.
void update_centroids(const Matrix& points, std::span<const double> weights, std::vector<std::uint32_t>& labels,
                      std::vector<double>& dist, CentroidSet& centroids) {
    const std::size_t n = points.rows();
    const std::size_t K = centroids.rows();
    const std::size_t L = points.cols();

    std::vector<std::size_t> count(K, 0);
    for (const auto l : labels) {
        ++count[l];
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (count[k] != 0) {
            continue;
        }
        std::size_t pick = n;
        double far = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (count[labels[i]] > 1 && dist[i] > far) {
                far = dist[i];
                pick = i;
            }
        }
        if (pick == n) {
            continue;  // nothing to move; keep the old centroid
        }
        --count[labels[pick]];
        labels[pick] = static_cast<std::uint32_t>(k);
        count[k] = 1;
        dist[pick] = 0.0;
    }

    Matrix sums(K, L, 0.0);
    std::vector<double> mass(K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = labels[i];
        const double w = weights.empty() ? 1.0 : weights[i];
        auto s = sums.row(k);
        const auto p = points.row(i);
        if (weights.empty()) {
            for (std::size_t l = 0; l < L; ++l) {
                s[l] += p[l];
            }
        } else {
            for (std::size_t l = 0; l < L; ++l) {
                s[l] += w * p[l];
            }
        }
        mass[k] += w;
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (count[k] == 0 || mass[k] <= 0.0) {
            continue;
        }
        auto c = centroids.row(k);
        const auto s = sums.row(k);
        for (std::size_t l = 0; l < L; ++l) {
            c[l] = s[l] / mass[k];
        }
    }
}

}  // namespace

LloydResult lloyd(const Matrix& points, CentroidSet init, std::size_t max_iters, std::span<const double> weights) {
    if (points.empty()) {
        throw std::invalid_argument("lloyd: no points");
    }
    if (init.cols() != points.cols() || init.rows() == 0) {
        throw std::invalid_argument("lloyd: centroid dimension does not match the points");
    }
    if (!weights.empty() && weights.size() != points.rows()) {
        throw std::invalid_argument("lloyd: one weight per point required");
    }

    LloydResult res;
    res.centroids = std::move(init);
    std::vector<double> dist;
    std::vector<std::uint32_t> labels = assign_nearest(points, res.centroids, &dist);
    res.wcss_trace.push_back(weighted_sum(dist, weights));

    for (std::size_t it = 0; it < max_iters; ++it) {
        update_centroids(points, weights, labels, dist, res.centroids);
        auto next = assign_nearest(points, res.centroids, &dist);
        res.wcss_trace.push_back(weighted_sum(dist, weights));
        ++res.iterations;
        const bool stable = next == labels;
        labels = std::move(next);
        if (stable) {
            res.converged = true;
            break;
        }
    }
    res.assignment.labels = std::move(labels);
    res.assignment.wcss = res.wcss_trace.back();
    return res;
}

}  // namespace sequency
