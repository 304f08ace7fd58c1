#include "sequency/wft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sequency {

std::size_t next_pow2(std::size_t T) {
    if (T == 0) {
        throw std::invalid_argument("next_pow2: T must be positive");
    }
    return std::bit_ceil(T);
}

bool is_pow2(std::size_t n) { return std::has_single_bit(n); }

int walsh_value(std::size_t t, std::size_t j, std::size_t T2) {
    if (!is_pow2(T2)) {
        throw std::invalid_argument("walsh_value: T2 must be a power of two");
    }
    if (t >= T2 || j >= T2) {
        throw std::out_of_range("walsh_value: index out of range (t=" + std::to_string(t) +
                                ", j=" + std::to_string(j) + ", T2=" + std::to_string(T2) + ")");
    }
    int sign = 1;
    // Peel one bit of t per step: W(t, j) = W(t >> 1, 2j mod T2) * W(t & 1, j).
    while (t > 1) {
        if ((t & 1) != 0 && j >= T2 / 2) {
            sign = -sign;
        }
        t >>= 1;
        j = (2 * j) % T2;
    }
    if (t == 1 && j >= T2 / 2) {
        sign = -sign;
    }
    return sign;
}

namespace detail {

std::size_t bit_reverse(std::size_t x, unsigned bits) {
    std::size_t r = 0;
    for (unsigned b = 0; b < bits; ++b) {
        r = (r << 1) | ((x >> b) & 1);
    }
    return r;
}

void hadamard_inplace(std::span<double> data) {
    const std::size_t n = data.size();
    for (std::size_t h = 1; h < n; h *= 2) {
        for (std::size_t i = 0; i < n; i += 2 * h) {
            for (std::size_t k = i; k < i + h; ++k) {
                const double a = data[k];
                const double b = data[k + h];
                data[k] = a + b;
                data[k + h] = a - b;
            }
        }
    }
}

}  // namespace detail

namespace {

void wft_into(std::span<const double> values, std::vector<double>& scratch, std::vector<double>& out) {
    const std::size_t n = values.size();
    scratch.assign(values.begin(), values.end());
    detail::hadamard_inplace(scratch);
    const unsigned bits = static_cast<unsigned>(std::countr_zero(n));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    out.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = scratch[detail::bit_reverse(j, bits)] * scale;
    }
}

}  // namespace

WftVector fast_wft(std::span<const double> values) {
    if (!is_pow2(values.size())) {
        throw std::invalid_argument("fast_wft: length " + std::to_string(values.size()) + " is not a power of two");
    }
    WftVector v;
    v.original_length = values.size();
    std::vector<double> scratch;
    wft_into(values, scratch, v.coeffs);
    return v;
}

WftVector wft_of_levels(std::span<const std::uint8_t> levels) {
    const std::size_t T2 = next_pow2(levels.size());
    std::vector<double> padded(T2, 0.0);
    std::copy(levels.begin(), levels.end(), padded.begin());
    WftVector v = fast_wft(padded);
    v.original_length = levels.size();
    return v;
}

SeriesRange series_range(std::span<const double> coeffs) {
    if (coeffs.empty()) {
        return {};
    }
    const auto [lo, hi] = std::minmax_element(coeffs.begin(), coeffs.end());
    return {*lo, *hi};
}

SeriesRange wft_range(std::span<const std::uint8_t> levels, std::vector<double>& scratch) {
    // The extremes do not depend on coefficient order, so the permutation and
    // scaling can be applied to the two extremes only.
    const std::size_t T2 = next_pow2(levels.size());
    scratch.assign(T2, 0.0);
    std::copy(levels.begin(), levels.end(), scratch.begin());
    detail::hadamard_inplace(scratch);
    const double scale = 1.0 / std::sqrt(static_cast<double>(T2));
    const auto [lo, hi] = std::minmax_element(scratch.begin(), scratch.end());
    return {*lo * scale, *hi * scale};
}

}  // namespace sequency
