#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sequency {

/// Walsh-Fourier coefficients of one zero-padded series, indexed by sequency j = 0..T2-1.
struct WftVector {
    std::vector<double> coeffs;
    std::size_t original_length = 0;

    std::size_t padded_length() const { return coeffs.size(); }
};

/// Componentwise extremes of a coefficient vector.
struct SeriesRange {
    double min = 0.0;
    double max = 0.0;

    bool operator==(const SeriesRange&) const = default;
};

/// Smallest power of two >= T (T >= 1).
std::size_t next_pow2(std::size_t T);

bool is_pow2(std::size_t n);

/**
 * Walsh function value W(t, j) from the multiplicative recurrence
 *
 *   W(0, j) = 1
 *   W(1, j) = +1 for j < T2/2, -1 otherwise
 *   W(t, j) = W(floor(t/2), 2j mod T2) * W(t mod 2, j)
 *
 * The doubled sequency wraps modulo T2. Throws std::out_of_range for t, j >= T2.
 */
int walsh_value(std::size_t t, std::size_t j, std::size_t T2);

/**
 * Fast Walsh-Fourier transform, O(T2 log T2).
 *
 * coeffs[j] = T2^{-1/2} * sum_t values[t] * W(t, j). Unrolling the recurrence
 * gives W(t, j) = (-1)^popcount(t & bitrev(j)), so this runs the natural-order
 * Hadamard butterfly and reads the result through the bit-reversal permutation.
 * `values` must already be padded to a power-of-two length.
 */
WftVector fast_wft(std::span<const double> values);

/// Zero-pads a level sequence to next_pow2(T) and transforms it.
WftVector wft_of_levels(std::span<const std::uint8_t> levels);

SeriesRange series_range(std::span<const double> coeffs);
inline SeriesRange series_range(const WftVector& v) { return series_range(v.coeffs); }

/// Range of wft_of_levels(levels) using a caller-provided scratch buffer.
SeriesRange wft_range(std::span<const std::uint8_t> levels, std::vector<double>& scratch);

namespace detail {

/// Reverses the low `bits` bits of x.
std::size_t bit_reverse(std::size_t x, unsigned bits);

/// In-place unnormalized natural-order Walsh-Hadamard transform.
void hadamard_inplace(std::span<double> data);

}  // namespace detail

}  // namespace sequency
