#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sequency::wire {

/**
 * Coordinator/worker frames. Every frame is a little-endian u64 payload length
 * followed by the payload.
 *
 * RoundFrame payload:
 *   u32 round | u32 worker_id | u32 K | u32 L | K*L f64 centroids (row-major) | u8 flag
 *
 * Worker -> coordinator: the worker's post-Lloyd centroids and its
 * labels-changed flag. Coordinator -> worker: the next round's instruction;
 * flag 1 means "run round `round`" (L == 0 on round 1: initialize locally),
 * flag 0 with K == L == 0 means "stop and report".
 *
 * ResultFrame payload:
 *   u32 worker_id | u64 n | n*u32 labels | f64 wcss
 */
struct RoundFrame {
    std::uint32_t round = 0;
    std::uint32_t worker_id = 0;
    std::uint32_t K = 0;
    std::uint32_t L = 0;
    std::vector<double> centroids;
    std::uint8_t flag = 0;

    bool operator==(const RoundFrame&) const = default;
};

struct ResultFrame {
    std::uint32_t worker_id = 0;
    std::vector<std::uint32_t> labels;
    double wcss = 0.0;

    bool operator==(const ResultFrame&) const = default;
};

inline constexpr std::size_t kLengthPrefix = 8;

/// Full frame including the length prefix.
std::vector<std::uint8_t> encode(const RoundFrame& frame);
std::vector<std::uint8_t> encode(const ResultFrame& frame);

/// Decode a payload (without the prefix). Throws ProtocolError on size mismatch.
RoundFrame decode_round(std::span<const std::uint8_t> payload);
ResultFrame decode_result(std::span<const std::uint8_t> payload);

/// Reads the payload length from the first kLengthPrefix bytes.
std::uint64_t decode_length(std::span<const std::uint8_t> prefix);

}  // namespace sequency::wire
