#include "sequency/wire.hpp"

#include <bit>
#include <string>

#include "sequency/errors.hpp"

namespace sequency::wire {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }

    std::vector<std::uint8_t> finish() {
        std::vector<std::uint8_t> out;
        out.reserve(kLengthPrefix + buf_.size());
        std::uint64_t n = buf_.size();
        for (std::size_t i = 0; i < kLengthPrefix; ++i) {
            out.push_back(static_cast<std::uint8_t>(n & 0xFF));
            n >>= 8;
        }
        out.insert(out.end(), buf_.begin(), buf_.end());
        return out;
    }

private:
    void le(std::uint64_t v, std::size_t bytes) {
        for (std::size_t i = 0; i < bytes; ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v & 0xFF));
            v >>= 8;
        }
    }
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(le(8)); }

    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::uint64_t le(std::size_t bytes) {
        if (remaining() < bytes) {
            throw ProtocolError("truncated frame");
        }
        std::uint64_t v = 0;
        for (std::size_t i = bytes; i-- > 0;) {
            v = (v << 8) | data_[pos_ + i];
        }
        pos_ += bytes;
        return v;
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const RoundFrame& frame) {
    if (frame.centroids.size() != static_cast<std::size_t>(frame.K) * frame.L) {
        throw ProtocolError("round frame: centroid payload does not match K*L");
    }
    Writer w;
    w.u32(frame.round);
    w.u32(frame.worker_id);
    w.u32(frame.K);
    w.u32(frame.L);
    for (const double c : frame.centroids) {
        w.f64(c);
    }
    w.u8(frame.flag);
    return w.finish();
}

std::vector<std::uint8_t> encode(const ResultFrame& frame) {
    Writer w;
    w.u32(frame.worker_id);
    w.u64(frame.labels.size());
    for (const auto l : frame.labels) {
        w.u32(l);
    }
    w.f64(frame.wcss);
    return w.finish();
}

RoundFrame decode_round(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    RoundFrame f;
    f.round = r.u32();
    f.worker_id = r.u32();
    f.K = r.u32();
    f.L = r.u32();
    const std::uint64_t count = static_cast<std::uint64_t>(f.K) * f.L;
    if (r.remaining() != count * 8 + 1) {
        throw ProtocolError("round frame: payload size does not match K=" + std::to_string(f.K) +
                            ", L=" + std::to_string(f.L));
    }
    f.centroids.resize(static_cast<std::size_t>(count));
    for (auto& c : f.centroids) {
        c = r.f64();
    }
    f.flag = r.u8();
    if (f.flag > 1) {
        throw ProtocolError("round frame: flag byte must be 0 or 1");
    }
    return f;
}

ResultFrame decode_result(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    ResultFrame f;
    f.worker_id = r.u32();
    const std::uint64_t n = r.u64();
    if (r.remaining() != n * 4 + 8) {
        throw ProtocolError("result frame: payload size does not match label count");
    }
    f.labels.resize(static_cast<std::size_t>(n));
    for (auto& l : f.labels) {
        l = r.u32();
    }
    f.wcss = r.f64();
    return f;
}

std::uint64_t decode_length(std::span<const std::uint8_t> prefix) {
    if (prefix.size() < kLengthPrefix) {
        throw ProtocolError("truncated length prefix");
    }
    std::uint64_t v = 0;
    for (std::size_t i = kLengthPrefix; i-- > 0;) {
        v = (v << 8) | prefix[i];
    }
    return v;
}

}  // namespace sequency::wire
