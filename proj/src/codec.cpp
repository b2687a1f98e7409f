// SPDX-License-Identifier: Apache-2.0
#include "pipechain/codec.hpp"

#include <limits>

namespace pipechain {

Writer& Writer::u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
}

Writer& Writer::u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
    return *this;
}

Writer& Writer::u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

Writer& Writer::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

Writer& Writer::i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }

Writer& Writer::raw(ByteView v) {
    buf_.insert(buf_.end(), v.begin(), v.end());
    return *this;
}

Writer& Writer::bytes(ByteView v) {
    if (v.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw EncodingError("byte string too long");
    }
    u32(static_cast<std::uint32_t>(v.size()));
    return raw(v);
}

Writer& Writer::str(std::string_view v) { return bytes(as_bytes(v)); }

ByteView Reader::raw(std::size_t n) {
    if (remaining() < n) {
        throw EncodingError("truncated input");
    }
    ByteView out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t Reader::u8() { return raw(1)[0]; }

std::uint16_t Reader::u16() {
    ByteView b = raw(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t Reader::u32() {
    ByteView b = raw(4);
    std::uint32_t v = 0;
    for (std::uint8_t x : b) v = (v << 8) | x;
    return v;
}

std::uint64_t Reader::u64() {
    ByteView b = raw(8);
    std::uint64_t v = 0;
    for (std::uint8_t x : b) v = (v << 8) | x;
    return v;
}

std::int64_t Reader::i64() { return static_cast<std::int64_t>(u64()); }

Bytes Reader::bytes(std::size_t max_len) {
    std::uint32_t n = u32();
    if (n > max_len) {
        throw EncodingError("length prefix exceeds bound");
    }
    ByteView v = raw(n);
    return Bytes(v.begin(), v.end());
}

std::string Reader::str(std::size_t max_len) {
    Bytes b = bytes(max_len);
    return std::string(b.begin(), b.end());
}

std::uint32_t Reader::count(std::uint32_t max_count) {
    std::uint32_t n = u32();
    if (n > max_count) {
        throw EncodingError("list count exceeds bound");
    }
    return n;
}

void Reader::expect_end() const {
    if (!done()) {
        throw EncodingError("trailing bytes after record");
    }
}

}  // namespace pipechain
