// SPDX-License-Identifier: Apache-2.0
#pragma once

// Canonical binary encoding shared by hashing, signing, storage and the wire:
// big-endian fixed-width integers, u32-length-prefixed strings and byte
// strings, u32-count-prefixed lists.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pipechain/bytes.hpp"

namespace pipechain {

class EncodingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Writer {
public:
    Writer& u8(std::uint8_t v);
    Writer& u16(std::uint16_t v);
    Writer& u32(std::uint32_t v);
    Writer& u64(std::uint64_t v);
    Writer& i64(std::int64_t v);
    /// Raw bytes, no prefix (fixed-size fields).
    Writer& raw(ByteView v);
    /// u32 length prefix then bytes.
    Writer& bytes(ByteView v);
    Writer& str(std::string_view v);

    template <std::size_t N>
    Writer& fixed(const std::array<std::uint8_t, N>& a) {
        return raw(ByteView{a.data(), N});
    }

    const Bytes& data() const& { return buf_; }
    Bytes take() && { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Bounds-checked cursor. Every read throws EncodingError on truncation.
class Reader {
public:
    explicit Reader(ByteView in) : in_(in) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64();
    ByteView raw(std::size_t n);
    /// Length-prefixed; rejects lengths above max_len.
    Bytes bytes(std::size_t max_len);
    std::string str(std::size_t max_len);
    /// Count prefix for a list; rejects counts above max_count.
    std::uint32_t count(std::uint32_t max_count);

    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        ByteView v = raw(N);
        std::array<std::uint8_t, N> out{};
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }

    std::size_t remaining() const { return in_.size() - pos_; }
    std::size_t position() const { return pos_; }
    bool done() const { return pos_ == in_.size(); }
    /// Throws unless the whole input has been consumed.
    void expect_end() const;

private:
    ByteView in_;
    std::size_t pos_ = 0;
};

}  // namespace pipechain
