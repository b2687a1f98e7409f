// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pipechain {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// 32-byte SHA-256 output. Displayed as lowercase hex everywhere.
using Digest = std::array<std::uint8_t, 32>;

/// 16-byte entry identifier.
using EntryId = std::array<std::uint8_t, 16>;

inline constexpr Digest kZeroDigest{};

std::string to_hex(ByteView bytes);

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& a) {
    return to_hex(ByteView{a.data(), a.size()});
}

/// Throws std::invalid_argument on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// Fixed-size variant; throws std::invalid_argument when the length differs.
template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex(std::string_view hex) {
    Bytes b = from_hex(hex);
    if (b.size() != N) {
        throw std::invalid_argument("hex value has wrong length");
    }
    std::array<std::uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace pipechain
