// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "pipechain/bytes.hpp"
#include "pipechain/codec.hpp"
#include "pipechain/crypto.hpp"
#include "pipechain/entry.hpp"

namespace pipechain {

inline constexpr std::uint32_t kMaxEntriesPerBlock = 64;
inline constexpr std::uint16_t kBlockFileVersion = 1;
inline constexpr std::array<std::uint8_t, 4> kBlockMagic{'P', 'C', 'H', 'N'};

struct BlockHeader {
    std::uint64_t height = 0;
    Digest prev_hash{};
    Digest merkle_root{};
    std::uint64_t timestamp = 0;
    std::uint32_t entry_count = 0;
    Digest state_digest{};
    Signature leader_signature{};

    /// Every field except the signature; this is what the leader signs.
    Bytes preimage() const;
    void encode_to(Writer& w) const;
    Bytes encode() const;
    static BlockHeader decode(Reader& r);

    /// H(0x02 || full header bytes). Chained into the next header's prev_hash.
    Digest hash() const;

    void sign(const SigningKey& key);
    bool signature_valid(const PublicKey& key) const;

    bool operator==(const BlockHeader&) const = default;
};

struct Block {
    BlockHeader header;
    std::vector<LedgerEntry> entries;

    /// Header followed by the count-prefixed entries.
    Bytes encode() const;
    void encode_to(Writer& w) const;
    static Block decode(Reader& r);
    static Block decode(ByteView bytes);

    /// Storage form: "PCHN" || version u16 || encode().
    Bytes encode_file() const;
    /// Throws EncodingError on bad magic, unknown version or trailing bytes.
    static Block decode_file(ByteView bytes);

    std::vector<Digest> leaf_hashes() const;

    bool operator==(const Block&) const = default;
};

}  // namespace pipechain
