// SPDX-License-Identifier: Apache-2.0
#include "pipechain/block.hpp"

namespace pipechain {

namespace {

void encode_unsigned(const BlockHeader& h, Writer& w) {
    w.u64(h.height)
        .fixed(h.prev_hash)
        .fixed(h.merkle_root)
        .u64(h.timestamp)
        .u32(h.entry_count)
        .fixed(h.state_digest);
}

}  // namespace

Bytes BlockHeader::preimage() const {
    Writer w;
    encode_unsigned(*this, w);
    return std::move(w).take();
}

void BlockHeader::encode_to(Writer& w) const {
    encode_unsigned(*this, w);
    w.fixed(leader_signature);
}

Bytes BlockHeader::encode() const {
    Writer w;
    encode_to(w);
    return std::move(w).take();
}

BlockHeader BlockHeader::decode(Reader& r) {
    BlockHeader h;
    h.height = r.u64();
    h.prev_hash = r.fixed<32>();
    h.merkle_root = r.fixed<32>();
    h.timestamp = r.u64();
    h.entry_count = r.u32();
    h.state_digest = r.fixed<32>();
    h.leader_signature = r.fixed<64>();
    return h;
}

Digest BlockHeader::hash() const { return sha256(HashDomain::Header, encode()); }

void BlockHeader::sign(const SigningKey& key) { leader_signature = key.sign(preimage()); }

bool BlockHeader::signature_valid(const PublicKey& key) const {
    return verify_signature(key, preimage(), leader_signature);
}

void Block::encode_to(Writer& w) const {
    header.encode_to(w);
    w.u32(static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) e.encode_to(w);
}

Bytes Block::encode() const {
    Writer w;
    encode_to(w);
    return std::move(w).take();
}

Block Block::decode(Reader& r) {
    Block b;
    b.header = BlockHeader::decode(r);
    std::uint32_t n = r.count(kMaxEntriesPerBlock);
    b.entries.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        b.entries.push_back(LedgerEntry::decode(r));
    }
    return b;
}

Block Block::decode(ByteView bytes) {
    Reader r(bytes);
    Block b = decode(r);
    r.expect_end();
    return b;
}

Bytes Block::encode_file() const {
    Writer w;
    w.fixed(kBlockMagic).u16(kBlockFileVersion);
    encode_to(w);
    return std::move(w).take();
}

Block Block::decode_file(ByteView bytes) {
    Reader r(bytes);
    if (r.fixed<4>() != kBlockMagic) {
        throw EncodingError("bad block file magic");
    }
    if (r.u16() != kBlockFileVersion) {
        throw EncodingError("unsupported block file version");
    }
    Block b = decode(r);
    r.expect_end();
    return b;
}

std::vector<Digest> Block::leaf_hashes() const {
    std::vector<Digest> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(hash_entry(e));
    return out;
}

}  // namespace pipechain
