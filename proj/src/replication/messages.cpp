// SPDX-License-Identifier: Apache-2.0
#include "pipechain/replication/messages.hpp"

#include "pipechain/codec.hpp"

namespace pipechain::replication {

namespace {

constexpr std::size_t kMaxLedgerName = 64;
constexpr std::size_t kMaxNodeId = 128;
constexpr std::uint32_t kMaxBlocksPerResponse = 256;
constexpr std::uint32_t kMaxAuditRecords = 1u << 20;

template <typename F>
auto decode_all(ByteView b, F&& f) {
    Reader r(b);
    auto out = f(r);
    r.expect_end();
    return out;
}

}  // namespace

std::string_view message_kind_name(MessageKind k) {
    switch (k) {
        case MessageKind::ProposeBlock: return "ProposeBlock";
        case MessageKind::Ack: return "Ack";
        case MessageKind::Commit: return "Commit";
        case MessageKind::CatchUpRequest: return "CatchUpRequest";
        case MessageKind::CatchUpResponse: return "CatchUpResponse";
        case MessageKind::AuditRequest: return "AuditRequest";
        case MessageKind::AuditResponse: return "AuditResponse";
    }
    return "Unknown";
}

Bytes ReplicationMessage::signing_preimage() const {
    Writer w;
    w.u8(static_cast<std::uint8_t>(kind)).u64(term).str(ledger).str(sender).bytes(payload);
    return std::move(w).take();
}

Bytes ReplicationMessage::encode() const {
    Writer w;
    w.raw(signing_preimage()).fixed(sender_signature);
    return std::move(w).take();
}

ReplicationMessage ReplicationMessage::decode(ByteView bytes) {
    return decode_all(bytes, [](Reader& r) {
        ReplicationMessage m;
        std::uint8_t kind = r.u8();
        if (kind < 1 || kind > 7) throw EncodingError("unknown message kind");
        m.kind = static_cast<MessageKind>(kind);
        m.term = r.u64();
        m.ledger = r.str(kMaxLedgerName);
        m.sender = r.str(kMaxNodeId);
        m.payload = r.bytes(kMaxFrameBytes);
        m.sender_signature = r.fixed<64>();
        return m;
    });
}

void ReplicationMessage::sign(const SigningKey& key) { sender_signature = key.sign(signing_preimage()); }

bool ReplicationMessage::signature_valid(const PublicKey& key) const {
    return verify_signature(key, signing_preimage(), sender_signature);
}

Bytes encode_frame(const ReplicationMessage& msg) {
    Bytes body = msg.encode();
    Writer w;
    w.u32(static_cast<std::uint32_t>(body.size())).raw(body);
    return std::move(w).take();
}

Bytes AckPayload::encode() const {
    Writer w;
    w.u64(height).fixed(header_hash);
    return std::move(w).take();
}

AckPayload AckPayload::decode(ByteView b) {
    return decode_all(b, [](Reader& r) { return AckPayload{r.u64(), r.fixed<32>()}; });
}

Bytes CommitPayload::encode() const {
    Writer w;
    w.u64(committed_height);
    return std::move(w).take();
}

CommitPayload CommitPayload::decode(ByteView b) {
    return decode_all(b, [](Reader& r) { return CommitPayload{r.u64()}; });
}

Bytes CatchUpRequestPayload::encode() const {
    Writer w;
    w.u64(first_height);
    return std::move(w).take();
}

CatchUpRequestPayload CatchUpRequestPayload::decode(ByteView b) {
    return decode_all(b, [](Reader& r) { return CatchUpRequestPayload{r.u64()}; });
}

Bytes CatchUpResponsePayload::encode() const {
    Writer w;
    w.u32(static_cast<std::uint32_t>(blocks.size()));
    for (const auto& blk : blocks) w.bytes(blk.encode());
    w.u64(sender_head);
    return std::move(w).take();
}

CatchUpResponsePayload CatchUpResponsePayload::decode(ByteView b) {
    return decode_all(b, [](Reader& r) {
        CatchUpResponsePayload p;
        std::uint32_t n = r.count(kMaxBlocksPerResponse);
        for (std::uint32_t i = 0; i < n; ++i) p.blocks.push_back(Block::decode(r.bytes(kMaxFrameBytes)));
        p.sender_head = r.u64();
        return p;
    });
}

Bytes AuditRequestPayload::encode() const {
    Writer w;
    w.u64(from_height).u64(to_height);
    return std::move(w).take();
}

AuditRequestPayload AuditRequestPayload::decode(ByteView b) {
    return decode_all(b, [](Reader& r) { return AuditRequestPayload{r.u64(), r.u64()}; });
}

Bytes AuditResponsePayload::encode() const {
    Writer w;
    w.u32(static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records) w.u64(rec.height).u8(static_cast<std::uint8_t>(rec.status)).fixed(rec.hash);
    return std::move(w).take();
}

AuditResponsePayload AuditResponsePayload::decode(ByteView b) {
    return decode_all(b, [](Reader& r) {
        AuditResponsePayload p;
        std::uint32_t n = r.count(kMaxAuditRecords);
        for (std::uint32_t i = 0; i < n; ++i) {
            AuditRecord rec;
            rec.height = r.u64();
            std::uint8_t st = r.u8();
            if (st > 2) throw EncodingError("bad audit status");
            rec.status = static_cast<AuditStatus>(st);
            rec.hash = r.fixed<32>();
            p.records.push_back(rec);
        }
        return p;
    });
}

}  // namespace pipechain::replication
