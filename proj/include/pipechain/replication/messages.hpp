// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pipechain/block.hpp"
#include "pipechain/crypto.hpp"

namespace pipechain::replication {

enum class MessageKind : std::uint8_t {
    ProposeBlock = 1,
    Ack = 2,
    Commit = 3,
    CatchUpRequest = 4,
    CatchUpResponse = 5,
    AuditRequest = 6,
    AuditResponse = 7,
};

std::string_view message_kind_name(MessageKind k);

inline constexpr std::uint32_t kMaxFrameBytes = 16u << 20;

/// Signed envelope for every replication exchange. `ledger` selects the
/// replicated ledger on the receiving node; `term` is reserved and always 0.
struct ReplicationMessage {
    MessageKind kind = MessageKind::Commit;
    std::uint64_t term = 0;
    std::string ledger;
    std::string sender;
    Bytes payload;
    Signature sender_signature{};

    Bytes signing_preimage() const;
    Bytes encode() const;
    static ReplicationMessage decode(ByteView bytes);

    void sign(const SigningKey& key);
    bool signature_valid(const PublicKey& key) const;
};

/// u32 length || canonical message bytes.
Bytes encode_frame(const ReplicationMessage& msg);

struct AckPayload {
    std::uint64_t height = 0;
    Digest header_hash{};
    Bytes encode() const;
    static AckPayload decode(ByteView b);
};

struct CommitPayload {
    std::uint64_t committed_height = 0;
    Bytes encode() const;
    static CommitPayload decode(ByteView b);
};

struct CatchUpRequestPayload {
    /// First height the requester is missing.
    std::uint64_t first_height = 0;
    Bytes encode() const;
    static CatchUpRequestPayload decode(ByteView b);
};

struct CatchUpResponsePayload {
    std::vector<Block> blocks;
    std::uint64_t sender_head = 0;
    Bytes encode() const;
    static CatchUpResponsePayload decode(ByteView b);
};

struct AuditRequestPayload {
    std::uint64_t from_height = 0;
    std::uint64_t to_height = 0;
    Bytes encode() const;
    static AuditRequestPayload decode(ByteView b);
};

enum class AuditStatus : std::uint8_t { Missing = 0, Valid = 1, Corrupt = 2 };

/// For a Valid block `hash` is its header hash; for a Corrupt one it is the
/// SHA-256 of the raw stored bytes, which cannot equal any header hash.
struct AuditRecord {
    std::uint64_t height = 0;
    AuditStatus status = AuditStatus::Missing;
    Digest hash{};
    bool operator==(const AuditRecord&) const = default;
};

struct AuditResponsePayload {
    std::vector<AuditRecord> records;
    Bytes encode() const;
    static AuditResponsePayload decode(ByteView b);
};

}  // namespace pipechain::replication
