// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pipechain/block.hpp"
#include "pipechain/merkle.hpp"

namespace pipechain {

/// Inclusion proof binding one entry to a signed block header.
struct Receipt {
    Digest entry_hash{};
    std::uint32_t leaf_index = 0;
    std::vector<PathStep> audit_path;
    BlockHeader header;

    bool operator==(const Receipt&) const = default;
};

enum class ReceiptVerdict {
    Accept,
    PathMismatch,
    BadSignature,
    Malformed,
};

std::string_view verdict_name(ReceiptVerdict v);

/// Pure check: the path must have the shape implied by (entry_count,
/// leaf_index), recompute the header's merkle root, and the header must carry
/// a valid signature under trusted_key.
ReceiptVerdict verify_receipt(const Receipt& receipt, const PublicKey& trusted_key);

/// Wire form with lowercase hex digests. Field names:
/// entryHash, leafIndex, auditPath[{digest, side}], header{height, prevHash,
/// merkleRoot, timestamp, entryCount, stateDigest, leaderSignature}.
nlohmann::json receipt_to_json(const Receipt& r);
nlohmann::json header_to_json(const BlockHeader& h);
/// Returns nullopt on any schema or hex violation.
std::optional<Receipt> receipt_from_json(const nlohmann::json& j);
std::optional<Receipt> parse_receipt_wire(std::string_view text);

/// Parses and verifies untrusted wire bytes. Malformed input yields Malformed.
ReceiptVerdict verify_receipt_wire(std::string_view text, const PublicKey& trusted_key);

}  // namespace pipechain
