// SPDX-License-Identifier: Apache-2.0
#include "pipechain/receipt.hpp"

namespace pipechain {

using nlohmann::json;

std::string_view verdict_name(ReceiptVerdict v) {
    switch (v) {
        case ReceiptVerdict::Accept: return "Accept";
        case ReceiptVerdict::PathMismatch: return "PathMismatch";
        case ReceiptVerdict::BadSignature: return "BadSignature";
        case ReceiptVerdict::Malformed: return "Malformed";
    }
    return "Unknown";
}

ReceiptVerdict verify_receipt(const Receipt& receipt, const PublicKey& trusted_key) {
    const BlockHeader& h = receipt.header;
    if (h.entry_count == 0 || receipt.leaf_index >= h.entry_count) {
        return ReceiptVerdict::PathMismatch;
    }
    std::vector<Side> shape = merkle_path_shape(h.entry_count, receipt.leaf_index);
    if (shape.size() != receipt.audit_path.size()) {
        return ReceiptVerdict::PathMismatch;
    }
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] != receipt.audit_path[i].side) return ReceiptVerdict::PathMismatch;
    }
    if (merkle_root_from_path(receipt.entry_hash, receipt.audit_path) != h.merkle_root) {
        return ReceiptVerdict::PathMismatch;
    }
    if (!h.signature_valid(trusted_key)) {
        return ReceiptVerdict::BadSignature;
    }
    return ReceiptVerdict::Accept;
}

json header_to_json(const BlockHeader& h) {
    return json{
        {"height", h.height},
        {"prevHash", to_hex(h.prev_hash)},
        {"merkleRoot", to_hex(h.merkle_root)},
        {"timestamp", h.timestamp},
        {"entryCount", h.entry_count},
        {"stateDigest", to_hex(h.state_digest)},
        {"leaderSignature", to_hex(h.leader_signature)},
    };
}

json receipt_to_json(const Receipt& r) {
    json path = json::array();
    for (const auto& step : r.audit_path) {
        path.push_back({{"digest", to_hex(step.sibling)},
                        {"side", step.side == Side::Left ? "Left" : "Right"}});
    }
    return json{
        {"entryHash", to_hex(r.entry_hash)},
        {"leafIndex", r.leaf_index},
        {"auditPath", std::move(path)},
        {"header", header_to_json(r.header)},
    };
}

std::optional<Receipt> receipt_from_json(const json& j) {
    try {
        Receipt r;
        r.entry_hash = array_from_hex<32>(j.at("entryHash").get<std::string>());
        r.leaf_index = j.at("leafIndex").get<std::uint32_t>();
        for (const auto& step : j.at("auditPath")) {
            PathStep s;
            s.sibling = array_from_hex<32>(step.at("digest").get<std::string>());
            const auto side = step.at("side").get<std::string>();
            if (side == "Left") {
                s.side = Side::Left;
            } else if (side == "Right") {
                s.side = Side::Right;
            } else {
                return std::nullopt;
            }
            r.audit_path.push_back(s);
        }
        const json& h = j.at("header");
        r.header.height = h.at("height").get<std::uint64_t>();
        r.header.prev_hash = array_from_hex<32>(h.at("prevHash").get<std::string>());
        r.header.merkle_root = array_from_hex<32>(h.at("merkleRoot").get<std::string>());
        r.header.timestamp = h.at("timestamp").get<std::uint64_t>();
        r.header.entry_count = h.at("entryCount").get<std::uint32_t>();
        r.header.state_digest = array_from_hex<32>(h.at("stateDigest").get<std::string>());
        r.header.leader_signature = array_from_hex<64>(h.at("leaderSignature").get<std::string>());
        return r;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<Receipt> parse_receipt_wire(std::string_view text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return receipt_from_json(j);
}

ReceiptVerdict verify_receipt_wire(std::string_view text, const PublicKey& trusted_key) {
    auto r = parse_receipt_wire(text);
    if (!r) return ReceiptVerdict::Malformed;
    return verify_receipt(*r, trusted_key);
}

}  // namespace pipechain
