// SPDX-License-Identifier: Apache-2.0
#pragma once

// Offline audit commands behind pipechain-audit. Every command is read-only.
// Exit codes: 0 ok, 1 verification failed, 2 could not check.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipechain/crypto.hpp"

namespace pipechain::audit {

/// Input that cannot be checked at all: unreadable files, bad arguments,
/// too few reachable nodes.
class AuditInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AuditCommandResult {
    std::string command;
    bool ok = false;
    /// Line-delimited records, the last one of kind "result".
    std::vector<nlohmann::json> records;
    std::string text;

    int exit_code() const { return ok ? 0 : 1; }
    std::string to_records() const;
};

AuditCommandResult cmd_verify_chain(const std::filesystem::path& data_dir, const PublicKey& leader_key);
AuditCommandResult cmd_verify_receipt(const std::filesystem::path& receipt_file, const PublicKey& leader_key);
/// Replays genesis to head through the contract engine and dumps the final
/// store; fails on the first block that does not verify or replay.
AuditCommandResult cmd_replay(const std::filesystem::path& data_dir, const PublicKey& leader_key);

struct NodeAddress {
    std::string node_id;
    std::string address;
};

/// "id=host:port" or "host:port" (the address doubles as the id),
/// comma separated.
std::vector<NodeAddress> parse_node_list(std::string_view text);
/// "from..to" or a single height.
std::pair<std::uint64_t, std::uint64_t> parse_range(std::string_view text);

AuditCommandResult cmd_audit(const std::vector<NodeAddress>& nodes, const std::string& ledger,
                             std::uint64_t from_height, std::uint64_t to_height);

/// Reads a key file, or, for "derive:<label>", the derived public key.
PublicKey load_key_argument(const std::string& arg);

}  // namespace pipechain::audit
