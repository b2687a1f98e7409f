// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario files are line-oriented. Blank lines and '#' comments are ignored;
// every other line is `key = value`:
//
//   ledger = demo-pipeline          messages = 25          seed = 7
//   nodes = 3                       start_timestamp = 1677651200
//   batch_max_entries = 16          batch_max_delay_ms = 50
//   commit_timeout_ms = 60000
//   producer = <id> format=csv|jsonl|kv parameter=<name> unit=<u> rate=<hz>
//              base=<dec> amplitude=<dec> noise=<dec> [period=<n>]
//              [noise_seed=<n>] [principal=<cred>] [corrupt_every=<n>]
//   attack = <Kind> target=<producer|node> [after=<n>] [height=<h>]
//            [mutation=byte|field:<name>] [seed=<n>] [principal=<cred>]
//
// Remote deployments add:
//   gateway = http://host:port
//   admin = <cred>
//   leader_key = <hex public key>
//   node = <id> <host:port> [<data dir>]
//
// Credentials: derive:<principalId> (key derived from the id),
// seed:<principalId>:<hex seed>, token:<principalId>:<secret>.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipechain/crypto.hpp"
#include "pipechain/harness/producer.hpp"

namespace pipechain::harness {

enum class AttackKind { ModifyInFlight, ReplayRequest, MutateReplicaStorage, ForgeSubmitter };
enum class DetectionSite { GatewayAuth, ContractGuard, ReceiptVerify, ReplicaAudit };

std::string_view attack_kind_name(AttackKind k);
std::optional<AttackKind> parse_attack_kind(std::string_view s);
std::string_view detection_site_name(DetectionSite s);

struct AttackSpec {
    AttackKind kind = AttackKind::ModifyInFlight;
    std::string target;
    /// Producer attacks fire on the target's message with this 0-based index.
    std::uint64_t after = 0;
    /// Storage attacks fire once the target holds this committed height.
    std::uint64_t height = 1;
    /// "byte" or "field:<json field>".
    std::string mutation = "byte";
    std::uint64_t seed = 0;
    /// ForgeSubmitter only.
    std::string principal = "derive:intruder";
};

struct Credential {
    std::string principal_id;
    std::optional<SigningKey> key;
    std::optional<std::string> token;
};

/// Throws std::invalid_argument for unknown schemes.
Credential parse_credential(std::string_view ref);

struct NodeSpec {
    std::string node_id;
    std::string address;
    std::filesystem::path data_dir;
};

struct Scenario {
    std::string ledger = "demo-pipeline";
    std::uint64_t seed = 1;
    std::size_t nodes = 3;
    std::uint64_t messages = 25;
    std::uint64_t start_timestamp = 1677651200;
    std::size_t batch_max_entries = 16;
    std::uint64_t batch_max_delay_ms = 50;
    std::uint64_t commit_timeout_ms = 60'000;
    std::vector<ProducerSpec> producers;
    std::vector<AttackSpec> attacks;

    std::string gateway_uri;
    std::string admin = "derive:admin";
    std::optional<PublicKey> leader_key;
    std::vector<NodeSpec> node_specs;
};

/// Validates producers and attack targets; throws std::invalid_argument
/// naming the offending line.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Mixes the run seed into a per-producer or per-attack salt.
std::uint64_t mix_seed(std::uint64_t run_seed, std::uint64_t salt);

}  // namespace pipechain::harness
