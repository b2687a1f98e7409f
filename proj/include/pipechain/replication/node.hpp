// SPDX-License-Identifier: Apache-2.0
#pragma once

// Static-leader quorum replication. A NodeHost owns one Replica per ledger
// name; every Replica is a pure event handler that turns incoming messages
// and timer ticks into outgoing Envelopes. Transports (the in-process
// simulator or TCP) deliver messages to a host one at a time.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipechain/ledger.hpp"
#include "pipechain/replication/messages.hpp"

namespace pipechain::replication {

class ReplicationError : public std::runtime_error {
public:
    enum class Code {
        NotLeader,
        GapInChain,
        ProposalInFlight,
        PeerUnreachable,
        InvalidBlockDuringCatchUp,
        InsufficientNodes,
        UnknownLedger,
        BadConfig,
    };

    ReplicationError(Code code, const std::string& what, std::uint64_t height = 0)
        : std::runtime_error(what), code_(code), height_(height) {}
    Code code() const { return code_; }
    std::uint64_t height() const { return height_; }

private:
    Code code_;
    std::uint64_t height_;
};

std::string_view replication_error_name(ReplicationError::Code c);

enum class NodeRole { Leader, Follower };

struct PeerInfo {
    std::string node_id;
    std::string address;
    PublicKey public_key{};
};

struct NodeConfig {
    std::string node_id;
    NodeRole role = NodeRole::Follower;
    std::string listen_address;
    /// Every other member of the cluster.
    std::vector<PeerInfo> peers;
    PublicKey leader_public_key{};
    std::filesystem::path data_dir;
    std::filesystem::path key_file;
    std::string gateway_listen;
    std::filesystem::path gateway_config;

    std::size_t cluster_size() const { return peers.size() + 1; }
    std::size_t quorum() const { return cluster_size() / 2 + 1; }
};

/// Parses the key-value node config; relative paths resolve against `base`.
NodeConfig parse_node_config(std::string_view text, const std::filesystem::path& base = {});
NodeConfig load_node_config(const std::filesystem::path& path);

/// Ledger names double as directory names: [a-z0-9-]{3,32}.
bool valid_ledger_name(std::string_view name);

struct Envelope {
    std::string to;
    ReplicationMessage message;
};

using Outbox = std::vector<Envelope>;

struct ReplicaTiming {
    std::uint64_t retransmit_ms = 150;
    std::uint64_t heartbeat_ms = 100;
    std::uint64_t catch_up_retry_ms = 200;
    /// A peer unheard for this long counts as unreachable for liveness checks.
    std::uint64_t peer_timeout_ms = 1500;
    std::size_t catch_up_batch = 32;
};

/// Everything a Replica needs from its host node.
struct NodeContext {
    NodeConfig config;
    SigningKey key;
    /// Needed only by the leader, to admit pending entries.
    KeyLookup entry_keys;
    std::function<std::uint64_t()> now_ms;
    UnixClock unix_clock = system_unix_clock();
    std::function<std::unique_ptr<StateMachine>()> make_engine;
    ReplicaTiming timing;
    /// Fires whenever this node marks a height committed.
    std::function<void(const std::string& node, const std::string& ledger, std::uint64_t height, const Digest& hash)>
        on_commit;

    std::optional<std::string> leader_id() const;
    const PeerInfo* peer(const std::string& node_id) const;
};

struct CatchUpResult {
    std::size_t applied = 0;
    std::optional<std::uint64_t> invalid_height;
    std::optional<RejectReason> invalid_reason;
};

enum class ProposeOutcome { Ack, Reject, CatchUp };

class Replica {
public:
    /// Opens (or creates) the ledger under `dir`. A leader also writes genesis.
    Replica(const NodeContext& ctx, std::string name, std::filesystem::path dir);

    const std::string& name() const { return name_; }
    Ledger& ledger() { return *ledger_; }
    const Ledger& ledger() const { return *ledger_; }
    bool is_leader() const { return ctx_.config.role == NodeRole::Leader; }

    /// Leader: builds the next block from `pending`, persists it and proposes it.
    Block append_and_propose(std::span<const LedgerEntry> pending, Outbox& out);
    /// Leader: broadcasts an already-appended block held as pending.
    void propose(const Block& block, Outbox& out);

    void on_message(const ReplicationMessage& msg, Outbox& out);
    void tick(Outbox& out);

    /// Follower-side verification of a proposed block.
    ProposeOutcome handle_propose(const Block& block, Outbox& out, std::optional<RejectReason>* reason = nullptr);

    /// Applies blocks in order, skipping ones already held; stops at the first
    /// that fails verification.
    CatchUpResult apply_catch_up(std::span<const Block> blocks);

    /// Blocks (first .. min(first + batch, head)] for a catch-up peer.
    std::vector<Block> serve_blocks(std::uint64_t first, std::size_t max_blocks) const;

    std::optional<std::uint64_t> committed_height() const { return committed_; }
    bool proposal_in_flight() const { return in_flight_.has_value(); }
    std::optional<std::uint64_t> pending_height() const;
    /// Contract state as of the committed height.
    const StateMachine& committed_state() const { return *committed_state_; }
    /// Leader: true if a quorum of the cluster has been heard from recently.
    bool quorum_reachable() const;
    const std::optional<std::pair<std::uint64_t, RejectReason>>& last_rejection() const { return last_rejection_; }

private:
    struct InFlight {
        Block block;
        Digest hash{};
        std::set<std::string> acks;
        std::map<std::string, std::uint64_t> last_sent;
    };

    ReplicationMessage make(MessageKind kind, Bytes payload) const;
    void send(Outbox& out, const std::string& to, MessageKind kind, Bytes payload) const;
    void broadcast(Outbox& out, MessageKind kind, const Bytes& payload) const;
    void advance_commit(std::uint64_t height);
    void request_catch_up(Outbox& out, bool force);

    void on_ack(const ReplicationMessage& msg, Outbox& out);
    void on_commit(const ReplicationMessage& msg, Outbox& out);
    void on_catch_up_request(const ReplicationMessage& msg, Outbox& out);
    void on_catch_up_response(const ReplicationMessage& msg, Outbox& out);
    void ack_head(Outbox& out);

    const NodeContext& ctx_;
    std::string name_;
    std::unique_ptr<Ledger> ledger_;
    std::optional<std::uint64_t> committed_;
    std::unique_ptr<StateMachine> committed_state_;
    std::optional<InFlight> in_flight_;
    std::uint64_t leader_commit_ = 0;
    std::uint64_t last_heartbeat_ = 0;
    std::optional<std::uint64_t> catch_up_requested_at_;
    std::map<std::string, std::uint64_t> last_heard_;
    std::optional<std::pair<std::uint64_t, RejectReason>> last_rejection_;
};

/// Per-height view of one stored block, computed from disk without trusting
/// in-memory state.
std::vector<AuditRecord> audit_local(const std::filesystem::path& ledger_dir, const PublicKey& leader_key,
                                     std::uint64_t from_height, std::uint64_t to_height);

class NodeHost {
public:
    /// Reopens every ledger found under config.data_dir.
    explicit NodeHost(NodeContext ctx);
    NodeHost(const NodeHost&) = delete;
    NodeHost& operator=(const NodeHost&) = delete;

    const NodeContext& context() const { return ctx_; }
    const std::string& node_id() const { return ctx_.config.node_id; }
    bool is_leader() const { return ctx_.config.role == NodeRole::Leader; }

    Replica& create_ledger(const std::string& name);
    /// Stops serving a ledger; its files stay on disk.
    void close_ledger(const std::string& name) { replicas_.erase(name); }
    Replica* find(const std::string& name);
    const Replica* find(const std::string& name) const;
    std::vector<std::string> ledger_names() const;
    std::filesystem::path ledger_dir(const std::string& name) const { return ctx_.config.data_dir / name; }

    /// Verifies and dispatches one message. A returned reply goes straight back
    /// to the requester (used for audit requests, which need no sender key).
    std::optional<ReplicationMessage> handle(const ReplicationMessage& msg, Outbox& out);
    void tick(Outbox& out);

    std::uint64_t dropped_messages() const { return dropped_; }

private:
    NodeContext ctx_;
    std::map<std::string, std::unique_ptr<Replica>> replicas_;
    std::uint64_t dropped_ = 0;
};

/// A source of blocks for synchronous catch-up; nullopt means unreachable.
class BlockSource {
public:
    virtual ~BlockSource() = default;
    virtual std::optional<CatchUpResponsePayload> fetch(const std::string& ledger, std::uint64_t first) = 0;
};

/// Pulls blocks (from_height .. peer head] from `peer` into `replica`.
/// Throws PeerUnreachable or InvalidBlockDuringCatchUp; blocks applied before
/// an invalid one are kept.
std::size_t catch_up(Replica& replica, std::uint64_t from_height, BlockSource& peer);

struct HeaderObservation {
    std::string node_id;
    AuditStatus status = AuditStatus::Valid;
    Digest hash{};
};

struct MissingBlock {
    std::string node_id;
    std::uint64_t height = 0;
    bool operator==(const MissingBlock&) const = default;
};

struct DivergenceReport {
    std::uint64_t from_height = 0;
    std::uint64_t to_height = 0;
    std::map<std::uint64_t, std::vector<HeaderObservation>> per_height;
    std::vector<std::uint64_t> divergent;
    std::vector<MissingBlock> missing;
    /// For each divergent height, the nodes outside the strict-majority hash
    /// (every reporting node when no strict majority exists).
    std::map<std::uint64_t, std::vector<std::string>> minority;

    bool consistent() const { return divergent.empty() && missing.empty(); }
};

/// Audit data from one node; nullopt when the node could not be reached.
struct NodeAudit {
    std::string node_id;
    std::optional<std::vector<AuditRecord>> records;
};

/// Throws InsufficientNodes when fewer than two nodes answered.
DivergenceReport audit_consistency(std::span<const NodeAudit> nodes, std::uint64_t from_height,
                                   std::uint64_t to_height);

}  // namespace pipechain::replication
