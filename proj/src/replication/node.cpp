// SPDX-License-Identifier: Apache-2.0
#include "pipechain/replication/node.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pipechain/codec.hpp"
#include "pipechain/merkle.hpp"

namespace pipechain::replication {

namespace fs = std::filesystem;

std::string_view replication_error_name(ReplicationError::Code c) {
    using C = ReplicationError::Code;
    switch (c) {
        case C::NotLeader: return "NotLeader";
        case C::GapInChain: return "GapInChain";
        case C::ProposalInFlight: return "ProposalInFlight";
        case C::PeerUnreachable: return "PeerUnreachable";
        case C::InvalidBlockDuringCatchUp: return "InvalidBlockDuringCatchUp";
        case C::InsufficientNodes: return "InsufficientNodes";
        case C::UnknownLedger: return "UnknownLedger";
        case C::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

bool valid_ledger_name(std::string_view name) {
    if (name.size() < 3 || name.size() > 32) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_config(std::size_t line, const std::string& why) {
    throw ReplicationError(ReplicationError::Code::BadConfig, "config line " + std::to_string(line) + ": " + why);
}

}  // namespace

NodeConfig parse_node_config(std::string_view text, const fs::path& base) {
    NodeConfig cfg;
    bool have_role = false, have_leader = false;
    auto resolve = [&base](const std::string& p) { return fs::path(p).is_absolute() || base.empty() ? fs::path(p) : base / p; };

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) bad_config(lineno, "expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        try {
            if (key == "node_id") {
                cfg.node_id = value;
            } else if (key == "role") {
                if (value == "leader") cfg.role = NodeRole::Leader;
                else if (value == "follower") cfg.role = NodeRole::Follower;
                else bad_config(lineno, "role must be leader or follower");
                have_role = true;
            } else if (key == "listen") {
                cfg.listen_address = value;
            } else if (key == "data_dir") {
                cfg.data_dir = resolve(value);
            } else if (key == "key_file") {
                cfg.key_file = resolve(value);
            } else if (key == "leader_public_key") {
                cfg.leader_public_key = array_from_hex<32>(value);
                have_leader = true;
            } else if (key == "peer") {
                std::istringstream ps(value);
                PeerInfo p;
                std::string pk;
                if (!(ps >> p.node_id >> p.address >> pk)) bad_config(lineno, "peer = <node_id> <host:port> <public key hex>");
                p.public_key = array_from_hex<32>(pk);
                cfg.peers.push_back(std::move(p));
            } else if (key == "gateway_listen") {
                cfg.gateway_listen = value;
            } else if (key == "gateway_config") {
                cfg.gateway_config = resolve(value);
            } else {
                bad_config(lineno, "unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            bad_config(lineno, e.what());
        }
    }
    if (cfg.node_id.empty()) bad_config(lineno, "node_id is required");
    if (!have_role) bad_config(lineno, "role is required");
    if (!have_leader) bad_config(lineno, "leader_public_key is required");
    if (cfg.data_dir.empty()) bad_config(lineno, "data_dir is required");

    std::set<std::string> ids{cfg.node_id};
    for (const auto& p : cfg.peers) {
        if (!ids.insert(p.node_id).second) bad_config(lineno, "duplicate node id " + p.node_id);
    }
    std::size_t leaders = cfg.role == NodeRole::Leader ? 1 : 0;
    for (const auto& p : cfg.peers) leaders += p.public_key == cfg.leader_public_key ? 1 : 0;
    if (cfg.role == NodeRole::Leader) {
        if (leaders != 1) bad_config(lineno, "leader_public_key must not belong to a peer");
    } else if (leaders != 1) {
        bad_config(lineno, "exactly one peer must hold leader_public_key");
    }
    return cfg;
}

NodeConfig load_node_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ReplicationError(ReplicationError::Code::BadConfig, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_node_config(ss.str(), path.parent_path());
}

std::optional<std::string> NodeContext::leader_id() const {
    if (config.role == NodeRole::Leader) return config.node_id;
    for (const auto& p : config.peers) {
        if (p.public_key == config.leader_public_key) return p.node_id;
    }
    return std::nullopt;
}

const PeerInfo* NodeContext::peer(const std::string& node_id) const {
    for (const auto& p : config.peers) {
        if (p.node_id == node_id) return &p;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------

Replica::Replica(const NodeContext& ctx, std::string name, fs::path dir) : ctx_(ctx), name_(std::move(name)) {
    LedgerOptions opts;
    opts.dir = std::move(dir);
    opts.leader_key = ctx_.config.leader_public_key;
    opts.key_lookup = ctx_.entry_keys;
    opts.clock = ctx_.unix_clock;
    ledger_ = std::make_unique<Ledger>(std::move(opts), ctx_.make_engine());
    committed_state_ = ctx_.make_engine();

    const std::uint64_t now = ctx_.now_ms();
    for (const auto& p : ctx_.config.peers) last_heard_[p.node_id] = now;
    last_heartbeat_ = now;

    if (is_leader()) {
        ledger_->init_genesis(ctx_.key);
        std::uint64_t head = ledger_->head_height();
        if (head == 0) {
            advance_commit(0);
        } else {
            // Whatever sits at the head was never known to be committed; treat
            // it as the pending proposal again.
            advance_commit(head - 1);
            Block b = ledger_->read_block(head);
            in_flight_ = InFlight{b, b.header.hash(), {}, {}};
        }
    } else if (!ledger_->empty()) {
        advance_commit(0);
    }
}

std::optional<std::uint64_t> Replica::pending_height() const {
    if (!in_flight_) return std::nullopt;
    return in_flight_->block.header.height;
}

ReplicationMessage Replica::make(MessageKind kind, Bytes payload) const {
    ReplicationMessage m;
    m.kind = kind;
    m.ledger = name_;
    m.sender = ctx_.config.node_id;
    m.payload = std::move(payload);
    m.sign(ctx_.key);
    return m;
}

void Replica::send(Outbox& out, const std::string& to, MessageKind kind, Bytes payload) const {
    out.push_back(Envelope{to, make(kind, std::move(payload))});
}

void Replica::broadcast(Outbox& out, MessageKind kind, const Bytes& payload) const {
    ReplicationMessage m = make(kind, payload);
    for (const auto& p : ctx_.config.peers) out.push_back(Envelope{p.node_id, m});
}

void Replica::advance_commit(std::uint64_t height) {
    std::uint64_t next = committed_ ? *committed_ + 1 : 0;
    for (; next <= height; ++next) {
        Block b = ledger_->read_block(next);
        auto state = committed_state_->clone();
        for (const auto& e : b.entries) state->apply(e, b.header.timestamp);
        committed_state_ = std::move(state);
        committed_ = next;
        if (ctx_.on_commit) ctx_.on_commit(ctx_.config.node_id, name_, next, b.header.hash());
    }
}

Block Replica::append_and_propose(std::span<const LedgerEntry> pending, Outbox& out) {
    if (!is_leader()) throw ReplicationError(ReplicationError::Code::NotLeader, "node is not the leader");
    if (in_flight_) {
        throw ReplicationError(ReplicationError::Code::ProposalInFlight, "a proposal is awaiting quorum",
                               in_flight_->block.header.height);
    }
    Block b = ledger_->append_block(pending, ctx_.key);
    propose(b, out);
    return b;
}

void Replica::propose(const Block& block, Outbox& out) {
    if (!is_leader()) throw ReplicationError(ReplicationError::Code::NotLeader, "node is not the leader");
    const std::uint64_t h = block.header.height;
    const Digest hash = block.header.hash();
    if (in_flight_) {
        if (in_flight_->hash != hash) {
            throw ReplicationError(ReplicationError::Code::ProposalInFlight, "a proposal is awaiting quorum",
                                   in_flight_->block.header.height);
        }
    } else {
        const std::uint64_t expected = committed_ ? *committed_ + 1 : 0;
        if (h != expected) {
            throw ReplicationError(ReplicationError::Code::GapInChain,
                                   "height " + std::to_string(h) + " does not extend committed height " +
                                       std::to_string(expected - 1),
                                   h);
        }
        if (h == ledger_->head_height() + 1) {
            ledger_->append_verified(block);
        } else if (h != ledger_->head_height() || hash != ledger_->head_hash()) {
            throw ReplicationError(ReplicationError::Code::GapInChain, "block is not the ledger head", h);
        }
        in_flight_ = InFlight{block, hash, {}, {}};
    }

    const std::uint64_t now = ctx_.now_ms();
    ReplicationMessage m = make(MessageKind::ProposeBlock, block.encode());
    for (const auto& p : ctx_.config.peers) {
        if (in_flight_->acks.count(p.node_id)) continue;
        out.push_back(Envelope{p.node_id, m});
        in_flight_->last_sent[p.node_id] = now;
    }
    if (ctx_.config.quorum() <= 1) {
        std::uint64_t committed = h;
        in_flight_.reset();
        advance_commit(committed);
        broadcast(out, MessageKind::Commit, CommitPayload{committed}.encode());
    }
}

void Replica::on_message(const ReplicationMessage& msg, Outbox& out) {
    last_heard_[msg.sender] = ctx_.now_ms();
    switch (msg.kind) {
        case MessageKind::ProposeBlock:
            if (!is_leader()) handle_propose(Block::decode(msg.payload), out);
            break;
        case MessageKind::Ack:
            if (is_leader()) on_ack(msg, out);
            break;
        case MessageKind::Commit:
            if (!is_leader()) on_commit(msg, out);
            break;
        case MessageKind::CatchUpRequest:
            on_catch_up_request(msg, out);
            break;
        case MessageKind::CatchUpResponse:
            if (!is_leader()) on_catch_up_response(msg, out);
            break;
        case MessageKind::AuditRequest:
        case MessageKind::AuditResponse:
            break;
    }
}

void Replica::on_ack(const ReplicationMessage& msg, Outbox& out) {
    AckPayload ack = AckPayload::decode(msg.payload);
    if (!in_flight_ || ack.height != in_flight_->block.header.height || ack.header_hash != in_flight_->hash) return;
    in_flight_->acks.insert(msg.sender);
    if (in_flight_->acks.size() + 1 < ctx_.config.quorum()) return;
    std::uint64_t h = ack.height;
    in_flight_.reset();
    advance_commit(h);
    broadcast(out, MessageKind::Commit, CommitPayload{h}.encode());
    last_heartbeat_ = ctx_.now_ms();
}

ProposeOutcome Replica::handle_propose(const Block& block, Outbox& out, std::optional<RejectReason>* reason) {
    const std::uint64_t h = block.header.height;
    auto reject = [&](RejectReason r) {
        last_rejection_ = std::make_pair(h, r);
        if (reason) *reason = r;
        return ProposeOutcome::Reject;
    };
    if (ledger_->empty() || h > ledger_->head_height() + 1) {
        request_catch_up(out, false);
        return ProposeOutcome::CatchUp;
    }
    const std::uint64_t head = ledger_->head_height();
    if (h <= head) {
        Digest held{};
        try {
            held = h == head ? ledger_->head_hash() : ledger_->read_block(h).header.hash();
        } catch (const LedgerError&) {
            return reject(RejectReason::ChainMismatch);
        }
        if (held != block.header.hash()) return reject(RejectReason::ChainMismatch);
    } else {
        try {
            ledger_->append_verified(block);
        } catch (const BlockRejected& r) {
            return reject(r.reason());
        }
    }
    send(out, *ctx_.leader_id(), MessageKind::Ack, AckPayload{h, block.header.hash()}.encode());
    return ProposeOutcome::Ack;
}

void Replica::ack_head(Outbox& out) {
    if (is_leader() || ledger_->empty()) return;
    send(out, *ctx_.leader_id(), MessageKind::Ack, AckPayload{ledger_->head_height(), ledger_->head_hash()}.encode());
}

void Replica::request_catch_up(Outbox& out, bool force) {
    const std::uint64_t now = ctx_.now_ms();
    if (!force && catch_up_requested_at_ && now - *catch_up_requested_at_ < ctx_.timing.catch_up_retry_ms) return;
    auto leader = ctx_.leader_id();
    if (!leader) return;
    std::uint64_t first = ledger_->empty() ? 0 : ledger_->head_height() + 1;
    send(out, *leader, MessageKind::CatchUpRequest, CatchUpRequestPayload{first}.encode());
    catch_up_requested_at_ = now;
}

void Replica::on_commit(const ReplicationMessage& msg, Outbox& out) {
    CommitPayload c = CommitPayload::decode(msg.payload);
    leader_commit_ = std::max(leader_commit_, c.committed_height);
    if (ledger_->empty() || ledger_->head_height() < leader_commit_) request_catch_up(out, false);
    if (ledger_->empty()) return;
    std::uint64_t target = std::min(leader_commit_, ledger_->head_height());
    if (!committed_ || target > *committed_) advance_commit(target);
    ack_head(out);
}

std::vector<Block> Replica::serve_blocks(std::uint64_t first, std::size_t max_blocks) const {
    std::vector<Block> blocks;
    if (ledger_->empty()) return blocks;
    const std::uint64_t head = ledger_->head_height();
    for (std::uint64_t h = first; h <= head && blocks.size() < max_blocks; ++h) {
        try {
            blocks.push_back(ledger_->read_block(h));
        } catch (const LedgerError&) {
            break;
        }
    }
    return blocks;
}

void Replica::on_catch_up_request(const ReplicationMessage& msg, Outbox& out) {
    CatchUpRequestPayload req = CatchUpRequestPayload::decode(msg.payload);
    CatchUpResponsePayload resp;
    resp.blocks = serve_blocks(req.first_height, ctx_.timing.catch_up_batch);
    resp.sender_head = ledger_->empty() ? 0 : ledger_->head_height();
    send(out, msg.sender, MessageKind::CatchUpResponse, resp.encode());
}

CatchUpResult Replica::apply_catch_up(std::span<const Block> blocks) {
    CatchUpResult result;
    for (const auto& b : blocks) {
        const std::uint64_t h = b.header.height;
        if (!ledger_->empty() && h <= ledger_->head_height()) {
            bool same = false;
            try {
                same = ledger_->read_block(h).header.hash() == b.header.hash();
            } catch (const LedgerError&) {
            }
            if (same) continue;
            result.invalid_height = h;
            result.invalid_reason = RejectReason::ChainMismatch;
            break;
        }
        try {
            ledger_->append_verified(b);
        } catch (const BlockRejected& r) {
            result.invalid_height = h;
            result.invalid_reason = r.reason();
            break;
        }
        ++result.applied;
    }
    if (result.invalid_height) last_rejection_ = std::make_pair(*result.invalid_height, *result.invalid_reason);
    return result;
}

void Replica::on_catch_up_response(const ReplicationMessage& msg, Outbox& out) {
    CatchUpResponsePayload resp = CatchUpResponsePayload::decode(msg.payload);
    CatchUpResult r = apply_catch_up(resp.blocks);
    catch_up_requested_at_.reset();
    if (ledger_->empty()) return;
    std::uint64_t target = std::min(leader_commit_, ledger_->head_height());
    if (!committed_ || target > *committed_) advance_commit(target);
    ack_head(out);
    if (!r.invalid_height && resp.sender_head > ledger_->head_height() && !resp.blocks.empty()) {
        request_catch_up(out, true);
    }
}

void Replica::tick(Outbox& out) {
    const std::uint64_t now = ctx_.now_ms();
    if (is_leader()) {
        if (in_flight_) {
            ReplicationMessage m;
            bool built = false;
            for (const auto& p : ctx_.config.peers) {
                if (in_flight_->acks.count(p.node_id)) continue;
                auto& sent = in_flight_->last_sent[p.node_id];
                if (now - sent < ctx_.timing.retransmit_ms) continue;
                if (!built) {
                    m = make(MessageKind::ProposeBlock, in_flight_->block.encode());
                    built = true;
                }
                out.push_back(Envelope{p.node_id, m});
                sent = now;
            }
        }
        if (now - last_heartbeat_ >= ctx_.timing.heartbeat_ms) {
            broadcast(out, MessageKind::Commit, CommitPayload{committed_.value_or(0)}.encode());
            last_heartbeat_ = now;
        }
    } else if (ledger_->empty() || ledger_->head_height() < leader_commit_) {
        request_catch_up(out, false);
    }
}

bool Replica::quorum_reachable() const {
    const std::uint64_t now = ctx_.now_ms();
    std::size_t alive = 1;
    for (const auto& [id, at] : last_heard_) {
        if (now - at <= ctx_.timing.peer_timeout_ms) ++alive;
    }
    return alive >= ctx_.config.quorum();
}

// ---------------------------------------------------------------------------

namespace {

AuditRecord audit_one(const fs::path& ledger_dir, const PublicKey& leader_key, std::uint64_t h) {
    AuditRecord rec;
    rec.height = h;
    fs::path p = ledger_dir / block_file_name(h);
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) return rec;
    Bytes raw;
    try {
        raw = read_file(p);
    } catch (const std::exception&) {
        return rec;
    }
    try {
        Block b = Block::decode_file(raw);
        const auto& hd = b.header;
        bool root_ok =
            b.entries.empty() ? hd.merkle_root == kZeroDigest : merkle_root(b.leaf_hashes()) == hd.merkle_root;
        if (hd.height == h && hd.entry_count == b.entries.size() && root_ok && hd.signature_valid(leader_key)) {
            rec.status = AuditStatus::Valid;
            rec.hash = hd.hash();
            return rec;
        }
    } catch (const std::exception&) {
    }
    rec.status = AuditStatus::Corrupt;
    rec.hash = sha256(raw);
    return rec;
}

}  // namespace

std::vector<AuditRecord> audit_local(const fs::path& ledger_dir, const PublicKey& leader_key, std::uint64_t from_height,
                                     std::uint64_t to_height) {
    std::vector<AuditRecord> out;
    for (std::uint64_t h = from_height; h <= to_height; ++h) {
        out.push_back(audit_one(ledger_dir, leader_key, h));
        if (h == to_height) break;
    }
    return out;
}

// ---------------------------------------------------------------------------

NodeHost::NodeHost(NodeContext ctx) : ctx_(std::move(ctx)) {
    if (!ctx_.make_engine) throw ReplicationError(ReplicationError::Code::BadConfig, "no state machine factory");
    fs::create_directories(ctx_.config.data_dir);
    for (const auto& de : fs::directory_iterator(ctx_.config.data_dir)) {
        std::string name = de.path().filename().string();
        if (!de.is_directory() || !valid_ledger_name(name)) continue;
        if (!fs::exists(de.path() / "manifest")) continue;
        replicas_.emplace(name, std::make_unique<Replica>(ctx_, name, de.path()));
    }
}

Replica& NodeHost::create_ledger(const std::string& name) {
    if (!valid_ledger_name(name)) {
        throw ReplicationError(ReplicationError::Code::BadConfig, "invalid ledger name '" + name + "'");
    }
    auto it = replicas_.find(name);
    if (it != replicas_.end()) return *it->second;
    auto r = std::make_unique<Replica>(ctx_, name, ledger_dir(name));
    return *replicas_.emplace(name, std::move(r)).first->second;
}

Replica* NodeHost::find(const std::string& name) {
    auto it = replicas_.find(name);
    return it == replicas_.end() ? nullptr : it->second.get();
}

const Replica* NodeHost::find(const std::string& name) const {
    auto it = replicas_.find(name);
    return it == replicas_.end() ? nullptr : it->second.get();
}

std::vector<std::string> NodeHost::ledger_names() const {
    std::vector<std::string> names;
    for (const auto& [n, r] : replicas_) names.push_back(n);
    return names;
}

std::optional<ReplicationMessage> NodeHost::handle(const ReplicationMessage& msg, Outbox& out) {
    try {
        if (msg.kind == MessageKind::AuditRequest) {
            // Read-only; answered for any requester.
            if (!valid_ledger_name(msg.ledger)) return std::nullopt;
            AuditRequestPayload req = AuditRequestPayload::decode(msg.payload);
            if (req.to_height < req.from_height || req.to_height - req.from_height > (1u << 20)) return std::nullopt;
            AuditResponsePayload resp;
            resp.records = audit_local(ledger_dir(msg.ledger), ctx_.config.leader_public_key, req.from_height,
                                       req.to_height);
            ReplicationMessage reply;
            reply.kind = MessageKind::AuditResponse;
            reply.ledger = msg.ledger;
            reply.sender = ctx_.config.node_id;
            reply.payload = resp.encode();
            reply.sign(ctx_.key);
            return reply;
        }
        const PeerInfo* peer = ctx_.peer(msg.sender);
        if (!peer || !msg.signature_valid(peer->public_key) || !valid_ledger_name(msg.ledger)) {
            ++dropped_;
            return std::nullopt;
        }
        Replica* r = find(msg.ledger);
        if (!r) {
            bool from_leader = msg.sender == ctx_.leader_id();
            bool opens = msg.kind == MessageKind::ProposeBlock || msg.kind == MessageKind::Commit ||
                         msg.kind == MessageKind::CatchUpResponse;
            if (is_leader() || !from_leader || !opens) {
                ++dropped_;
                return std::nullopt;
            }
            r = &create_ledger(msg.ledger);
        }
        r->on_message(msg, out);
    } catch (const EncodingError&) {
        ++dropped_;
    }
    return std::nullopt;
}

void NodeHost::tick(Outbox& out) {
    for (auto& [name, r] : replicas_) r->tick(out);
}

// ---------------------------------------------------------------------------

std::size_t catch_up(Replica& replica, std::uint64_t from_height, BlockSource& peer) {
    std::size_t total = 0;
    std::uint64_t first = replica.ledger().empty() ? 0 : from_height + 1;
    for (;;) {
        auto resp = peer.fetch(replica.name(), first);
        if (!resp) throw ReplicationError(ReplicationError::Code::PeerUnreachable, "catch-up peer unreachable");
        CatchUpResult r = replica.apply_catch_up(resp->blocks);
        total += r.applied;
        if (r.invalid_height) {
            throw ReplicationError(ReplicationError::Code::InvalidBlockDuringCatchUp,
                                   "invalid block at height " + std::to_string(*r.invalid_height), *r.invalid_height);
        }
        if (resp->blocks.empty() || resp->blocks.back().header.height >= resp->sender_head) break;
        first = resp->blocks.back().header.height + 1;
    }
    return total;
}

DivergenceReport audit_consistency(std::span<const NodeAudit> nodes, std::uint64_t from_height,
                                   std::uint64_t to_height) {
    std::size_t reachable = std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.records.has_value(); });
    if (reachable < 2) {
        throw ReplicationError(ReplicationError::Code::InsufficientNodes,
                               "audit needs at least 2 reachable nodes, got " + std::to_string(reachable));
    }
    DivergenceReport rep;
    rep.from_height = from_height;
    rep.to_height = to_height;

    std::vector<std::map<std::uint64_t, const AuditRecord*>> by_height(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i].records) continue;
        for (const auto& rec : *nodes[i].records) by_height[i][rec.height] = &rec;
    }

    for (std::uint64_t h = from_height;; ++h) {
        auto& obs = rep.per_height[h];
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            auto it = by_height[i].find(h);
            if (!nodes[i].records || it == by_height[i].end() || it->second->status == AuditStatus::Missing) {
                rep.missing.push_back({nodes[i].node_id, h});
                continue;
            }
            obs.push_back({nodes[i].node_id, it->second->status, it->second->hash});
        }

        std::map<Digest, std::size_t> counts;
        bool any_corrupt = false;
        for (const auto& o : obs) {
            ++counts[o.hash];
            any_corrupt |= o.status == AuditStatus::Corrupt;
        }
        if (counts.size() > 1 || any_corrupt) {
            rep.divergent.push_back(h);
            std::optional<Digest> majority;
            for (const auto& [d, n] : counts) {
                if (2 * n > obs.size()) majority = d;
            }
            auto& minority = rep.minority[h];
            for (const auto& o : obs) {
                bool outside = majority ? (o.hash != *majority || o.status == AuditStatus::Corrupt)
                                        : (!any_corrupt || o.status == AuditStatus::Corrupt);
                if (outside) minority.push_back(o.node_id);
            }
        }
        if (h == to_height) break;
    }
    return rep;
}

}  // namespace pipechain::replication
