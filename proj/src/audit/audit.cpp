// SPDX-License-Identifier: Apache-2.0
#include "pipechain/audit/audit.hpp"

#include <charconv>
#include <sstream>

#include "pipechain/block_store.hpp"
#include "pipechain/contract.hpp"
#include "pipechain/receipt.hpp"
#include "pipechain/replication/tcp.hpp"

namespace pipechain::audit {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string AuditCommandResult::to_records() const {
    std::string out;
    for (const auto& r : records) out += r.dump() + "\n";
    return out;
}

namespace {

void require_ledger_dir(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw AuditInputError("not a ledger directory: " + dir.string());
    if (!fs::exists(dir / "manifest", ec)) throw AuditInputError("no manifest in " + dir.string());
}

void finish(AuditCommandResult& r, std::ostringstream& text, json extra = json::object()) {
    extra["record"] = "result";
    extra["command"] = r.command;
    extra["ok"] = r.ok;
    r.records.push_back(std::move(extra));
    text << (r.ok ? "OK" : "FAILED") << "\n";
    r.text = text.str();
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

AuditCommandResult cmd_verify_chain(const fs::path& data_dir, const PublicKey& leader_key) {
    require_ledger_dir(data_dir);
    ContractEngine engine;
    ChainVerificationReport rep = verify_chain(data_dir, leader_key, &engine);

    AuditCommandResult r{"verify-chain", rep.ok, {}, {}};
    std::ostringstream text;
    text << "ledger " << data_dir.string() << " head " << rep.head_height << "\n";
    for (const auto& f : rep.failures) {
        r.records.push_back(
            json{{"record", "failure"}, {"height", f.height}, {"kind", failure_kind_name(f.kind)}, {"detail", f.detail}});
        text << "  height " << f.height << " " << failure_kind_name(f.kind) << ": " << f.detail << "\n";
    }
    finish(r, text, json{{"headHeight", rep.head_height}, {"failures", rep.failures.size()}});
    return r;
}

AuditCommandResult cmd_verify_receipt(const fs::path& receipt_file, const PublicKey& leader_key) {
    std::string wire;
    try {
        Bytes raw = read_file(receipt_file);
        wire.assign(raw.begin(), raw.end());
    } catch (const std::exception& e) {
        throw AuditInputError("cannot read " + receipt_file.string() + ": " + e.what());
    }
    ReceiptVerdict v = verify_receipt_wire(wire, leader_key);
    AuditCommandResult r{"verify-receipt", v == ReceiptVerdict::Accept, {}, {}};
    std::ostringstream text;
    text << "receipt " << receipt_file.string() << ": " << verdict_name(v) << "\n";
    json extra{{"verdict", verdict_name(v)}};
    if (auto rc = parse_receipt_wire(wire); rc && v == ReceiptVerdict::Accept) {
        extra["height"] = rc->header.height;
        extra["leafIndex"] = rc->leaf_index;
        extra["entryHash"] = to_hex(rc->entry_hash);
    }
    finish(r, text, std::move(extra));
    return r;
}

AuditCommandResult cmd_replay(const fs::path& data_dir, const PublicKey& leader_key) {
    require_ledger_dir(data_dir);
    ContractEngine reference;
    ChainVerificationReport rep = verify_chain(data_dir, leader_key, &reference);

    AuditCommandResult r{"replay", rep.ok, {}, {}};
    std::ostringstream text;

    // Rebuild the store from every block that precedes the first failure.
    std::uint64_t stop = rep.head_height + 1;
    for (const auto& f : rep.failures) stop = std::min(stop, f.height);
    ContractEngine engine;
    std::uint64_t replayed = 0;
    try {
        BlockStore store = BlockStore::open(data_dir, true);
        for (std::uint64_t h = 0; h < stop && store.head() && h <= *store.head(); ++h) {
            Block b = store.read_block(h);
            for (const auto& e : b.entries) engine.apply(e, b.header.timestamp);
            r.records.push_back(json{{"record", "block"},
                                     {"height", h},
                                     {"entries", b.entries.size()},
                                     {"stateDigest", to_hex(engine.digest())},
                                     {"matches", engine.digest() == b.header.state_digest}});
            replayed = h + 1;
        }
    } catch (const std::exception& e) {
        r.ok = false;
        text << "  replay stopped: " << e.what() << "\n";
    }
    text << "replayed " << replayed << " of " << rep.head_height + 1 << " blocks\n";
    for (const auto& f : rep.failures) {
        r.records.push_back(
            json{{"record", "failure"}, {"height", f.height}, {"kind", failure_kind_name(f.kind)}, {"detail", f.detail}});
        text << "  height " << f.height << " " << failure_kind_name(f.kind) << ": " << f.detail << "\n";
    }
    for (const auto& line : dump_store_records(engine.store())) r.records.push_back(json::parse(line));
    for (const auto& [id, c] : engine.store().contracts()) {
        text << "contract " << id << " sensor " << c.sensor_principal_id << " " << contract_state_name(c.state) << " "
             << c.readings.size() << " readings\n";
        for (std::size_t i = 0; i < c.readings.size(); ++i) {
            const auto& rd = c.readings[i];
            text << "  [" << i << "] " << parameter_name(rd.parameter) << " " << rd.value_scaled << " " << rd.unit
                 << " source " << rd.source_timestamp << " ledger " << rd.ledger_timestamp << "\n";
        }
    }
    finish(r, text,
           json{{"headHeight", rep.head_height},
                {"replayedBlocks", replayed},
                {"contracts", engine.store().contracts().size()},
                {"stateDigest", to_hex(engine.digest())}});
    return r;
}

std::vector<NodeAddress> parse_node_list(std::string_view text) {
    std::vector<NodeAddress> out;
    std::size_t i = 0;
    while (i <= text.size()) {
        std::size_t j = text.find(',', i);
        if (j == std::string_view::npos) j = text.size();
        std::string item(text.substr(i, j - i));
        i = j + 1;
        if (item.empty()) continue;
        NodeAddress n;
        if (auto eq = item.find('='); eq != std::string::npos) {
            n.node_id = item.substr(0, eq);
            n.address = item.substr(eq + 1);
        } else {
            n.node_id = n.address = item;
        }
        try {
            replication::split_host_port(n.address);
        } catch (const std::invalid_argument& e) {
            throw AuditInputError("bad node address '" + item + "': " + e.what());
        }
        if (n.node_id.empty()) throw AuditInputError("empty node id in '" + item + "'");
        out.push_back(std::move(n));
    }
    return out;
}

std::pair<std::uint64_t, std::uint64_t> parse_range(std::string_view text) {
    auto dots = text.find("..");
    auto from = parse_u64(text.substr(0, dots));
    auto to = dots == std::string_view::npos ? from : parse_u64(text.substr(dots + 2));
    if (!from || !to || *from > *to) throw AuditInputError("range must be <from>..<to> with from <= to");
    return {*from, *to};
}

AuditCommandResult cmd_audit(const std::vector<NodeAddress>& nodes, const std::string& ledger,
                             std::uint64_t from_height, std::uint64_t to_height) {
    std::vector<replication::NodeAudit> audits;
    for (const auto& n : nodes) {
        audits.push_back({n.node_id, replication::fetch_audit(n.address, ledger, from_height, to_height)});
    }
    replication::DivergenceReport rep;
    try {
        rep = replication::audit_consistency(audits, from_height, to_height);
    } catch (const replication::ReplicationError& e) {
        throw AuditInputError(e.what());
    }

    AuditCommandResult r{"audit", rep.consistent(), {}, {}};
    std::ostringstream text;
    text << "ledger " << ledger << " heights " << from_height << ".." << to_height << "\n";
    for (const auto& n : audits) {
        if (!n.records) text << "  " << n.node_id << " unreachable\n";
    }
    for (std::uint64_t h : rep.divergent) {
        json obs = json::array();
        for (const auto& o : rep.per_height[h]) {
            obs.push_back(json{{"node", o.node_id},
                               {"status", o.status == replication::AuditStatus::Corrupt ? "Corrupt" : "Valid"},
                               {"hash", to_hex(o.hash)}});
        }
        r.records.push_back(
            json{{"record", "divergence"}, {"height", h}, {"minority", rep.minority[h]}, {"observations", obs}});
        text << "  height " << h << " divergent, minority:";
        for (const auto& m : rep.minority[h]) text << " " << m;
        text << "\n";
        for (const auto& o : rep.per_height[h]) {
            text << "    " << o.node_id << " " << to_hex(o.hash).substr(0, 16)
                 << (o.status == replication::AuditStatus::Corrupt ? " corrupt" : "") << "\n";
        }
    }
    for (const auto& m : rep.missing) {
        r.records.push_back(json{{"record", "missing"}, {"height", m.height}, {"node", m.node_id}});
        text << "  height " << m.height << " missing on " << m.node_id << "\n";
    }
    finish(r, text, json{{"divergent", rep.divergent}, {"missing", rep.missing.size()}});
    return r;
}

PublicKey load_key_argument(const std::string& arg) {
    if (arg.starts_with("derive:")) return SigningKey::derive(arg.substr(7)).public_key();
    try {
        return load_public_key(arg);
    } catch (const std::exception& e) {
        throw AuditInputError("cannot read key " + arg + ": " + e.what());
    }
}

}  // namespace pipechain::audit
