// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one line per criterion, exit status 0 only if all pass.
//
//   acceptance [criterion...]     run all criteria, or only the listed ones

#include <sodium.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "pipechain/block_store.hpp"
#include "pipechain/contract.hpp"
#include "pipechain/gateway/http.hpp"
#include "pipechain/harness/deployment.hpp"
#include "pipechain/harness/runner.hpp"
#include "pipechain/receipt.hpp"
#include "pipechain/replication/sim.hpp"
#include "support/fixtures.hpp"

using namespace pipechain;
using pipechain::testing::Keyring;
using pipechain::testing::StepClock;
using pipechain::testing::TempDir;
using pipechain::testing::Workload;
using pipechain::testing::leader_key;
using pipechain::testing::open_ledger;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects the first few failure messages of a criterion.
struct Failures {
    std::size_t count = 0;
    std::ostringstream first;
    void add(const std::string& what) {
        if (count++ < 3) first << (count > 1 ? "; " : "") << what;
    }
    Outcome outcome(const std::string& summary) const {
        if (count == 0) return {true, summary};
        return {false, summary + "; " + std::to_string(count) + " failures: " + first.str()};
    }
};

void write_bytes(const fs::path& p, const Bytes& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// ---------------------------------------------------------------------------
// 1. Tamper evidence

struct PersistedByte {
    fs::path file;
    std::optional<std::uint64_t> height;  // nullopt for the manifest
    std::size_t offset;
};

std::vector<PersistedByte> persisted_bytes(const fs::path& dir) {
    std::vector<PersistedByte> out;
    for (const auto& de : fs::directory_iterator(dir)) {
        const std::string name = de.path().filename().string();
        auto h = parse_block_file_name(name);
        if (!h && name != "manifest") continue;
        const auto size = fs::file_size(de.path());
        for (std::size_t i = 0; i < size; ++i) out.push_back({de.path(), h, i});
    }
    return out;
}

/// Mutates one byte, verifies, restores. Returns an error text or "".
std::string check_mutation(const fs::path& dir, const PersistedByte& pb, std::uint8_t mask) {
    const Bytes original = read_file(pb.file);
    Bytes mutated = original;
    mutated[pb.offset] ^= mask;
    write_bytes(pb.file, mutated);
    ContractEngine engine;
    ChainVerificationReport rep = verify_chain(dir, leader_key().public_key(), &engine);
    write_bytes(pb.file, original);
    const std::string where = pb.file.filename().string() + "@" + std::to_string(pb.offset);
    if (rep.ok) return "undetected " + where;
    if (pb.height && !rep.has_failure_at(*pb.height)) return "wrong height for " + where;
    return "";
}

Outcome tamper_evidence() {
    Failures f;
    std::size_t checked = 0;
    {
        TempDir dir;
        Keyring keys;
        auto ledger = open_ledger(dir.path(), keys);
        Workload w(keys, 31);
        for (int b = 0; b < 2; ++b) ledger->append_block(w.next_block(3), leader_key());
        ledger.reset();
        for (const auto& pb : persisted_bytes(dir.path())) {
            for (std::uint8_t mask : {0x01, 0x80, 0xFF}) {
                ++checked;
                if (auto e = check_mutation(dir.path(), pb, mask); !e.empty()) f.add(e);
            }
        }
    }
    const std::size_t exhaustive = checked;
    {
        TempDir dir;
        Keyring keys;
        auto ledger = open_ledger(dir.path(), keys);
        Workload w(keys, 50);
        for (int b = 0; b < 49; ++b) ledger->append_block(w.next_block(4), leader_key());
        ledger.reset();
        auto bytes = persisted_bytes(dir.path());
        std::mt19937_64 rng(1000);
        for (int i = 0; i < 1000; ++i) {
            const auto& pb = bytes[rng() % bytes.size()];
            ++checked;
            if (auto e = check_mutation(dir.path(), pb, static_cast<std::uint8_t>(1 + rng() % 255)); !e.empty()) f.add(e);
        }
    }
    return f.outcome("3-block ledger: " + std::to_string(exhaustive) + " exhaustive mutations; 50-block ledger: 1000 random; " +
                     std::to_string(checked - f.count) + "/" + std::to_string(checked) + " detected at the right height");
}

// ---------------------------------------------------------------------------
// 2. Receipt soundness

Digest oracle_hash(std::uint8_t domain, const std::vector<std::uint8_t>& body) {
    std::vector<std::uint8_t> m{domain};
    m.insert(m.end(), body.begin(), body.end());
    Digest d{};
    crypto_hash_sha256(d.data(), m.data(), m.size());
    return d;
}

/// Independent Merkle root: pairwise from the left, odd node promoted.
Digest oracle_root(std::vector<Digest> level) {
    while (level.size() > 1) {
        std::vector<Digest> next;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            std::vector<std::uint8_t> pair(level[i].begin(), level[i].end());
            pair.insert(pair.end(), level[i + 1].begin(), level[i + 1].end());
            next.push_back(oracle_hash(0x01, pair));
        }
        if (level.size() % 2) next.push_back(level.back());
        level = std::move(next);
    }
    return level[0];
}

Outcome receipt_soundness() {
    TempDir dir;
    Keyring keys;
    auto ledger = open_ledger(dir.path(), keys);
    Workload w(keys, 20);
    for (std::size_t b = 1; b <= 20; ++b) {
        const std::size_t n = b == 20 ? kMaxEntriesPerBlock : (b * 13) % kMaxEntriesPerBlock + 1;
        ledger->append_block(w.next_block(n), leader_key());
    }
    const PublicKey key = leader_key().public_key();
    Failures f;
    std::size_t receipts = 0, mutations = 0;
    for (std::uint64_t h = 1; h <= 20; ++h) {
        Block block = ledger->read_block(h);
        std::vector<Digest> leaves;
        for (const auto& e : block.entries) leaves.push_back(oracle_hash(0x00, e.encode()));
        if (oracle_root(leaves) != block.header.merkle_root) f.add("oracle root differs at " + std::to_string(h));
        for (std::uint32_t leaf = 0; leaf < block.header.entry_count; ++leaf) {
            ++receipts;
            const Receipt r = ledger->make_receipt(h, leaf);
            const std::string at = std::to_string(h) + "." + std::to_string(leaf);
            if (r.entry_hash != leaves[leaf]) f.add("entry hash differs from oracle at " + at);
            if (verify_receipt(r, key) != ReceiptVerdict::Accept) f.add("valid receipt rejected at " + at);
            if (verify_receipt_wire(receipt_to_json(r).dump(), key) != ReceiptVerdict::Accept) f.add("wire form rejected at " + at);

            std::vector<std::pair<std::string, Receipt>> mutants;
            auto mutant = [&](const std::string& what, auto&& change) {
                Receipt m = r;
                change(m);
                mutants.emplace_back(what, std::move(m));
            };
            mutant("entry_hash", [&](Receipt& m) { m.entry_hash[leaf % 32] ^= 0x01; });
            mutant("leaf_index", [&](Receipt& m) { m.leaf_index ^= 1; });
            for (std::size_t s = 0; s < r.audit_path.size(); ++s) {
                mutant("path[" + std::to_string(s) + "].sibling", [&](Receipt& m) { m.audit_path[s].sibling[s % 32] ^= 0x40; });
                mutant("path[" + std::to_string(s) + "].side", [&](Receipt& m) {
                    m.audit_path[s].side = m.audit_path[s].side == Side::Left ? Side::Right : Side::Left;
                });
            }
            mutant("height", [](Receipt& m) { m.header.height += 1; });
            mutant("prev_hash", [](Receipt& m) { m.header.prev_hash[0] ^= 0x01; });
            mutant("merkle_root", [](Receipt& m) { m.header.merkle_root[31] ^= 0x01; });
            mutant("timestamp", [](Receipt& m) { m.header.timestamp += 1; });
            mutant("entry_count", [](Receipt& m) { m.header.entry_count += 1; });
            mutant("state_digest", [](Receipt& m) { m.header.state_digest[5] ^= 0x20; });
            mutant("signature", [](Receipt& m) { m.header.leader_signature[7] ^= 0x02; });
            for (const auto& [what, m] : mutants) {
                ++mutations;
                if (verify_receipt(m, key) == ReceiptVerdict::Accept) f.add(what + " mutation accepted at " + at);
            }
        }
    }
    return f.outcome(std::to_string(receipts) + " receipts accepted, " + std::to_string(mutations) +
                     " single-field mutations rejected");
}

// ---------------------------------------------------------------------------
// 3. Contract authorization

Outcome contract_authorization() {
    constexpr std::size_t kCases = 10'000;
    constexpr std::size_t kCasesPerLedger = 50;
    std::mt19937_64 rng(3);
    Failures f;
    std::size_t committed = 0, rejected = 0;
    TempDir dir;
    Keyring keys;
    std::unique_ptr<Ledger> ledger;
    for (std::size_t c = 0; c < kCases; ++c) {
        if (c % kCasesPerLedger == 0) {
            ledger.reset();
            ledger = open_ledger(dir / ("l" + std::to_string(c / kCasesPerLedger)), keys);
        }
        const std::string tag = "k" + std::to_string(c) + "-";
        const std::size_t principals = 2 + rng() % 4;
        const std::size_t contracts = 1 + rng() % 3;

        // Oracle model: registered sensor and reading count per contract.
        std::map<std::string, std::string> sensor;
        std::map<std::string, std::size_t> readings;
        std::vector<LedgerEntry> regs;
        for (std::size_t i = 0; i < contracts; ++i) {
            const std::string id = tag + "c" + std::to_string(i);
            sensor[id] = tag + "p" + std::to_string(rng() % principals);
            readings[id] = 0;
            regs.push_back(keys.register_sensor("admin", id, sensor[id]));
        }
        ledger->append_block(regs, leader_key());

        const std::size_t submissions = 1 + rng() % 6;
        for (std::size_t s = 0; s < submissions; ++s) {
            const std::string id = tag + "c" + std::to_string(rng() % contracts);
            const std::string who = tag + "p" + std::to_string(rng() % principals);
            const bool allowed = who == sensor[id];
            LedgerEntry e = keys.reading(who, id, static_cast<std::int64_t>(rng() % 100'000) - 50'000);
            const Digest before = ledger->state().digest();
            const std::uint64_t head = ledger->head_height();
            bool landed = true;
            try {
                ledger->append_block(std::span(&e, 1), leader_key());
            } catch (const LedgerError& err) {
                landed = false;
                if (err.code() != LedgerError::Code::EntryRejected ||
                    std::string(err.what()).find(kUnauthorizedSensorMessage) == std::string::npos) {
                    f.add("case " + std::to_string(c) + ": unexpected error " + err.what());
                }
            }
            if (landed != allowed) f.add("case " + std::to_string(c) + ": committed=" + std::to_string(landed));
            if (landed) {
                ++committed;
                ++readings[id];
            } else {
                ++rejected;
                if (ledger->state().digest() != before || ledger->head_height() != head) {
                    f.add("case " + std::to_string(c) + ": rejected reading changed state");
                }
            }
            const SensorContract* sc = contract_store(ledger->state()).find(id);
            const ContractState want = readings[id] > 0 ? ContractState::InUse : ContractState::Created;
            if (!sc || sc->state != want || sc->readings.size() != readings[id]) {
                f.add("case " + std::to_string(c) + ": lifecycle differs from model");
            }
        }
    }
    return f.outcome(std::to_string(kCases) + " cases, " + std::to_string(committed) + " readings committed, " +
                     std::to_string(rejected) + " rejected");
}

// ---------------------------------------------------------------------------
// 4 and 6. Replication safety, liveness, replay determinism

constexpr const char* kLedger = "sensors";

std::uint64_t committed_height(replication::SimCluster& c, std::size_t i) {
    const auto* r = c.node(i).find(kLedger);
    return r && r->committed_height() ? *r->committed_height() : 0;
}

bool synced(replication::SimCluster& c) {
    const auto* l = c.leader().find(kLedger);
    for (std::size_t i = 1; i < c.size(); ++i) {
        const auto* r = c.running(i) ? c.node(i).find(kLedger) : nullptr;
        if (!r || r->ledger().empty() || r->ledger().head_hash() != l->ledger().head_hash()) return false;
        if (r->committed_height() != l->committed_height()) return false;
    }
    return true;
}

struct ReplicationResults {
    Outcome safety;
    Outcome replay;
    double replay_seconds = 0;
};

ReplicationResults replication_runs() {
    constexpr int kSeeds = 50;
    constexpr std::uint64_t kBlocks = 200;
    Failures safety, replay;
    std::size_t replayed_nodes = 0;
    double replay_seconds = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const std::string s = "seed " + std::to_string(seed);
        TempDir dir;
        Keyring keys;
        replication::SimClusterOptions o;
        o.nodes = 3;
        o.base_dir = dir.path();
        o.network.seed = static_cast<std::uint64_t>(seed);
        o.network.min_delay_ms = 1;
        o.network.max_delay_ms = 40;
        o.entry_keys = keys.lookup();
        replication::SimCluster c(o);
        Workload w(keys, static_cast<std::uint64_t>(seed));
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        const std::size_t victim = 1 + rng() % 2;
        const std::uint64_t crash_at = 40 + rng() % 60;
        const std::uint64_t restart_at = crash_at + 20 + rng() % 60;

        bool live = true;
        for (std::uint64_t b = 1; b <= kBlocks && live; ++b) {
            if (b == crash_at) c.crash(victim);
            if (b == restart_at) c.restart(victim);
            std::uint64_t target = 0;
            c.with_leader([&](replication::NodeHost& h, replication::Outbox& out) {
                target = h.create_ledger(kLedger).append_and_propose(w.next_block(1 + rng() % 6), out).header.height;
            });
            if (!c.network().run_until([&] { return committed_height(c, 0) >= target; }, 30'000)) {
                safety.add(s + ": block " + std::to_string(b) + " never committed");
                live = false;
            }
        }
        if (live && !c.network().run_until([&] { return synced(c); }, 30'000)) {
            safety.add(s + ": restarted follower did not catch up");
        }
        if (!c.safety_ok()) safety.add(s + ": " + c.violations().front());
        if (live) {
            const auto* l = c.leader().find(kLedger);
            const auto* r = c.node(victim).find(kLedger);
            if (l->ledger().head_height() != kBlocks) safety.add(s + ": leader head " + std::to_string(l->ledger().head_height()));
            if (!r || r->ledger().head_hash() != l->ledger().head_hash()) safety.add(s + ": restarted follower head differs");
        }

        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < c.size(); ++i) {
            ContractEngine engine;
            ChainVerificationReport rep = verify_chain(c.config(i).data_dir / kLedger, c.key(0).public_key(), &engine);
            ++replayed_nodes;
            if (!rep.ok) {
                replay.add(s + " " + c.config(i).node_id + ": " +
                           std::string(failure_kind_name(rep.failures.front().kind)) + " at " +
                           std::to_string(rep.failures.front().height));
            } else if (rep.head_height != kBlocks) {
                replay.add(s + " " + c.config(i).node_id + ": replayed only to " + std::to_string(rep.head_height));
            }
        }
        replay_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return {safety.outcome(std::to_string(kSeeds) + " seeds x " + std::to_string(kBlocks) +
                           " blocks, delay 1-40 ms with reorder, one follower crash and restart each"),
            replay.outcome(std::to_string(replayed_nodes) + " node ledgers replayed from genesis, every state digest reproduced"),
            replay_seconds};
}

// ---------------------------------------------------------------------------
// 5. Tamper localization

Outcome tamper_localization() {
    Failures f;
    constexpr std::uint64_t kHead = 12;
    for (std::uint64_t trial = 1; trial <= 100; ++trial) {
        const std::string t = "trial " + std::to_string(trial);
        TempDir dir;
        Keyring keys;
        replication::SimClusterOptions o;
        o.base_dir = dir.path();
        o.network.seed = trial;
        o.entry_keys = keys.lookup();
        replication::SimCluster c(o);
        Workload w(keys, trial);
        for (std::uint64_t b = 1; b <= kHead; ++b) {
            std::uint64_t target = 0;
            c.with_leader([&](replication::NodeHost& h, replication::Outbox& out) {
                target = h.create_ledger(kLedger).append_and_propose(w.next_block(3), out).header.height;
            });
            c.network().run_until([&] { return committed_height(c, 0) >= target; }, 10'000);
        }
        if (!c.network().run_until([&] { return synced(c); }, 10'000)) {
            f.add(t + ": cluster did not converge");
            continue;
        }
        std::mt19937_64 rng(trial * 7919);
        const std::uint64_t height = rng() % (kHead + 1);
        const std::size_t node = rng() % c.size();
        const fs::path file = c.config(node).data_dir / kLedger / block_file_name(height);
        Bytes bytes = read_file(file);
        bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        write_bytes(file, bytes);

        auto audits = c.audit(kLedger, 0, kHead);
        replication::DivergenceReport rep = replication::audit_consistency(audits, 0, kHead);
        if (rep.divergent != std::vector<std::uint64_t>{height}) {
            f.add(t + ": expected divergence at " + std::to_string(height));
        } else if (rep.minority[height] != std::vector<std::string>{c.config(node).node_id}) {
            f.add(t + ": minority does not name " + c.config(node).node_id);
        }
        if (!rep.missing.empty()) f.add(t + ": spurious missing blocks");
    }
    return f.outcome("100 trials, one random byte in one replica's block at a random height");
}

// ---------------------------------------------------------------------------
// 7. End-to-end scenario

Outcome end_to_end() {
    TempDir dir;
    harness::Scenario sc = harness::load_scenario(fs::path(PIPECHAIN_SOURCE_DIR) / "scenarios" / "demo.scenario");
    std::set<harness::AttackKind> kinds;
    std::set<Parameter> params;
    for (const auto& a : sc.attacks) kinds.insert(a.kind);
    for (const auto& p : sc.producers) params.insert(p.parameter);
    auto d = harness::make_sim_deployment(sc, dir.path());
    harness::RunReport r = harness::run_scenario(sc, *d);
    Failures f;
    if (sc.producers.size() != 4 || params.size() != 4) f.add("scenario does not cover four parameters");
    if (sc.nodes != 3) f.add("scenario is not three nodes");
    if (sc.attacks.size() != 4 || kinds.size() != 4) f.add("scenario does not carry one attack of each kind");
    if (r.detected_total() != 4) f.add("detected " + std::to_string(r.detected_total()));
    if (!r.undetected.empty()) f.add("undetected: " + r.undetected.front());
    if (!r.conserved()) f.add("conservation violated");
    if (r.exit_code() != 0) f.add("exit code " + std::to_string(r.exit_code()));
    std::ostringstream s;
    s << "produced " << r.produced << " = committed " << r.committed << " + rejected " << r.rejected_total()
      << " + parse drops " << r.parse_dropped << "; attacks detected " << r.detected_total() << "/" << r.attacks_injected;
    return f.outcome(s.str());
}

// ---------------------------------------------------------------------------
// 8. API shape

Outcome api_shape() {
    using namespace pipechain::gateway;
    TempDir dir;
    Failures f;
    auto pkey = [](const std::string& id) { return SigningKey::derive("acceptance:" + id); };
    std::string cfg = "public_uri = http://127.0.0.1:8080\nbatch_max_delay_ms = 10\n";
    for (auto [id, role] : {std::pair{"admin", "Administrator"}, {"contrib", "Contributor"}, {"reader", "Reader"}}) {
        cfg += std::string("cert = ") + id + " " + to_hex(pkey(id).public_key()) + " " + role + "\n";
    }

    replication::SimClusterOptions o;
    o.base_dir = dir / "nodes";
    const SigningKey ingress = SigningKey::derive("sim:node-0");
    o.entry_keys = [pk = ingress.public_key()](std::string_view) { return std::optional<PublicKey>(pk); };
    replication::SimCluster cluster(o);
    SimClusterLink link(cluster);
    GatewayOptions g;
    g.config = parse_gateway_config(cfg);
    g.state_dir = dir / "gateway";
    g.cluster = &link;
    g.ingress_key = ingress;
    Gateway gw(std::move(g));

    std::map<std::string, std::uint64_t> nonces;
    auto call = [&](const std::string& method, const std::string& target, const std::string& body,
                    const std::string& who = "admin") {
        HttpRequest r{method, target, {}, body};
        sign_request(r, who, pkey(who), ++nonces[who]);
        return gw.handle(r);
    };
    auto settle = [&](const std::string& ledger) {
        for (int i = 0; i < 500; ++i) {
            gw.pump();
            cluster.network().run_for(20);
            const auto* r = cluster.leader().find(ledger);
            if (gw.queued(ledger) == 0 && r && !r->proposal_in_flight()) break;
        }
        gw.pump();
    };
    auto keys_of = [](const json& j) {
        std::set<std::string> out;
        for (const auto& [k, _] : j.items()) out.insert(k);
        return out;
    };

    // Descriptor shape.
    json body{{"ledgerType", "Private"},
              {"aadBasedSecurityPrincipals", {{{"principalId", "svc"}, {"tenantId", "t1"}, {"ledgerRoleName", "Reader"}}}},
              {"certBasedSecurityPrincipals",
               {{{"principalId", "extra"}, {"publicKeyHex", to_hex(pkey("extra").public_key())}, {"ledgerRoleName", "Reader"}}}}};
    HttpResponse created = call("PUT", "/ledgers/shape-check", body.dump());
    if (created.status != 201) f.add("create answered " + std::to_string(created.status));
    json d = json::parse(created.body, nullptr, false);
    const std::set<std::string> top{"ledgerName", "ledgerUri", "identityServiceUri", "ledgerType",
                                    "aadBasedSecurityPrincipals", "certBasedSecurityPrincipals"};
    if (!d.is_object() || keys_of(d) != top) f.add("descriptor fields differ: " + d.dump());
    else {
        if (keys_of(d["aadBasedSecurityPrincipals"][0]) != std::set<std::string>{"principalId", "tenantId", "ledgerRoleName"}) {
            f.add("aad principal fields differ");
        }
        if (keys_of(d["certBasedSecurityPrincipals"][0]) != std::set<std::string>{"principalId", "publicKeyHex", "ledgerRoleName"}) {
            f.add("cert principal fields differ");
        }
    }

    // RBAC: the table, and the same nine pairs through the HTTP layer.
    const std::map<std::pair<Role, gateway::Action>, bool> table = {
        {{Role::Administrator, gateway::Action::AdminCrud}, true}, {{Role::Administrator, gateway::Action::Append}, true},
        {{Role::Administrator, gateway::Action::Read}, true},      {{Role::Contributor, gateway::Action::AdminCrud}, false},
        {{Role::Contributor, gateway::Action::Append}, true},      {{Role::Contributor, gateway::Action::Read}, true},
        {{Role::Reader, gateway::Action::AdminCrud}, false},       {{Role::Reader, gateway::Action::Append}, false},
        {{Role::Reader, gateway::Action::Read}, true},
    };
    const std::map<Role, std::string> who{{Role::Administrator, "admin"}, {Role::Contributor, "contrib"}, {Role::Reader, "reader"}};
    int n = 0;
    for (const auto& [pair, allowed] : table) {
        const auto [role, action] = pair;
        const std::string label = std::string(role_name(role)) + "/" + std::string(action_name(action));
        if (authorize(role, action) != allowed) f.add("authorize " + label);
        HttpResponse r;
        if (action == gateway::Action::AdminCrud) {
            r = call("PUT", "/ledgers/rbac-" + std::to_string(n++), "", who.at(role));
        } else if (action == gateway::Action::Append) {
            r = call("POST", "/ledgers/shape-check/transactions",
                     json{{"action", "RegisterSensor"}, {"contractId", "rbac-" + std::to_string(n++)}, {"sensorPrincipalId", "s"}}.dump(),
                     who.at(role));
        } else {
            r = call("GET", "/ledgers/shape-check", "", who.at(role));
        }
        if ((r.status == 403) == allowed || r.status >= 400 && r.status != 403) f.add("HTTP " + label + " answered " + std::to_string(r.status));
    }

    // CRUD cycle with a committed block.
    settle("shape-check");
    json patch{{"aadBasedSecurityPrincipals", json::array()}};
    HttpResponse updated = call("PATCH", "/ledgers/shape-check", patch.dump());
    if (updated.status != 200 || !json::parse(updated.body)["aadBasedSecurityPrincipals"].empty()) f.add("update failed");
    if (call("GET", "/ledgers/shape-check", "").body != updated.body) f.add("get after update differs");
    if (call("DELETE", "/ledgers/shape-check", "").status != 204) f.add("delete failed");
    if (call("GET", "/ledgers/shape-check", "").status != 404) f.add("get after delete is not 404");
    for (std::size_t i = 0; i < cluster.size(); ++i) {
        const fs::path ledger_dir = cluster.config(i).data_dir / "shape-check";
        ChainVerificationReport rep = verify_chain(ledger_dir, ingress.public_key());
        if (!rep.ok || rep.head_height < 1) f.add(cluster.config(i).node_id + " lost its block files");
    }
    return f.outcome("descriptor fields exact, 9 role/action pairs checked twice, create-get-update-delete-get(404) with blocks retained");
}

struct Criterion {
    int number;
    std::string name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    if (sodium_init() < 0) return 2;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    std::optional<ReplicationResults> replication;
    auto replication_once = [&]() -> ReplicationResults& {
        if (!replication) replication = replication_runs();
        return *replication;
    };
    std::vector<Criterion> criteria = {
        {1, "tamper evidence", 60, tamper_evidence},
        {2, "receipt soundness", 30, receipt_soundness},
        {3, "contract authorization", 30, contract_authorization},
        {4, "replication safety and liveness", 120, [&] { return replication_once().safety; }},
        {5, "tamper localization", 0, tamper_localization},
        {6, "replay determinism", 0, [&] { return replication_once().replay; }},
        {7, "end-to-end scenario", 120, end_to_end},
        {8, "API shape conformance", 0, api_shape},
    };

    bool all = true;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.contains(c.number)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.number == 4 && replication) secs -= replication->replay_seconds;
        if (c.number == 6 && replication) secs = replication->replay_seconds;
        const bool in_time = c.limit_s == 0 || secs < c.limit_s;
        const bool pass = o.pass && in_time;
        all = all && pass;
        char timing[96];
        if (c.limit_s > 0) std::snprintf(timing, sizeof timing, "%.1f s, limit %.0f s", secs, c.limit_s);
        else std::snprintf(timing, sizeof timing, "%.1f s", secs);
        std::printf("criterion %d %-32s %s  (%s; %s)\n", c.number, c.name.c_str(), pass ? "PASS" : "FAIL", o.detail.c_str(),
                    timing);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
