// SPDX-License-Identifier: Apache-2.0
#include "pipechain/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "pipechain/contract.hpp"
#include "pipechain/receipt.hpp"

namespace pipechain::harness {

namespace fs = std::filesystem;
using gateway::HttpRequest;
using gateway::HttpResponse;
using json = nlohmann::json;

std::uint64_t RunReport::rejected_total() const {
    std::uint64_t n = 0;
    for (const auto& [_, c] : rejected) n += c;
    return n;
}

std::uint64_t RunReport::detected_total() const {
    std::uint64_t n = 0;
    for (const auto& [_, c] : attacks_detected) n += c;
    return n;
}

int RunReport::exit_code() const {
    if (!undetected.empty() || !verification_failures.empty()) return 1;
    if (detected_total() + undetected.size() != attacks_injected) return 1;
    for (const auto& [_, ok] : invariants) {
        if (!ok) return 1;
    }
    return 0;
}

json RunReport::counters() const {
    return json{{"produced", produced},
                {"committed", committed},
                {"rejected", rejected},
                {"parseDropped", parse_dropped},
                {"attacksInjected", attacks_injected},
                {"attacksDetected", attacks_detected},
                {"undetected", undetected},
                {"receiptsVerified", receipts_verified},
                {"verificationFailures", verification_failures.size()}};
}

json RunReport::summary() const {
    json j = counters();
    j["record"] = "summary";
    j["invariants"] = invariants;
    j["exitCode"] = exit_code();
    return j;
}

std::string RunReport::to_records() const {
    std::string out;
    for (const auto& e : events) out += e.dump() + "\n";
    out += summary().dump() + "\n";
    return out;
}

std::string RunReport::human_summary() const {
    std::ostringstream o;
    o << "produced            " << produced << "\n";
    o << "committed           " << committed << "\n";
    o << "rejected            " << rejected_total();
    if (!rejected.empty()) {
        o << " (";
        bool first = true;
        for (const auto& [k, v] : rejected) o << (first ? "" : ", ") << k << " " << v, first = false;
        o << ")";
    }
    o << "\nparse drops         " << parse_dropped << "\n";
    o << "attacks injected    " << attacks_injected << "\n";
    o << "attacks detected    " << detected_total();
    if (!attacks_detected.empty()) {
        o << " (";
        bool first = true;
        for (const auto& [k, v] : attacks_detected) o << (first ? "" : ", ") << k << " " << v, first = false;
        o << ")";
    }
    o << "\nundetected          " << undetected.size() << "\n";
    for (const auto& u : undetected) o << "  - " << u << "\n";
    o << "receipts verified   " << receipts_verified << "\n";
    o << "verify failures     " << verification_failures.size() << "\n";
    for (const auto& f : verification_failures) {
        o << "  - " << detection_site_name(f.site) << " " << f.subject << ": " << f.reason << "\n";
    }
    for (const auto& [k, ok] : invariants) o << "invariant " << k << (ok ? " ok" : " FAILED") << "\n";
    o << "result              " << (exit_code() == 0 ? "PASS" : "FAIL") << "\n";
    return o.str();
}

namespace {

std::string error_code(const HttpResponse& r) {
    json j = json::parse(r.body, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"];
    return "HTTP" + std::to_string(r.status);
}

std::string error_message(const HttpResponse& r) {
    json j = json::parse(r.body, nullptr, false);
    if (j.is_object() && j.contains("message") && j["message"].is_string()) return j["message"];
    return r.body;
}

json reading_body(const std::string& contract_id, const Reading& r) {
    return json{{"action", "AddReading"},
                {"contractId", contract_id},
                {"parameter", parameter_name(r.parameter)},
                {"valueScaled", r.value_scaled},
                {"unit", r.unit},
                {"sourceTimestamp", r.source_timestamp}};
}

/// A principal the harness acts as. Signing and sending happen under one
/// lock so nonces reach the gateway in order.
struct Actor {
    Credential cred;
    std::uint64_t nonce = 0;
    std::mutex mu;

    HttpRequest build(const std::string& method, const std::string& target, std::string body) {
        HttpRequest r{method, target, {}, std::move(body)};
        if (cred.key) gateway::sign_request(r, cred.principal_id, *cred.key, ++nonce);
        else gateway::set_bearer(r, *cred.token);
        return r;
    }
};

HttpResponse must_reach(Deployment& d, const HttpRequest& req) {
    HttpResponse r = d.send(req);
    if (r.status == 0) throw HarnessError("gateway unreachable: " + r.body);
    if (r.status >= 500 && r.status != 503) throw HarnessError("gateway error " + std::to_string(r.status) + ": " + r.body);
    return r;
}

void flip_file_byte(const fs::path& file, std::uint64_t seed) {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    if (!f) throw HarnessError("cannot open " + file.string());
    f.seekg(0, std::ios::end);
    const auto size = static_cast<std::uint64_t>(f.tellg());
    if (size == 0) throw HarnessError("empty block file " + file.string());
    std::mt19937_64 rng(seed);
    const std::uint64_t pos = rng() % size;
    const auto mask = static_cast<char>(1 + rng() % 255);
    char c = 0;
    f.seekg(static_cast<std::streamoff>(pos));
    f.read(&c, 1);
    c ^= mask;
    f.seekp(static_cast<std::streamoff>(pos));
    f.write(&c, 1);
}

std::string mutate_body(const std::string& body, const std::string& mutation, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (mutation == "byte") {
        std::string out = body;
        const std::size_t pos = rng() % out.size();
        out[pos] = static_cast<char>(out[pos] ^ static_cast<char>(1 + rng() % 255));
        return out;
    }
    json j = json::parse(body, nullptr, false);
    const std::string field = mutation.substr(6);
    if (j.is_object() && j.contains(field)) {
        json& v = j[field];
        if (v.is_number_integer()) v = v.get<std::int64_t>() + 1 + static_cast<std::int64_t>(rng() % 1000);
        else if (v.is_string()) v = v.get<std::string>() + "x";
        else v = "tampered";
    } else if (j.is_object()) {
        j[field] = "tampered";
    }
    return j.dump();
}

class Run {
public:
    Run(const Scenario& sc, Deployment& d) : sc_(sc), d_(d) {
        admin_ = actor(sc.admin);
        for (const auto& p : sc.producers) producers_.push_back(actor(p.principal));
        for (const auto& a : sc.attacks) {
            if (a.kind == AttackKind::ForgeSubmitter) actor(a.principal);
        }
        if (!d.deterministic()) {
            // Nonces must exceed anything a previous run left on the ledger.
            const auto now_us = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                                               std::chrono::system_clock::now().time_since_epoch())
                                                               .count());
            for (auto& [_, a] : actors_) a->nonce = now_us;
        }
        for (std::size_t i = 0; i < sc.attacks.size(); ++i) {
            const AttackSpec& a = sc.attacks[i];
            if (a.kind == AttackKind::MutateReplicaStorage) {
                storage_attacks_.push_back(i);
            } else {
                auto idx = producer_index(a.target);
                producer_attacks_[{idx, a.after}].push_back(i);
            }
        }
        for (std::size_t i = 0; i < sc.producers.size(); ++i) {
            ProducerSpec spec = sc.producers[i];
            spec.value_model.noise_seed = mix_seed(sc.seed, spec.value_model.noise_seed * 0x100 + i);
            records_.push_back(run_producer(spec, sc.messages, sc.start_timestamp));
            std::string contract = spec.producer_id;
            if (!d.deterministic()) contract += "-" + std::to_string(sc.start_timestamp) + "-" + std::to_string(sc.seed);
            contracts_[spec.producer_id] = contract;
        }
    }

    RunReport execute() {
        start_ms_ = d_.now_ms();
        setup();
        if (d_.deterministic()) {
            run_scheduled();
        } else {
            run_threaded();
        }
        std::vector<CommittedTx> committed = await_commits();
        finish_storage_attacks();
        run_consumer_verify(d_, sc_.ledger, committed, contracts_, d_.leader_key(), sc_.admin, report_);
        audit_replicas(committed);
        check_chains();
        report_.invariants["conservation"] = report_.conserved();
        return std::move(report_);
    }

private:
    Actor* actor(const std::string& ref) {
        Credential c = parse_credential(ref);
        auto& slot = actors_[c.principal_id];
        if (!slot) {
            slot = std::make_unique<Actor>();
            slot->cred = std::move(c);
        }
        return slot.get();
    }

    std::size_t producer_index(const std::string& id) const {
        for (std::size_t i = 0; i < sc_.producers.size(); ++i) {
            if (sc_.producers[i].producer_id == id) return i;
        }
        throw HarnessError("TargetUnavailable: no producer " + id);
    }

    HttpResponse send_as(Actor& a, const std::string& method, const std::string& target, const std::string& body) {
        std::lock_guard lock(a.mu);
        return must_reach(d_, a.build(method, target, body));
    }

    std::string tx_path() const { return "/ledgers/" + sc_.ledger + "/transactions"; }

    void event(json e) {
        std::lock_guard lock(mu_);
        report_.events.push_back(std::move(e));
    }

    void setup() {
        HttpResponse created = send_as(*admin_, "PUT", "/ledgers/" + sc_.ledger, "");
        if (created.status == 409 && !d_.deterministic()) {
            // Reuse the ledger; contracts carry a per-run suffix.
        } else if (created.status != 201) {
            throw HarnessError("cannot create ledger " + sc_.ledger + ": " + created.body);
        }
        for (std::size_t i = 0; i < sc_.producers.size(); ++i) {
            json body{{"action", "RegisterSensor"},
                      {"contractId", contracts_[sc_.producers[i].producer_id]},
                      {"sensorPrincipalId", producers_[i]->cred.principal_id}};
            HttpResponse r = send_as(*admin_, "POST", tx_path(), body.dump());
            if (r.status != 202) throw HarnessError("cannot register " + sc_.producers[i].producer_id + ": " + r.body);
            registrations_.push_back(json::parse(r.body)["transactionId"]);
        }
    }

    void attack_event(const AttackSpec& a, bool detected, std::optional<DetectionSite> site, const std::string& detail) {
        std::lock_guard lock(mu_);
        ++report_.attacks_injected;
        if (detected) {
            ++report_.attacks_detected[std::string(detection_site_name(*site))];
        } else {
            report_.undetected.push_back(std::string(attack_kind_name(a.kind)) + " on " + a.target + ": " + detail);
        }
        json e{{"record", "attack"}, {"kind", attack_kind_name(a.kind)}, {"target", a.target}, {"detected", detected},
               {"detail", detail}};
        if (site) e["site"] = detection_site_name(*site);
        report_.events.push_back(std::move(e));
    }

    void submit(std::size_t i, std::uint64_t k) {
        const ProducerSpec& spec = sc_.producers[i];
        const RawRecord& raw = records_[i][k];
        {
            std::lock_guard lock(mu_);
            ++report_.produced;
        }
        auto normalized = normalize(raw);
        if (auto* pe = std::get_if<ParseError>(&normalized)) {
            std::lock_guard lock(mu_);
            ++report_.parse_dropped;
            report_.events.push_back(json{{"record", "parse_error"},
                                          {"producer", spec.producer_id},
                                          {"seq", k},
                                          {"line", raw.line},
                                          {"reason", pe->reason}});
            return;
        }
        const Reading reading = std::get<Reading>(normalized);
        const std::string& contract = contracts_.at(spec.producer_id);
        const std::string body = reading_body(contract, reading).dump();

        std::vector<std::size_t> attacks;
        if (auto it = producer_attacks_.find({i, k}); it != producer_attacks_.end()) attacks = it->second;

        Actor& me = *producers_[i];
        HttpRequest req;
        HttpResponse resp;
        {
            std::lock_guard lock(me.mu);
            req = me.build("POST", tx_path(), body);
            HttpRequest wire = req;
            for (std::size_t ai : attacks) {
                const AttackSpec& a = sc_.attacks[ai];
                if (a.kind == AttackKind::ModifyInFlight) {
                    wire.body = mutate_body(wire.body, a.mutation, mix_seed(sc_.seed, a.seed));
                }
            }
            resp = must_reach(d_, wire);
            for (std::size_t ai : attacks) {
                const AttackSpec& a = sc_.attacks[ai];
                if (a.kind != AttackKind::ModifyInFlight) continue;
                bool caught = resp.status == 401 && error_code(resp) == "BadSignature";
                attack_event(a, caught, caught ? std::optional(DetectionSite::GatewayAuth) : std::nullopt,
                             "gateway answered " + std::to_string(resp.status) + " " + error_code(resp));
            }
        }
        record_outcome(spec, k, contract, me.cred.principal_id, reading, resp);

        for (std::size_t ai : attacks) {
            const AttackSpec& a = sc_.attacks[ai];
            if (a.kind == AttackKind::ReplayRequest) {
                HttpResponse again = must_reach(d_, req);
                bool caught = again.status == 401;
                attack_event(a, caught, caught ? std::optional(DetectionSite::GatewayAuth) : std::nullopt,
                             "replay answered " + std::to_string(again.status) + " " + error_code(again));
            } else if (a.kind == AttackKind::ForgeSubmitter) {
                Actor& forger = *actors_.at(parse_credential(a.principal).principal_id);
                HttpResponse forged = send_as(forger, "POST", tx_path(), body);
                bool caught = forged.status == 422 && error_message(forged) == kUnauthorizedSensorMessage;
                attack_event(a, caught, caught ? std::optional(DetectionSite::ContractGuard) : std::nullopt,
                             "forged reading answered " + std::to_string(forged.status) + " " + error_message(forged));
            }
        }
    }

    void record_outcome(const ProducerSpec& spec, std::uint64_t k, const std::string& contract,
                        const std::string& principal, const Reading& reading, const HttpResponse& resp) {
        std::lock_guard lock(mu_);
        json e{{"record", "submission"}, {"producer", spec.producer_id}, {"seq", k}, {"status", resp.status}};
        if (resp.status == 202) {
            std::string id = json::parse(resp.body)["transactionId"];
            accepted_.push_back(Submitted{spec.producer_id, contract, principal, id, reading});
            e["transactionId"] = id;
        } else {
            std::string code = error_code(resp);
            ++report_.rejected[code];
            e["error"] = code;
        }
        report_.events.push_back(std::move(e));
    }

    void run_scheduled() {
        struct Slot {
            std::uint64_t at_ms;
            std::uint64_t tiebreak;
            std::size_t producer;
            std::uint64_t k;
            bool operator<(const Slot& o) const {
                return std::tie(at_ms, tiebreak, producer, k) < std::tie(o.at_ms, o.tiebreak, o.producer, o.k);
            }
        };
        std::mt19937_64 rng(mix_seed(sc_.seed, 0x736368));
        std::vector<Slot> schedule;
        for (std::size_t i = 0; i < sc_.producers.size(); ++i) {
            for (std::uint64_t k = 0; k < sc_.messages; ++k) {
                schedule.push_back(Slot{k * 1'000'000 / sc_.producers[i].rate_millihz, rng(), i, k});
            }
        }
        std::sort(schedule.begin(), schedule.end());
        for (const Slot& s : schedule) {
            const std::uint64_t elapsed = d_.now_ms() - start_ms_;
            if (s.at_ms > elapsed) d_.wait(s.at_ms - elapsed);
            submit(s.producer, s.k);
            try_storage_attacks();
        }
    }

    void run_threaded() {
        std::vector<std::thread> threads;
        std::atomic<std::size_t> running{sc_.producers.size()};
        std::vector<std::exception_ptr> errors(sc_.producers.size());
        for (std::size_t i = 0; i < sc_.producers.size(); ++i) {
            threads.emplace_back([this, i, &running, &errors] {
                try {
                    for (std::uint64_t k = 0; k < sc_.messages; ++k) submit(i, k);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
                --running;
            });
        }
        while (running > 0) {
            try_storage_attacks();
            d_.wait(20);
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    void try_storage_attacks() {
        for (std::size_t ai : storage_attacks_) {
            if (applied_.contains(ai)) continue;
            const AttackSpec& a = sc_.attacks[ai];
            auto file = d_.block_file(a.target, sc_.ledger, a.height);
            if (!file) continue;
            flip_file_byte(*file, mix_seed(sc_.seed, a.seed));
            applied_.insert(ai);
            event(json{{"record", "storage_mutation"}, {"node", a.target}, {"height", a.height}, {"file", file->string()}});
        }
    }

    void finish_storage_attacks() {
        const std::uint64_t deadline = d_.now_ms() + sc_.commit_timeout_ms;
        while (applied_.size() < storage_attacks_.size() && d_.now_ms() < deadline) {
            try_storage_attacks();
            if (applied_.size() < storage_attacks_.size()) d_.wait(50);
        }
        for (std::size_t ai : storage_attacks_) {
            if (!applied_.contains(ai)) {
                const AttackSpec& a = sc_.attacks[ai];
                throw HarnessError("TargetUnavailable: " + a.target + " never stored height " + std::to_string(a.height));
            }
        }
    }

    std::vector<CommittedTx> await_commits() {
        const std::uint64_t deadline = d_.now_ms() + sc_.commit_timeout_ms;
        std::vector<CommittedTx> committed;
        std::vector<Submitted> pending = accepted_;
        std::vector<std::string> regs = registrations_;
        while (!pending.empty() || !regs.empty()) {
            std::vector<Submitted> still;
            for (auto& s : pending) {
                HttpResponse r = send_as(*admin_, "GET", tx_path() + "/" + s.provisional_id, "");
                json j = json::parse(r.body, nullptr, false);
                std::string state = j.is_object() ? j.value("state", "") : "";
                if (r.status == 200 && state == "Committed") {
                    ++report_.committed;
                    committed.push_back(CommittedTx{s, j["transactionId"], j["height"], j["leafIndex"]});
                } else if (r.status == 200 && state == "Rejected") {
                    ++report_.rejected["Rejected"];
                } else if (r.status == 200) {
                    still.push_back(std::move(s));
                } else {
                    throw HarnessError("lost transaction " + s.provisional_id + ": " + r.body);
                }
            }
            pending = std::move(still);
            std::vector<std::string> regs_left;
            for (auto& id : regs) {
                HttpResponse r = send_as(*admin_, "GET", tx_path() + "/" + id, "");
                json j = json::parse(r.body, nullptr, false);
                std::string state = j.is_object() ? j.value("state", "") : "";
                if (state == "Rejected") throw HarnessError("sensor registration rejected: " + r.body);
                if (state != "Committed") regs_left.push_back(id);
            }
            regs = std::move(regs_left);
            if (pending.empty() && regs.empty()) break;
            if (d_.now_ms() > deadline) {
                throw HarnessError(std::to_string(pending.size() + regs.size()) + " transactions still pending after " +
                                   std::to_string(sc_.commit_timeout_ms) + " ms");
            }
            d_.wait(50);
        }
        std::sort(committed.begin(), committed.end(),
                  [](const CommittedTx& a, const CommittedTx& b) { return std::tie(a.height, a.leaf) < std::tie(b.height, b.leaf); });
        return committed;
    }

    void audit_replicas(const std::vector<CommittedTx>& committed) {
        std::uint64_t to = 0;
        for (const auto& c : committed) to = std::max(to, c.height);
        for (std::size_t ai : storage_attacks_) to = std::max(to, sc_.attacks[ai].height);

        replication::DivergenceReport report;
        const std::uint64_t deadline = d_.now_ms() + sc_.commit_timeout_ms;
        for (;;) {
            auto nodes = d_.audit(sc_.ledger, 0, to);
            try {
                report = replication::audit_consistency(nodes, 0, to);
            } catch (const replication::ReplicationError& e) {
                throw HarnessError(std::string("replica audit impossible: ") + e.what());
            }
            // Followers may still be catching up; only divergence is final.
            if (report.missing.empty() || d_.now_ms() > deadline) break;
            d_.wait(100);
        }

        std::set<std::uint64_t> explained;
        for (std::size_t ai : storage_attacks_) {
            const AttackSpec& a = sc_.attacks[ai];
            bool divergent = std::find(report.divergent.begin(), report.divergent.end(), a.height) != report.divergent.end();
            bool named = false;
            if (auto it = report.minority.find(a.height); it != report.minority.end()) {
                named = std::find(it->second.begin(), it->second.end(), a.target) != it->second.end();
            }
            bool caught = divergent && named;
            if (caught) explained.insert(a.height);
            attack_event(a, caught, caught ? std::optional(DetectionSite::ReplicaAudit) : std::nullopt,
                         "audit " + std::string(divergent ? "flagged" : "did not flag") + " height " +
                             std::to_string(a.height) + (named ? " naming " + a.target : ""));
        }
        for (std::uint64_t h : report.divergent) {
            if (explained.contains(h)) continue;
            std::string who;
            for (const auto& n : report.minority[h]) who += (who.empty() ? "" : ",") + n;
            report_.verification_failures.push_back(
                {DetectionSite::ReplicaAudit, "height " + std::to_string(h), "replicas disagree; minority " + who});
            event(json{{"record", "verification_failure"}, {"site", "ReplicaAudit"}, {"height", h}, {"minority", who}});
        }
        for (const auto& m : report.missing) {
            report_.verification_failures.push_back({DetectionSite::ReplicaAudit, m.node_id,
                                                     "missing height " + std::to_string(m.height)});
        }
    }

    void check_chains() {
        std::set<std::string> mutated;
        for (std::size_t ai : storage_attacks_) mutated.insert(sc_.attacks[ai].target);
        bool replay_ok = true;
        bool mutation_flagged = true;
        for (const auto& [node, dir] : d_.ledger_dirs(sc_.ledger)) {
            ContractEngine engine;
            ChainVerificationReport r = verify_chain(dir, d_.leader_key(), &engine);
            if (mutated.contains(node)) {
                for (std::size_t ai : storage_attacks_) {
                    const AttackSpec& a = sc_.attacks[ai];
                    if (a.target == node && !r.has_failure_at(a.height)) mutation_flagged = false;
                }
            } else if (!r.ok) {
                replay_ok = false;
                event(json{{"record", "verification_failure"},
                           {"site", "ReplicaAudit"},
                           {"node", node},
                           {"reason", r.failures.empty() ? "" : r.failures.front().detail}});
            }
        }
        report_.invariants["chain_replay"] = replay_ok;
        if (!storage_attacks_.empty()) report_.invariants["mutated_replica_flagged"] = mutation_flagged;
    }

    const Scenario& sc_;
    Deployment& d_;
    RunReport report_;
    std::mutex mu_;
    std::map<std::string, std::unique_ptr<Actor>> actors_;
    Actor* admin_ = nullptr;
    std::vector<Actor*> producers_;
    std::vector<std::vector<RawRecord>> records_;
    std::map<std::string, std::string> contracts_;
    std::map<std::pair<std::size_t, std::uint64_t>, std::vector<std::size_t>> producer_attacks_;
    std::vector<std::size_t> storage_attacks_;
    std::set<std::size_t> applied_;
    std::vector<Submitted> accepted_;
    std::vector<std::string> registrations_;
    std::uint64_t start_ms_ = 0;
};

}  // namespace

void run_consumer_verify(Deployment& d, const std::string& ledger, const std::vector<CommittedTx>& txs,
                         const std::map<std::string, std::string>& contracts, const PublicKey& leader_key,
                         const std::string& reader_credential, RunReport& report) {
    Actor reader;
    reader.cred = parse_credential(reader_credential);
    if (!d.deterministic()) {
        reader.nonce = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                                      std::chrono::system_clock::now().time_since_epoch())
                                                      .count()) +
                       1'000'000'000;
    } else {
        reader.nonce = 1'000'000'000;
    }
    const std::string base = "/ledgers/" + ledger;
    auto fail = [&report](const std::string& subject, const std::string& reason) {
        report.verification_failures.push_back({DetectionSite::ReceiptVerify, subject, reason});
        report.events.push_back(
            json{{"record", "verification_failure"}, {"site", "ReceiptVerify"}, {"subject", subject}, {"reason", reason}});
    };

    std::map<std::string, std::vector<std::pair<std::pair<std::uint64_t, std::uint32_t>, ReadingPayload>>> verified;
    std::set<std::string> tainted;
    for (const CommittedTx& tx : txs) {
        const std::string& id = tx.transaction_id;
        const std::string& contract = tx.submitted.contract_id;
        HttpResponse tr = must_reach(d, reader.build("GET", base + "/transactions/" + id, ""));
        json tj = json::parse(tr.body, nullptr, false);
        if (tr.status != 200 || !tj.is_object() || !tj.contains("entryBytes")) {
            fail(id, "transaction lookup answered " + std::to_string(tr.status));
            tainted.insert(contract);
            continue;
        }
        LedgerEntry entry;
        ReadingPayload payload;
        try {
            entry = LedgerEntry::decode(from_hex(tj["entryBytes"].get<std::string>()));
            payload = ReadingPayload::decode(entry.payload);
        } catch (const std::exception& e) {
            fail(id, std::string("entry bytes do not decode: ") + e.what());
            tainted.insert(contract);
            continue;
        }
        const Reading& want = tx.submitted.reading;
        if (entry.contract_id != contract || entry.submitter_id != tx.submitted.principal_id ||
            entry.action != Action::AddReading || payload.parameter != want.parameter ||
            payload.value_scaled != want.value_scaled || payload.unit != want.unit ||
            payload.source_timestamp != want.source_timestamp) {
            fail(id, "committed entry differs from the submitted reading");
            tainted.insert(contract);
            continue;
        }

        HttpResponse rr = must_reach(d, reader.build("GET", base + "/transactions/" + id + "/receipt", ""));
        if (rr.status != 200) {
            fail(id, "receipt lookup answered " + std::to_string(rr.status));
            tainted.insert(contract);
            continue;
        }
        ReceiptVerdict v = verify_receipt_wire(rr.body, leader_key);
        if (v != ReceiptVerdict::Accept) {
            fail(id, "receipt rejected: " + std::string(verdict_name(v)));
            tainted.insert(contract);
            continue;
        }
        auto receipt = parse_receipt_wire(rr.body);
        if (receipt->entry_hash != hash_entry(entry) || receipt->header.height != tx.height ||
            receipt->leaf_index != tx.leaf) {
            fail(id, "receipt does not cover this entry");
            tainted.insert(contract);
            continue;
        }
        ++report.receipts_verified;
        verified[contract].push_back({{tx.height, tx.leaf}, payload});
    }

    // Replay the verified entries and compare with what the gateway serves.
    for (const auto& [producer, contract] : contracts) {
        if (tainted.contains(contract)) continue;
        auto& mine = verified[contract];
        std::sort(mine.begin(), mine.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        HttpResponse r = must_reach(d, reader.build("GET", base + "/contracts/" + contract + "/readings", ""));
        json j = json::parse(r.body, nullptr, false);
        if (r.status != 200 || !j.is_object() || !j.contains("readings") || !j["readings"].is_array()) {
            if (mine.empty() && r.status == 200) continue;
            fail("contract " + contract, "readings lookup answered " + std::to_string(r.status));
            continue;
        }
        const json& got = j["readings"];
        if (got.size() != mine.size()) {
            fail("contract " + contract, "gateway serves " + std::to_string(got.size()) + " readings, receipts prove " +
                                             std::to_string(mine.size()));
            continue;
        }
        for (std::size_t i = 0; i < mine.size(); ++i) {
            const ReadingPayload& p = mine[i].second;
            const json& g = got[i];
            bool same = g.value("parameter", "") == parameter_name(p.parameter) && g.contains("valueScaled") &&
                        g["valueScaled"].is_number_integer() && g["valueScaled"].get<std::int64_t>() == p.value_scaled &&
                        g.value("unit", "") == p.unit && g.contains("sourceTimestamp") &&
                        g["sourceTimestamp"].is_number_unsigned() &&
                        g["sourceTimestamp"].get<std::uint64_t>() == p.source_timestamp;
            if (!same) {
                fail("contract " + contract, "reading " + std::to_string(i) + " differs from the receipt-verified entry");
                break;
            }
        }
    }
}

RunReport run_scenario(const Scenario& scenario, Deployment& deployment) {
    return Run(scenario, deployment).execute();
}

}  // namespace pipechain::harness
