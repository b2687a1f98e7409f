// SPDX-License-Identifier: Apache-2.0
#include "pipechain/harness/scenario.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pipechain/gateway/gateway.hpp"

namespace pipechain::harness {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    if (s.empty()) return std::nullopt;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

std::string_view attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::ModifyInFlight: return "ModifyInFlight";
        case AttackKind::ReplayRequest: return "ReplayRequest";
        case AttackKind::MutateReplicaStorage: return "MutateReplicaStorage";
        case AttackKind::ForgeSubmitter: return "ForgeSubmitter";
    }
    return "Unknown";
}

std::optional<AttackKind> parse_attack_kind(std::string_view s) {
    for (AttackKind k : {AttackKind::ModifyInFlight, AttackKind::ReplayRequest, AttackKind::MutateReplicaStorage,
                         AttackKind::ForgeSubmitter}) {
        if (s == attack_kind_name(k)) return k;
    }
    return std::nullopt;
}

std::string_view detection_site_name(DetectionSite s) {
    switch (s) {
        case DetectionSite::GatewayAuth: return "GatewayAuth";
        case DetectionSite::ContractGuard: return "ContractGuard";
        case DetectionSite::ReceiptVerify: return "ReceiptVerify";
        case DetectionSite::ReplicaAudit: return "ReplicaAudit";
    }
    return "Unknown";
}

Credential parse_credential(std::string_view ref) {
    auto colon = ref.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("credential '" + std::string(ref) + "' has no scheme");
    std::string_view scheme = ref.substr(0, colon);
    std::string_view rest = ref.substr(colon + 1);
    Credential c;
    if (scheme == "derive") {
        if (rest.empty()) throw std::invalid_argument("derive: needs a principal id");
        c.principal_id = std::string(rest);
        c.key = SigningKey::derive(rest);
        return c;
    }
    auto sep = rest.find(':');
    if (sep == std::string_view::npos || sep == 0) {
        throw std::invalid_argument("credential '" + std::string(ref) + "' must be <scheme>:<principalId>:<secret>");
    }
    c.principal_id = std::string(rest.substr(0, sep));
    std::string_view secret = rest.substr(sep + 1);
    if (scheme == "seed") {
        c.key = SigningKey::from_seed(array_from_hex<32>(secret));
    } else if (scheme == "token") {
        if (secret.empty()) throw std::invalid_argument("empty token");
        c.token = std::string(secret);
    } else {
        throw std::invalid_argument("unknown credential scheme '" + std::string(scheme) + "'");
    }
    return c;
}

std::uint64_t mix_seed(std::uint64_t run_seed, std::uint64_t salt) {
    std::uint64_t z = run_seed * 0x9E3779B97F4A7C15ULL + salt + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Scenario parse_scenario(std::string_view text) {
    Scenario sc;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    auto fail = [&lineno](const std::string& why) {
        throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": " + why);
    };
    auto need_u64 = [&fail](const std::string& key, const std::string& v) {
        auto n = parse_u64(v);
        if (!n) fail(key + " must be a non-negative integer");
        return *n;
    };
    auto need_scaled = [&fail](const std::string& key, const std::string& v) {
        auto n = scale_decimal(v);
        if (!n) fail(key + " must be a decimal number");
        return *n;
    };

    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));

        if (key == "ledger") {
            auto name = gateway::normalize_ledger_name(value);
            if (!name) fail("invalid ledger name '" + value + "'");
            sc.ledger = *name;
        }
        else if (key == "seed") sc.seed = need_u64(key, value);
        else if (key == "nodes") sc.nodes = need_u64(key, value);
        else if (key == "messages") sc.messages = need_u64(key, value);
        else if (key == "start_timestamp") sc.start_timestamp = need_u64(key, value);
        else if (key == "batch_max_entries") sc.batch_max_entries = need_u64(key, value);
        else if (key == "batch_max_delay_ms") sc.batch_max_delay_ms = need_u64(key, value);
        else if (key == "commit_timeout_ms") sc.commit_timeout_ms = need_u64(key, value);
        else if (key == "gateway") sc.gateway_uri = value;
        else if (key == "admin") sc.admin = value;
        else if (key == "leader_key") {
            try {
                sc.leader_key = array_from_hex<32>(value);
            } catch (const std::invalid_argument& e) {
                fail(std::string("leader_key: ") + e.what());
            }
        } else if (key == "node") {
            auto w = words(value);
            if (w.size() < 2 || w.size() > 3) fail("node = <id> <host:port> [<data dir>]");
            sc.node_specs.push_back(NodeSpec{w[0], w[1], w.size() == 3 ? std::filesystem::path(w[2]) : ""});
        } else if (key == "producer") {
            auto w = words(value);
            if (w.empty()) fail("producer needs an id");
            ProducerSpec p;
            p.producer_id = w[0];
            p.principal = "derive:" + w[0];
            bool have_param = false;
            for (std::size_t i = 1; i < w.size(); ++i) {
                auto e = w[i].find('=');
                if (e == std::string::npos) fail("expected name=value, got '" + w[i] + "'");
                std::string k = w[i].substr(0, e), v = w[i].substr(e + 1);
                if (k == "format") {
                    auto f = parse_format(v);
                    if (!f) fail("format must be csv, jsonl or kv");
                    p.format = *f;
                } else if (k == "parameter") {
                    auto pr = parse_parameter(v);
                    if (!pr) fail("unknown parameter '" + v + "'");
                    p.parameter = *pr;
                    have_param = true;
                } else if (k == "unit") {
                    p.unit = v;
                } else if (k == "rate") {
                    auto r = need_scaled(k, v);
                    if (r <= 0) fail("rate must be positive");
                    p.rate_millihz = static_cast<std::uint64_t>(r);
                } else if (k == "base") {
                    p.value_model.base = need_scaled(k, v);
                } else if (k == "amplitude") {
                    p.value_model.amplitude = need_scaled(k, v);
                } else if (k == "noise") {
                    p.value_model.noise = need_scaled(k, v);
                } else if (k == "period") {
                    p.value_model.period = need_u64(k, v);
                } else if (k == "noise_seed") {
                    p.value_model.noise_seed = need_u64(k, v);
                } else if (k == "principal") {
                    p.principal = v;
                } else if (k == "corrupt_every") {
                    p.corrupt_every = need_u64(k, v);
                } else {
                    fail("unknown producer field '" + k + "'");
                }
            }
            if (!have_param) fail("producer " + p.producer_id + " needs parameter=");
            try {
                validate(p);
                parse_credential(p.principal);
            } catch (const std::invalid_argument& e) {
                fail(e.what());
            }
            sc.producers.push_back(std::move(p));
        } else if (key == "attack") {
            auto w = words(value);
            if (w.empty()) fail("attack needs a kind");
            auto kind = parse_attack_kind(w[0]);
            if (!kind) fail("unknown attack kind '" + w[0] + "'");
            AttackSpec a;
            a.kind = *kind;
            a.seed = sc.attacks.size() + 1;
            for (std::size_t i = 1; i < w.size(); ++i) {
                auto e = w[i].find('=');
                if (e == std::string::npos) fail("expected name=value, got '" + w[i] + "'");
                std::string k = w[i].substr(0, e), v = w[i].substr(e + 1);
                if (k == "target") a.target = v;
                else if (k == "after") a.after = need_u64(k, v);
                else if (k == "height") a.height = need_u64(k, v);
                else if (k == "mutation") a.mutation = v;
                else if (k == "seed") a.seed = need_u64(k, v);
                else if (k == "principal") a.principal = v;
                else fail("unknown attack field '" + k + "'");
            }
            if (a.target.empty()) fail("attack needs target=");
            if (a.mutation != "byte" && !a.mutation.starts_with("field:")) fail("mutation must be byte or field:<name>");
            if (a.kind == AttackKind::MutateReplicaStorage && a.mutation != "byte") {
                fail("storage attacks only support mutation=byte");
            }
            if (a.kind == AttackKind::MutateReplicaStorage && a.height == 0) fail("height must be at least 1");
            try {
                parse_credential(a.principal);
            } catch (const std::invalid_argument& e) {
                fail(e.what());
            }
            sc.attacks.push_back(std::move(a));
        } else {
            fail("unknown key '" + key + "'");
        }
    }

    lineno = 0;
    if (sc.producers.empty()) fail("at least one producer is required");
    if (sc.nodes == 0) fail("nodes must be positive");
    if (sc.batch_max_entries == 0 || sc.batch_max_entries > 64) fail("batch_max_entries must be 1..64");
    std::set<std::string> ids;
    for (const auto& p : sc.producers) {
        if (!ids.insert(p.producer_id).second) fail("duplicate producer " + p.producer_id);
    }
    std::set<std::string> node_ids;
    if (sc.node_specs.empty()) {
        for (std::size_t i = 0; i < sc.nodes; ++i) node_ids.insert("node-" + std::to_string(i));
    } else {
        for (const auto& n : sc.node_specs) node_ids.insert(n.node_id);
    }
    for (const auto& a : sc.attacks) {
        if (a.kind == AttackKind::MutateReplicaStorage) {
            if (!node_ids.contains(a.target)) fail("attack target " + a.target + " is not a node");
        } else {
            if (!ids.contains(a.target)) fail("attack target " + a.target + " is not a producer");
            if (a.after >= sc.messages) fail("attack on " + a.target + " fires after the last message");
        }
    }
    if (!sc.gateway_uri.empty() && !sc.leader_key) fail("remote scenarios need leader_key");
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace pipechain::harness
