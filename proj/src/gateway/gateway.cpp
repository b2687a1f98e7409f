// SPDX-License-Identifier: Apache-2.0
#include "pipechain/gateway/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "pipechain/contract.hpp"
#include "pipechain/block.hpp"
#include "pipechain/payload.hpp"
#include "pipechain/receipt.hpp"

namespace pipechain::gateway {

namespace fs = std::filesystem;
using json = nlohmann::json;
using replication::NodeHost;
using replication::Outbox;
using replication::Replica;

namespace {

HttpResponse json_response(int status, const json& body) { return HttpResponse{status, body.dump()}; }

HttpResponse error(int status, std::string_view code, const std::string& message) {
    return json_response(status, json{{"error", code}, {"message", message}});
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    if (s.empty()) return std::nullopt;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        std::size_t j = path.find('/', i);
        if (j == std::string::npos) j = path.size();
        if (j > i) out.push_back(path.substr(i, j - i));
        i = j + 1;
    }
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string_view ledger_type_name(LedgerType t) { return t == LedgerType::Private ? "Private" : "Public"; }

const json& require_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (!v.is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::int64_t require_int(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
}

Role require_role(const json& j) {
    auto r = parse_role(require_string(j, "ledgerRoleName"));
    if (!r) throw std::invalid_argument("ledgerRoleName must be Administrator, Contributor or Reader");
    return *r;
}

std::vector<AadPrincipal> parse_aad(const json& arr) {
    if (!arr.is_array()) throw std::invalid_argument("aadBasedSecurityPrincipals must be an array");
    std::vector<AadPrincipal> out;
    for (const auto& p : arr) {
        if (!p.is_object()) throw std::invalid_argument("principal entries must be objects");
        AadPrincipal a;
        a.principal_id = require_string(p, "principalId");
        a.tenant_id = p.contains("tenantId") ? require_string(p, "tenantId") : "";
        a.role = require_role(p);
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<CertPrincipal> parse_cert(const json& arr) {
    if (!arr.is_array()) throw std::invalid_argument("certBasedSecurityPrincipals must be an array");
    std::vector<CertPrincipal> out;
    for (const auto& p : arr) {
        if (!p.is_object()) throw std::invalid_argument("principal entries must be objects");
        CertPrincipal c;
        c.principal_id = require_string(p, "principalId");
        c.public_key = array_from_hex<32>(require_string(p, "publicKeyHex"));
        c.role = require_role(p);
        out.push_back(std::move(c));
    }
    return out;
}

void check_unique_principals(const LedgerDescriptor& d) {
    std::set<std::string> seen;
    for (const auto& a : d.aad_principals) {
        if (a.principal_id.empty() || !seen.insert(a.principal_id).second) {
            throw std::invalid_argument("duplicate or empty principalId '" + a.principal_id + "'");
        }
    }
    for (const auto& c : d.cert_principals) {
        if (c.principal_id.empty() || !seen.insert(c.principal_id).second) {
            throw std::invalid_argument("duplicate or empty principalId '" + c.principal_id + "'");
        }
    }
}

json reading_json(const ReadingRecord& r) {
    return json{{"parameter", parameter_name(r.parameter)},
                {"valueScaled", r.value_scaled},
                {"unit", r.unit},
                {"sourceTimestamp", r.source_timestamp},
                {"ledgerTimestamp", r.ledger_timestamp}};
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

}  // namespace

std::optional<std::string> normalize_ledger_name(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (!replication::valid_ledger_name(lower)) return std::nullopt;
    return lower;
}

GatewayConfig parse_gateway_config(std::string_view text) {
    GatewayConfig cfg;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    auto fail = [&lineno](const std::string& why) {
        throw std::invalid_argument("gateway config line " + std::to_string(lineno) + ": " + why);
    };
    std::set<std::string> ids;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        std::istringstream vs(value);
        if (key == "public_uri") {
            cfg.public_uri = value;
            while (!cfg.public_uri.empty() && cfg.public_uri.back() == '/') cfg.public_uri.pop_back();
        } else if (key == "cert") {
            Principal p;
            std::string pk, role;
            if (!(vs >> p.principal_id >> pk >> role)) fail("cert = <principalId> <publicKeyHex> <role>");
            p.kind = PrincipalKind::CertBased;
            try {
                p.public_key = array_from_hex<32>(pk);
            } catch (const std::invalid_argument& e) {
                fail(e.what());
            }
            auto r = parse_role(role);
            if (!r) fail("unknown role " + role);
            p.role = *r;
            if (!ids.insert(p.principal_id).second) fail("duplicate principal " + p.principal_id);
            cfg.principals.push_back(std::move(p));
        } else if (key == "token") {
            Principal p;
            std::string role, secret;
            if (!(vs >> p.principal_id >> p.tenant_id >> role >> secret)) {
                fail("token = <principalId> <tenantId> <role> <secret>");
            }
            p.kind = PrincipalKind::TokenBased;
            p.token_digest = token_digest(secret);
            auto r = parse_role(role);
            if (!r) fail("unknown role " + role);
            p.role = *r;
            if (!ids.insert(p.principal_id).second) fail("duplicate principal " + p.principal_id);
            cfg.principals.push_back(std::move(p));
        } else if (key == "batch_max_entries") {
            auto v = parse_u64(value);
            if (!v || *v == 0 || *v > kMaxEntriesPerBlock) fail("batch_max_entries must be 1..64");
            cfg.batch_max_entries = *v;
        } else if (key == "batch_max_delay_ms") {
            auto v = parse_u64(value);
            if (!v) fail("batch_max_delay_ms must be an integer");
            cfg.batch_max_delay_ms = *v;
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    return cfg;
}

GatewayConfig load_gateway_config(const fs::path& path) {
    if (!fs::exists(path)) throw std::invalid_argument("cannot read " + path.string());
    return parse_gateway_config(read_text(path));
}

json LedgerDescriptor::to_json() const {
    json aad = json::array();
    for (const auto& a : aad_principals) {
        aad.push_back({{"principalId", a.principal_id}, {"tenantId", a.tenant_id}, {"ledgerRoleName", role_name(a.role)}});
    }
    json cert = json::array();
    for (const auto& c : cert_principals) {
        cert.push_back(
            {{"principalId", c.principal_id}, {"publicKeyHex", to_hex(c.public_key)}, {"ledgerRoleName", role_name(c.role)}});
    }
    return json{{"ledgerName", ledger_name},
                {"ledgerUri", ledger_uri},
                {"identityServiceUri", kIdentityServicePlaceholder},
                {"ledgerType", ledger_type_name(ledger_type)},
                {"aadBasedSecurityPrincipals", std::move(aad)},
                {"certBasedSecurityPrincipals", std::move(cert)}};
}

TransactionBody parse_transaction_body(const std::string& body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("body must be a JSON object");
    TransactionBody t;
    std::string action = require_string(j, "action");
    t.contract_id = require_string(j, "contractId");
    if (t.contract_id.empty() || t.contract_id.size() > kMaxContractIdBytes) {
        throw std::invalid_argument("contractId must be 1..64 bytes");
    }
    if (action == "RegisterSensor") {
        t.action = pipechain::Action::RegisterSensor;
        RegisterSensorPayload p{require_string(j, "sensorPrincipalId")};
        if (p.sensor_principal_id.empty() || p.sensor_principal_id.size() > kMaxPrincipalIdBytes) {
            throw std::invalid_argument("sensorPrincipalId must be 1..128 bytes");
        }
        t.payload = p.encode();
    } else if (action == "AddReading") {
        t.action = pipechain::Action::AddReading;
        ReadingPayload p;
        const json& param = require_field(j, "parameter");
        std::optional<Parameter> parsed;
        if (param.is_string()) parsed = parse_parameter(param.get<std::string>());
        else if (param.is_number_unsigned() && param.get<std::uint64_t>() <= 255)
            parsed = static_cast<Parameter>(param.get<std::uint64_t>());
        if (!parsed) throw std::invalid_argument("unknown parameter");
        p.parameter = *parsed;
        p.value_scaled = require_int(j, "valueScaled");
        if (p.value_scaled > kMaxAbsScaledValue || p.value_scaled < -kMaxAbsScaledValue) {
            throw std::invalid_argument("valueScaled out of range");
        }
        p.unit = require_string(j, "unit");
        if (p.unit.size() > kMaxUnitBytes) throw std::invalid_argument("unit longer than 16 bytes");
        std::int64_t ts = require_int(j, "sourceTimestamp");
        if (ts < 0) throw std::invalid_argument("sourceTimestamp must be non-negative");
        p.source_timestamp = static_cast<std::uint64_t>(ts);
        t.payload = p.encode();
    } else {
        throw std::invalid_argument("action must be RegisterSensor or AddReading");
    }
    return t;
}

json entry_to_json(const LedgerEntry& e) {
    json j{{"action", action_name(e.action)},
           {"contractId", e.contract_id},
           {"entryId", to_hex(e.entry_id)},
           {"submitterId", e.submitter_id},
           {"submitterNonce", e.submitter_nonce}};
    try {
        if (e.action == pipechain::Action::RegisterSensor) {
            j["sensorPrincipalId"] = RegisterSensorPayload::decode(e.payload).sensor_principal_id;
        } else {
            ReadingPayload p = ReadingPayload::decode(e.payload);
            j["parameter"] = parameter_name(p.parameter);
            j["valueScaled"] = p.value_scaled;
            j["unit"] = p.unit;
            j["sourceTimestamp"] = p.source_timestamp;
        }
    } catch (const std::exception&) {
        j["payloadHex"] = to_hex(e.payload);
    }
    return j;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
    if (!options_.cluster) throw std::invalid_argument("gateway needs a cluster link");
    if (!options_.unix_clock) options_.unix_clock = system_unix_clock();
    fs::create_directories(options_.state_dir);
    for (const auto& de : fs::directory_iterator(options_.state_dir)) {
        if (de.path().extension() != ".json") continue;
        std::string name = de.path().stem().string();
        if (!replication::valid_ledger_name(name)) continue;
        json j = json::parse(read_text(de.path()), nullptr, false);
        if (j.is_discarded()) continue;
        LedgerSlot slot;
        slot.descriptor.ledger_name = name;
        slot.descriptor.ledger_uri = options_.config.public_uri + "/ledgers/" + name;
        slot.descriptor.ledger_type = j.value("ledgerType", "Private") == "Public" ? LedgerType::Public : LedgerType::Private;
        slot.descriptor.aad_principals = parse_aad(j.value("aadBasedSecurityPrincipals", json::array()));
        slot.descriptor.cert_principals = parse_cert(j.value("certBasedSecurityPrincipals", json::array()));
        slot.deleted = fs::exists(options_.state_dir / (name + ".deleted"));
        ledgers_.emplace(name, std::move(slot));
    }
    options_.cluster->with_host([this](NodeHost& host, Outbox&) {
        for (const auto& [name, slot] : ledgers_) {
            if (slot.deleted) host.close_ledger(name);
            else host.create_ledger(name);
        }
    });
}

std::size_t Gateway::queued(const std::string& ledger) const {
    std::lock_guard lock(mu_);
    auto it = ledgers_.find(ledger);
    return it == ledgers_.end() ? 0 : it->second.queue.size();
}

void Gateway::persist(const LedgerSlot& slot) const {
    const auto& name = slot.descriptor.ledger_name;
    write_text(options_.state_dir / (name + ".json"), slot.descriptor.to_json().dump(2));
    if (slot.deleted) write_text(options_.state_dir / (name + ".deleted"), "deleted\n");
}

HttpResponse Gateway::handle(const HttpRequest& req) {
    try {
        std::lock_guard lock(mu_);
        return route(req);
    } catch (const std::exception& e) {
        return error(500, "InternalError", e.what());
    }
}

std::uint64_t Gateway::nonce_floor(const std::string& principal_id) {
    auto it = last_nonce_.find(principal_id);
    if (it != last_nonce_.end()) return it->second;
    std::uint64_t floor = 0;
    options_.cluster->with_host([&](NodeHost& host, Outbox&) {
        for (const auto& name : host.ledger_names()) {
            if (auto n = host.find(name)->ledger().max_nonce(principal_id)) floor = std::max(floor, *n);
        }
    });
    last_nonce_[principal_id] = floor;
    return floor;
}

std::optional<HttpResponse> Gateway::authenticate(const HttpRequest& req, const LedgerSlot* slot, Caller& out) {
    if (const std::string* auth = req.header("authorization")) {
        constexpr std::string_view kBearer = "Bearer ";
        if (auth->rfind(kBearer, 0) != 0) return error(401, "UnknownPrincipal", "unsupported authorization scheme");
        Digest d = token_digest(std::string_view(*auth).substr(kBearer.size()));
        for (const auto& p : options_.config.principals) {
            if (p.kind == PrincipalKind::TokenBased && p.token_digest == d) {
                out.principal_id = p.principal_id;
                out.tenant_id = p.tenant_id;
                out.kind = PrincipalKind::TokenBased;
                return std::nullopt;
            }
        }
        return error(401, "UnknownPrincipal", "token not recognised");
    }

    const std::string* id = req.header(kPrincipalHeader);
    const std::string* nonce_s = req.header(kNonceHeader);
    const std::string* sig_s = req.header(kSignatureHeader);
    if (!id) return error(401, "UnknownPrincipal", "no credentials presented");

    std::optional<PublicKey> key;
    if (slot) {
        for (const auto& c : slot->descriptor.cert_principals) {
            if (c.principal_id == *id) key = c.public_key;
        }
    }
    if (!key) {
        for (const auto& p : options_.config.principals) {
            if (p.kind == PrincipalKind::CertBased && p.principal_id == *id) key = p.public_key;
        }
    }
    if (!key) return error(401, "UnknownPrincipal", "principal '" + *id + "' is not registered");

    std::optional<std::uint64_t> nonce = nonce_s ? parse_u64(*nonce_s) : std::nullopt;
    if (!nonce || !sig_s) return error(401, "BadSignature", "missing or malformed nonce/signature headers");
    Signature sig{};
    try {
        sig = array_from_hex<64>(*sig_s);
    } catch (const std::invalid_argument&) {
        return error(401, "BadSignature", "signature is not 64 bytes of hex");
    }
    if (!verify_signature(*key, request_signing_preimage(req.method, req.target, req.body, *nonce), sig)) {
        return error(401, "BadSignature", "request signature does not verify");
    }
    if (*nonce <= nonce_floor(*id)) {
        return error(401, "ReplayedNonce", "nonce " + std::to_string(*nonce) + " already used");
    }
    last_nonce_[*id] = *nonce;
    out.principal_id = *id;
    out.kind = PrincipalKind::CertBased;
    out.nonce = nonce;
    return std::nullopt;
}

std::optional<Role> Gateway::role_of(const Caller& c, const LedgerSlot* slot) const {
    if (slot) {
        if (c.kind == PrincipalKind::CertBased) {
            for (const auto& p : slot->descriptor.cert_principals) {
                if (p.principal_id == c.principal_id) return p.role;
            }
        } else {
            for (const auto& p : slot->descriptor.aad_principals) {
                if (p.principal_id == c.principal_id && (p.tenant_id.empty() || p.tenant_id == c.tenant_id)) {
                    return p.role;
                }
            }
        }
    }
    for (const auto& p : options_.config.principals) {
        if (p.principal_id == c.principal_id && p.kind == c.kind) return p.role;
    }
    return std::nullopt;
}

HttpResponse Gateway::route(const HttpRequest& req) {
    auto segs = split_path(req.path());
    if (segs.size() < 2 || segs[0] != "ledgers") return error(404, "NotFound", "no such route");
    auto name = normalize_ledger_name(segs[1]);

    LedgerSlot* slot = nullptr;
    if (name) {
        auto it = ledgers_.find(*name);
        if (it != ledgers_.end()) slot = &it->second;
    }
    LedgerSlot* live = slot && !slot->deleted ? slot : nullptr;

    enum class Op { Create, Get, Update, Delete, Post, GetTx, GetReceipt, Readings };
    std::optional<Op> op;
    const std::string& m = req.method;
    if (segs.size() == 2) {
        if (m == "PUT") op = Op::Create;
        else if (m == "GET") op = Op::Get;
        else if (m == "PATCH") op = Op::Update;
        else if (m == "DELETE") op = Op::Delete;
    } else if (segs[2] == "transactions") {
        if (segs.size() == 3 && m == "POST") op = Op::Post;
        else if (segs.size() == 4 && m == "GET") op = Op::GetTx;
        else if (segs.size() == 5 && segs[4] == "receipt" && m == "GET") op = Op::GetReceipt;
    } else if (segs[2] == "contracts" && segs.size() == 5 && segs[4] == "readings" && m == "GET") {
        op = Op::Readings;
    }
    if (!op) return error(405, "MethodNotAllowed", m + " " + req.path() + " is not supported");

    Caller caller;
    if (auto fail = authenticate(req, live, caller)) return *fail;

    Action action = Action::Read;
    if (*op == Op::Create || *op == Op::Update || *op == Op::Delete) action = Action::AdminCrud;
    if (*op == Op::Post) action = Action::Append;
    auto role = role_of(caller, live);
    if (!role || !authorize(*role, action)) {
        return error(403, "Forbidden",
                     "principal '" + caller.principal_id + "' may not perform " + std::string(action_name(action)));
    }

    if (*op == Op::Create) {
        if (!name) return error(400, "BadName", "ledger names must match [a-z0-9-]{3,32}");
        if (slot) return error(409, "LedgerExists", "ledger '" + *name + "' already exists or was deleted");
        return create_ledger(*name, req);
    }
    if (!live) return error(404, "NotFound", "no ledger '" + segs[1] + "'");
    switch (*op) {
        case Op::Get: return json_response(200, live->descriptor.to_json());
        case Op::Update: return update_ledger(*live, req);
        case Op::Delete: return delete_ledger(*live);
        case Op::Post: return post_transaction(*live, caller, req);
        case Op::GetTx: return get_transaction(*live, segs[3], false);
        case Op::GetReceipt: return get_transaction(*live, segs[3], true);
        case Op::Readings: return get_readings(*live, segs[3], req);
        default: break;
    }
    return error(404, "NotFound", "no such route");
}

HttpResponse Gateway::create_ledger(const std::string& name, const HttpRequest& req) {
    LedgerDescriptor d;
    d.ledger_name = name;
    d.ledger_uri = options_.config.public_uri + "/ledgers/" + name;
    if (!req.body.empty()) {
        json j = json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return error(400, "MalformedBody", "body must be a JSON object");
        try {
            for (const auto& [key, value] : j.items()) {
                if (key == "ledgerName") {
                    if (!value.is_string() || normalize_ledger_name(value.get<std::string>()) != name) {
                        throw std::invalid_argument("ledgerName does not match the request path");
                    }
                } else if (key == "ledgerType") {
                    std::string t = value.is_string() ? value.get<std::string>() : "";
                    if (t == "Private") d.ledger_type = LedgerType::Private;
                    else if (t == "Public") d.ledger_type = LedgerType::Public;
                    else throw std::invalid_argument("ledgerType must be Private or Public");
                } else if (key == "aadBasedSecurityPrincipals") {
                    d.aad_principals = parse_aad(value);
                } else if (key == "certBasedSecurityPrincipals") {
                    d.cert_principals = parse_cert(value);
                } else if (key != "ledgerUri" && key != "identityServiceUri") {
                    throw std::invalid_argument("unknown field '" + key + "'");
                }
            }
            check_unique_principals(d);
        } catch (const std::invalid_argument& e) {
            return error(400, "MalformedBody", e.what());
        }
    }
    options_.cluster->with_host([&](NodeHost& host, Outbox&) { host.create_ledger(name); });
    LedgerSlot slot;
    slot.descriptor = std::move(d);
    persist(slot);
    auto& stored = ledgers_.emplace(name, std::move(slot)).first->second;
    return json_response(201, stored.descriptor.to_json());
}

HttpResponse Gateway::update_ledger(LedgerSlot& slot, const HttpRequest& req) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return error(400, "MalformedBody", "body must be a JSON object");
    LedgerDescriptor d = slot.descriptor;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "aadBasedSecurityPrincipals") {
                d.aad_principals = parse_aad(value);
            } else if (key == "certBasedSecurityPrincipals") {
                d.cert_principals = parse_cert(value);
            } else if (key == "ledgerName") {
                if (!value.is_string() || normalize_ledger_name(value.get<std::string>()) != d.ledger_name) {
                    throw std::invalid_argument("ledgerName cannot be changed");
                }
            } else if (key == "ledgerType") {
                if (!value.is_string() || value.get<std::string>() != ledger_type_name(d.ledger_type)) {
                    throw std::invalid_argument("ledgerType cannot be changed");
                }
            } else if (key != "ledgerUri" && key != "identityServiceUri") {
                throw std::invalid_argument("only principal lists can be updated ('" + key + "')");
            }
        }
        check_unique_principals(d);
    } catch (const std::invalid_argument& e) {
        return error(400, "MalformedBody", e.what());
    }
    slot.descriptor = std::move(d);
    persist(slot);
    return json_response(200, slot.descriptor.to_json());
}

HttpResponse Gateway::delete_ledger(LedgerSlot& slot) {
    slot.deleted = true;
    slot.queue.clear();
    slot.speculative.reset();
    persist(slot);
    const std::string name = slot.descriptor.ledger_name;
    options_.cluster->with_host([&](NodeHost& host, Outbox&) { host.close_ledger(name); });
    return HttpResponse{204, "", "application/json"};
}

HttpResponse Gateway::post_transaction(LedgerSlot& slot, const Caller& caller, const HttpRequest& req) {
    TransactionBody body;
    try {
        body = parse_transaction_body(req.body);
    } catch (const std::exception& e) {
        return error(400, "MalformedBody", e.what());
    }
    if (caller.principal_id.size() > kMaxPrincipalIdBytes) {
        return error(400, "MalformedBody", "principal id too long for a ledger entry");
    }

    const std::string& name = slot.descriptor.ledger_name;
    bool quorum = false;
    options_.cluster->with_host([&](NodeHost& host, Outbox&) {
        Replica* r = host.find(name);
        quorum = r && r->quorum_reachable();
        if (r && !slot.speculative) slot.speculative = r->ledger().state().clone();
    });
    if (!quorum) return error(503, "QuorumUnavailable", "not enough replicas are reachable to commit");

    std::uint64_t nonce = 0;
    if (caller.nonce) {
        nonce = *caller.nonce;
    } else {
        nonce = nonce_floor(caller.principal_id) + 1;
        last_nonce_[caller.principal_id] = nonce;
    }

    LedgerEntry e;
    e.entry_id = derive_entry_id(caller.principal_id, nonce);
    e.contract_id = body.contract_id;
    e.action = body.action;
    e.payload = std::move(body.payload);
    e.submitter_id = caller.principal_id;
    e.submitter_nonce = nonce;
    e.sign(options_.ingress_key);

    auto next = slot.speculative->clone();
    try {
        next->apply(e, options_.unix_clock());
    } catch (const ContractError& ce) {
        return error(422, "ContractRejected", ce.what());
    }
    slot.speculative = std::move(next);

    std::string id = to_hex(e.entry_id);
    if (slot.queue.empty()) slot.first_queued_ms = options_.cluster->now_ms();
    slot.queue.push_back(Queued{id, std::move(e)});
    slot.txs[id] = TxRecord{};
    return json_response(202, json{{"transactionId", id}, {"state", "Pending"}});
}

void Gateway::pump() {
    std::lock_guard lock(mu_);
    options_.cluster->with_host([this](NodeHost& host, Outbox& out) {
        for (auto& [name, slot] : ledgers_) {
            if (!slot.deleted) pump_ledger(slot, host, out);
        }
    });
}

void Gateway::pump_ledger(LedgerSlot& slot, NodeHost& host, Outbox& out) {
    Replica* r = host.find(slot.descriptor.ledger_name);
    if (!r) return;
    const std::uint64_t committed = r->committed_height().value_or(0);
    while (!slot.awaiting_commit.empty() && slot.awaiting_commit.begin()->first <= committed) {
        for (const auto& id : slot.awaiting_commit.begin()->second) slot.txs[id].state = TxRecord::State::Committed;
        slot.awaiting_commit.erase(slot.awaiting_commit.begin());
    }
    if (slot.queue.empty() || r->proposal_in_flight()) return;
    const std::uint64_t now = options_.cluster->now_ms();
    const std::size_t max = std::min<std::size_t>(options_.config.batch_max_entries, kMaxEntriesPerBlock);
    if (slot.queue.size() < max && now - slot.first_queued_ms < options_.config.batch_max_delay_ms) return;

    // Re-check against the ledger head; anything that no longer applies is
    // rejected rather than poisoning the block.
    auto state = r->ledger().state().clone();
    const std::uint64_t ts = options_.unix_clock();
    std::vector<LedgerEntry> batch;
    std::vector<std::string> ids;
    bool diverged = false;
    while (!slot.queue.empty() && batch.size() < max) {
        Queued q = std::move(slot.queue.front());
        slot.queue.pop_front();
        try {
            if (r->ledger().nonce_used(q.entry.submitter_id, q.entry.submitter_nonce)) {
                throw std::runtime_error("nonce already committed");
            }
            state->apply(q.entry, ts);
            batch.push_back(std::move(q.entry));
            ids.push_back(q.provisional_id);
        } catch (const std::exception& e) {
            slot.txs[q.provisional_id] = TxRecord{TxRecord::State::Rejected, e.what(), std::nullopt, 0};
            diverged = true;
        }
    }
    if (!batch.empty()) {
        try {
            Block b = r->append_and_propose(batch, out);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                auto& tx = slot.txs[ids[i]];
                tx.height = b.header.height;
                tx.leaf = static_cast<std::uint32_t>(i);
            }
            slot.awaiting_commit[b.header.height] = ids;
        } catch (const std::exception& e) {
            for (const auto& id : ids) slot.txs[id] = TxRecord{TxRecord::State::Rejected, e.what(), std::nullopt, 0};
            diverged = true;
        }
    }
    if (diverged) {
        // Rebuild the speculative view from what the ledger actually holds.
        slot.speculative = r->ledger().state().clone();
        std::deque<Queued> keep;
        for (auto& q : slot.queue) {
            auto next = slot.speculative->clone();
            try {
                next->apply(q.entry, ts);
                slot.speculative = std::move(next);
                keep.push_back(std::move(q));
            } catch (const std::exception& e) {
                slot.txs[q.provisional_id] = TxRecord{TxRecord::State::Rejected, e.what(), std::nullopt, 0};
            }
        }
        slot.queue = std::move(keep);
    }
}

HttpResponse Gateway::get_transaction(LedgerSlot& slot, const std::string& id, bool receipt) {
    std::optional<std::pair<std::uint64_t, std::uint32_t>> pos;
    std::string provisional;
    if (auto dot = id.find('.'); dot != std::string::npos) {
        auto h = parse_u64(std::string_view(id).substr(0, dot));
        auto l = parse_u64(std::string_view(id).substr(dot + 1));
        if (!h || !l || *l > UINT32_MAX) return error(404, "NotFound", "no transaction '" + id + "'");
        pos = std::make_pair(*h, static_cast<std::uint32_t>(*l));
    } else {
        auto it = slot.txs.find(id);
        if (it == slot.txs.end()) return error(404, "NotFound", "no transaction '" + id + "'");
        const TxRecord& tx = it->second;
        provisional = id;
        if (tx.state == TxRecord::State::Rejected) {
            if (receipt) return error(409, "TransactionRejected", tx.reason);
            return json_response(200, json{{"transactionId", id}, {"state", "Rejected"}, {"reason", tx.reason}});
        }
        if (tx.state == TxRecord::State::Pending) {
            if (receipt) return error(409, "NotYetCommitted", "transaction " + id + " is not committed yet");
            return json_response(200, json{{"transactionId", id}, {"state", "Pending"}});
        }
        pos = std::make_pair(*tx.height, tx.leaf);
    }

    HttpResponse resp = error(404, "NotFound", "no transaction '" + id + "'");
    options_.cluster->with_host([&](NodeHost& host, Outbox&) {
        Replica* r = host.find(slot.descriptor.ledger_name);
        if (!r || !r->committed_height() || pos->first > *r->committed_height()) return;
        Block b = r->ledger().read_block(pos->first);
        if (pos->second >= b.entries.size()) return;
        if (receipt) {
            resp = json_response(200, receipt_to_json(r->ledger().make_receipt(pos->first, pos->second)));
            return;
        }
        const LedgerEntry& e = b.entries[pos->second];
        resp = json_response(200, json{{"transactionId", std::to_string(pos->first) + "." + std::to_string(pos->second)},
                                       {"provisionalId", to_hex(e.entry_id)},
                                       {"state", "Committed"},
                                       {"height", pos->first},
                                       {"leafIndex", pos->second},
                                       {"blockTimestamp", b.header.timestamp},
                                       {"entry", entry_to_json(e)},
                                       {"entryBytes", to_hex(e.encode())}});
    });
    return resp;
}

HttpResponse Gateway::get_readings(LedgerSlot& slot, const std::string& contract_id, const HttpRequest& req) {
    std::optional<std::uint64_t> index;
    if (auto q = req.query("index")) {
        index = parse_u64(*q);
        if (!index) return error(400, "BadRequest", "index must be a non-negative integer");
    }
    HttpResponse resp = error(404, "UnknownContract", "no contract '" + contract_id + "'");
    options_.cluster->with_host([&](NodeHost& host, Outbox&) {
        Replica* r = host.find(slot.descriptor.ledger_name);
        if (!r) return;
        const ContractStore& store = contract_store(r->committed_state());
        const SensorContract* c = store.find(contract_id);
        if (!c) return;
        if (index) {
            if (*index >= c->readings.size()) {
                resp = error(416, "IndexOutOfRange",
                             "index " + std::to_string(*index) + " >= " + std::to_string(c->readings.size()));
                return;
            }
            json j = reading_json(c->readings[*index]);
            j["contractId"] = c->contract_id;
            j["index"] = *index;
            resp = json_response(200, j);
            return;
        }
        json readings = json::array();
        for (const auto& rd : c->readings) readings.push_back(reading_json(rd));
        resp = json_response(200, json{{"contractId", c->contract_id},
                                       {"sensorPrincipalId", c->sensor_principal_id},
                                       {"state", contract_state_name(c->state)},
                                       {"readings", std::move(readings)}});
    });
    return resp;
}

}  // namespace pipechain::gateway
