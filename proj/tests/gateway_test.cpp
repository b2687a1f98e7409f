// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "pipechain/contract.hpp"
#include "pipechain/gateway/http.hpp"
#include "pipechain/receipt.hpp"
#include "support/fixtures.hpp"

using namespace pipechain;
using namespace pipechain::gateway;
using json = nlohmann::json;
using pipechain::testing::TempDir;
using replication::NodeHost;
using replication::Outbox;
using replication::SimCluster;
using replication::SimClusterOptions;

namespace {

const SigningKey& principal_key(const std::string& id) {
    static std::map<std::string, SigningKey> keys;
    auto it = keys.find(id);
    if (it == keys.end()) it = keys.emplace(id, SigningKey::derive("gw:" + id)).first;
    return it->second;
}

GatewayConfig test_config() {
    std::string text = "public_uri = https://ledger.example:8443/\nbatch_max_entries = 8\nbatch_max_delay_ms = 50\n";
    for (auto [id, role] : {std::pair{"admin", "Administrator"}, {"alice", "Contributor"}, {"sensor-1", "Contributor"},
                            {"sensor-2", "Contributor"}, {"viewer", "Reader"}}) {
        text += std::string("cert = ") + id + " " + to_hex(principal_key(id).public_key()) + " " + role + "\n";
    }
    text += "token = svc tenant-a Contributor s3cret\n";
    return parse_gateway_config(text);
}

struct Rig {
    TempDir dir;
    SigningKey ingress = SigningKey::derive("sim:node-0");
    std::unique_ptr<SimCluster> cluster;
    std::unique_ptr<SimClusterLink> link;
    std::unique_ptr<Gateway> gw;
    std::map<std::string, std::uint64_t> nonces;

    Rig() {
        SimClusterOptions o;
        o.nodes = 3;
        o.base_dir = dir / "nodes";
        PublicKey pk = ingress.public_key();
        o.entry_keys = [pk](std::string_view) { return std::optional<PublicKey>(pk); };
        cluster = std::make_unique<SimCluster>(o);
        link = std::make_unique<SimClusterLink>(*cluster);
        start_gateway();
    }

    void start_gateway() {
        GatewayOptions g;
        g.config = test_config();
        g.state_dir = dir / "gateway";
        g.cluster = link.get();
        g.ingress_key = ingress;
        g.unix_clock = [] { return std::uint64_t{1677651200}; };
        gw.reset();
        gw = std::make_unique<Gateway>(std::move(g));
    }

    HttpRequest request(const std::string& method, const std::string& target, const std::string& body,
                        const std::string& who) {
        HttpRequest r{method, target, {}, body};
        sign_request(r, who, principal_key(who), ++nonces[who]);
        return r;
    }

    HttpResponse call(const std::string& method, const std::string& target, const std::string& body = "",
                      const std::string& who = "admin") {
        return gw->handle(request(method, target, body, who));
    }

    json call_json(const std::string& method, const std::string& target, const std::string& body = "",
                   const std::string& who = "admin") {
        return json::parse(call(method, target, body, who).body);
    }

    /// Pumps the gateway and runs the network until nothing is queued or awaiting quorum.
    bool settle(const std::string& ledger, std::uint64_t max_ms = 10'000) {
        for (std::uint64_t t = 0; t < max_ms; t += 20) {
            gw->pump();
            cluster->network().run_for(20);
            bool idle = gw->queued(ledger) == 0;
            if (const auto* r = cluster->leader().find(ledger)) idle = idle && !r->proposal_in_flight();
            if (idle) {
                gw->pump();
                return true;
            }
        }
        return false;
    }
};

std::string reading_body(const std::string& contract, std::int64_t value, std::uint64_t ts = 1677651300) {
    return json{{"action", "AddReading"},
                {"contractId", contract},
                {"parameter", "Temperature"},
                {"valueScaled", value},
                {"unit", "C"},
                {"sourceTimestamp", ts}}
        .dump();
}

std::string register_body(const std::string& contract, const std::string& sensor) {
    return json{{"action", "RegisterSensor"}, {"contractId", contract}, {"sensorPrincipalId", sensor}}.dump();
}

std::string error_code(const HttpResponse& r) { return json::parse(r.body).value("error", ""); }

}  // namespace

TEST(Rbac, RoleActionMatrix) {
    const std::map<std::pair<Role, gateway::Action>, bool> expected = {
        {{Role::Administrator, gateway::Action::AdminCrud}, true}, {{Role::Administrator, gateway::Action::Append}, true},
        {{Role::Administrator, gateway::Action::Read}, true},      {{Role::Contributor, gateway::Action::AdminCrud}, false},
        {{Role::Contributor, gateway::Action::Append}, true},      {{Role::Contributor, gateway::Action::Read}, true},
        {{Role::Reader, gateway::Action::AdminCrud}, false},       {{Role::Reader, gateway::Action::Append}, false},
        {{Role::Reader, gateway::Action::Read}, true},
    };
    for (const auto& [pair, allowed] : expected) {
        EXPECT_EQ(authorize(pair.first, pair.second), allowed) << role_name(pair.first) << "/" << action_name(pair.second);
    }
}

TEST(GatewayConfig, ParsesAndRejects) {
    GatewayConfig c = test_config();
    EXPECT_EQ(c.public_uri, "https://ledger.example:8443");
    EXPECT_EQ(c.batch_max_entries, 8u);
    EXPECT_EQ(c.principals.size(), 6u);
    EXPECT_EQ(c.principals.back().kind, PrincipalKind::TokenBased);
    EXPECT_THROW(parse_gateway_config("cert = a zz Reader\n"), std::invalid_argument);
    EXPECT_THROW(parse_gateway_config("token = a t Owner x\n"), std::invalid_argument);
    EXPECT_THROW(parse_gateway_config("batch_max_entries = 65\n"), std::invalid_argument);
    EXPECT_THROW(parse_gateway_config("colour = blue\n"), std::invalid_argument);
}

TEST(TransactionBody, ValidatesFields) {
    TransactionBody t = parse_transaction_body(reading_body("c1", -12345));
    EXPECT_EQ(t.action, pipechain::Action::AddReading);
    ReadingPayload p = ReadingPayload::decode(t.payload);
    EXPECT_EQ(p.value_scaled, -12345);
    EXPECT_EQ(p.unit, "C");
    EXPECT_THROW(parse_transaction_body("{"), std::invalid_argument);
    EXPECT_THROW(parse_transaction_body(R"({"action":"Burn","contractId":"c"})"), std::invalid_argument);
    EXPECT_THROW(parse_transaction_body(R"({"action":"AddReading","contractId":"c","parameter":"Temperature",
        "valueScaled":1.5,"unit":"C","sourceTimestamp":1})"),
                 std::invalid_argument);
    EXPECT_THROW(parse_transaction_body(R"({"action":"AddReading","contractId":"c","parameter":"Temperature",
        "valueScaled":1,"unit":"CCCCCCCCCCCCCCCCC","sourceTimestamp":1})"),
                 std::invalid_argument);
    EXPECT_THROW(parse_transaction_body(register_body(std::string(65, 'c'), "s")), std::invalid_argument);
}

TEST(GatewayDescriptor, CrudCycle) {
    Rig rig;
    std::string viewer_hex = to_hex(principal_key("viewer").public_key());
    json body{{"ledgerType", "Private"},
              {"aadBasedSecurityPrincipals", {{{"principalId", "svc"}, {"tenantId", "tenant-a"}, {"ledgerRoleName", "Reader"}}}},
              {"certBasedSecurityPrincipals",
               {{{"principalId", "viewer"}, {"publicKeyHex", viewer_hex}, {"ledgerRoleName", "Contributor"}}}}};
    HttpResponse created = rig.call("PUT", "/ledgers/Pipeline-North", body.dump());
    ASSERT_EQ(created.status, 201) << created.body;
    json d = json::parse(created.body);
    EXPECT_EQ(d["ledgerName"], "pipeline-north");
    EXPECT_EQ(d["ledgerUri"], "https://ledger.example:8443/ledgers/pipeline-north");
    EXPECT_EQ(d["identityServiceUri"], kIdentityServicePlaceholder);
    EXPECT_EQ(d["ledgerType"], "Private");
    EXPECT_EQ(d["aadBasedSecurityPrincipals"][0]["ledgerRoleName"], "Reader");
    EXPECT_EQ(d["certBasedSecurityPrincipals"][0]["publicKeyHex"], viewer_hex);

    EXPECT_EQ(rig.call("GET", "/ledgers/pipeline-north").body, created.body);
    EXPECT_EQ(rig.call("PUT", "/ledgers/pipeline-north", "").status, 409);

    json patch{{"certBasedSecurityPrincipals", json::array()}};
    HttpResponse updated = rig.call("PATCH", "/ledgers/pipeline-north", patch.dump());
    ASSERT_EQ(updated.status, 200);
    EXPECT_TRUE(json::parse(updated.body)["certBasedSecurityPrincipals"].empty());
    EXPECT_EQ(rig.call("PATCH", "/ledgers/pipeline-north", R"({"ledgerType":"Public"})").status, 400);
    EXPECT_EQ(rig.call("PATCH", "/ledgers/pipeline-north", R"({"colour":"red"})").status, 400);

    EXPECT_EQ(rig.call("DELETE", "/ledgers/pipeline-north").status, 204);
    EXPECT_EQ(rig.call("GET", "/ledgers/pipeline-north").status, 404);
    EXPECT_EQ(rig.call("PUT", "/ledgers/pipeline-north").status, 409);
    EXPECT_EQ(rig.cluster->leader().find("pipeline-north"), nullptr);
}

TEST(GatewayDescriptor, DeleteKeepsBlockFiles) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/kept-blocks").status, 201);
    ASSERT_EQ(rig.call("POST", "/ledgers/kept-blocks/transactions", register_body("c1", "sensor-1")).status, 202);
    ASSERT_TRUE(rig.settle("kept-blocks"));
    std::filesystem::path ledger_dir = rig.cluster->leader().ledger_dir("kept-blocks");
    ASSERT_EQ(rig.call("DELETE", "/ledgers/kept-blocks").status, 204);
    EXPECT_EQ(rig.call("GET", "/ledgers/kept-blocks").status, 404);
    ContractEngine engine;
    ChainVerificationReport report = verify_chain(ledger_dir, rig.ingress.public_key(), &engine);
    EXPECT_TRUE(report.ok);
    EXPECT_EQ(report.head_height, 1u);
}

TEST(GatewayDescriptor, AddedContributorCanAppend) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/newcomers").status, 201);
    EXPECT_EQ(rig.call("POST", "/ledgers/newcomers/transactions", register_body("c1", "x"), "newcomer").status, 401);
    json patch{{"certBasedSecurityPrincipals",
                {{{"principalId", "newcomer"},
                  {"publicKeyHex", to_hex(principal_key("newcomer").public_key())},
                  {"ledgerRoleName", "Contributor"}}}}};
    ASSERT_EQ(rig.call("PATCH", "/ledgers/newcomers", patch.dump()).status, 200);
    EXPECT_EQ(rig.call("POST", "/ledgers/newcomers/transactions", register_body("c1", "x"), "newcomer").status, 202);
    EXPECT_EQ(rig.call("PUT", "/ledgers/elsewhere", "", "newcomer").status, 401);
}

TEST(GatewayDescriptor, RejectsBadNamesAndBodies) {
    Rig rig;
    EXPECT_EQ(error_code(rig.call("PUT", "/ledgers/ab")), "BadName");
    EXPECT_EQ(error_code(rig.call("PUT", "/ledgers/has_underscore")), "BadName");
    EXPECT_EQ(rig.call("PUT", "/ledgers/ledger-x", R"({"unknown":1})").status, 400);
    EXPECT_EQ(rig.call("PUT", "/ledgers/ledger-x", R"({"ledgerName":"other"})").status, 400);
    EXPECT_EQ(rig.call("PUT", "/ledgers/ledger-x", R"({"certBasedSecurityPrincipals":[{"principalId":"p",
        "publicKeyHex":"00","ledgerRoleName":"Reader"}]})")
                  .status,
              400);
    EXPECT_EQ(rig.call("PUT", "/ledgers/ledger-x", "[1,2]").status, 400);
    EXPECT_EQ(rig.call("PUT", "/ledgers/ledger-x", R"({"identityServiceUri":"x","ledgerUri":"y"})").status, 201);
    EXPECT_EQ(rig.call("POST", "/ledgers/ledger-x").status, 405);
    EXPECT_EQ(rig.call("GET", "/other").status, 404);
}

TEST(GatewayDescriptor, SurvivesRestart) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/kept-one").status, 201);
    ASSERT_EQ(rig.call("PUT", "/ledgers/gone-one").status, 201);
    ASSERT_EQ(rig.call("DELETE", "/ledgers/gone-one").status, 204);
    rig.start_gateway();
    EXPECT_EQ(rig.call("GET", "/ledgers/kept-one").status, 200);
    EXPECT_EQ(rig.call("GET", "/ledgers/gone-one").status, 404);
    EXPECT_EQ(rig.call("PUT", "/ledgers/gone-one").status, 409);
}

TEST(GatewayAuth, ErrorsInOrder) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/auth-test").status, 201);

    HttpRequest none{"GET", "/ledgers/auth-test", {}, ""};
    EXPECT_EQ(error_code(rig.gw->handle(none)), "UnknownPrincipal");

    HttpRequest stranger = rig.request("GET", "/ledgers/auth-test", "", "mallory");
    EXPECT_EQ(rig.gw->handle(stranger).status, 401);
    EXPECT_EQ(error_code(rig.gw->handle(stranger)), "UnknownPrincipal");

    HttpRequest tampered = rig.request("POST", "/ledgers/auth-test/transactions", register_body("c", "s"), "admin");
    tampered.body = register_body("c", "evil");
    EXPECT_EQ(error_code(rig.gw->handle(tampered)), "BadSignature");

    HttpRequest wrong_key{"GET", "/ledgers/auth-test", {}, ""};
    sign_request(wrong_key, "admin", principal_key("alice"), 9999);
    EXPECT_EQ(error_code(rig.gw->handle(wrong_key)), "BadSignature");

    HttpRequest ok = rig.request("GET", "/ledgers/auth-test", "", "viewer");
    EXPECT_EQ(rig.gw->handle(ok).status, 200);
    HttpResponse replay = rig.gw->handle(ok);
    EXPECT_EQ(replay.status, 401);
    EXPECT_EQ(error_code(replay), "ReplayedNonce");

    HttpRequest token{"GET", "/ledgers/auth-test", {}, ""};
    set_bearer(token, "s3cret");
    EXPECT_EQ(rig.gw->handle(token).status, 200);
    set_bearer(token, "wrong");
    EXPECT_EQ(error_code(rig.gw->handle(token)), "UnknownPrincipal");
}

TEST(GatewayAuth, RolesGateOperations) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/roles-test").status, 201);
    EXPECT_EQ(rig.call("PUT", "/ledgers/other-ledger", "", "alice").status, 403);
    EXPECT_EQ(rig.call("DELETE", "/ledgers/roles-test", "", "alice").status, 403);
    EXPECT_EQ(rig.call("POST", "/ledgers/roles-test/transactions", register_body("c1", "s"), "viewer").status, 403);
    EXPECT_EQ(rig.call("GET", "/ledgers/roles-test", "", "viewer").status, 200);
    EXPECT_EQ(rig.call("POST", "/ledgers/roles-test/transactions", register_body("c1", "s"), "alice").status, 202);

    // Ledger-level entries override the gateway-wide role.
    json patch{{"certBasedSecurityPrincipals",
                {{{"principalId", "alice"},
                  {"publicKeyHex", to_hex(principal_key("alice").public_key())},
                  {"ledgerRoleName", "Reader"}}}}};
    ASSERT_EQ(rig.call("PATCH", "/ledgers/roles-test", patch.dump()).status, 200);
    EXPECT_EQ(rig.call("POST", "/ledgers/roles-test/transactions", register_body("c2", "s"), "alice").status, 403);
    EXPECT_EQ(rig.call("GET", "/ledgers/roles-test", "", "alice").status, 200);
}

TEST(GatewayTransactions, CommitReceiptAndReadings) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/north-line").status, 201);
    json reg = rig.call_json("POST", "/ledgers/north-line/transactions", register_body("pump-7", "sensor-1"));
    ASSERT_EQ(reg["state"], "Pending");
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) {
        HttpResponse r = rig.call("POST", "/ledgers/north-line/transactions", reading_body("pump-7", 21000 + i), "sensor-1");
        ASSERT_EQ(r.status, 202) << r.body;
        ids.push_back(json::parse(r.body)["transactionId"]);
    }
    EXPECT_EQ(rig.call("GET", "/ledgers/north-line/transactions/" + ids[0] + "/receipt").status, 409);
    EXPECT_EQ(rig.call_json("GET", "/ledgers/north-line/transactions/" + ids[0])["state"], "Pending");

    ASSERT_TRUE(rig.settle("north-line"));
    ASSERT_TRUE(rig.cluster->safety_ok());

    json tx = rig.call_json("GET", "/ledgers/north-line/transactions/" + ids[5]);
    ASSERT_EQ(tx["state"], "Committed") << tx.dump();
    EXPECT_EQ(tx["entry"]["valueScaled"], 21005);
    EXPECT_EQ(tx["entry"]["submitterId"], "sensor-1");
    std::string final_id = tx["transactionId"];
    EXPECT_EQ(rig.call_json("GET", "/ledgers/north-line/transactions/" + final_id)["entryBytes"], tx["entryBytes"]);

    HttpResponse receipt = rig.call("GET", "/ledgers/north-line/transactions/" + final_id + "/receipt");
    ASSERT_EQ(receipt.status, 200);
    EXPECT_EQ(verify_receipt_wire(receipt.body, rig.ingress.public_key()), ReceiptVerdict::Accept);
    auto parsed = parse_receipt_wire(receipt.body);
    ASSERT_TRUE(parsed);
    EXPECT_EQ(parsed->entry_hash, hash_entry(LedgerEntry::decode(from_hex(tx["entryBytes"].get<std::string>()))));

    json all = rig.call_json("GET", "/ledgers/north-line/contracts/pump-7/readings", "", "viewer");
    ASSERT_EQ(all["readings"].size(), 20u);
    EXPECT_EQ(all["state"], "InUse");
    EXPECT_EQ(all["readings"][3]["valueScaled"], 21003);
    json one = rig.call_json("GET", "/ledgers/north-line/contracts/pump-7/readings?index=19", "", "viewer");
    EXPECT_EQ(one["valueScaled"], 21019);
    EXPECT_EQ(rig.call("GET", "/ledgers/north-line/contracts/pump-7/readings?index=20").status, 416);
    EXPECT_EQ(rig.call("GET", "/ledgers/north-line/contracts/pump-7/readings?index=x").status, 400);
    EXPECT_EQ(error_code(rig.call("GET", "/ledgers/north-line/contracts/nope/readings")), "UnknownContract");
    EXPECT_EQ(rig.call("GET", "/ledgers/north-line/transactions/99.0").status, 404);
    EXPECT_EQ(rig.call("GET", "/ledgers/north-line/transactions/feed").status, 404);

    // Followers hold the same committed state.
    const auto& leader_store = contract_store(rig.cluster->leader().find("north-line")->committed_state());
    for (std::size_t i = 1; i < rig.cluster->size(); ++i) {
        rig.cluster->network().run_for(500);
        EXPECT_EQ(contract_store(rig.cluster->node(i).find("north-line")->committed_state()), leader_store);
    }
}

TEST(GatewayTransactions, ContractGuardRejectsForeignWriter) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/guard-test").status, 201);
    ASSERT_EQ(rig.call("POST", "/ledgers/guard-test/transactions", register_body("pump-1", "sensor-1")).status, 202);
    HttpResponse forged = rig.call("POST", "/ledgers/guard-test/transactions", reading_body("pump-1", 1), "sensor-2");
    EXPECT_EQ(forged.status, 422);
    EXPECT_EQ(json::parse(forged.body)["message"], kUnauthorizedSensorMessage);
    EXPECT_EQ(rig.call("POST", "/ledgers/guard-test/transactions", reading_body("pump-1", 1), "sensor-1").status, 202);
    HttpResponse unknown = rig.call("POST", "/ledgers/guard-test/transactions", reading_body("pump-9", 1), "sensor-1");
    EXPECT_EQ(unknown.status, 422);
    EXPECT_EQ(rig.call("POST", "/ledgers/guard-test/transactions", "{}", "sensor-1").status, 400);
    ASSERT_TRUE(rig.settle("guard-test"));
    EXPECT_EQ(rig.call_json("GET", "/ledgers/guard-test/contracts/pump-1/readings")["readings"].size(), 1u);
}

TEST(GatewayTransactions, TokenPrincipalsGetGatewayNonces) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/token-test").status, 201);
    HttpRequest r{"POST", "/ledgers/token-test/transactions", {}, register_body("c1", "svc")};
    set_bearer(r, "s3cret");
    HttpResponse first = rig.gw->handle(r);
    ASSERT_EQ(first.status, 202);
    r.body = reading_body("c1", 5);
    HttpResponse second = rig.gw->handle(r);
    ASSERT_EQ(second.status, 202);
    EXPECT_NE(json::parse(first.body)["transactionId"], json::parse(second.body)["transactionId"]);
    ASSERT_TRUE(rig.settle("token-test"));
    EXPECT_EQ(rig.call_json("GET", "/ledgers/token-test/contracts/c1/readings")["readings"].size(), 1u);
}

TEST(GatewayTransactions, QuorumLossIsReported) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/quorum-test").status, 201);
    rig.cluster->crash(1);
    rig.cluster->crash(2);
    rig.cluster->network().run_for(3000);
    HttpResponse r = rig.call("POST", "/ledgers/quorum-test/transactions", register_body("c1", "s"));
    EXPECT_EQ(r.status, 503);
    EXPECT_EQ(error_code(r), "QuorumUnavailable");
}

TEST(GatewayTransactions, NoncesSurviveGatewayRestart) {
    Rig rig;
    ASSERT_EQ(rig.call("PUT", "/ledgers/nonce-test").status, 201);
    HttpRequest reg = rig.request("POST", "/ledgers/nonce-test/transactions", register_body("c1", "sensor-1"), "admin");
    ASSERT_EQ(rig.gw->handle(reg).status, 202);
    ASSERT_TRUE(rig.settle("nonce-test"));
    rig.start_gateway();
    EXPECT_EQ(error_code(rig.gw->handle(reg)), "ReplayedNonce");
    EXPECT_EQ(rig.call("GET", "/ledgers/nonce-test").status, 200);
}

namespace {

std::uint16_t free_port() {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
    socklen_t len = sizeof a;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
    ::close(fd);
    return ntohs(a.sin_port);
}

}  // namespace

TEST(GatewayHttp, ServesOverLoopback) {
    TempDir dir;
    SigningKey node_key = SigningKey::derive("http:node-0");
    replication::NodeContext ctx;
    ctx.config.node_id = "node-0";
    ctx.config.role = replication::NodeRole::Leader;
    ctx.config.listen_address = "127.0.0.1:" + std::to_string(free_port());
    ctx.config.leader_public_key = node_key.public_key();
    ctx.config.data_dir = dir / "node";
    ctx.key = node_key;
    PublicKey pk = node_key.public_key();
    ctx.entry_keys = [pk](std::string_view) { return std::optional<PublicKey>(pk); };
    ctx.make_engine = [] { return std::make_unique<ContractEngine>(); };
    replication::TcpNode node(std::move(ctx));
    node.start();
    TcpClusterLink link(node);

    GatewayOptions g;
    g.config = test_config();
    g.config.batch_max_delay_ms = 10;
    g.state_dir = dir / "gateway";
    g.cluster = &link;
    g.ingress_key = node_key;
    Gateway gw(std::move(g));
    HttpServer server(gw, "127.0.0.1", 0);
    server.start();
    HttpClient client("http://127.0.0.1:" + std::to_string(server.port()));

    std::uint64_t nonce = 0;
    auto send = [&](std::string method, std::string target, std::string body, const std::string& who) {
        HttpRequest r{std::move(method), std::move(target), {}, std::move(body)};
        sign_request(r, who, principal_key(who), ++nonce);
        return client.send(r);
    };
    ASSERT_EQ(send("PUT", "/ledgers/http-test", "", "admin").status, 201);
    ASSERT_EQ(send("POST", "/ledgers/http-test/transactions", register_body("c1", "sensor-1"), "admin").status, 202);
    HttpResponse add = send("POST", "/ledgers/http-test/transactions?x=1", reading_body("c1", 77), "sensor-1");
    ASSERT_EQ(add.status, 202) << add.body;
    std::string id = json::parse(add.body)["transactionId"];

    HttpResponse receipt;
    for (int i = 0; i < 200; ++i) {
        receipt = send("GET", "/ledgers/http-test/transactions/" + id + "/receipt", "", "viewer");
        if (receipt.status == 200) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ASSERT_EQ(receipt.status, 200) << receipt.body;
    EXPECT_EQ(verify_receipt_wire(receipt.body, node_key.public_key()), ReceiptVerdict::Accept);
    EXPECT_EQ(send("GET", "/ledgers/http-test/contracts/c1/readings?index=0", "", "viewer").status, 200);
    EXPECT_EQ(send("PUT", "/ledgers/http-test", "", "viewer").status, 403);

    server.stop();
    node.stop();
    EXPECT_EQ(client.send(HttpRequest{"GET", "/ledgers/http-test", {}, ""}).status, 0);
}
