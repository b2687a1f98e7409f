// SPDX-License-Identifier: Apache-2.0
// pipechain-node: a replica, and on the leader the REST gateway.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "pipechain/contract.hpp"
#include "pipechain/gateway/http.hpp"
#include "pipechain/replication/tcp.hpp"

using namespace pipechain;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

int run_node(const std::string& config_path, const std::string& data_dir, const std::string& tls_cert,
             const std::string& tls_key) {
    replication::NodeConfig cfg = replication::load_node_config(config_path);
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    if (cfg.key_file.empty()) throw std::invalid_argument("node config needs key_file");
    SigningKey key = load_signing_key(cfg.key_file);
    if (cfg.role == replication::NodeRole::Leader && key.public_key() != cfg.leader_public_key) {
        throw std::invalid_argument("key_file does not match leader_public_key");
    }

    replication::NodeContext ctx;
    ctx.config = cfg;
    ctx.key = key;
    // Entries are signed by the gateway with the leader key.
    const PublicKey leader = cfg.leader_public_key;
    ctx.entry_keys = [leader](std::string_view) { return std::optional<PublicKey>(leader); };
    ctx.make_engine = [] { return std::make_unique<ContractEngine>(); };
    replication::TcpNode node(std::move(ctx));
    node.start();
    std::cerr << "node " << cfg.node_id << " replicating on port " << node.port() << "\n";

    std::unique_ptr<gateway::TcpClusterLink> link;
    std::unique_ptr<gateway::Gateway> gw;
    std::unique_ptr<gateway::HttpServer> server;
    if (cfg.role == replication::NodeRole::Leader && !cfg.gateway_listen.empty()) {
        gateway::GatewayOptions g;
        if (!cfg.gateway_config.empty()) g.config = gateway::load_gateway_config(cfg.gateway_config);
        g.state_dir = cfg.data_dir / "_gateway";
        link = std::make_unique<gateway::TcpClusterLink>(node);
        g.cluster = link.get();
        g.ingress_key = key;
        gw = std::make_unique<gateway::Gateway>(std::move(g));
        auto [host, port] = replication::split_host_port(cfg.gateway_listen);
        std::optional<gateway::TlsFiles> tls;
        if (!tls_cert.empty() || !tls_key.empty()) {
            if (tls_cert.empty() || tls_key.empty()) throw std::invalid_argument("--tls-cert and --tls-key go together");
            tls = gateway::TlsFiles{tls_cert, tls_key};
        }
        server = std::make_unique<gateway::HttpServer>(*gw, host, port, tls);
        server->start();
        std::cerr << "gateway listening on " << host << ":" << server->port() << (tls ? " (TLS)" : "") << "\n";
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (server) server->stop();
    node.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pipechain replica node"};
    app.require_subcommand(1);

    auto* keygen = app.add_subcommand("keygen", "Write a new signing key and print its public key");
    std::string key_out, pub_out;
    keygen->add_option("--out", key_out, "Private key file")->required();
    keygen->add_option("--pub", pub_out, "Also write the public key here");

    auto* run = app.add_subcommand("run", "Run a node from its config file");
    std::string config = env_or("PIPECHAIN_CONFIG", "");
    std::string data_dir = env_or("PIPECHAIN_DATA_DIR", "");
    std::string tls_cert, tls_key;
    run->add_option("--config", config, "Node config (default $PIPECHAIN_CONFIG)");
    run->add_option("--data-dir", data_dir, "Overrides data_dir (default $PIPECHAIN_DATA_DIR)");
    run->add_option("--tls-cert", tls_cert, "PEM certificate for HTTPS");
    run->add_option("--tls-key", tls_key, "PEM private key for HTTPS");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*keygen) {
            if (std::filesystem::exists(key_out)) throw std::invalid_argument(key_out + " already exists");
            SigningKey k = SigningKey::generate();
            save_signing_key(key_out, k);
            std::filesystem::permissions(key_out, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
            if (!pub_out.empty()) save_public_key(pub_out, k.public_key());
            std::cout << to_hex(k.public_key()) << "\n";
            return 0;
        }
        if (config.empty()) throw std::invalid_argument("--config or PIPECHAIN_CONFIG is required");
        return run_node(config, data_dir, tls_cert, tls_key);
    } catch (const std::exception& e) {
        std::cerr << "pipechain-node: " << e.what() << "\n";
        return 2;
    }
}
