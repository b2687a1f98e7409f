// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "pipechain/gateway/gateway.hpp"
#include "pipechain/replication/sim.hpp"
#include "pipechain/replication/tcp.hpp"

namespace pipechain::gateway {

/// Leader of a simulated cluster; time is the network's virtual clock.
class SimClusterLink final : public ClusterLink {
public:
    explicit SimClusterLink(replication::SimCluster& cluster) : cluster_(cluster) {}
    void with_host(const std::function<void(replication::NodeHost&, replication::Outbox&)>& fn) override {
        cluster_.with_leader(fn);
    }
    std::uint64_t now_ms() override { return cluster_.network().now(); }

private:
    replication::SimCluster& cluster_;
};

class TcpClusterLink final : public ClusterLink {
public:
    explicit TcpClusterLink(replication::TcpNode& node) : node_(node) {}
    void with_host(const std::function<void(replication::NodeHost&, replication::Outbox&)>& fn) override {
        node_.with_host(fn);
    }
    std::uint64_t now_ms() override;

private:
    replication::TcpNode& node_;
};

struct TlsFiles {
    std::string cert_pem;
    std::string key_pem;
};

/// True when the HTTP layer was compiled with TLS support.
bool tls_available();

/// Serves Gateway::handle over HTTP(S) and pumps the gateway in the background.
class HttpServer {
public:
    HttpServer(Gateway& gateway, std::string host, std::uint16_t port, std::optional<TlsFiles> tls = std::nullopt,
               std::uint64_t pump_interval_ms = 20);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and starts serving; throws when the address is unavailable.
    void start();
    void stop();
    std::uint16_t port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Gateway& gateway_;
    std::string host_;
    std::uint16_t port_;
    std::uint64_t pump_interval_ms_;
    std::atomic<bool> stopping_{false};
    std::thread listener_;
    std::thread pumper_;
};

/// Synchronous client; `base` is "http://host:port" or "https://host:port".
class HttpClient {
public:
    explicit HttpClient(const std::string& base, int timeout_ms = 5000);
    ~HttpClient();
    HttpClient(const HttpClient&) = delete;
    HttpClient& operator=(const HttpClient&) = delete;

    /// Status 0 means the server could not be reached.
    HttpResponse send(const HttpRequest& req);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pipechain::gateway
