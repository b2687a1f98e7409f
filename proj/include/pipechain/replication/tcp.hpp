// SPDX-License-Identifier: Apache-2.0
#pragma once

// TCP transport: one connection per frame. Audit requests get their response
// on the same connection; every other message is one-way.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include "pipechain/replication/node.hpp"

namespace pipechain::replication {

/// "host:port" -> (host, port). Throws std::invalid_argument.
std::pair<std::string, std::uint16_t> split_host_port(const std::string& address);

/// Sends one frame and, if `want_reply`, waits for one frame back.
std::optional<ReplicationMessage> tcp_exchange(const std::string& address, const ReplicationMessage& msg,
                                               bool want_reply, int timeout_ms = 2000);

/// Audit view of one ledger on a remote node; nullopt when unreachable.
std::optional<std::vector<AuditRecord>> fetch_audit(const std::string& address, const std::string& ledger,
                                                    std::uint64_t from, std::uint64_t to, int timeout_ms = 5000);

class TcpServer {
public:
    using Handler = std::function<std::optional<ReplicationMessage>(const ReplicationMessage&)>;

    TcpServer(std::string listen_address, Handler handler);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts the accept loop. Port 0 picks a free port.
    void start();
    void stop();
    std::uint16_t port() const { return port_; }

private:
    void run();
    void serve(int fd);

    std::string address_;
    Handler handler_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

/// Background queue of one-way sends.
class TcpSender {
public:
    TcpSender();
    ~TcpSender();
    TcpSender(const TcpSender&) = delete;
    TcpSender& operator=(const TcpSender&) = delete;

    void send(std::string address, ReplicationMessage msg);
    void stop();

private:
    void run();

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::pair<std::string, ReplicationMessage>> queue_;
    bool stopping_ = false;
    std::thread thread_;
};

/// A NodeHost served over TCP, with its own timer thread. All access to the
/// host is serialised through one mutex.
class TcpNode {
public:
    explicit TcpNode(NodeContext ctx, std::uint64_t tick_ms = 20);
    ~TcpNode();

    void start();
    void stop();
    std::uint16_t port() const { return server_.port(); }

    /// Runs `fn` with exclusive access to the host and sends what it emitted.
    void with_host(const std::function<void(NodeHost&, Outbox&)>& fn);

private:
    void dispatch(Outbox& out);

    std::mutex mu_;
    NodeHost host_;
    TcpSender sender_;
    TcpServer server_;
    std::uint64_t tick_ms_;
    std::atomic<bool> stopping_{false};
    std::thread ticker_;
};

}  // namespace pipechain::replication
