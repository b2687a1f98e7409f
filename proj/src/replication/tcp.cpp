// SPDX-License-Identifier: Apache-2.0
#include "pipechain/replication/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>

#include "pipechain/codec.hpp"

namespace pipechain::replication {

namespace {

struct Fd {
    int fd = -1;
    explicit Fd(int f) : fd(f) {}
    ~Fd() {
        if (fd >= 0) ::close(fd);
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
};

void set_timeouts(int fd, int timeout_ms) {
    timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

bool write_all(int fd, const std::uint8_t* p, std::size_t n) {
    while (n > 0) {
        ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
        if (w < 0 && errno == EINTR) continue;
        if (w <= 0) return false;
        p += w;
        n -= static_cast<std::size_t>(w);
    }
    return true;
}

bool read_all(int fd, std::uint8_t* p, std::size_t n) {
    while (n > 0) {
        ssize_t r = ::recv(fd, p, n, 0);
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) return false;
        p += r;
        n -= static_cast<std::size_t>(r);
    }
    return true;
}

std::optional<ReplicationMessage> read_frame(int fd) {
    std::uint8_t len_buf[4];
    if (!read_all(fd, len_buf, 4)) return std::nullopt;
    std::uint32_t len = Reader(ByteView(len_buf, 4)).u32();
    if (len > kMaxFrameBytes) return std::nullopt;
    Bytes body(len);
    if (!read_all(fd, body.data(), len)) return std::nullopt;
    try {
        return ReplicationMessage::decode(body);
    } catch (const EncodingError&) {
        return std::nullopt;
    }
}

bool write_frame(int fd, const ReplicationMessage& msg) {
    Bytes f = encode_frame(msg);
    return write_all(fd, f.data(), f.size());
}

int connect_to(const std::string& address, int timeout_ms) {
    auto [host, port] = split_host_port(address);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return -1;
    int out = -1;
    for (addrinfo* ai = res; ai && out < 0; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        int flags = ::fcntl(fd, F_GETFL, 0);
        ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
        if (rc < 0 && errno == EINPROGRESS) {
            pollfd pfd{fd, POLLOUT, 0};
            if (::poll(&pfd, 1, timeout_ms) == 1) {
                int err = 0;
                socklen_t len = sizeof err;
                ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
            }
        }
        if (rc == 0) {
            ::fcntl(fd, F_SETFL, flags);
            set_timeouts(fd, timeout_ms);
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            out = fd;
        } else {
            ::close(fd);
        }
    }
    ::freeaddrinfo(res);
    return out;
}

std::uint64_t steady_ms() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
}

}  // namespace

std::pair<std::string, std::uint16_t> split_host_port(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0) throw std::invalid_argument("expected host:port, got " + address);
    std::string host = address.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    std::string port = address.substr(colon + 1);
    if (port.empty() || port.size() > 5 || port.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("bad port in " + address);
    }
    unsigned long p = std::stoul(port);
    if (p > 65535) throw std::invalid_argument("bad port in " + address);
    return {host, static_cast<std::uint16_t>(p)};
}

std::optional<ReplicationMessage> tcp_exchange(const std::string& address, const ReplicationMessage& msg,
                                               bool want_reply, int timeout_ms) {
    Fd fd(connect_to(address, timeout_ms));
    if (fd.fd < 0) return std::nullopt;
    if (!write_frame(fd.fd, msg)) return std::nullopt;
    if (!want_reply) return msg;
    return read_frame(fd.fd);
}

std::optional<std::vector<AuditRecord>> fetch_audit(const std::string& address, const std::string& ledger,
                                                    std::uint64_t from, std::uint64_t to, int timeout_ms) {
    ReplicationMessage req;
    req.kind = MessageKind::AuditRequest;
    req.ledger = ledger;
    req.sender = "auditor";
    req.payload = AuditRequestPayload{from, to}.encode();
    auto reply = tcp_exchange(address, req, true, timeout_ms);
    if (!reply || reply->kind != MessageKind::AuditResponse) return std::nullopt;
    try {
        return AuditResponsePayload::decode(reply->payload).records;
    } catch (const EncodingError&) {
        return std::nullopt;
    }
}

TcpServer::TcpServer(std::string listen_address, Handler handler)
    : address_(std::move(listen_address)), handler_(std::move(handler)) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
    auto [host, port] = split_host_port(address_);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
        throw std::runtime_error("cannot resolve listen address " + address_);
    }
    for (addrinfo* ai = res; ai && listen_fd_ < 0; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
            listen_fd_ = fd;
        } else {
            ::close(fd);
        }
    }
    ::freeaddrinfo(res);
    if (listen_fd_ < 0) throw std::runtime_error("cannot listen on " + address_ + ": " + std::strerror(errno));

    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&ss), &len);
    port_ = ntohs(ss.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port
                                           : reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
    thread_ = std::thread([this] { run(); });
}

void TcpServer::stop() {
    stopping_ = true;
    if (thread_.joinable()) thread_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

void TcpServer::run() {
    while (!stopping_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        if (::poll(&pfd, 1, 100) != 1) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        serve(fd);
    }
}

void TcpServer::serve(int raw) {
    Fd fd(raw);
    set_timeouts(fd.fd, 2000);
    auto msg = read_frame(fd.fd);
    if (!msg) return;
    auto reply = handler_(*msg);
    if (reply) write_frame(fd.fd, *reply);
}

TcpSender::TcpSender() : thread_([this] { run(); }) {}

TcpSender::~TcpSender() { stop(); }

void TcpSender::send(std::string address, ReplicationMessage msg) {
    {
        std::lock_guard lock(mu_);
        if (stopping_) return;
        queue_.emplace_back(std::move(address), std::move(msg));
    }
    cv_.notify_one();
}

void TcpSender::stop() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
}

void TcpSender::run() {
    for (;;) {
        std::pair<std::string, ReplicationMessage> item;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            item = std::move(queue_.front());
            queue_.pop_front();
        }
        tcp_exchange(item.first, item.second, false, 500);
    }
}

TcpNode::TcpNode(NodeContext ctx, std::uint64_t tick_ms)
    : host_([&ctx] {
          if (!ctx.now_ms) ctx.now_ms = steady_ms;
          return std::move(ctx);
      }()),
      server_(host_.context().config.listen_address,
              [this](const ReplicationMessage& msg) {
                  Outbox out;
                  std::optional<ReplicationMessage> reply;
                  {
                      std::lock_guard lock(mu_);
                      reply = host_.handle(msg, out);
                  }
                  dispatch(out);
                  return reply;
              }),
      tick_ms_(tick_ms) {}

TcpNode::~TcpNode() { stop(); }

void TcpNode::start() {
    server_.start();
    ticker_ = std::thread([this] {
        while (!stopping_) {
            std::this_thread::sleep_for(std::chrono::milliseconds(tick_ms_));
            with_host([](NodeHost& h, Outbox& out) { h.tick(out); });
        }
    });
}

void TcpNode::stop() {
    stopping_ = true;
    if (ticker_.joinable()) ticker_.join();
    server_.stop();
    sender_.stop();
}

void TcpNode::with_host(const std::function<void(NodeHost&, Outbox&)>& fn) {
    Outbox out;
    {
        std::lock_guard lock(mu_);
        fn(host_, out);
    }
    dispatch(out);
}

void TcpNode::dispatch(Outbox& out) {
    for (auto& env : out) {
        const PeerInfo* p = host_.context().peer(env.to);
        if (p) sender_.send(p->address, std::move(env.message));
    }
    out.clear();
}

}  // namespace pipechain::replication
