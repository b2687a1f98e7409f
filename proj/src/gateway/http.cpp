// SPDX-License-Identifier: Apache-2.0
#include "pipechain/gateway/http.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "httplib.h"

namespace pipechain::gateway {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::uint64_t TcpClusterLink::now_ms() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
}

bool tls_available() {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    return true;
#else
    return false;
#endif
}

struct HttpServer::Impl {
    std::unique_ptr<httplib::Server> server;
};

HttpServer::HttpServer(Gateway& gateway, std::string host, std::uint16_t port, std::optional<TlsFiles> tls,
                       std::uint64_t pump_interval_ms)
    : impl_(std::make_unique<Impl>()),
      gateway_(gateway),
      host_(std::move(host)),
      port_(port),
      pump_interval_ms_(pump_interval_ms) {
    if (tls) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        auto s = std::make_unique<httplib::SSLServer>(tls->cert_pem.c_str(), tls->key_pem.c_str());
        if (!s->is_valid()) throw std::runtime_error("cannot load TLS certificate or key");
        impl_->server = std::move(s);
#else
        throw std::runtime_error("built without TLS");
#endif
    } else {
        impl_->server = std::make_unique<httplib::Server>();
    }
    auto handler = [this](const httplib::Request& in, httplib::Response& res) {
        HttpRequest req;
        req.method = in.method;
        req.target = in.target;
        req.body = in.body;
        for (const auto& [k, v] : in.headers) req.headers[lower(k)] = v;
        HttpResponse out = gateway_.handle(req);
        res.status = out.status;
        if (!out.body.empty()) res.set_content(out.body, out.content_type);
    };
    auto& s = *impl_->server;
    const std::string any = R"(/.*)";
    s.Get(any, handler);
    s.Put(any, handler);
    s.Post(any, handler);
    s.Patch(any, handler);
    s.Delete(any, handler);
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
    auto& s = *impl_->server;
    if (port_ == 0) {
        int p = s.bind_to_any_port(host_);
        if (p <= 0) throw std::runtime_error("cannot bind HTTP listener on " + host_);
        port_ = static_cast<std::uint16_t>(p);
    } else if (!s.bind_to_port(host_, port_)) {
        throw std::runtime_error("cannot bind HTTP listener on " + host_ + ":" + std::to_string(port_));
    }
    listener_ = std::thread([&s] { s.listen_after_bind(); });
    pumper_ = std::thread([this] {
        while (!stopping_) {
            gateway_.pump();
            std::this_thread::sleep_for(std::chrono::milliseconds(pump_interval_ms_));
        }
    });
    s.wait_until_ready();
}

void HttpServer::stop() {
    stopping_ = true;
    if (impl_ && impl_->server) impl_->server->stop();
    if (listener_.joinable()) listener_.join();
    if (pumper_.joinable()) pumper_.join();
}

struct HttpClient::Impl {
    std::unique_ptr<httplib::Client> client;
};

HttpClient::HttpClient(const std::string& base, int timeout_ms) : impl_(std::make_unique<Impl>()) {
    impl_->client = std::make_unique<httplib::Client>(base);
    auto t = std::chrono::milliseconds(timeout_ms);
    impl_->client->set_connection_timeout(t);
    impl_->client->set_read_timeout(t);
    impl_->client->set_write_timeout(t);
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    impl_->client->enable_server_certificate_verification(false);
#endif
}

HttpClient::~HttpClient() = default;

HttpResponse HttpClient::send(const HttpRequest& req) {
    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);
    httplib::Request r;
    r.method = req.method;
    r.path = req.target;
    r.headers = std::move(headers);
    r.body = req.body;
    if (!req.body.empty()) r.set_header("Content-Type", "application/json");
    httplib::Result res = impl_->client->send(r);
    if (!res) return HttpResponse{0, httplib::to_string(res.error()), "text/plain"};
    return HttpResponse{res->status, res->body, res->get_header_value("Content-Type")};
}

}  // namespace pipechain::gateway
