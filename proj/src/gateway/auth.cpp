// SPDX-License-Identifier: Apache-2.0
#include "pipechain/gateway/auth.hpp"

#include <algorithm>
#include <cctype>

#include "pipechain/codec.hpp"

namespace pipechain::gateway {

std::string_view role_name(Role r) {
    switch (r) {
        case Role::Administrator: return "Administrator";
        case Role::Contributor: return "Contributor";
        case Role::Reader: return "Reader";
    }
    return "Unknown";
}

std::optional<Role> parse_role(std::string_view s) {
    for (Role r : {Role::Administrator, Role::Contributor, Role::Reader}) {
        if (s == role_name(r)) return r;
    }
    return std::nullopt;
}

std::string_view action_name(Action a) {
    switch (a) {
        case Action::AdminCrud: return "AdminCrud";
        case Action::Append: return "Append";
        case Action::Read: return "Read";
    }
    return "Unknown";
}

bool authorize(Role role, Action action) {
    switch (role) {
        case Role::Administrator: return true;
        case Role::Contributor: return action != Action::AdminCrud;
        case Role::Reader: return action == Action::Read;
    }
    return false;
}

std::string HttpRequest::path() const {
    auto q = target.find('?');
    return q == std::string::npos ? target : target.substr(0, q);
}

std::optional<std::string> HttpRequest::query(std::string_view key) const {
    auto q = target.find('?');
    if (q == std::string::npos) return std::nullopt;
    std::string_view rest = std::string_view(target).substr(q + 1);
    while (!rest.empty()) {
        auto amp = rest.find('&');
        std::string_view pair = rest.substr(0, amp);
        auto eq = pair.find('=');
        if (pair.substr(0, eq) == key) return std::string(eq == std::string_view::npos ? "" : pair.substr(eq + 1));
        if (amp == std::string_view::npos) break;
        rest.remove_prefix(amp + 1);
    }
    return std::nullopt;
}

const std::string* HttpRequest::header(std::string_view name) const {
    auto it = headers.find(std::string(name));
    return it == headers.end() ? nullptr : &it->second;
}

Bytes request_signing_preimage(std::string_view method, std::string_view target, std::string_view body,
                               std::uint64_t nonce) {
    Writer w;
    w.str(method).str(target).fixed(sha256(as_bytes(body))).u64(nonce);
    return std::move(w).take();
}

void sign_request(HttpRequest& req, const std::string& principal_id, const SigningKey& key, std::uint64_t nonce) {
    Signature sig = key.sign(request_signing_preimage(req.method, req.target, req.body, nonce));
    req.headers[std::string(kPrincipalHeader)] = principal_id;
    req.headers[std::string(kNonceHeader)] = std::to_string(nonce);
    req.headers[std::string(kSignatureHeader)] = to_hex(sig);
}

Digest token_digest(std::string_view token) { return sha256(as_bytes(token)); }

}  // namespace pipechain::gateway
