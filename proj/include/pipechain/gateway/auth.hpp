// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "pipechain/crypto.hpp"

namespace pipechain::gateway {

enum class Role { Administrator, Contributor, Reader };
enum class Action { AdminCrud, Append, Read };

std::string_view role_name(Role r);
std::optional<Role> parse_role(std::string_view s);
std::string_view action_name(Action a);

/// Administrator: everything. Contributor: Append and Read. Reader: Read.
bool authorize(Role role, Action action);

enum class PrincipalKind { CertBased, TokenBased };

struct Principal {
    std::string principal_id;
    /// Token principals only.
    std::string tenant_id;
    PrincipalKind kind = PrincipalKind::CertBased;
    PublicKey public_key{};
    Digest token_digest{};
    Role role = Role::Reader;
};

inline constexpr std::string_view kPrincipalHeader = "x-pipechain-principal";
inline constexpr std::string_view kNonceHeader = "x-pipechain-nonce";
inline constexpr std::string_view kSignatureHeader = "x-pipechain-signature";

struct HttpRequest {
    std::string method;
    /// Path plus query string, exactly as sent.
    std::string target;
    /// Lowercase names.
    std::map<std::string, std::string> headers;
    std::string body;

    std::string path() const;
    std::optional<std::string> query(std::string_view key) const;
    const std::string* header(std::string_view name) const;
};

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// str(method) || str(target) || sha256(body) || u64 nonce.
Bytes request_signing_preimage(std::string_view method, std::string_view target, std::string_view body,
                               std::uint64_t nonce);

/// Adds the three detached-signature headers.
void sign_request(HttpRequest& req, const std::string& principal_id, const SigningKey& key, std::uint64_t nonce);

inline void set_bearer(HttpRequest& req, std::string_view token) {
    req.headers["authorization"] = "Bearer " + std::string(token);
}

Digest token_digest(std::string_view token);

}  // namespace pipechain::gateway
