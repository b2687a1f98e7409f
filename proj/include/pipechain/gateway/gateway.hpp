// SPDX-License-Identifier: Apache-2.0
#pragma once

// REST front end of the leader. Gateway::handle maps one request to one
// response and is safe to call from many threads; pump() turns queued
// submissions into blocks and tracks their commit.
//
// Routes:
//   PUT|GET|PATCH|DELETE /ledgers/{name}
//   POST /ledgers/{name}/transactions
//   GET  /ledgers/{name}/transactions/{id}[/receipt]
//   GET  /ledgers/{name}/contracts/{contractId}/readings[?index=k]

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipechain/entry.hpp"
#include "pipechain/gateway/auth.hpp"
#include "pipechain/replication/node.hpp"

namespace pipechain::gateway {

/// Access to the local leader node.
class ClusterLink {
public:
    virtual ~ClusterLink() = default;
    /// Runs `fn` with exclusive access to the leader host and sends its output.
    virtual void with_host(const std::function<void(replication::NodeHost&, replication::Outbox&)>& fn) = 0;
    virtual std::uint64_t now_ms() = 0;
};

inline constexpr std::string_view kIdentityServicePlaceholder = "urn:pipechain:identity-service:unsupported";

struct GatewayConfig {
    /// Base for derived ledger URIs, e.g. "http://127.0.0.1:8080".
    std::string public_uri = "http://127.0.0.1:8080";
    /// Gateway-wide principals; they hold their role on every ledger that
    /// does not list them itself. Token principals need a secret here.
    std::vector<Principal> principals;
    std::size_t batch_max_entries = 64;
    std::uint64_t batch_max_delay_ms = 500;
};

/// Key-value format:
///   public_uri = http://host:port
///   cert = <principalId> <publicKeyHex> <role>
///   token = <principalId> <tenantId> <role> <secret>
///   batch_max_entries = 64
///   batch_max_delay_ms = 500
GatewayConfig parse_gateway_config(std::string_view text);
GatewayConfig load_gateway_config(const std::filesystem::path& path);

enum class LedgerType { Private, Public };

struct AadPrincipal {
    std::string principal_id;
    std::string tenant_id;
    Role role = Role::Reader;
};

struct CertPrincipal {
    std::string principal_id;
    PublicKey public_key{};
    Role role = Role::Reader;
};

struct LedgerDescriptor {
    std::string ledger_name;
    std::string ledger_uri;
    LedgerType ledger_type = LedgerType::Private;
    std::vector<AadPrincipal> aad_principals;
    std::vector<CertPrincipal> cert_principals;

    nlohmann::json to_json() const;
};

/// Parsed POST /transactions body.
struct TransactionBody {
    pipechain::Action action = pipechain::Action::AddReading;
    std::string contract_id;
    Bytes payload;
};

/// Throws std::invalid_argument with a client-facing reason.
TransactionBody parse_transaction_body(const std::string& body);

/// The request body that would produce `entry`, plus submitter metadata.
nlohmann::json entry_to_json(const LedgerEntry& entry);

struct GatewayOptions {
    GatewayConfig config;
    /// Descriptors and deletion markers live here.
    std::filesystem::path state_dir;
    ClusterLink* cluster = nullptr;
    /// Signs the ledger entries built from accepted requests.
    SigningKey ingress_key;
    std::function<std::uint64_t()> unix_clock;
};

class Gateway {
public:
    explicit Gateway(GatewayOptions options);

    HttpResponse handle(const HttpRequest& req);

    /// Proposes a block from queued submissions when the batch is full or
    /// old enough and nothing is awaiting quorum; marks committed ones.
    void pump();

    std::size_t queued(const std::string& ledger) const;

private:
    struct TxRecord {
        enum class State { Pending, Committed, Rejected };
        State state = State::Pending;
        std::string reason;
        std::optional<std::uint64_t> height;
        std::uint32_t leaf = 0;
    };

    struct Queued {
        std::string provisional_id;
        LedgerEntry entry;
    };

    struct LedgerSlot {
        LedgerDescriptor descriptor;
        bool deleted = false;
        std::deque<Queued> queue;
        std::uint64_t first_queued_ms = 0;
        std::unique_ptr<StateMachine> speculative;
        std::map<std::string, TxRecord> txs;
        std::map<std::uint64_t, std::vector<std::string>> awaiting_commit;
    };

    struct Caller {
        std::string principal_id;
        std::string tenant_id;
        PrincipalKind kind = PrincipalKind::CertBased;
        std::optional<std::uint64_t> nonce;
    };

    HttpResponse route(const HttpRequest& req);
    std::optional<HttpResponse> authenticate(const HttpRequest& req, const LedgerSlot* slot, Caller& out);
    std::optional<Role> role_of(const Caller& c, const LedgerSlot* slot) const;

    HttpResponse create_ledger(const std::string& name, const HttpRequest& req);
    HttpResponse update_ledger(LedgerSlot& slot, const HttpRequest& req);
    HttpResponse delete_ledger(LedgerSlot& slot);
    HttpResponse post_transaction(LedgerSlot& slot, const Caller& caller, const HttpRequest& req);
    HttpResponse get_transaction(LedgerSlot& slot, const std::string& id, bool receipt);
    HttpResponse get_readings(LedgerSlot& slot, const std::string& contract_id, const HttpRequest& req);

    void persist(const LedgerSlot& slot) const;
    void pump_ledger(LedgerSlot& slot, replication::NodeHost& host, replication::Outbox& out);
    std::uint64_t nonce_floor(const std::string& principal_id);

    GatewayOptions options_;
    mutable std::mutex mu_;
    std::map<std::string, LedgerSlot> ledgers_;
    std::map<std::string, std::uint64_t> last_nonce_;
};

/// Lowercases; nullopt unless the result matches [a-z0-9-]{3,32}.
std::optional<std::string> normalize_ledger_name(std::string_view name);

}  // namespace pipechain::gateway
