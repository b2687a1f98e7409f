// SPDX-License-Identifier: Apache-2.0
#include "pipechain/harness/deployment.hpp"

#include <chrono>
#include <thread>

#include "pipechain/block_store.hpp"
#include "pipechain/gateway/http.hpp"
#include "pipechain/harness/scenario.hpp"
#include "pipechain/replication/sim.hpp"
#include "pipechain/replication/tcp.hpp"

namespace pipechain::harness {

namespace fs = std::filesystem;
using gateway::HttpRequest;
using gateway::HttpResponse;

namespace {

void add_principal(gateway::GatewayConfig& cfg, const std::string& ref, gateway::Role role) {
    Credential c = parse_credential(ref);
    for (const auto& p : cfg.principals) {
        if (p.principal_id == c.principal_id) return;
    }
    gateway::Principal p;
    p.principal_id = c.principal_id;
    p.role = role;
    if (c.key) {
        p.kind = gateway::PrincipalKind::CertBased;
        p.public_key = c.key->public_key();
    } else {
        p.kind = gateway::PrincipalKind::TokenBased;
        p.tenant_id = "harness";
        p.token_digest = gateway::token_digest(*c.token);
    }
    cfg.principals.push_back(std::move(p));
}

class SimDeployment final : public Deployment {
public:
    SimDeployment(const Scenario& sc, const fs::path& work_dir) {
        replication::SimClusterOptions o;
        o.nodes = sc.nodes;
        o.base_dir = work_dir / "nodes";
        o.network.seed = mix_seed(sc.seed, 0x6e6574);
        o.unix_epoch = sc.start_timestamp;
        auto ingress = std::make_shared<PublicKey>(SigningKey::derive(o.key_label + ":node-0").public_key());
        o.entry_keys = [ingress](std::string_view) { return std::optional<PublicKey>(*ingress); };
        cluster_ = std::make_unique<replication::SimCluster>(o);
        link_ = std::make_unique<gateway::SimClusterLink>(*cluster_);

        gateway::GatewayOptions g;
        g.config.public_uri = "http://sim.invalid";
        g.config.batch_max_entries = sc.batch_max_entries;
        g.config.batch_max_delay_ms = sc.batch_max_delay_ms;
        add_principal(g.config, sc.admin, gateway::Role::Administrator);
        for (const auto& p : sc.producers) add_principal(g.config, p.principal, gateway::Role::Contributor);
        for (const auto& a : sc.attacks) {
            if (a.kind == AttackKind::ForgeSubmitter) add_principal(g.config, a.principal, gateway::Role::Contributor);
        }
        g.state_dir = work_dir / "gateway";
        g.cluster = link_.get();
        g.ingress_key = cluster_->key(0);
        auto* net = &cluster_->network();
        const std::uint64_t epoch = sc.start_timestamp;
        g.unix_clock = [net, epoch] { return epoch + net->now() / 1000; };
        gateway_ = std::make_unique<gateway::Gateway>(std::move(g));
    }

    HttpResponse send(const HttpRequest& req) override { return gateway_->handle(req); }

    void wait(std::uint64_t ms) override {
        for (std::uint64_t t = 0; t < ms; t += kStep) {
            gateway_->pump();
            cluster_->network().run_for(std::min(kStep, ms - t));
        }
        gateway_->pump();
    }

    PublicKey leader_key() const override { return cluster_->key(0).public_key(); }

    std::vector<std::string> node_ids() const override {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < cluster_->size(); ++i) out.push_back(cluster_->config(i).node_id);
        return out;
    }

    std::optional<fs::path> block_file(const std::string& node, const std::string& ledger,
                                       std::uint64_t height) const override {
        for (std::size_t i = 0; i < cluster_->size(); ++i) {
            if (cluster_->config(i).node_id != node) continue;
            fs::path p = cluster_->config(i).data_dir / ledger / block_file_name(height);
            if (fs::exists(p)) return p;
        }
        return std::nullopt;
    }

    std::vector<std::pair<std::string, fs::path>> ledger_dirs(const std::string& ledger) const override {
        std::vector<std::pair<std::string, fs::path>> out;
        for (std::size_t i = 0; i < cluster_->size(); ++i) {
            fs::path p = cluster_->config(i).data_dir / ledger;
            if (fs::exists(p)) out.emplace_back(cluster_->config(i).node_id, p);
        }
        return out;
    }

    std::vector<replication::NodeAudit> audit(const std::string& ledger, std::uint64_t from,
                                              std::uint64_t to) override {
        return cluster_->audit(ledger, from, to);
    }

    std::uint64_t now_ms() override { return cluster_->network().now(); }
    bool deterministic() const override { return true; }

private:
    static constexpr std::uint64_t kStep = 10;
    std::unique_ptr<replication::SimCluster> cluster_;
    std::unique_ptr<gateway::SimClusterLink> link_;
    std::unique_ptr<gateway::Gateway> gateway_;
};

class RemoteDeployment final : public Deployment {
public:
    explicit RemoteDeployment(const Scenario& sc)
        : uri_(sc.gateway_uri), leader_key_(*sc.leader_key), nodes_(sc.node_specs), start_(steady()) {}

    HttpResponse send(const HttpRequest& req) override { return gateway::HttpClient(uri_).send(req); }
    void wait(std::uint64_t ms) override { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }
    PublicKey leader_key() const override { return leader_key_; }

    std::vector<std::string> node_ids() const override {
        std::vector<std::string> out;
        for (const auto& n : nodes_) out.push_back(n.node_id);
        return out;
    }

    std::optional<fs::path> block_file(const std::string& node, const std::string& ledger,
                                       std::uint64_t height) const override {
        for (const auto& n : nodes_) {
            if (n.node_id != node || n.data_dir.empty()) continue;
            fs::path p = n.data_dir / ledger / block_file_name(height);
            if (fs::exists(p)) return p;
        }
        return std::nullopt;
    }

    std::vector<std::pair<std::string, fs::path>> ledger_dirs(const std::string& ledger) const override {
        std::vector<std::pair<std::string, fs::path>> out;
        for (const auto& n : nodes_) {
            if (!n.data_dir.empty() && fs::exists(n.data_dir / ledger)) out.emplace_back(n.node_id, n.data_dir / ledger);
        }
        return out;
    }

    std::vector<replication::NodeAudit> audit(const std::string& ledger, std::uint64_t from,
                                              std::uint64_t to) override {
        std::vector<replication::NodeAudit> out;
        for (const auto& n : nodes_) out.push_back({n.node_id, replication::fetch_audit(n.address, ledger, from, to)});
        return out;
    }

    std::uint64_t now_ms() override { return steady() - start_; }
    bool deterministic() const override { return false; }

private:
    static std::uint64_t steady() {
        return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                              std::chrono::steady_clock::now().time_since_epoch())
                                              .count());
    }

    std::string uri_;
    PublicKey leader_key_;
    std::vector<NodeSpec> nodes_;
    std::uint64_t start_;
};

}  // namespace

std::unique_ptr<Deployment> make_sim_deployment(const Scenario& scenario, const fs::path& work_dir) {
    return std::make_unique<SimDeployment>(scenario, work_dir);
}

std::unique_ptr<Deployment> make_remote_deployment(const Scenario& scenario) {
    if (scenario.gateway_uri.empty()) throw HarnessError("scenario has no gateway address");
    if (!scenario.leader_key) throw HarnessError("scenario has no leader_key");
    return std::make_unique<RemoteDeployment>(scenario);
}

}  // namespace pipechain::harness
