// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pipechain/gateway/auth.hpp"
#include "pipechain/replication/node.hpp"

namespace pipechain::harness {

struct Scenario;

/// Infrastructure failure: the pipeline could not be exercised at all.
class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// What the harness needs from a running pipeline.
class Deployment {
public:
    virtual ~Deployment() = default;
    /// Status 0 means the gateway was unreachable.
    virtual gateway::HttpResponse send(const gateway::HttpRequest& req) = 0;
    /// Lets `ms` of (virtual or wall) time pass.
    virtual void wait(std::uint64_t ms) = 0;
    virtual PublicKey leader_key() const = 0;
    virtual std::vector<std::string> node_ids() const = 0;
    /// Block file of `height` on `node`; nullopt when storage is not reachable
    /// from here or the block is not on disk yet.
    virtual std::optional<std::filesystem::path> block_file(const std::string& node, const std::string& ledger,
                                                            std::uint64_t height) const = 0;
    /// Ledger directories that can be checked by full replay, by node.
    virtual std::vector<std::pair<std::string, std::filesystem::path>> ledger_dirs(const std::string& ledger) const = 0;
    virtual std::vector<replication::NodeAudit> audit(const std::string& ledger, std::uint64_t from,
                                                      std::uint64_t to) = 0;
    /// Milliseconds since the deployment started; virtual in simulation.
    virtual std::uint64_t now_ms() = 0;
    /// Whether requests issued by different producers must be serialised.
    virtual bool deterministic() const = 0;
};

/// In-process cluster on a seeded simulated network, with the gateway called
/// directly. Every principal named by the scenario is registered: the admin
/// as Administrator, producers and forgers as Contributors.
std::unique_ptr<Deployment> make_sim_deployment(const Scenario& scenario, const std::filesystem::path& work_dir);

/// A running gateway reached over HTTP(S), with replica audits over the
/// replication transport and storage access through node data directories.
std::unique_ptr<Deployment> make_remote_deployment(const Scenario& scenario);

/// Forwards to `inner`, passing every response through `tamper` first.
class TamperingDeployment : public Deployment {
public:
    using Tamper = std::function<void(const gateway::HttpRequest&, gateway::HttpResponse&)>;
    TamperingDeployment(Deployment& inner, Tamper tamper) : inner_(inner), tamper_(std::move(tamper)) {}

    gateway::HttpResponse send(const gateway::HttpRequest& req) override {
        gateway::HttpResponse r = inner_.send(req);
        tamper_(req, r);
        return r;
    }
    void wait(std::uint64_t ms) override { inner_.wait(ms); }
    PublicKey leader_key() const override { return inner_.leader_key(); }
    std::vector<std::string> node_ids() const override { return inner_.node_ids(); }
    std::optional<std::filesystem::path> block_file(const std::string& node, const std::string& ledger,
                                                    std::uint64_t height) const override {
        return inner_.block_file(node, ledger, height);
    }
    std::vector<std::pair<std::string, std::filesystem::path>> ledger_dirs(const std::string& ledger) const override {
        return inner_.ledger_dirs(ledger);
    }
    std::vector<replication::NodeAudit> audit(const std::string& ledger, std::uint64_t from,
                                              std::uint64_t to) override {
        return inner_.audit(ledger, from, to);
    }
    std::uint64_t now_ms() override { return inner_.now_ms(); }
    bool deterministic() const override { return inner_.deterministic(); }

private:
    Deployment& inner_;
    Tamper tamper_;
};

}  // namespace pipechain::harness
