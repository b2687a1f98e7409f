// SPDX-License-Identifier: Apache-2.0
#pragma once

// In-process transport with a seeded scheduler: virtual time, per-message
// random delay (which reorders), loss and duplication, plus node crash and
// restart from the node's data directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "pipechain/replication/node.hpp"

namespace pipechain::replication {

struct SimOptions {
    std::uint64_t seed = 1;
    std::uint64_t min_delay_ms = 1;
    std::uint64_t max_delay_ms = 20;
    double drop_rate = 0.0;
    double duplicate_rate = 0.0;
    std::uint64_t tick_ms = 10;
};

class SimNetwork {
public:
    explicit SimNetwork(SimOptions options);

    void attach(NodeHost* host);
    /// Detaching drops every message still queued for the node.
    void detach(const std::string& node_id);
    bool attached(const std::string& node_id) const { return hosts_.count(node_id) != 0; }

    void send(const std::string& from, Outbox&& out);
    std::uint64_t now() const { return now_; }

    void run_for(std::uint64_t ms);
    /// Runs until pred() holds or max_ms of virtual time pass.
    bool run_until(const std::function<bool()>& pred, std::uint64_t max_ms);

    std::uint64_t delivered() const { return delivered_; }
    std::uint64_t lost() const { return lost_; }

private:
    struct Event {
        std::uint64_t at;
        std::uint64_t seq;
        std::string from;
        Envelope envelope;
        bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
    };

    void schedule(const std::string& from, Envelope env);
    void step_to(std::uint64_t t);

    SimOptions options_;
    std::mt19937_64 rng_;
    std::uint64_t now_ = 0;
    std::uint64_t next_tick_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t delivered_ = 0;
    std::uint64_t lost_ = 0;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::map<std::string, NodeHost*> hosts_;
};

/// Source of blocks backed by a host in the same process.
class HostBlockSource : public BlockSource {
public:
    HostBlockSource(const NodeHost* host, std::size_t batch = 32) : host_(host), batch_(batch) {}
    std::optional<CatchUpResponsePayload> fetch(const std::string& ledger, std::uint64_t first) override;

private:
    const NodeHost* host_;
    std::size_t batch_;
};

struct SimClusterOptions {
    std::size_t nodes = 3;
    std::filesystem::path base_dir;
    SimOptions network;
    ReplicaTiming timing;
    KeyLookup entry_keys;
    /// Defaults to the sensor contract engine.
    std::function<std::unique_ptr<StateMachine>()> make_engine;
    std::uint64_t unix_epoch = 1677651200;
    std::string key_label = "sim";
};

/// N hosts on one SimNetwork; node 0 is the leader. Records every commit and
/// flags any height committed with two different hashes.
class SimCluster {
public:
    explicit SimCluster(SimClusterOptions options);
    ~SimCluster();

    std::size_t size() const { return configs_.size(); }
    NodeHost& leader() { return node(0); }
    NodeHost& node(std::size_t i);
    bool running(std::size_t i) const { return hosts_[i] != nullptr; }
    const NodeConfig& config(std::size_t i) const { return configs_[i]; }
    const SigningKey& key(std::size_t i) const { return keys_[i]; }
    SimNetwork& network() { return net_; }

    void crash(std::size_t i);
    void restart(std::size_t i);

    /// Runs `fn` against the leader and sends whatever it emitted.
    void with_leader(const std::function<void(NodeHost&, Outbox&)>& fn);

    bool safety_ok() const { return violations_.empty(); }
    const std::vector<std::string>& violations() const { return violations_; }
    /// ledger -> height -> hash, as first committed by any node.
    const std::map<std::string, std::map<std::uint64_t, Digest>>& commits() const { return commits_; }

    /// Per-node audit view of one ledger read straight from disk; crashed
    /// nodes are unreachable.
    std::vector<NodeAudit> audit(const std::string& ledger, std::uint64_t from, std::uint64_t to) const;

private:
    NodeContext context_for(std::size_t i);

    SimClusterOptions options_;
    SimNetwork net_;
    std::vector<NodeConfig> configs_;
    std::vector<SigningKey> keys_;
    std::vector<std::unique_ptr<NodeHost>> hosts_;
    std::map<std::string, std::map<std::uint64_t, Digest>> commits_;
    std::vector<std::string> violations_;
};

}  // namespace pipechain::replication
