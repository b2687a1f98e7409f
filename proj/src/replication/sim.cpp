// SPDX-License-Identifier: Apache-2.0
#include "pipechain/replication/sim.hpp"

#include <algorithm>

#include "pipechain/contract.hpp"

namespace pipechain::replication {

SimNetwork::SimNetwork(SimOptions options) : options_(options), rng_(options.seed), next_tick_(options.tick_ms) {}

void SimNetwork::attach(NodeHost* host) { hosts_[host->node_id()] = host; }

void SimNetwork::detach(const std::string& node_id) {
    hosts_.erase(node_id);
    std::vector<Event> keep;
    while (!queue_.empty()) {
        Event e = queue_.top();
        queue_.pop();
        if (e.envelope.to == node_id) {
            ++lost_;
            continue;
        }
        keep.push_back(std::move(e));
    }
    for (auto& e : keep) queue_.push(std::move(e));
}

void SimNetwork::schedule(const std::string& from, Envelope env) {
    std::uniform_int_distribution<std::uint64_t> delay(options_.min_delay_ms, options_.max_delay_ms);
    queue_.push(Event{now_ + delay(rng_), seq_++, from, std::move(env)});
}

void SimNetwork::send(const std::string& from, Outbox&& out) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (auto& env : out) {
        if (options_.drop_rate > 0 && coin(rng_) < options_.drop_rate) {
            ++lost_;
            continue;
        }
        if (options_.duplicate_rate > 0 && coin(rng_) < options_.duplicate_rate) schedule(from, env);
        schedule(from, std::move(env));
    }
    out.clear();
}

void SimNetwork::step_to(std::uint64_t t) {
    while (true) {
        bool have_msg = !queue_.empty() && queue_.top().at <= t;
        bool have_tick = next_tick_ <= t;
        if (!have_msg && !have_tick) break;
        if (have_msg && (!have_tick || queue_.top().at < next_tick_)) {
            Event e = queue_.top();
            queue_.pop();
            now_ = std::max(now_, e.at);
            auto it = hosts_.find(e.envelope.to);
            if (it == hosts_.end()) {
                ++lost_;
                continue;
            }
            ++delivered_;
            Outbox out;
            NodeHost* host = it->second;
            auto reply = host->handle(e.envelope.message, out);
            if (reply) out.push_back(Envelope{e.from, std::move(*reply)});
            send(host->node_id(), std::move(out));
        } else {
            now_ = std::max(now_, next_tick_);
            next_tick_ += options_.tick_ms;
            std::vector<NodeHost*> snapshot;
            for (auto& [id, h] : hosts_) snapshot.push_back(h);
            for (NodeHost* h : snapshot) {
                Outbox out;
                h->tick(out);
                send(h->node_id(), std::move(out));
            }
        }
    }
    now_ = std::max(now_, t);
}

void SimNetwork::run_for(std::uint64_t ms) { step_to(now_ + ms); }

bool SimNetwork::run_until(const std::function<bool()>& pred, std::uint64_t max_ms) {
    const std::uint64_t deadline = now_ + max_ms;
    while (!pred()) {
        if (now_ >= deadline) return false;
        std::uint64_t next = std::min(deadline, next_tick_);
        if (!queue_.empty()) next = std::min(next, std::max(now_, queue_.top().at));
        step_to(next);
    }
    return true;
}

std::optional<CatchUpResponsePayload> HostBlockSource::fetch(const std::string& ledger, std::uint64_t first) {
    if (!host_) return std::nullopt;
    const Replica* r = host_->find(ledger);
    if (!r) return std::nullopt;
    CatchUpResponsePayload p;
    p.blocks = r->serve_blocks(first, batch_);
    p.sender_head = r->ledger().empty() ? 0 : r->ledger().head_height();
    return p;
}

SimCluster::SimCluster(SimClusterOptions options) : options_(std::move(options)), net_(options_.network) {
    if (!options_.make_engine) options_.make_engine = [] { return std::make_unique<ContractEngine>(); };
    const std::size_t n = std::max<std::size_t>(options_.nodes, 1);
    for (std::size_t i = 0; i < n; ++i) {
        keys_.push_back(SigningKey::derive(options_.key_label + ":node-" + std::to_string(i)));
    }
    for (std::size_t i = 0; i < n; ++i) {
        NodeConfig c;
        c.node_id = "node-" + std::to_string(i);
        c.role = i == 0 ? NodeRole::Leader : NodeRole::Follower;
        c.listen_address = "sim:" + c.node_id;
        c.leader_public_key = keys_[0].public_key();
        c.data_dir = options_.base_dir / c.node_id;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            c.peers.push_back({"node-" + std::to_string(j), "sim:node-" + std::to_string(j), keys_[j].public_key()});
        }
        configs_.push_back(std::move(c));
    }
    hosts_.resize(n);
    for (std::size_t i = 0; i < n; ++i) restart(i);
}

SimCluster::~SimCluster() = default;

NodeContext SimCluster::context_for(std::size_t i) {
    NodeContext ctx;
    ctx.config = configs_[i];
    ctx.key = keys_[i];
    ctx.entry_keys = options_.entry_keys;
    ctx.make_engine = options_.make_engine;
    ctx.timing = options_.timing;
    SimNetwork* net = &net_;
    ctx.now_ms = [net] { return net->now(); };
    const std::uint64_t epoch = options_.unix_epoch;
    ctx.unix_clock = [net, epoch] { return epoch + net->now() / 1000; };
    ctx.on_commit = [this](const std::string& node, const std::string& ledger, std::uint64_t h, const Digest& d) {
        auto [it, inserted] = commits_[ledger].emplace(h, d);
        if (!inserted && it->second != d) {
            violations_.push_back(node + " committed a different block at " + ledger + "/" + std::to_string(h));
        }
    };
    return ctx;
}

NodeHost& SimCluster::node(std::size_t i) {
    if (!hosts_.at(i)) throw ReplicationError(ReplicationError::Code::PeerUnreachable, configs_[i].node_id + " is down");
    return *hosts_[i];
}

void SimCluster::crash(std::size_t i) {
    if (!hosts_.at(i)) return;
    net_.detach(configs_[i].node_id);
    hosts_[i].reset();
}

void SimCluster::restart(std::size_t i) {
    if (hosts_.at(i)) return;
    hosts_[i] = std::make_unique<NodeHost>(context_for(i));
    net_.attach(hosts_[i].get());
}

void SimCluster::with_leader(const std::function<void(NodeHost&, Outbox&)>& fn) {
    Outbox out;
    NodeHost& l = leader();
    fn(l, out);
    net_.send(l.node_id(), std::move(out));
}

std::vector<NodeAudit> SimCluster::audit(const std::string& ledger, std::uint64_t from, std::uint64_t to) const {
    std::vector<NodeAudit> out;
    for (std::size_t i = 0; i < size(); ++i) {
        NodeAudit a{configs_[i].node_id, std::nullopt};
        if (hosts_[i]) a.records = audit_local(configs_[i].data_dir / ledger, configs_[i].leader_public_key, from, to);
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace pipechain::replication
