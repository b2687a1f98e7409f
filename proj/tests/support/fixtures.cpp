// SPDX-License-Identifier: Apache-2.0
#include "support/fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <unistd.h>

namespace pipechain::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("pipechain-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

const SigningKey& Keyring::key(const std::string& principal) {
    auto it = keys_->find(principal);
    if (it == keys_->end()) {
        it = keys_->emplace(principal, SigningKey::derive("principal:" + principal)).first;
    }
    return it->second;
}

KeyLookup Keyring::lookup() {
    auto keys = keys_;
    return [keys](std::string_view id) -> std::optional<PublicKey> {
        auto it = keys->find(std::string(id));
        if (it == keys->end()) return std::nullopt;
        return it->second.public_key();
    };
}

LedgerEntry Keyring::register_sensor(const std::string& submitter, const std::string& contract_id,
                                     const std::string& sensor) {
    LedgerEntry e;
    e.submitter_id = submitter;
    e.submitter_nonce = next_nonce(submitter);
    e.entry_id = derive_entry_id(submitter, e.submitter_nonce);
    e.contract_id = contract_id;
    e.action = Action::RegisterSensor;
    e.payload = RegisterSensorPayload{sensor}.encode();
    e.sign(key(submitter));
    return e;
}

LedgerEntry Keyring::reading(const std::string& submitter, const std::string& contract_id, std::int64_t value_scaled,
                             Parameter parameter, const std::string& unit, std::uint64_t source_timestamp) {
    LedgerEntry e;
    e.submitter_id = submitter;
    e.submitter_nonce = next_nonce(submitter);
    e.entry_id = derive_entry_id(submitter, e.submitter_nonce);
    e.contract_id = contract_id;
    e.action = Action::AddReading;
    e.payload = ReadingPayload{parameter, value_scaled, unit, source_timestamp}.encode();
    e.sign(key(submitter));
    return e;
}

std::unique_ptr<Ledger> open_ledger(const fs::path& dir, Keyring& keys, UnixClock clock) {
    LedgerOptions opts;
    opts.dir = dir;
    opts.leader_key = leader_key().public_key();
    opts.key_lookup = keys.lookup();
    opts.clock = std::move(clock);
    auto ledger = std::make_unique<Ledger>(opts, std::make_unique<ContractEngine>());
    ledger->init_genesis(leader_key());
    return ledger;
}

void build_ledger(Ledger& ledger, Keyring& keys, std::size_t blocks, std::size_t entries_per_block,
                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> contracts;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::vector<LedgerEntry> pending;
        for (std::size_t i = 0; i < entries_per_block; ++i) {
            if (contracts.empty() || rng() % 4 == 0) {
                std::string id = "contract-" + std::to_string(seed) + "-" + std::to_string(contracts.size());
                pending.push_back(keys.register_sensor(
                    "admin", id, "sensor-" + std::to_string(seed) + "-" + std::to_string(contracts.size())));
                contracts.push_back(id);
            } else {
                std::size_t c = rng() % contracts.size();
                // Only readings for contracts registered in earlier blocks.
                const auto& store = contract_store(ledger.state());
                if (store.find(contracts[c]) == nullptr) {
                    pending.push_back(keys.register_sensor(
                        "admin", "x-" + std::to_string(seed) + "-" + std::to_string(b) + "-" + std::to_string(i),
                        "sensor-x"));
                    continue;
                }
                auto value = static_cast<std::int64_t>(rng() % 60000) - 10000;
                pending.push_back(
                    keys.reading("sensor-" + std::to_string(seed) + "-" + std::to_string(c), contracts[c], value));
            }
        }
        ledger.append_block(pending, leader_key());
    }
}

std::vector<LedgerEntry> Workload::next_block(std::size_t entries) {
    std::vector<LedgerEntry> out;
    std::string id = tag_ + "-c" + std::to_string(contracts_);
    out.push_back(keys_->register_sensor("admin", id, tag_ + "-s" + std::to_string(contracts_)));
    const std::size_t known = contracts_;
    ++contracts_;
    while (out.size() < entries) {
        if (known == 0) {
            std::string extra = tag_ + "-c" + std::to_string(contracts_);
            out.push_back(keys_->register_sensor("admin", extra, tag_ + "-s" + std::to_string(contracts_)));
            ++contracts_;
            continue;
        }
        std::size_t c = rng_() % known;
        auto value = static_cast<std::int64_t>(rng_() % 60000) - 10000;
        out.push_back(keys_->reading(tag_ + "-s" + std::to_string(c), tag_ + "-c" + std::to_string(c), value));
    }
    return out;
}

void flip_byte(const fs::path& file, std::size_t offset, std::uint8_t xor_mask) {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(offset));
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(static_cast<std::uint8_t>(c) ^ xor_mask);
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(&c, 1);
}

}  // namespace pipechain::testing
