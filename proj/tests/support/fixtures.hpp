// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pipechain/contract.hpp"
#include "pipechain/ledger.hpp"

namespace pipechain::testing {

/// Unique directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& sub) const { return path_ / sub; }

private:
    std::filesystem::path path_;
};

/// Principals with reproducible keys and per-principal nonce counters.
class Keyring {
public:
    const SigningKey& key(const std::string& principal);
    KeyLookup lookup();
    std::uint64_t next_nonce(const std::string& principal) { return ++nonces_[principal]; }

    LedgerEntry register_sensor(const std::string& submitter, const std::string& contract_id,
                                const std::string& sensor);
    LedgerEntry reading(const std::string& submitter, const std::string& contract_id, std::int64_t value_scaled,
                        Parameter parameter = Parameter::Temperature, const std::string& unit = "C",
                        std::uint64_t source_timestamp = 1677651200);

private:
    std::shared_ptr<std::map<std::string, SigningKey>> keys_ = std::make_shared<std::map<std::string, SigningKey>>();
    std::map<std::string, std::uint64_t> nonces_;
};

/// Monotonic fake clock starting at a fixed Unix time.
struct StepClock {
    std::shared_ptr<std::uint64_t> now = std::make_shared<std::uint64_t>(1677651200);
    UnixClock fn() const {
        auto p = now;
        return [p] { return (*p)++; };
    }
};

inline const SigningKey& leader_key() {
    static const SigningKey k = SigningKey::derive("test-leader");
    return k;
}

std::unique_ptr<Ledger> open_ledger(const std::filesystem::path& dir, Keyring& keys, UnixClock clock = StepClock{}.fn());

/// Genesis plus `blocks` blocks. Block i carries entries_per_block entries
/// (registrations for new contracts, then readings by their sensors).
void build_ledger(Ledger& ledger, Keyring& keys, std::size_t blocks, std::size_t entries_per_block,
                  std::uint64_t seed = 1);

/// Entry batches for successive blocks: each batch registers one new
/// contract, then adds readings to contracts registered by earlier batches.
class Workload {
public:
    Workload(Keyring& keys, std::uint64_t seed, std::string tag = "w")
        : keys_(&keys), rng_(seed), tag_(std::move(tag)) {}
    std::vector<LedgerEntry> next_block(std::size_t entries);

private:
    Keyring* keys_;
    std::mt19937_64 rng_;
    std::string tag_;
    std::size_t contracts_ = 0;
};

void flip_byte(const std::filesystem::path& file, std::size_t offset, std::uint8_t xor_mask);

}  // namespace pipechain::testing
