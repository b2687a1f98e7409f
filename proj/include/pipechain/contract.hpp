// SPDX-License-Identifier: Apache-2.0
#pragma once

// Sensor contract: one registered sensor principal per contract is the only
// writer; the contract moves Created -> InUse on its first reading and keeps
// every reading with the timestamp of the block that committed it.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pipechain/entry.hpp"
#include "pipechain/ledger.hpp"
#include "pipechain/payload.hpp"

namespace pipechain {

inline constexpr std::string_view kUnauthorizedSensorMessage = "Only sensor can add temperature readings";

class ContractError : public std::runtime_error {
public:
    enum class Code { ContractExists, UnauthorizedSensor, UnknownContract, MalformedPayload, IndexOutOfRange };

    ContractError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string_view contract_error_name(ContractError::Code c);

enum class ContractState : std::uint8_t { Created = 0, InUse = 1 };

std::string_view contract_state_name(ContractState s);

struct ReadingRecord {
    Parameter parameter = Parameter::Temperature;
    std::int64_t value_scaled = 0;
    std::string unit;
    std::uint64_t source_timestamp = 0;
    std::uint64_t ledger_timestamp = 0;

    bool operator==(const ReadingRecord&) const = default;
};

struct SensorContract {
    std::string contract_id;
    std::string sensor_principal_id;
    ContractState state = ContractState::Created;
    std::vector<ReadingRecord> readings;

    bool operator==(const SensorContract&) const = default;
};

class ContractStore {
public:
    void register_sensor(const std::string& contract_id, const std::string& sensor_principal_id);

    /// Dispatches on entry.action. Throws ContractError and leaves the store
    /// unchanged on rejection.
    void apply_entry(const LedgerEntry& entry, std::uint64_t block_timestamp);

    /// (value_scaled, ledger_timestamp) of the index-th reading.
    std::pair<std::int64_t, std::uint64_t> get_reading(const std::string& contract_id, std::uint32_t index) const;
    const std::vector<ReadingRecord>& get_all_readings(const std::string& contract_id) const;

    const SensorContract* find(const std::string& contract_id) const;
    const std::map<std::string, SensorContract>& contracts() const { return contracts_; }

    /// Canonical encoding, contracts in lexicographic contract_id order.
    Bytes encode() const;
    /// H(0x03 || encode()).
    Digest state_digest() const;

    bool operator==(const ContractStore&) const = default;

private:
    const SensorContract& require(const std::string& contract_id) const;

    std::map<std::string, SensorContract> contracts_;
};

/// ContractStore behind the ledger's StateMachine interface.
class ContractEngine final : public StateMachine {
public:
    ContractEngine() = default;
    explicit ContractEngine(ContractStore store) : store_(std::move(store)) {}

    void apply(const LedgerEntry& entry, std::uint64_t block_timestamp) override {
        store_.apply_entry(entry, block_timestamp);
    }
    Digest digest() const override { return store_.state_digest(); }
    std::unique_ptr<StateMachine> clone() const override { return std::make_unique<ContractEngine>(store_); }
    std::unique_ptr<StateMachine> empty() const override { return std::make_unique<ContractEngine>(); }

    const ContractStore& store() const { return store_; }

private:
    ContractStore store_;
};

/// The contract store behind a StateMachine produced by ContractEngine.
const ContractStore& contract_store(const StateMachine& sm);

/// One line-delimited JSON record per contract and per reading, in store order.
std::vector<std::string> dump_store_records(const ContractStore& store);

}  // namespace pipechain
