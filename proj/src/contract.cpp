// SPDX-License-Identifier: Apache-2.0
#include "pipechain/contract.hpp"

#include "json.hpp"

namespace pipechain {

std::string_view contract_error_name(ContractError::Code c) {
    using C = ContractError::Code;
    switch (c) {
        case C::ContractExists: return "ContractExists";
        case C::UnauthorizedSensor: return "UnauthorizedSensor";
        case C::UnknownContract: return "UnknownContract";
        case C::MalformedPayload: return "MalformedPayload";
        case C::IndexOutOfRange: return "IndexOutOfRange";
    }
    return "Unknown";
}

std::string_view contract_state_name(ContractState s) {
    return s == ContractState::Created ? "Created" : "InUse";
}

const SensorContract& ContractStore::require(const std::string& contract_id) const {
    auto it = contracts_.find(contract_id);
    if (it == contracts_.end()) {
        throw ContractError(ContractError::Code::UnknownContract, "unknown contract: " + contract_id);
    }
    return it->second;
}

const SensorContract* ContractStore::find(const std::string& contract_id) const {
    auto it = contracts_.find(contract_id);
    return it == contracts_.end() ? nullptr : &it->second;
}

void ContractStore::register_sensor(const std::string& contract_id, const std::string& sensor_principal_id) {
    if (contract_id.empty() || contract_id.size() > kMaxContractIdBytes) {
        throw ContractError(ContractError::Code::MalformedPayload, "contract id must be 1-64 bytes");
    }
    if (sensor_principal_id.empty() || sensor_principal_id.size() > kMaxPrincipalIdBytes) {
        throw ContractError(ContractError::Code::MalformedPayload, "sensor principal id must be 1-128 bytes");
    }
    if (contracts_.contains(contract_id)) {
        throw ContractError(ContractError::Code::ContractExists, "contract exists: " + contract_id);
    }
    contracts_.emplace(contract_id, SensorContract{contract_id, sensor_principal_id, ContractState::Created, {}});
}

void ContractStore::apply_entry(const LedgerEntry& entry, std::uint64_t block_timestamp) {
    if (entry.action == Action::RegisterSensor) {
        RegisterSensorPayload p;
        try {
            p = RegisterSensorPayload::decode(entry.payload);
        } catch (const EncodingError& e) {
            throw ContractError(ContractError::Code::MalformedPayload, e.what());
        }
        register_sensor(entry.contract_id, p.sensor_principal_id);
        return;
    }

    ReadingPayload p;
    try {
        p = ReadingPayload::decode(entry.payload);
    } catch (const EncodingError& e) {
        throw ContractError(ContractError::Code::MalformedPayload, e.what());
    }
    const SensorContract& c = require(entry.contract_id);
    if (entry.submitter_id != c.sensor_principal_id) {
        throw ContractError(ContractError::Code::UnauthorizedSensor, std::string(kUnauthorizedSensorMessage));
    }
    if (p.value_scaled < -kMaxAbsScaledValue || p.value_scaled > kMaxAbsScaledValue) {
        throw ContractError(ContractError::Code::MalformedPayload, "value outside [-2^62, 2^62]");
    }
    SensorContract& target = contracts_.at(entry.contract_id);
    target.readings.push_back(
        ReadingRecord{p.parameter, p.value_scaled, std::move(p.unit), p.source_timestamp, block_timestamp});
    target.state = ContractState::InUse;
}

std::pair<std::int64_t, std::uint64_t> ContractStore::get_reading(const std::string& contract_id,
                                                                  std::uint32_t index) const {
    const SensorContract& c = require(contract_id);
    if (index >= c.readings.size()) {
        throw ContractError(ContractError::Code::IndexOutOfRange,
                            "reading index " + std::to_string(index) + " out of range");
    }
    const ReadingRecord& r = c.readings[index];
    return {r.value_scaled, r.ledger_timestamp};
}

const std::vector<ReadingRecord>& ContractStore::get_all_readings(const std::string& contract_id) const {
    return require(contract_id).readings;
}

Bytes ContractStore::encode() const {
    Writer w;
    w.u32(static_cast<std::uint32_t>(contracts_.size()));
    for (const auto& [id, c] : contracts_) {
        w.str(id).str(c.sensor_principal_id).u8(static_cast<std::uint8_t>(c.state));
        w.u32(static_cast<std::uint32_t>(c.readings.size()));
        for (const auto& r : c.readings) {
            w.u8(static_cast<std::uint8_t>(r.parameter))
                .i64(r.value_scaled)
                .str(r.unit)
                .u64(r.source_timestamp)
                .u64(r.ledger_timestamp);
        }
    }
    return std::move(w).take();
}

Digest ContractStore::state_digest() const { return sha256(HashDomain::State, encode()); }

const ContractStore& contract_store(const StateMachine& sm) {
    return dynamic_cast<const ContractEngine&>(sm).store();
}

std::vector<std::string> dump_store_records(const ContractStore& store) {
    std::vector<std::string> out;
    for (const auto& [id, c] : store.contracts()) {
        out.push_back(nlohmann::json{{"record", "contract"},
                                     {"contractId", id},
                                     {"sensorPrincipalId", c.sensor_principal_id},
                                     {"state", contract_state_name(c.state)},
                                     {"readings", c.readings.size()}}
                          .dump());
        for (std::size_t i = 0; i < c.readings.size(); ++i) {
            const auto& r = c.readings[i];
            out.push_back(nlohmann::json{{"record", "reading"},
                                         {"contractId", id},
                                         {"index", i},
                                         {"parameter", parameter_name(r.parameter)},
                                         {"valueScaled", r.value_scaled},
                                         {"unit", r.unit},
                                         {"sourceTimestamp", r.source_timestamp},
                                         {"ledgerTimestamp", r.ledger_timestamp}}
                              .dump());
        }
    }
    return out;
}

}  // namespace pipechain
