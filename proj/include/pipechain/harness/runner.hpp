// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipechain/harness/deployment.hpp"
#include "pipechain/harness/scenario.hpp"

namespace pipechain::harness {

struct VerificationFailure {
    DetectionSite site = DetectionSite::ReceiptVerify;
    std::string subject;
    std::string reason;
};

/// Counters plus the event log of one run. Report records are JSON objects
/// with a "record" field: "submission", "parse_error", "attack",
/// "verification_failure", and a final "summary".
struct RunReport {
    std::uint64_t produced = 0;
    std::uint64_t committed = 0;
    std::map<std::string, std::uint64_t> rejected;
    std::uint64_t parse_dropped = 0;
    std::uint64_t attacks_injected = 0;
    std::map<std::string, std::uint64_t> attacks_detected;
    std::vector<std::string> undetected;
    std::uint64_t receipts_verified = 0;
    std::vector<VerificationFailure> verification_failures;
    std::map<std::string, bool> invariants;
    std::vector<nlohmann::json> events;

    std::uint64_t rejected_total() const;
    std::uint64_t detected_total() const;
    bool conserved() const { return produced == committed + rejected_total() + parse_dropped; }
    /// 0 when every attack was detected, nothing failed verification and all
    /// invariants hold; 1 otherwise.
    int exit_code() const;

    nlohmann::json summary() const;
    /// Counters only; equal for equal seeds in simulation.
    nlohmann::json counters() const;
    std::string to_records() const;
    std::string human_summary() const;
};

/// A reading the gateway accepted, as the producer meant it.
struct Submitted {
    std::string producer_id;
    std::string contract_id;
    std::string principal_id;
    std::string provisional_id;
    Reading reading;
};

/// A submission that reached Committed, with its final transaction id.
struct CommittedTx {
    Submitted submitted;
    std::string transaction_id;
    std::uint64_t height = 0;
    std::uint32_t leaf = 0;
};

/// Fetches every transaction and its receipt, verifies each receipt offline
/// against `leader_key`, checks the entry against what was submitted and
/// compares a replay of the verified entries with the gateway's readings.
/// Failures are recorded in `report`, never thrown.
void run_consumer_verify(Deployment& d, const std::string& ledger, const std::vector<CommittedTx>& txs,
                         const std::map<std::string, std::string>& contracts, const PublicKey& leader_key,
                         const std::string& reader_credential, RunReport& report);

/// Runs producers, attacks, consumer verification and replica audit.
/// Throws HarnessError on infrastructure failure.
RunReport run_scenario(const Scenario& scenario, Deployment& deployment);

}  // namespace pipechain::harness
