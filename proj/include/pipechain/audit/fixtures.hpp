// SPDX-License-Identifier: Apache-2.0
#pragma once

// The shared receipt corpus: receipts in wire form, valid and mutated, with
// the verdict this implementation assigns to each under fixture_leader_key().
// Layout on disk: <dir>/<name>.bin plus <dir>/verdicts.txt, one
// "<name>.bin <Verdict>" line per receipt, and <dir>/leader.pub.

#include <filesystem>
#include <string>
#include <vector>

#include "pipechain/receipt.hpp"

namespace pipechain::audit {

struct FixtureReceipt {
    std::string name;
    std::string wire;
    ReceiptVerdict verdict = ReceiptVerdict::Accept;
};

const SigningKey& fixture_leader_key();

/// Deterministic; `scratch` holds the throwaway ledgers the receipts come from.
std::vector<FixtureReceipt> build_receipt_corpus(const std::filesystem::path& scratch);

void write_receipt_corpus(const std::vector<FixtureReceipt>& corpus, const std::filesystem::path& dir);

/// (file name, verdict name) pairs from verdicts.txt.
std::vector<std::pair<std::string, std::string>> read_verdicts(const std::filesystem::path& dir);

}  // namespace pipechain::audit
