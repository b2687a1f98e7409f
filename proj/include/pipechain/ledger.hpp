// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pipechain/block.hpp"
#include "pipechain/block_store.hpp"
#include "pipechain/receipt.hpp"

namespace pipechain {

/// Deterministic state replicated alongside the chain. apply() must either
/// succeed or throw and leave the state untouched.
class StateMachine {
public:
    virtual ~StateMachine() = default;
    virtual void apply(const LedgerEntry& entry, std::uint64_t block_timestamp) = 0;
    virtual Digest digest() const = 0;
    virtual std::unique_ptr<StateMachine> clone() const = 0;
    /// A fresh instance in the genesis state.
    virtual std::unique_ptr<StateMachine> empty() const = 0;
};

/// Resolves a submitter id to the key its entries must be signed with.
using KeyLookup = std::function<std::optional<PublicKey>(std::string_view submitter_id)>;
/// Unix seconds.
using UnixClock = std::function<std::uint64_t()>;

UnixClock system_unix_clock();

class LedgerError : public std::runtime_error {
public:
    enum class Code {
        EmptyBlock,
        TooManyEntries,
        DuplicateNonce,
        DuplicateEntryId,
        BadEntrySignature,
        EntryRejected,
        NoGenesis,
        NotFound,
        IndexOutOfRange,
        StorageCorrupt,
        StorageFull,
    };

    LedgerError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string_view ledger_error_name(LedgerError::Code c);

enum class FailureKind {
    PrevHashMismatch,
    MerkleMismatch,
    BadSignature,
    BadTimestamp,
    StorageCorrupt,
    StateDigestMismatch,
};

std::string_view failure_kind_name(FailureKind k);

/// Why a follower refuses a proposed block.
enum class RejectReason {
    ChainMismatch,
    BadSignature,
    StateDigestMismatch,
    MerkleMismatch,
};

std::string_view reject_reason_name(RejectReason r);

class BlockRejected : public std::runtime_error {
public:
    BlockRejected(RejectReason reason, const std::string& what)
        : std::runtime_error(what), reason_(reason) {}
    RejectReason reason() const { return reason_; }

private:
    RejectReason reason_;
};

struct LedgerOptions {
    std::filesystem::path dir;
    PublicKey leader_key{};
    /// Needed on the append path only.
    KeyLookup key_lookup;
    UnixClock clock = system_unix_clock();
};

/// Append-only chain of signed blocks plus the state obtained by applying
/// every stored block. One writer at a time.
class Ledger {
public:
    /// Opens the store in options.dir (creating an empty one if absent) and
    /// replays stored blocks into `engine`.
    Ledger(LedgerOptions options, std::unique_ptr<StateMachine> engine);

    /// Writes the genesis block if the store is empty; no-op otherwise.
    void init_genesis(const SigningKey& leader);

    /// Leader path: validates, applies and persists a new block at head + 1.
    Block append_block(std::span<const LedgerEntry> pending, const SigningKey& leader);

    /// Follower path: checks that `block` extends the head exactly as the leader
    /// would have built it, then persists it. Throws BlockRejected and leaves
    /// the ledger unchanged on failure.
    void append_verified(const Block& block);

    /// Same checks as append_verified without persisting.
    std::optional<BlockRejected> check_extension(const Block& block) const;

    Block read_block(std::uint64_t height) const;
    Receipt make_receipt(std::uint64_t height, std::uint32_t leaf_index) const;

    bool empty() const { return store_.empty(); }
    /// Throws LedgerError::NoGenesis on an empty store.
    std::uint64_t head_height() const;
    const BlockHeader& head_header() const;
    Digest head_hash() const { return store_.head_hash(); }
    const BlockStore& store() const { return store_; }
    const StateMachine& state() const { return *state_; }
    const PublicKey& leader_key() const { return options_.leader_key; }

    bool nonce_used(const std::string& submitter_id, std::uint64_t nonce) const;
    /// Highest nonce committed for a submitter, if any.
    std::optional<std::uint64_t> max_nonce(const std::string& submitter_id) const;

private:
    struct Extension {
        std::unique_ptr<StateMachine> state;
    };
    Extension verify_extension(const Block& block) const;
    void record(const Block& block, std::unique_ptr<StateMachine> next);

    LedgerOptions options_;
    BlockStore store_;
    std::unique_ptr<StateMachine> state_;
    BlockHeader head_header_;
    std::set<EntryId> entry_ids_;
    std::unordered_map<std::string, std::set<std::uint64_t>> nonces_;
};

struct ChainFailure {
    std::uint64_t height = 0;
    FailureKind kind = FailureKind::StorageCorrupt;
    std::string detail;
};

struct ChainVerificationReport {
    bool ok = true;
    std::uint64_t head_height = 0;
    std::vector<ChainFailure> failures;

    bool has_failure_at(std::uint64_t height) const;
};

/// Read-only audit of a ledger directory. Checks structure, prev-hash links,
/// merkle roots, leader signatures under trusted_key, timestamp monotonicity,
/// the manifest, and, when `engine` is given, state digests by replay from a
/// fresh engine->empty(). Never throws for bad content; an unreadable
/// directory is reported as a StorageCorrupt failure at height 0.
ChainVerificationReport verify_chain(const std::filesystem::path& dir, const PublicKey& trusted_key,
                                     const StateMachine* engine = nullptr);

}  // namespace pipechain
