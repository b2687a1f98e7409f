// SPDX-License-Identifier: Apache-2.0
#include "pipechain/ledger.hpp"

#include <algorithm>
#include <chrono>

#include "pipechain/merkle.hpp"

namespace pipechain {

namespace fs = std::filesystem;

UnixClock system_unix_clock() {
    return [] {
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
                .count());
    };
}

std::string_view ledger_error_name(LedgerError::Code c) {
    using C = LedgerError::Code;
    switch (c) {
        case C::EmptyBlock: return "EmptyBlock";
        case C::TooManyEntries: return "TooManyEntries";
        case C::DuplicateNonce: return "DuplicateNonce";
        case C::DuplicateEntryId: return "DuplicateEntryId";
        case C::BadEntrySignature: return "BadEntrySignature";
        case C::EntryRejected: return "EntryRejected";
        case C::NoGenesis: return "NoGenesis";
        case C::NotFound: return "NotFound";
        case C::IndexOutOfRange: return "IndexOutOfRange";
        case C::StorageCorrupt: return "StorageCorrupt";
        case C::StorageFull: return "StorageFull";
    }
    return "Unknown";
}

std::string_view failure_kind_name(FailureKind k) {
    switch (k) {
        case FailureKind::PrevHashMismatch: return "PrevHashMismatch";
        case FailureKind::MerkleMismatch: return "MerkleMismatch";
        case FailureKind::BadSignature: return "BadSignature";
        case FailureKind::BadTimestamp: return "BadTimestamp";
        case FailureKind::StorageCorrupt: return "StorageCorrupt";
        case FailureKind::StateDigestMismatch: return "StateDigestMismatch";
    }
    return "Unknown";
}

std::string_view reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::ChainMismatch: return "ChainMismatch";
        case RejectReason::BadSignature: return "BadSignature";
        case RejectReason::StateDigestMismatch: return "StateDigestMismatch";
        case RejectReason::MerkleMismatch: return "MerkleMismatch";
    }
    return "Unknown";
}

namespace {

LedgerError from_storage(const StorageError& e) {
    switch (e.code()) {
        case StorageError::Code::NotFound: return LedgerError(LedgerError::Code::NotFound, e.what());
        case StorageError::Code::Full: return LedgerError(LedgerError::Code::StorageFull, e.what());
        default: return LedgerError(LedgerError::Code::StorageCorrupt, e.what());
    }
}

}  // namespace

Ledger::Ledger(LedgerOptions options, std::unique_ptr<StateMachine> engine)
    : options_(std::move(options)),
      store_(BlockStore::open_or_create(options_.dir, options_.leader_key)),
      state_(std::move(engine)) {
    if (store_.empty()) return;
    try {
        for (std::uint64_t h = 0; h <= *store_.head(); ++h) {
            Block b = store_.read_block(h);
            auto next = state_->clone();
            for (const auto& e : b.entries) next->apply(e, b.header.timestamp);
            if (next->digest() != b.header.state_digest) {
                throw LedgerError(LedgerError::Code::StorageCorrupt,
                                  "state digest mismatch replaying height " + std::to_string(h));
            }
            record(b, std::move(next));
        }
    } catch (const StorageError& e) {
        throw from_storage(e);
    }
}

void Ledger::init_genesis(const SigningKey& leader) {
    if (!store_.empty()) return;
    Block g;
    g.header.height = 0;
    g.header.timestamp = options_.clock();
    g.header.entry_count = 0;
    g.header.state_digest = state_->digest();
    g.header.sign(leader);
    try {
        store_.append(g);
    } catch (const StorageError& e) {
        throw from_storage(e);
    }
    record(g, state_->clone());
}

std::uint64_t Ledger::head_height() const {
    if (store_.empty()) throw LedgerError(LedgerError::Code::NoGenesis, "ledger has no genesis block");
    return *store_.head();
}

const BlockHeader& Ledger::head_header() const {
    if (store_.empty()) throw LedgerError(LedgerError::Code::NoGenesis, "ledger has no genesis block");
    return head_header_;
}

bool Ledger::nonce_used(const std::string& submitter_id, std::uint64_t nonce) const {
    auto it = nonces_.find(submitter_id);
    return it != nonces_.end() && it->second.contains(nonce);
}

std::optional<std::uint64_t> Ledger::max_nonce(const std::string& submitter_id) const {
    auto it = nonces_.find(submitter_id);
    if (it == nonces_.end() || it->second.empty()) return std::nullopt;
    return *it->second.rbegin();
}

void Ledger::record(const Block& block, std::unique_ptr<StateMachine> next) {
    head_header_ = block.header;
    state_ = std::move(next);
    for (const auto& e : block.entries) {
        entry_ids_.insert(e.entry_id);
        nonces_[e.submitter_id].insert(e.submitter_nonce);
    }
}

Block Ledger::append_block(std::span<const LedgerEntry> pending, const SigningKey& leader) {
    using C = LedgerError::Code;
    if (store_.empty()) throw LedgerError(C::NoGenesis, "ledger has no genesis block");
    if (pending.empty()) throw LedgerError(C::EmptyBlock, "no pending entries");
    if (pending.size() > kMaxEntriesPerBlock) throw LedgerError(C::TooManyEntries, "more than 64 entries");

    auto next = state_->clone();
    std::set<EntryId> batch_ids;
    std::set<std::pair<std::string, std::uint64_t>> batch_nonces;
    Block block;
    block.header.timestamp = std::max(options_.clock(), head_header_.timestamp);
    for (const auto& e : pending) {
        const std::string id = to_hex(e.entry_id);
        std::optional<PublicKey> key = options_.key_lookup ? options_.key_lookup(e.submitter_id) : std::nullopt;
        if (!key || !e.signature_valid(*key)) {
            throw LedgerError(C::BadEntrySignature, "bad entry signature: " + id);
        }
        if (entry_ids_.contains(e.entry_id) || !batch_ids.insert(e.entry_id).second) {
            throw LedgerError(C::DuplicateEntryId, "duplicate entry id: " + id);
        }
        if (nonce_used(e.submitter_id, e.submitter_nonce) ||
            !batch_nonces.emplace(e.submitter_id, e.submitter_nonce).second) {
            throw LedgerError(C::DuplicateNonce, "duplicate nonce " + std::to_string(e.submitter_nonce) +
                                                     " for submitter " + e.submitter_id);
        }
        try {
            next->apply(e, block.header.timestamp);
        } catch (const std::exception& ex) {
            throw LedgerError(C::EntryRejected, "entry " + id + " rejected: " + ex.what());
        }
        block.entries.push_back(e);
    }

    block.header.height = *store_.head() + 1;
    block.header.prev_hash = store_.head_hash();
    block.header.merkle_root = merkle_root(block.leaf_hashes());
    block.header.entry_count = static_cast<std::uint32_t>(block.entries.size());
    block.header.state_digest = next->digest();
    block.header.sign(leader);
    try {
        store_.append(block);
    } catch (const StorageError& e) {
        throw from_storage(e);
    }
    record(block, std::move(next));
    return block;
}

Ledger::Extension Ledger::verify_extension(const Block& block) const {
    const BlockHeader& h = block.header;
    auto reject = [](RejectReason r, const std::string& why) { return BlockRejected(r, why); };

    if (store_.empty()) {
        if (h.height != 0 || h.prev_hash != kZeroDigest) {
            throw reject(RejectReason::ChainMismatch, "expected genesis block");
        }
        if (h.entry_count != 0 || !block.entries.empty() || h.merkle_root != kZeroDigest) {
            throw reject(RejectReason::MerkleMismatch, "genesis block must be empty");
        }
    } else {
        if (h.height != *store_.head() + 1) {
            throw reject(RejectReason::ChainMismatch, "height " + std::to_string(h.height) + " does not extend head " +
                                                          std::to_string(*store_.head()));
        }
        if (h.prev_hash != store_.head_hash()) throw reject(RejectReason::ChainMismatch, "prev_hash mismatch");
        if (h.timestamp < head_header_.timestamp) throw reject(RejectReason::ChainMismatch, "timestamp regressed");
        if (block.entries.empty() || h.entry_count != block.entries.size()) {
            throw reject(RejectReason::MerkleMismatch, "entry count mismatch");
        }
        if (merkle_root(block.leaf_hashes()) != h.merkle_root) {
            throw reject(RejectReason::MerkleMismatch, "merkle root mismatch");
        }
    }
    if (!h.signature_valid(options_.leader_key)) {
        throw reject(RejectReason::BadSignature, "leader signature invalid");
    }
    auto next = state_->clone();
    if (store_.empty()) next = state_->empty();
    for (const auto& e : block.entries) {
        try {
            next->apply(e, h.timestamp);
        } catch (const std::exception& ex) {
            throw reject(RejectReason::StateDigestMismatch, std::string("replay rejected entry: ") + ex.what());
        }
    }
    if (next->digest() != h.state_digest) {
        throw reject(RejectReason::StateDigestMismatch, "replayed state digest differs");
    }
    return Extension{std::move(next)};
}

std::optional<BlockRejected> Ledger::check_extension(const Block& block) const {
    try {
        verify_extension(block);
        return std::nullopt;
    } catch (const BlockRejected& r) {
        return r;
    }
}

void Ledger::append_verified(const Block& block) {
    Extension ext = verify_extension(block);
    try {
        store_.append(block);
    } catch (const StorageError& e) {
        throw from_storage(e);
    }
    record(block, std::move(ext.state));
}

Block Ledger::read_block(std::uint64_t height) const {
    try {
        return store_.read_block(height);
    } catch (const StorageError& e) {
        throw from_storage(e);
    }
}

Receipt Ledger::make_receipt(std::uint64_t height, std::uint32_t leaf_index) const {
    Block b = read_block(height);
    if (leaf_index >= b.entries.size()) {
        throw LedgerError(LedgerError::Code::IndexOutOfRange,
                          "leaf " + std::to_string(leaf_index) + " out of range at height " + std::to_string(height));
    }
    std::vector<Digest> leaves = b.leaf_hashes();
    Receipt r;
    r.entry_hash = leaves[leaf_index];
    r.leaf_index = leaf_index;
    r.audit_path = merkle_audit_path(leaves, leaf_index);
    r.header = b.header;
    return r;
}

bool ChainVerificationReport::has_failure_at(std::uint64_t height) const {
    return std::any_of(failures.begin(), failures.end(), [height](const auto& f) { return f.height == height; });
}

ChainVerificationReport verify_chain(const fs::path& dir, const PublicKey& trusted_key, const StateMachine* engine) {
    ChainVerificationReport report;
    auto fail = [&report](std::uint64_t h, FailureKind k, std::string detail) {
        report.failures.push_back({h, k, std::move(detail)});
    };

    std::optional<std::uint64_t> max_height;
    std::error_code ec;
    for (const auto& de : fs::directory_iterator(dir, ec)) {
        if (auto h = parse_block_file_name(de.path().filename().string())) {
            max_height = std::max(max_height.value_or(0), *h);
        }
    }
    if (ec || !max_height) {
        fail(0, FailureKind::StorageCorrupt, ec ? "cannot read directory: " + ec.message() : "no block files");
        report.ok = false;
        return report;
    }
    const std::uint64_t head = *max_height;
    report.head_height = head;

    std::optional<Manifest> manifest;
    try {
        manifest = Manifest::decode(read_file(dir / "manifest"));
    } catch (const std::exception& e) {
        fail(head, FailureKind::StorageCorrupt, std::string("manifest unreadable: ") + e.what());
    }
    if (manifest) {
        if (manifest->head_height != head) {
            fail(head, FailureKind::StorageCorrupt,
                 "manifest head " + std::to_string(manifest->head_height) + " but blocks reach " + std::to_string(head));
        }
        if (manifest->leader_key != trusted_key) {
            fail(head, FailureKind::StorageCorrupt, "manifest leader key differs from trusted key");
        }
    }

    std::unique_ptr<StateMachine> state = engine ? engine->empty() : nullptr;
    bool replaying = state != nullptr;
    std::optional<BlockHeader> prev;

    for (std::uint64_t h = 0; h <= head; ++h) {
        Block b;
        try {
            b = Block::decode_file(read_file(dir / block_file_name(h)));
        } catch (const std::exception& e) {
            fail(h, FailureKind::StorageCorrupt, std::string("unreadable block: ") + e.what());
            prev.reset();
            replaying = false;
            continue;
        }
        const BlockHeader& hd = b.header;
        bool body_ok = true;
        if (hd.height != h) {
            fail(h, FailureKind::StorageCorrupt, "height field is " + std::to_string(hd.height));
            body_ok = false;
        }
        if (h == 0) {
            if (hd.prev_hash != kZeroDigest) fail(h, FailureKind::PrevHashMismatch, "genesis prev_hash not zero");
            if (hd.entry_count != 0 || !b.entries.empty() || hd.merkle_root != kZeroDigest) {
                fail(h, FailureKind::MerkleMismatch, "genesis must carry no entries");
                body_ok = false;
            }
        } else {
            if (prev) {
                if (hd.prev_hash != prev->hash()) fail(h, FailureKind::PrevHashMismatch, "prev_hash does not link");
                if (hd.timestamp < prev->timestamp) fail(h, FailureKind::BadTimestamp, "timestamp decreased");
            }
            if (b.entries.empty() || hd.entry_count != b.entries.size()) {
                fail(h, FailureKind::MerkleMismatch, "entry count mismatch");
                body_ok = false;
            } else if (merkle_root(b.leaf_hashes()) != hd.merkle_root) {
                fail(h, FailureKind::MerkleMismatch, "merkle root does not match entries");
                body_ok = false;
            }
        }
        if (!hd.signature_valid(trusted_key)) fail(h, FailureKind::BadSignature, "leader signature invalid");

        if (replaying && !body_ok) {
            replaying = false;
        } else if (replaying) {
            try {
                for (const auto& e : b.entries) state->apply(e, hd.timestamp);
                if (state->digest() != hd.state_digest) {
                    fail(h, FailureKind::StateDigestMismatch, "replayed state digest differs");
                    replaying = false;
                }
            } catch (const std::exception& e) {
                fail(h, FailureKind::StateDigestMismatch, std::string("replay rejected entry: ") + e.what());
                replaying = false;
            }
        }
        if (h == head && manifest && hd.hash() != manifest->head_hash) {
            fail(h, FailureKind::StorageCorrupt, "head hash differs from manifest");
        }
        prev = hd;
    }

    std::stable_sort(report.failures.begin(), report.failures.end(),
                     [](const auto& a, const auto& b) { return a.height < b.height; });
    report.ok = report.failures.empty();
    return report;
}

}  // namespace pipechain
