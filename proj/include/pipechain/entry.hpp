// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pipechain/bytes.hpp"
#include "pipechain/codec.hpp"
#include "pipechain/crypto.hpp"

namespace pipechain {

inline constexpr std::size_t kMaxContractIdBytes = 64;
inline constexpr std::size_t kMaxPrincipalIdBytes = 128;
inline constexpr std::size_t kMaxPayloadBytes = 1024;
inline constexpr std::size_t kMaxUnitBytes = 16;

enum class Action : std::uint8_t {
    RegisterSensor = 0,
    AddReading = 1,
};

std::string_view action_name(Action a);

/// One signed pipeline transaction.
struct LedgerEntry {
    EntryId entry_id{};
    std::string contract_id;
    Action action = Action::RegisterSensor;
    Bytes payload;
    std::string submitter_id;
    std::uint64_t submitter_nonce = 0;
    Signature submitter_signature{};

    /// Canonical bytes of every field except the signature.
    Bytes signing_preimage() const;
    /// Canonical bytes of the whole entry, signature last.
    Bytes encode() const;
    void encode_to(Writer& w) const;
    static LedgerEntry decode(Reader& r);
    static LedgerEntry decode(ByteView bytes);

    void sign(const SigningKey& key);
    bool signature_valid(const PublicKey& key) const;

    bool operator==(const LedgerEntry&) const = default;
};

/// H(0x00 || canonical entry). Throws EncodingError when a field exceeds its bound.
Digest hash_entry(const LedgerEntry& entry);

/// Entry ids are derived from the (submitter, nonce) pair, which is unique
/// within a ledger.
EntryId derive_entry_id(std::string_view submitter_id, std::uint64_t nonce);

}  // namespace pipechain
