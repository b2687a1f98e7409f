// SPDX-License-Identifier: Apache-2.0
#include "pipechain/entry.hpp"

namespace pipechain {

namespace {

void check_bounds(const LedgerEntry& e) {
    if (e.contract_id.size() > kMaxContractIdBytes) {
        throw EncodingError("contract_id exceeds 64 bytes");
    }
    if (e.submitter_id.size() > kMaxPrincipalIdBytes) {
        throw EncodingError("submitter_id exceeds 128 bytes");
    }
    if (e.payload.size() > kMaxPayloadBytes) {
        throw EncodingError("payload exceeds 1024 bytes");
    }
    if (e.action != Action::RegisterSensor && e.action != Action::AddReading) {
        throw EncodingError("unknown action");
    }
}

void encode_unsigned(const LedgerEntry& e, Writer& w) {
    check_bounds(e);
    w.fixed(e.entry_id)
        .str(e.contract_id)
        .u8(static_cast<std::uint8_t>(e.action))
        .bytes(e.payload)
        .str(e.submitter_id)
        .u64(e.submitter_nonce);
}

}  // namespace

std::string_view action_name(Action a) {
    switch (a) {
        case Action::RegisterSensor: return "RegisterSensor";
        case Action::AddReading: return "AddReading";
    }
    return "Unknown";
}

Bytes LedgerEntry::signing_preimage() const {
    Writer w;
    encode_unsigned(*this, w);
    return std::move(w).take();
}

void LedgerEntry::encode_to(Writer& w) const {
    encode_unsigned(*this, w);
    w.fixed(submitter_signature);
}

Bytes LedgerEntry::encode() const {
    Writer w;
    encode_to(w);
    return std::move(w).take();
}

LedgerEntry LedgerEntry::decode(Reader& r) {
    LedgerEntry e;
    e.entry_id = r.fixed<16>();
    e.contract_id = r.str(kMaxContractIdBytes);
    std::uint8_t action = r.u8();
    if (action > static_cast<std::uint8_t>(Action::AddReading)) {
        throw EncodingError("unknown action");
    }
    e.action = static_cast<Action>(action);
    e.payload = r.bytes(kMaxPayloadBytes);
    e.submitter_id = r.str(kMaxPrincipalIdBytes);
    e.submitter_nonce = r.u64();
    e.submitter_signature = r.fixed<64>();
    return e;
}

LedgerEntry LedgerEntry::decode(ByteView bytes) {
    Reader r(bytes);
    LedgerEntry e = decode(r);
    r.expect_end();
    return e;
}

void LedgerEntry::sign(const SigningKey& key) {
    submitter_signature = key.sign(signing_preimage());
}

bool LedgerEntry::signature_valid(const PublicKey& key) const {
    return verify_signature(key, signing_preimage(), submitter_signature);
}

Digest hash_entry(const LedgerEntry& entry) {
    return sha256(HashDomain::Leaf, entry.encode());
}

EntryId derive_entry_id(std::string_view submitter_id, std::uint64_t nonce) {
    Writer w;
    w.str(submitter_id).u64(nonce);
    Digest d = sha256(HashDomain::EntryId, w.data());
    EntryId id{};
    std::copy_n(d.begin(), id.size(), id.begin());
    return id;
}

}  // namespace pipechain
