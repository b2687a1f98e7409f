// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "pipechain/bytes.hpp"

namespace pipechain {

using PublicKey = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;
using KeySeed = std::array<std::uint8_t, 32>;

/// Domain-separation prefixes for every hash the ledger computes.
enum class HashDomain : std::uint8_t {
    Leaf = 0x00,
    Node = 0x01,
    Header = 0x02,
    State = 0x03,
    EntryId = 0x04,
};

Digest sha256(ByteView data);
Digest sha256(HashDomain domain, ByteView data);
Digest sha256_pair(HashDomain domain, const Digest& left, const Digest& right);

/// Ed25519 signing key. Deterministic from its 32-byte seed.
class SigningKey {
public:
    static SigningKey generate();
    static SigningKey from_seed(const KeySeed& seed);
    /// Derives a seed from a label; used for reproducible test and simulation keys.
    static SigningKey derive(std::string_view label);

    const PublicKey& public_key() const { return public_; }
    const KeySeed& seed() const { return seed_; }
    Signature sign(ByteView message) const;

private:
    KeySeed seed_{};
    PublicKey public_{};
    std::array<std::uint8_t, 64> secret_{};
};

bool verify_signature(const PublicKey& key, ByteView message, const Signature& sig);

/// Key files hold lowercase hex on a single line: a 32-byte seed for private
/// keys, a 32-byte public key for public ones.
SigningKey load_signing_key(const std::filesystem::path& path);
PublicKey load_public_key(const std::filesystem::path& path);
void save_signing_key(const std::filesystem::path& path, const SigningKey& key);
void save_public_key(const std::filesystem::path& path, const PublicKey& key);

}  // namespace pipechain
