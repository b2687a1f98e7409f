// SPDX-License-Identifier: Apache-2.0
#include "pipechain/crypto.hpp"

#include <sodium.h>

#include <fstream>
#include <mutex>
#include <stdexcept>

namespace pipechain {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialisation failed");
        }
    });
}

std::string read_hex_line(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open key file " + path.string());
    }
    std::string line;
    std::getline(in, line);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    return line;
}

void write_line(const std::filesystem::path& path, const std::string& line) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write key file " + path.string());
    }
    out << line << '\n';
}

}  // namespace

Digest sha256(ByteView data) {
    ensure_sodium();
    Digest out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Digest sha256(HashDomain domain, ByteView data) {
    ensure_sodium();
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    const auto tag = static_cast<std::uint8_t>(domain);
    crypto_hash_sha256_update(&st, &tag, 1);
    crypto_hash_sha256_update(&st, data.data(), data.size());
    Digest out{};
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

Digest sha256_pair(HashDomain domain, const Digest& left, const Digest& right) {
    std::array<std::uint8_t, 64> buf{};
    std::copy(left.begin(), left.end(), buf.begin());
    std::copy(right.begin(), right.end(), buf.begin() + 32);
    return sha256(domain, buf);
}

SigningKey SigningKey::generate() {
    ensure_sodium();
    KeySeed seed{};
    randombytes_buf(seed.data(), seed.size());
    return from_seed(seed);
}

SigningKey SigningKey::from_seed(const KeySeed& seed) {
    ensure_sodium();
    SigningKey k;
    k.seed_ = seed;
    crypto_sign_seed_keypair(k.public_.data(), k.secret_.data(), seed.data());
    return k;
}

SigningKey SigningKey::derive(std::string_view label) {
    return from_seed(sha256(as_bytes(label)));
}

Signature SigningKey::sign(ByteView message) const {
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
    return sig;
}

bool verify_signature(const PublicKey& key, ByteView message, const Signature& sig) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

SigningKey load_signing_key(const std::filesystem::path& path) {
    return SigningKey::from_seed(array_from_hex<32>(read_hex_line(path)));
}

PublicKey load_public_key(const std::filesystem::path& path) {
    return array_from_hex<32>(read_hex_line(path));
}

void save_signing_key(const std::filesystem::path& path, const SigningKey& key) {
    write_line(path, to_hex(key.seed()));
}

void save_public_key(const std::filesystem::path& path, const PublicKey& key) {
    write_line(path, to_hex(key));
}

}  // namespace pipechain
