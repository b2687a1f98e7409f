// SPDX-License-Identifier: Apache-2.0
#pragma once

// On-disk layout of one ledger:
//   <dir>/block_<height, 20 digits>.bin   one file per block, never rewritten
//   <dir>/manifest                        head height, head hash, leader key
// Block files are written to a temporary name and renamed into place.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "pipechain/block.hpp"

namespace pipechain {

class StorageError : public std::runtime_error {
public:
    enum class Code { NotFound, Corrupt, Full, Io, ReadOnly, NotAppendOnly };

    StorageError(Code code, std::uint64_t height, const std::string& what)
        : std::runtime_error(what), code_(code), height_(height) {}

    Code code() const { return code_; }
    std::uint64_t height() const { return height_; }

private:
    Code code_;
    std::uint64_t height_;
};

inline constexpr std::array<std::uint8_t, 4> kManifestMagic{'P', 'C', 'M', 'F'};
inline constexpr std::uint16_t kManifestVersion = 1;

struct Manifest {
    std::uint64_t head_height = 0;
    Digest head_hash{};
    PublicKey leader_key{};

    Bytes encode() const;
    /// Throws EncodingError on any malformation.
    static Manifest decode(ByteView bytes);
};

std::string block_file_name(std::uint64_t height);
/// Inverse of block_file_name; nullopt for unrelated names.
std::optional<std::uint64_t> parse_block_file_name(const std::string& name);

Bytes read_file(const std::filesystem::path& path);

class BlockStore {
public:
    /// Opens an existing store, or prepares an empty one (no manifest yet) that
    /// will be materialised by the first append. Read-only stores never write.
    static BlockStore open_or_create(const std::filesystem::path& dir, const PublicKey& leader_key);
    /// Requires an existing manifest.
    static BlockStore open(const std::filesystem::path& dir, bool read_only = false);

    bool empty() const { return !head_.has_value(); }
    std::optional<std::uint64_t> head() const { return head_; }
    const Digest& head_hash() const { return head_hash_; }
    const PublicKey& leader_key() const { return leader_key_; }
    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path block_path(std::uint64_t height) const;

    /// Appends at head + 1 (or 0 on an empty store). Existing files are never touched.
    void append(const Block& block);

    /// Raw persisted bytes; NotFound above head, Corrupt if a file below head is missing.
    Bytes read_raw(std::uint64_t height) const;

    /// Decodes and checks self-consistency (height, entry_count, merkle root,
    /// leader signature); throws StorageError::Corrupt on any mismatch.
    Block read_block(std::uint64_t height) const;

private:
    BlockStore(std::filesystem::path dir, PublicKey leader_key, bool read_only)
        : dir_(std::move(dir)), leader_key_(leader_key), read_only_(read_only) {}

    void write_manifest() const;

    std::filesystem::path dir_;
    PublicKey leader_key_{};
    bool read_only_ = false;
    std::optional<std::uint64_t> head_;
    Digest head_hash_{};
};

}  // namespace pipechain
