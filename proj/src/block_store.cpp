// SPDX-License-Identifier: Apache-2.0
#include "pipechain/block_store.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <system_error>

#include "pipechain/merkle.hpp"

namespace pipechain {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kBlockPrefix = "block_";
constexpr std::string_view kBlockSuffix = ".bin";

void write_file_atomic(const fs::path& target, ByteView data, std::uint64_t height) {
    fs::path tmp = target;
    tmp += ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (f == nullptr) {
        throw StorageError(StorageError::Code::Io, height,
                           "cannot open " + tmp.string() + ": " + std::strerror(errno));
    }
    std::size_t written = std::fwrite(data.data(), 1, data.size(), f);
    int err = written == data.size() ? 0 : errno;
    if (std::fclose(f) != 0 && err == 0) err = errno;
    if (err != 0) {
        std::error_code ec;
        fs::remove(tmp, ec);
        auto code = err == ENOSPC ? StorageError::Code::Full : StorageError::Code::Io;
        throw StorageError(code, height, "write failed for " + target.string() + ": " + std::strerror(err));
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        throw StorageError(StorageError::Code::Io, height, "rename failed: " + ec.message());
    }
}

}  // namespace

Bytes Manifest::encode() const {
    Writer w;
    w.fixed(kManifestMagic).u16(kManifestVersion).u64(head_height).fixed(head_hash).fixed(leader_key);
    return std::move(w).take();
}

Manifest Manifest::decode(ByteView bytes) {
    Reader r(bytes);
    if (r.fixed<4>() != kManifestMagic) throw EncodingError("bad manifest magic");
    if (r.u16() != kManifestVersion) throw EncodingError("unsupported manifest version");
    Manifest m;
    m.head_height = r.u64();
    m.head_hash = r.fixed<32>();
    m.leader_key = r.fixed<32>();
    r.expect_end();
    return m;
}

std::string block_file_name(std::uint64_t height) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "block_%020llu.bin", static_cast<unsigned long long>(height));
    return buf;
}

std::optional<std::uint64_t> parse_block_file_name(const std::string& name) {
    if (name.size() != kBlockPrefix.size() + 20 + kBlockSuffix.size()) return std::nullopt;
    if (!name.starts_with(kBlockPrefix) || !name.ends_with(kBlockSuffix)) return std::nullopt;
    std::uint64_t h = 0;
    for (std::size_t i = kBlockPrefix.size(); i < kBlockPrefix.size() + 20; ++i) {
        char c = name[i];
        if (c < '0' || c > '9') return std::nullopt;
        h = h * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return h;
}

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageError(StorageError::Code::NotFound, 0, "cannot open " + path.string());
    }
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

BlockStore BlockStore::open_or_create(const fs::path& dir, const PublicKey& leader_key) {
    if (fs::exists(dir / "manifest")) {
        BlockStore s = open(dir);
        if (s.leader_key_ != leader_key) {
            throw StorageError(StorageError::Code::Corrupt, 0, "manifest leader key does not match");
        }
        return s;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw StorageError(StorageError::Code::Io, 0, "cannot create " + dir.string() + ": " + ec.message());
    }
    return BlockStore(dir, leader_key, false);
}

BlockStore BlockStore::open(const fs::path& dir, bool read_only) {
    Manifest m;
    try {
        m = Manifest::decode(read_file(dir / "manifest"));
    } catch (const EncodingError& e) {
        throw StorageError(StorageError::Code::Corrupt, 0, std::string("manifest: ") + e.what());
    }
    BlockStore s(dir, m.leader_key, read_only);
    s.head_ = m.head_height;
    s.head_hash_ = m.head_hash;
    return s;
}

fs::path BlockStore::block_path(std::uint64_t height) const { return dir_ / block_file_name(height); }

void BlockStore::write_manifest() const {
    Manifest m{*head_, head_hash_, leader_key_};
    write_file_atomic(dir_ / "manifest", m.encode(), *head_);
}

void BlockStore::append(const Block& block) {
    const std::uint64_t h = block.header.height;
    if (read_only_) {
        throw StorageError(StorageError::Code::ReadOnly, h, "store opened read-only");
    }
    const std::uint64_t expected = head_ ? *head_ + 1 : 0;
    if (h != expected) {
        throw StorageError(StorageError::Code::NotAppendOnly, h,
                           "append at height " + std::to_string(h) + ", expected " + std::to_string(expected));
    }
    fs::path path = block_path(h);
    if (fs::exists(path)) {
        throw StorageError(StorageError::Code::NotAppendOnly, h, "block file already exists: " + path.string());
    }
    write_file_atomic(path, block.encode_file(), h);
    head_ = h;
    head_hash_ = block.header.hash();
    write_manifest();
}

Bytes BlockStore::read_raw(std::uint64_t height) const {
    if (!head_ || height > *head_) {
        throw StorageError(StorageError::Code::NotFound, height, "no block at height " + std::to_string(height));
    }
    try {
        return read_file(block_path(height));
    } catch (const StorageError&) {
        throw StorageError(StorageError::Code::Corrupt, height,
                           "block file missing below head at height " + std::to_string(height));
    }
}

Block BlockStore::read_block(std::uint64_t height) const {
    Bytes raw = read_raw(height);
    auto corrupt = [height](const std::string& why) {
        return StorageError(StorageError::Code::Corrupt, height,
                            "block " + std::to_string(height) + " corrupt: " + why);
    };
    Block b;
    try {
        b = Block::decode_file(raw);
    } catch (const EncodingError& e) {
        throw corrupt(e.what());
    }
    if (b.header.height != height) throw corrupt("height field mismatch");
    if (b.header.entry_count != b.entries.size()) throw corrupt("entry count mismatch");
    if (height == 0) {
        if (!b.entries.empty() || b.header.merkle_root != kZeroDigest) throw corrupt("bad genesis body");
    } else {
        if (b.entries.empty()) throw corrupt("empty non-genesis block");
        if (merkle_root(b.leaf_hashes()) != b.header.merkle_root) throw corrupt("merkle root mismatch");
    }
    if (!b.header.signature_valid(leader_key_)) throw corrupt("leader signature invalid");
    if (height == *head_ && b.header.hash() != head_hash_) throw corrupt("head hash differs from manifest");
    return b;
}

}  // namespace pipechain
