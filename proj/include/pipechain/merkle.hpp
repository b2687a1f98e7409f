// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary Merkle tree over leaf digests that are already domain separated.
// Interior node = H(0x01 || left || right). An unpaired node at the end of a
// level is promoted unchanged to the next level.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pipechain/bytes.hpp"

namespace pipechain {

class EmptyLeafSet : public std::invalid_argument {
public:
    EmptyLeafSet() : std::invalid_argument("merkle tree needs at least one leaf") {}
};

enum class Side : std::uint8_t { Left = 0, Right = 1 };

/// A sibling digest and the side it sits on relative to the running hash.
struct PathStep {
    Digest sibling{};
    Side side = Side::Right;
    bool operator==(const PathStep&) const = default;
};

Digest merkle_root(std::span<const Digest> leaves);

/// Audit path for leaf_index, bottom-up. Throws std::out_of_range on a bad index.
std::vector<PathStep> merkle_audit_path(std::span<const Digest> leaves, std::size_t leaf_index);

/// Sides an audit path must have for leaf_index in a tree of leaf_count leaves.
/// Levels where the node is promoted contribute no step.
std::vector<Side> merkle_path_shape(std::size_t leaf_count, std::size_t leaf_index);

Digest merkle_root_from_path(const Digest& leaf, std::span<const PathStep> path);

}  // namespace pipechain
