// SPDX-License-Identifier: Apache-2.0
#include "pipechain/merkle.hpp"

#include <stdexcept>

#include "pipechain/crypto.hpp"

namespace pipechain {

namespace {

std::vector<Digest> next_level(const std::vector<Digest>& level) {
    std::vector<Digest> up;
    up.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
        up.push_back(sha256_pair(HashDomain::Node, level[i], level[i + 1]));
    }
    if (level.size() % 2 == 1) up.push_back(level.back());
    return up;
}

}  // namespace

Digest merkle_root(std::span<const Digest> leaves) {
    if (leaves.empty()) throw EmptyLeafSet();
    std::vector<Digest> level(leaves.begin(), leaves.end());
    while (level.size() > 1) level = next_level(level);
    return level.front();
}

std::vector<PathStep> merkle_audit_path(std::span<const Digest> leaves, std::size_t leaf_index) {
    if (leaves.empty()) throw EmptyLeafSet();
    if (leaf_index >= leaves.size()) throw std::out_of_range("leaf index out of range");
    std::vector<PathStep> path;
    std::vector<Digest> level(leaves.begin(), leaves.end());
    std::size_t idx = leaf_index;
    while (level.size() > 1) {
        if (idx % 2 == 1) {
            path.push_back({level[idx - 1], Side::Left});
        } else if (idx + 1 < level.size()) {
            path.push_back({level[idx + 1], Side::Right});
        }
        level = next_level(level);
        idx /= 2;
    }
    return path;
}

std::vector<Side> merkle_path_shape(std::size_t leaf_count, std::size_t leaf_index) {
    std::vector<Side> sides;
    std::size_t width = leaf_count;
    std::size_t idx = leaf_index;
    while (width > 1) {
        if (idx % 2 == 1) {
            sides.push_back(Side::Left);
        } else if (idx + 1 < width) {
            sides.push_back(Side::Right);
        }
        width = (width + 1) / 2;
        idx /= 2;
    }
    return sides;
}

Digest merkle_root_from_path(const Digest& leaf, std::span<const PathStep> path) {
    Digest acc = leaf;
    for (const auto& step : path) {
        acc = step.side == Side::Left ? sha256_pair(HashDomain::Node, step.sibling, acc)
                                      : sha256_pair(HashDomain::Node, acc, step.sibling);
    }
    return acc;
}

}  // namespace pipechain
