#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace amalgam::nc {

// Partition of {0,...,n-1} in canonical form: blocks ordered by their smallest
// element, elements ascending inside each block.
struct NCPartition {
  int n = 0;
  std::vector<std::vector<int>> blocks;

  bool operator==(const NCPartition&) const = default;
  int num_blocks() const { return static_cast<int>(blocks.size()); }
  bool is_pair_partition() const {
    for (const auto& b : blocks)
      if (b.size() != 2) return false;
    return true;
  }
  std::string to_string() const;  // e.g. {{0,3},{1,2}}
};

// Nesting forest of a noncrossing partition. node i corresponds to blocks[i]
// of the canonical partition; a child sits strictly between two consecutive
// elements of its parent: parent.elements[gap] < child < parent.elements[gap+1].
struct ForestNode {
  std::vector<int> elements;
  int parent = -1;  // node index, -1 for roots
  int gap = -1;     // which gap of the parent holds this child
  std::vector<int> children;  // node indices, left to right
};

struct NestingForest {
  int n = 0;
  std::vector<ForestNode> nodes;  // same order as canonical blocks
  std::vector<int> roots;         // left to right
};

// Enumeration is capped: Catalan growth makes larger n useless at desk scale.
inline constexpr int kMaxN = 14;

// Linear stack check; p must be in canonical form (use normalize() first if
// block order is unknown). Throws std::invalid_argument on malformed input.
bool is_noncrossing(const NCPartition& p);

// Sorts blocks by minimum and elements within blocks; validates that the
// blocks partition {0..n-1}.
NCPartition normalize(int n, std::vector<std::vector<int>> blocks);

// n-th Catalan number (|NC(n)|), n <= kMaxN.
long long count_nc(int n);

// Visit all noncrossing partitions of {0..n-1} in the frozen canonical order:
// the block containing the interval's first element is grown depth-first
// ("close the block" before each extension, extensions by ascending next
// element), and the skipped gap segments and the tail are enumerated
// recursively in position order. First emitted is the all-singletons
// partition; last is the fully nested pairing {{0,n-1},{1,n-2},...}.
void visit_nc(int n, const std::function<void(const NCPartition&)>& emit);

// Materialized version of visit_nc. Memory scales with Catalan(n).
std::vector<NCPartition> enumerate_nc(int n);

// Build the nesting forest (throws if p crosses).
NestingForest nesting_forest(const NCPartition& p);

// Flatten a forest back to its partition; round-trips with nesting_forest.
NCPartition from_forest(const NestingForest& f);

// All set partitions of {0..n-1} via restricted growth strings; brute-force
// companion used to cross-check the noncrossing enumeration.
void visit_set_partitions(int n, const std::function<void(const NCPartition&)>& emit);

// FNV-1a hash of the canonical serialization of a partition list; pins the
// enumeration order in tests.
std::uint64_t order_hash(const std::vector<NCPartition>& list);

}  // namespace amalgam::nc
