#include "amalgam/nc.hpp"

#include <algorithm>
#include <stdexcept>

namespace amalgam::nc {

std::string NCPartition::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    s += (i ? ",{" : "{");
    for (std::size_t j = 0; j < blocks[i].size(); ++j) {
      if (j) s += ",";
      s += std::to_string(blocks[i][j]);
    }
    s += "}";
  }
  return s + "}";
}

namespace {

void check_canonical(const NCPartition& p) {
  std::vector<int> seen(p.n, 0);
  int prev_min = -1;
  for (const auto& b : p.blocks) {
    if (b.empty()) throw std::invalid_argument("nc: empty block");
    if (b.front() <= prev_min)
      throw std::invalid_argument("nc: blocks not ordered by minimum");
    prev_min = b.front();
    for (std::size_t j = 0; j < b.size(); ++j) {
      int e = b[j];
      if (e < 0 || e >= p.n) throw std::invalid_argument("nc: element out of range");
      if (j && b[j - 1] >= e) throw std::invalid_argument("nc: block not ascending");
      if (seen[e]) throw std::invalid_argument("nc: repeated element");
      seen[e] = 1;
    }
  }
  for (int e = 0; e < p.n; ++e)
    if (!seen[e]) throw std::invalid_argument("nc: not a partition (missing element)");
}

}  // namespace

NCPartition normalize(int n, std::vector<std::vector<int>> blocks) {
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  NCPartition p{n, std::move(blocks)};
  check_canonical(p);
  return p;
}

bool is_noncrossing(const NCPartition& p) {
  check_canonical(p);
  std::vector<int> block_of(p.n), last_of(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    for (int e : p.blocks[b]) block_of[e] = static_cast<int>(b);
    last_of[b] = p.blocks[b].back();
  }
  std::vector<int> stack;
  for (int i = 0; i < p.n; ++i) {
    int b = block_of[i];
    if (i == p.blocks[b].front()) {
      stack.push_back(b);
    } else if (stack.empty() || stack.back() != b) {
      return false;  // revisited a block that is not the innermost open one
    }
    while (!stack.empty() && last_of[stack.back()] == i) stack.pop_back();
  }
  return true;
}

long long count_nc(int n) {
  if (n < 0 || n > kMaxN) throw std::invalid_argument("nc: n out of range");
  // Catalan recurrence C_{m+1} = sum_i C_i C_{m-i}
  std::vector<long long> c(n + 1, 0);
  c[0] = 1;
  for (int m = 0; m < n; ++m) {
    long long s = 0;
    for (int i = 0; i <= m; ++i) s += c[i] * c[m - i];
    c[m + 1] = s;
  }
  return c[n];
}

namespace {

struct Visitor {
  int n;
  const std::function<void(const NCPartition&)>* emit;
  std::vector<std::vector<int>> acc;  // blocks in by-minimum order

  void leaf() {
    NCPartition p{n, acc};
    (*emit)(p);
  }

  // Enumerate partitions of positions [lo, hi), then call done().
  void interval(int lo, int hi, const std::function<void()>& done) {
    if (lo >= hi) {
      done();
      return;
    }
    std::size_t slot = acc.size();
    acc.emplace_back();  // placeholder for the block containing lo
    std::vector<int> first{lo};
    grow_first(lo, hi, first, slot, done);
    acc.resize(slot);
  }

  // First block currently ends at first.back(); either close it and recurse on
  // the tail, or extend it with a later element c, partitioning the skipped
  // gap (last, c) on its own. "Close first" makes all-singletons the first
  // partition; the last one is the fully nested pairing {{0,n-1},{1,n-2},...}.
  void grow_first(int lo, int hi, std::vector<int>& first, std::size_t slot,
                  const std::function<void()>& done) {
    int last = first.back();
    acc[slot] = first;
    interval(last + 1, hi, done);
    for (int c = last + 1; c < hi; ++c) {
      interval(last + 1, c, [&, c]() {
        first.push_back(c);
        grow_first(lo, hi, first, slot, done);
        first.pop_back();
      });
    }
  }
};

}  // namespace

void visit_nc(int n, const std::function<void(const NCPartition&)>& emit) {
  if (n < 0 || n > kMaxN) throw std::invalid_argument("nc: n out of range");
  if (n == 0) {
    NCPartition p{0, {}};
    emit(p);
    return;
  }
  Visitor v{n, &emit, {}};
  v.interval(0, n, [&]() { v.leaf(); });
}

std::vector<NCPartition> enumerate_nc(int n) {
  std::vector<NCPartition> out;
  out.reserve(static_cast<std::size_t>(count_nc(n)));
  visit_nc(n, [&](const NCPartition& p) { out.push_back(p); });
  return out;
}

NestingForest nesting_forest(const NCPartition& p) {
  if (!is_noncrossing(p)) throw std::invalid_argument("nc: partition crosses");
  NestingForest f;
  f.n = p.n;
  f.nodes.resize(p.blocks.size());
  std::vector<int> block_of(p.n), seen(p.blocks.size(), 0), last_of(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    f.nodes[b].elements = p.blocks[b];
    for (int e : p.blocks[b]) block_of[e] = static_cast<int>(b);
    last_of[b] = p.blocks[b].back();
  }
  std::vector<int> stack;
  for (int i = 0; i < p.n; ++i) {
    int b = block_of[i];
    if (i == p.blocks[b].front()) {
      if (stack.empty()) {
        f.roots.push_back(b);
      } else {
        int par = stack.back();
        f.nodes[b].parent = par;
        f.nodes[b].gap = seen[par] - 1;
        f.nodes[par].children.push_back(b);
      }
      stack.push_back(b);
    }
    ++seen[b];
    while (!stack.empty() && last_of[stack.back()] == i) stack.pop_back();
  }
  return f;
}

NCPartition from_forest(const NestingForest& f) {
  std::vector<std::vector<int>> blocks;
  blocks.reserve(f.nodes.size());
  for (const auto& node : f.nodes) blocks.push_back(node.elements);
  return normalize(f.n, std::move(blocks));
}

void visit_set_partitions(int n, const std::function<void(const NCPartition&)>& emit) {
  if (n < 0) throw std::invalid_argument("nc: n out of range");
  if (n == 0) {
    NCPartition p{0, {}};
    emit(p);
    return;
  }
  // restricted growth strings: a[0]=0, a[i] <= 1 + max(a[0..i-1])
  std::vector<int> a(n, 0);
  std::function<void(int, int)> rec = [&](int i, int maxv) {
    if (i == n) {
      std::vector<std::vector<int>> blocks(maxv + 1);
      for (int e = 0; e < n; ++e) blocks[a[e]].push_back(e);
      NCPartition p{n, std::move(blocks)};  // RGS order is already canonical
      emit(p);
      return;
    }
    for (int v = 0; v <= maxv + 1; ++v) {
      a[i] = v;
      rec(i + 1, std::max(maxv, v));
    }
  };
  rec(1, 0);
}

std::uint64_t order_hash(const std::vector<NCPartition>& list) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](int v) {
    h ^= static_cast<std::uint64_t>(v) + 0x100u;
    h *= 0x100000001b3ULL;
  };
  for (const auto& p : list) {
    mix(-1);
    for (const auto& b : p.blocks) {
      mix(-2);
      for (int e : b) mix(e);
    }
  }
  return h;
}

}  // namespace amalgam::nc
