#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embisim/records.hpp"
#include "embisim/sequence.hpp"

namespace embisim::oracle {

// =============================================================================
// Small in-memory graphs and brute-force reference partitioners. Everything
// here trades efficiency for obviousness; the test suite holds the streaming
// pipelines to these answers.
// =============================================================================

class SmallGraph {
 public:
  /// Nodes must be added in strictly ascending id order.
  void add_node(std::uint64_t id, std::uint32_t label) {
    if (!ids_.empty() && id <= ids_.back())
      throw ValidationError("node ids must be strictly increasing");
    ids_.push_back(id);
    labels_.push_back(label);
    children_.emplace_back();
  }

  /// Both endpoints must exist and the child id must be smaller.
  void add_edge(std::uint64_t parent, std::uint64_t child) {
    if (child >= parent)
      throw ValidationError("edge must point from a larger id to a smaller");
    children_[index_of(parent)].push_back(
        static_cast<std::uint32_t>(index_of(child)));
  }

  std::size_t n() const { return ids_.size(); }
  std::uint64_t id_at(std::size_t i) const { return ids_[i]; }
  std::uint32_t label_at(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint32_t>& children_of(std::size_t i) const {
    return children_[i];
  }

  std::size_t index_of(std::uint64_t id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id)
      throw ValidationError("unknown node id " + std::to_string(id));
    return static_cast<std::size_t>(it - ids_.begin());
  }

  std::vector<std::vector<std::uint32_t>> parent_lists() const {
    std::vector<std::vector<std::uint32_t>> parents(n());
    for (std::size_t p = 0; p < n(); ++p)
      for (std::uint32_t c : children_[p])
        parents[c].push_back(static_cast<std::uint32_t>(p));
    return parents;
  }

  static SmallGraph from_files(ExternalSequence<NodeRecord>& nodes,
                               ExternalSequence<EdgeRecord>& edges) {
    SmallGraph g;
    {
      auto r = nodes.reader();
      while (const NodeRecord* rec = r.peek()) {
        g.add_node(rec->id, rec->label);
        r.advance();
      }
    }
    {
      auto r = edges.reader();
      while (const EdgeRecord* rec = r.peek()) {
        g.add_edge(rec->parent, rec->child);
        r.advance();
      }
    }
    return g;
  }

  /// Nodes 0..n-1 with the given labels plus (parent, child) pairs.
  static SmallGraph from_vectors(
      const std::vector<std::uint32_t>& labels,
      const std::vector<std::pair<std::uint64_t, std::uint64_t>>& edges) {
    SmallGraph g;
    for (std::size_t i = 0; i < labels.size(); ++i)
      g.add_node(i, labels[i]);
    for (const auto& [p, c] : edges) g.add_edge(p, c);
    return g;
  }

 private:
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::vector<std::uint32_t>> children_;
};

// =============================================================================
// Partition utilities (partitions are class-id vectors indexed like the graph)
// =============================================================================

/// Renumbers classes 1..k in order of first appearance, which (with indices
/// ascending by node id) matches the canonical partition files exactly.
inline std::vector<std::uint64_t> canonical_form(
    std::span<const std::uint64_t> assignment) {
  std::vector<std::uint64_t> out(assignment.size());
  std::map<std::uint64_t, std::uint64_t> remap;
  std::uint64_t next = 1;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto [it, fresh] = remap.emplace(assignment[i], next);
    if (fresh) ++next;
    out[i] = it->second;
  }
  return out;
}

inline bool same_partition(std::span<const std::uint64_t> a,
                           std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) return false;
  const auto ca = canonical_form(a);
  const auto cb = canonical_form(b);
  return ca == cb;
}

inline std::uint64_t block_count(std::span<const std::uint64_t> assignment) {
  auto c = canonical_form(assignment);
  std::uint64_t m = 0;
  for (std::uint64_t v : c) m = std::max(m, v);
  return m;
}

/// Common refinement: one class per distinct (a, b) pair.
inline std::vector<std::uint64_t> intersect(
    std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size())
    throw ValidationError("cannot intersect partitions of different size");
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> remap;
  std::vector<std::uint64_t> out(a.size());
  std::uint64_t next = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it, fresh] = remap.emplace(std::make_pair(a[i], b[i]), next);
    if (fresh) ++next;
    out[i] = it->second;
  }
  return out;
}

/// Loads a partition file into an assignment vector aligned with `g`.
inline std::vector<std::uint64_t> assignment_from_partition(
    ExternalSequence<PartitionRecord>& partition, const SmallGraph& g) {
  std::vector<std::uint64_t> out(g.n(), 0);
  std::vector<bool> seen(g.n(), false);
  auto r = partition.reader();
  while (const PartitionRecord* p = r.peek()) {
    const std::size_t i = g.index_of(p->orig_id);
    if (seen[i])
      throw ValidationError("node " + std::to_string(p->orig_id) +
                            " appears twice in the partition");
    seen[i] = true;
    out[i] = p->bisim_id;
    r.advance();
  }
  for (std::size_t i = 0; i < g.n(); ++i)
    if (!seen[i])
      throw ValidationError("node " + std::to_string(g.id_at(i)) +
                            " is missing from the partition");
  return out;
}

// =============================================================================
// Reference algorithms
// =============================================================================

/// Longest downward path from each node (0 for nodes without children).
/// Requires the topological numbering (child id < parent id).
inline std::vector<std::uint32_t> ranks(const SmallGraph& g) {
  std::vector<std::uint32_t> rank(g.n(), 0);
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::uint32_t c : g.children_of(i)) {
      if (c >= i) throw ValidationError("graph is not topologically numbered");
      rank[i] = std::max(rank[i], rank[c] + 1);
    }
  }
  return rank;
}

/// Maximal bisimulation refining the label partition: iterate
/// class(n) := (class(n), sorted distinct child classes) to a fixpoint.
inline std::vector<std::uint64_t> bisimulation(const SmallGraph& g) {
  std::vector<std::uint64_t> cls(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) cls[i] = g.label_at(i);
  cls = canonical_form(cls);
  std::uint64_t classes = block_count(cls);

  using Signature = std::pair<std::uint64_t, std::vector<std::uint64_t>>;
  for (std::size_t round = 0; round <= g.n() + 1; ++round) {
    std::map<Signature, std::uint64_t> remap;
    std::vector<std::uint64_t> next(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
      std::vector<std::uint64_t> kids;
      kids.reserve(g.children_of(i).size());
      for (std::uint32_t c : g.children_of(i)) kids.push_back(cls[c]);
      std::sort(kids.begin(), kids.end());
      kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
      Signature sig{cls[i], std::move(kids)};
      auto [it, fresh] =
          remap.emplace(std::move(sig), static_cast<std::uint64_t>(remap.size() + 1));
      next[i] = it->second;
    }
    const std::uint64_t now = remap.size();
    cls = std::move(next);
    if (now == classes) break;  // refinement is monotone, so equal count = fixpoint
    classes = now;
  }
  return cls;
}

namespace detail {

inline std::vector<std::int64_t> single_parents(const SmallGraph& g) {
  std::vector<std::int64_t> parent(g.n(), -1);
  for (std::size_t p = 0; p < g.n(); ++p)
    for (std::uint32_t c : g.children_of(p)) {
      if (parent[c] != -1)
        throw ValidationError("node " + std::to_string(g.id_at(c)) +
                              " has two parents; expected a tree");
      parent[c] = static_cast<std::int64_t>(p);
    }
  return parent;
}

}  // namespace detail

/// Upward bisimulation bounded to k steps on a tree: two nodes are equivalent
/// when their labels agree and (for k >= 1) their parents are equivalent at
/// bound k-1, nodes without a parent matching only each other. Computed by
/// the recursion, then cross-checked against grouping nodes by their length
/// k+1 ancestor label string (padded with the reserved label 0), which must
/// give the same partition.
inline std::vector<std::uint64_t> backward_bounded(const SmallGraph& g,
                                                   std::uint32_t k) {
  const auto parent = detail::single_parents(g);

  // canonical classes start at 1, so 0 is free to mean "no parent" below
  std::vector<std::uint64_t> cls(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) cls[i] = g.label_at(i);
  cls = canonical_form(cls);

  for (std::uint32_t j = 1; j <= k; ++j) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> remap;
    std::vector<std::uint64_t> next(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
      const std::uint64_t up = parent[i] < 0 ? 0 : cls[parent[i]];
      auto key = std::make_pair(static_cast<std::uint64_t>(g.label_at(i)), up);
      auto [it, fresh] =
          remap.emplace(key, static_cast<std::uint64_t>(remap.size() + 1));
      next[i] = it->second;
    }
    cls = std::move(next);
  }

  // trace grouping cross-check
  std::map<std::vector<std::uint32_t>, std::uint64_t> remap;
  std::vector<std::uint64_t> traced(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) {
    std::vector<std::uint32_t> trace;
    trace.reserve(k + 1);
    std::int64_t at = static_cast<std::int64_t>(i);
    for (std::uint32_t step = 0; step <= k; ++step) {
      if (at >= 0) {
        trace.push_back(g.label_at(static_cast<std::size_t>(at)));
        at = parent[static_cast<std::size_t>(at)];
      } else {
        trace.push_back(0);
      }
    }
    auto [it, fresh] =
        remap.emplace(std::move(trace), static_cast<std::uint64_t>(remap.size() + 1));
    traced[i] = it->second;
  }
  if (!same_partition(cls, traced))
    throw InvariantError("bounded upward recursion and trace grouping disagree");
  return cls;
}

/// Unbounded upward bisimulation on a tree: (label, class of parent) to a
/// fixpoint. Equals grouping nodes by their full root-path label string.
inline std::vector<std::uint64_t> backward_full(const SmallGraph& g) {
  const auto parent = detail::single_parents(g);
  std::vector<std::uint64_t> cls(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) cls[i] = g.label_at(i);
  cls = canonical_form(cls);
  std::uint64_t classes = block_count(cls);
  for (std::size_t round = 0; round <= g.n() + 1; ++round) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> remap;
    std::vector<std::uint64_t> next(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
      const std::uint64_t up = parent[i] < 0 ? 0 : cls[parent[i]];
      auto [it, fresh] = remap.emplace(std::make_pair(cls[i], up),
                                       static_cast<std::uint64_t>(remap.size() + 1));
      next[i] = it->second;
    }
    const std::uint64_t now = remap.size();
    cls = std::move(next);
    if (now == classes) break;
    classes = now;
  }
  return cls;
}

/// Downward-and-upward equivalence on a tree: the common refinement of the
/// downward (subtree) bisimulation and the unbounded upward one.
inline std::vector<std::uint64_t> fb(const SmallGraph& g) {
  return intersect(bisimulation(g), backward_full(g));
}

// =============================================================================
// Isomorphism (tiny graphs only; used to compare quotients against expected
// shapes in the tests)
// =============================================================================

inline bool is_isomorphic(const SmallGraph& a, const SmallGraph& b) {
  if (a.n() != b.n()) return false;
  const std::size_t n = a.n();
  if (n > 12) throw ValidationError("isomorphism check is for tiny graphs");

  auto edge_set = [](const SmallGraph& g) {
    std::vector<std::vector<bool>> adj(g.n(), std::vector<bool>(g.n(), false));
    for (std::size_t p = 0; p < g.n(); ++p)
      for (std::uint32_t c : g.children_of(p)) adj[p][c] = true;
    return adj;
  };
  const auto adj_a = edge_set(a);
  const auto adj_b = edge_set(b);

  std::vector<std::size_t> map_ab(n, n);
  std::vector<bool> used(n, false);

  auto compatible = [&](std::size_t va, std::size_t vb) {
    if (a.label_at(va) != b.label_at(vb)) return false;
    for (std::size_t u = 0; u < n; ++u) {
      if (map_ab[u] == n) continue;
      if (adj_a[va][u] != adj_b[vb][map_ab[u]]) return false;
      if (adj_a[u][va] != adj_b[map_ab[u]][vb]) return false;
    }
    return true;
  };

  auto rec = [&](auto&& self, std::size_t va) -> bool {
    if (va == n) return true;
    for (std::size_t vb = 0; vb < n; ++vb) {
      if (used[vb] || !compatible(va, vb)) continue;
      used[vb] = true;
      map_ab[va] = vb;
      if (self(self, va + 1)) return true;
      used[vb] = false;
      map_ab[va] = n;
    }
    return false;
  };
  return rec(rec, 0);
}

}  // namespace embisim::oracle
