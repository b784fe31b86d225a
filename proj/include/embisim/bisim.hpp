#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embisim/graph_files.hpp"
#include "embisim/machine.hpp"
#include "embisim/priority_queue.hpp"
#include "embisim/records.hpp"
#include "embisim/sequence.hpp"
#include "embisim/sort.hpp"

namespace embisim {

// =============================================================================
// Two-phase bisimulation partitioning.
//
// Phase 1 streams the graph once, child before parent, carrying each node's
// rank (and, in the hashing variant, a structural hash of its subtree) to its
// parents through the external priority queue; nodes are then reordered and
// renumbered so that equal (rank, label, hash) candidates sit consecutively.
//
// Phase 2 streams the reordered graph the same way, carrying assigned block
// ids upward. Each node's family (the distinct block ids of its children)
// decides its own block: within a candidate group, nodes are grouped by a
// second-stage hash of the family; equal hashes with unequal families are
// told apart by a small sequential dictionary that lives only for one hash
// value at a time.
// =============================================================================

enum class Variant { rank_label, rank_label_hash };

inline const char* to_string(Variant v) {
  return v == Variant::rank_label ? "rank-label" : "rank-label-hash";
}

/// Structural hash of (label, distinct child subtree hashes in sorted order).
inline std::uint64_t structure_hash(
    std::uint32_t label, std::span<const std::uint64_t> sorted_child_hashes) {
  Fnv1a h;
  h.mix_u32(label);
  for (std::uint64_t v : sorted_child_hashes) h.mix_u64(v);
  return h.value();
}

/// Second-stage hash of a family of block ids (sorted, distinct). The top 16
/// bits carry the family size (saturated), so families of different size
/// never share a value as long as sizes stay below 65536 — and a size
/// collision beyond that only costs a dictionary round, not correctness.
inline std::uint64_t family_hash(std::span<const std::uint64_t> family) {
  Fnv1a h;
  for (std::uint64_t v : family) h.mix_u64(v);
  const std::uint64_t size_tag =
      std::min<std::uint64_t>(family.size(), 0xffff);
  return (size_tag << 48) | (h.value() & 0x0000ffffffffffffull);
}

// =============================================================================
// Phase 1
// =============================================================================

struct Phase1Result {
  // nodes: ids are 1..n in file order, which equals both the id order and the
  // (rank, label, hash) order; orig_id preserves the input numbering
  ExternalSequence<RankedNodeRecord> nodes;
  ExternalSequence<EdgeRecord> edges;  // renumbered, sorted by child
};

inline Phase1Result phase1(ExternalSequence<NodeRecord>& nodes,
                           ExternalSequence<EdgeRecord>& edges_by_child,
                           Workspace& ws, Variant variant) {
  const bool hashed = variant == Variant::rank_label_hash;

  auto ranked = ExternalSequence<RankedNodeRecord>::create_temp(ws);
  {
    ExternalPriorityQueue<std::uint64_t, RankMessage> queue(
        ws, ws.working_budget(), std::less<std::uint64_t>(), "rankq");
    auto nr = nodes.reader();
    auto er = edges_by_child.reader();
    auto w = ranked.writer();

    bool have_prev = false;
    std::uint64_t prev_id = 0;
    std::vector<std::uint64_t> child_hashes;

    while (const NodeRecord* n = nr.peek()) {
      if (have_prev && n->id <= prev_id)
        throw ValidationError("node ids must be strictly increasing");
      if (!queue.empty() && queue.min_key() < n->id)
        throw ValidationError("edge parent " +
                              std::to_string(queue.min_key()) +
                              " is not a node");

      std::uint32_t rank = 0;
      child_hashes.clear();
      while (!queue.empty() && queue.min_key() == n->id) {
        const auto item = queue.pop();
        rank = std::max(rank, item.payload.rank + 1);
        if (hashed) child_hashes.push_back(item.payload.hash);
      }

      std::uint64_t hash = 0;
      if (hashed) {
        std::sort(child_hashes.begin(), child_hashes.end());
        child_hashes.erase(
            std::unique(child_hashes.begin(), child_hashes.end()),
            child_hashes.end());
        hash = structure_hash(n->label, child_hashes);
      }
      w.put(RankedNodeRecord{n->id, n->id, rank, n->label, hash});

      while (const EdgeRecord* e = er.peek()) {
        if (e->child > n->id) break;
        if (e->child < n->id)
          throw ValidationError(
              "edge child " + std::to_string(e->child) +
              " is not a node (or edges are not sorted by child)");
        queue.push(e->parent, RankMessage{rank, 0, hash});
        er.advance();
      }

      prev_id = n->id;
      have_prev = true;
      nr.advance();
    }

    if (er.peek())
      throw ValidationError("edge child " +
                            std::to_string(er.peek()->child) +
                            " is not a node");
    if (!queue.empty())
      throw ValidationError("edge parent " + std::to_string(queue.min_key()) +
                            " is not a node");
    w.finish();
  }

  auto ordered = external_sort(std::move(ranked), RankedByRankLabelHash(), ws,
                               ws.working_budget(), "phase1");

  RenumberedGraph renum =
      renumber_by_order(std::move(ordered), edges_by_child, ws);
  renum.mapping.remove();
  return Phase1Result{std::move(renum.nodes), std::move(renum.edges)};
}

// =============================================================================
// Family dictionary: the distinct families already seen for the current
// second-stage hash value, as a sequential scratch file of u64 cells
// (block id, family size, members...). It is erased whenever the scan moves
// to the next hash value, so it only ever holds colliding families.
// =============================================================================

class FamilyDictionary {
 public:
  explicit FamilyDictionary(Workspace& ws)
      : ws_(&ws), path_(ws.temp_path("dict")) {}

  void clear() {
    file_.emplace(RawSequence::create(*ws_, path_, "EXBD1", 8));
  }

  void insert(std::span<const std::uint64_t> family, std::uint64_t block_id) {
    auto w = file_->writer();
    auto put = [&w](std::uint64_t v) {
      w.put(reinterpret_cast<const std::byte*>(&v));
    };
    put(block_id);
    put(family.size());
    for (std::uint64_t v : family) put(v);
    w.finish();
  }

  std::optional<std::uint64_t> lookup(
      std::span<const std::uint64_t> family) {
    auto r = file_->reader();
    auto take = [&r](std::uint64_t& v) {
      return r.next(reinterpret_cast<std::byte*>(&v));
    };
    std::uint64_t id, size, member;
    while (take(id)) {
      if (!take(size)) throw InvariantError("truncated dictionary entry");
      bool equal = size == family.size();
      for (std::uint64_t i = 0; i < size; ++i) {
        if (!take(member)) throw InvariantError("truncated dictionary entry");
        if (equal && member != family[i]) equal = false;
      }
      if (equal) return id;
    }
    return std::nullopt;
  }

 private:
  Workspace* ws_;
  std::filesystem::path path_;
  std::optional<RawSequence> file_;
};

// =============================================================================
// Phase 2
// =============================================================================

struct Phase2Result {
  ExternalSequence<PartitionRecord> partition;  // sorted by orig_id
  std::uint64_t block_count = 0;
  std::uint64_t collision_count = 0;
  std::uint64_t group_spill_bytes = 0;
  std::uint64_t queue_spill_bytes = 0;
};

namespace detail {

/// Replays one candidate group (equal rank/label/hash) from the grouping
/// buffer and assigns block ids. See the state walk-through in phase2().
class GroupResolver {
 public:
  GroupResolver(Workspace& ws,
                ExternalPriorityQueue<std::uint64_t, IdMessage>& queue,
                ExternalSequence<PartitionRecord>::Writer& out,
                std::uint64_t& last_block_id, std::uint64_t& collisions)
      : dict_(ws),
        queue_(&queue),
        out_(&out),
        last_block_id_(&last_block_id),
        collisions_(&collisions) {}

  void consume(const GroupRecord& r) {
    if (!open_ || r.second_hash != second_ || r.orig_id != node_) {
      finish_node();
      if (!open_hash_ || r.second_hash != second_) {
        // new hash value: previous family cache and dictionary expire
        have_prev_ = false;
        dict_active_ = false;
        open_hash_ = true;
      }
      if (r.kind != kGroupMarker)
        throw InvariantError("group stream lost a node marker");
      second_ = r.second_hash;
      node_ = r.orig_id;
      orig_ = r.value;
      family_.clear();
      assigned_ = false;
      open_ = true;
      return;
    }
    switch (r.kind) {
      case kGroupFamily:
        family_.push_back(r.value);
        break;
      case kGroupParent:
        if (!assigned_) assign();
        queue_->push(r.value, IdMessage{block_, 0});
        break;
      default:
        throw InvariantError("duplicate marker in group stream");
    }
  }

  void finish_group() {
    finish_node();
    open_hash_ = false;
    have_prev_ = false;
    dict_active_ = false;
  }

 private:
  void finish_node() {
    if (!open_) return;
    if (!assigned_) assign();
    out_->put(PartitionRecord{orig_, block_});
    open_ = false;
  }

  void assign() {
    if (have_prev_ && family_ == prev_family_) {
      block_ = prev_block_;
    } else if (have_prev_) {
      if (!dict_active_) {
        dict_.clear();
        dict_.insert(prev_family_, prev_block_);
        dict_active_ = true;
      }
      if (auto found = dict_.lookup(family_)) {
        block_ = *found;
      } else {
        block_ = ++*last_block_id_;
        dict_.insert(family_, block_);
        ++*collisions_;
      }
    } else {
      block_ = ++*last_block_id_;
    }
    prev_family_ = family_;
    prev_block_ = block_;
    have_prev_ = true;
    assigned_ = true;
  }

  FamilyDictionary dict_;
  ExternalPriorityQueue<std::uint64_t, IdMessage>* queue_;
  ExternalSequence<PartitionRecord>::Writer* out_;
  std::uint64_t* last_block_id_;
  std::uint64_t* collisions_;

  bool open_ = false;
  bool open_hash_ = false;
  std::uint64_t second_ = 0;
  std::uint64_t node_ = 0;
  std::uint64_t orig_ = 0;
  std::vector<std::uint64_t> family_;
  bool assigned_ = false;
  std::uint64_t block_ = 0;

  std::vector<std::uint64_t> prev_family_;
  std::uint64_t prev_block_ = 0;
  bool have_prev_ = false;
  bool dict_active_ = false;
};

}  // namespace detail

inline Phase2Result phase2(Phase1Result graph, Workspace& ws) {
  const std::uint64_t share = std::max<std::uint64_t>(
      ws.working_budget() / 2, ws.config().block_size_bytes);

  Phase2Result result;
  auto assigned = ExternalSequence<PartitionRecord>::create_temp(ws);
  std::uint64_t last_block_id = 0;

  {
    ExternalPriorityQueue<std::uint64_t, IdMessage> queue(
        ws, share, std::less<std::uint64_t>(), "blockq");
    SpillableBuffer<GroupRecord, GroupOrder> groups(ws, share, GroupOrder(),
                                                    "group");
    auto out = assigned.writer();
    detail::GroupResolver resolver(ws, queue, out, last_block_id,
                                   result.collision_count);

    auto flush = [&groups, &resolver]() {
      groups.drain([&resolver](const GroupRecord& r) { resolver.consume(r); });
      resolver.finish_group();
    };

    auto nr = graph.nodes.reader();
    auto er = graph.edges.reader();
    std::vector<std::uint64_t> family;
    bool have_prev = false;
    RankedNodeRecord prev{};

    while (const RankedNodeRecord* n = nr.peek()) {
      if (have_prev && (n->rank != prev.rank || n->label != prev.label ||
                        n->hash != prev.hash)) {
        flush();  // candidate group boundary: ids for it are final
      }

      if (!queue.empty() && queue.min_key() < n->id)
        throw InvariantError("block id message missed its node");
      family.clear();
      while (!queue.empty() && queue.min_key() == n->id)
        family.push_back(queue.pop().payload.id);
      std::sort(family.begin(), family.end());
      family.erase(std::unique(family.begin(), family.end()), family.end());

      const std::uint64_t second = family_hash(family);
      groups.push(GroupRecord{second, n->id, kGroupMarker, 0, n->orig_id});
      for (std::uint64_t member : family)
        groups.push(GroupRecord{second, n->id, kGroupFamily, 0, member});

      while (const EdgeRecord* e = er.peek()) {
        if (e->child > n->id) break;
        if (e->child < n->id)
          throw InvariantError("edge skipped its child in phase 2");
        groups.push(GroupRecord{second, n->id, kGroupParent, 0, e->parent});
        er.advance();
      }

      prev = *n;
      have_prev = true;
      nr.advance();
    }
    flush();
    if (er.peek() || !queue.empty())
      throw InvariantError("phase 2 finished with pending messages");
    out.finish();

    result.group_spill_bytes = groups.spilled_bytes();
    result.queue_spill_bytes = queue.spilled_bytes();
  }

  graph.nodes.remove();
  graph.edges.remove();

  result.block_count = last_block_id;
  result.partition = external_sort(std::move(assigned), PartitionByOrigId(),
                                   ws, ws.working_budget(), "phase2");
  return result;
}

// =============================================================================
// Whole pipeline
// =============================================================================

struct PartitionRun {
  ExternalSequence<PartitionRecord> partition;  // sorted by original id
  RunStats stats;
};

/// Partitions a graph given as a node file (ids ascending, child before
/// parent) and an edge file sorted by child. The inputs are read, never
/// modified. Blocks are numbered 1..k, compatible with the node order: a
/// child's block id is always smaller than its parent's.
inline PartitionRun partition_dag(ExternalSequence<NodeRecord>& nodes,
                                  ExternalSequence<EdgeRecord>& edges,
                                  Workspace& ws, Variant variant) {
  PartitionRun run;
  Phase1Result p1;
  ws.run_phase(run.stats, "phase1", [&]() {
    p1 = phase1(nodes, edges, ws, variant);
  });
  Phase2Result p2;
  ws.run_phase(run.stats, "phase2", [&]() {
    p2 = phase2(std::move(p1), ws);
  });
  run.stats.block_count = p2.block_count;
  run.stats.collision_count = p2.collision_count;
  run.stats.group_spill_bytes = p2.group_spill_bytes;
  run.partition = std::move(p2.partition);
  return run;
}

}  // namespace embisim
