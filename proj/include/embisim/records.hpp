#pragma once

#include <bit>
#include <cstdint>

#include "embisim/sequence.hpp"

namespace embisim {

// =============================================================================
// On-disk record types. Every type is padded to a power-of-two size so that
// any power-of-two block size holds a whole number of records. Multi-byte
// fields are stored in the host's little-endian layout; files are not
// portable to big-endian hosts (none are targeted).
// =============================================================================

/// One graph node. `id` is the topological number: every edge points from a
/// larger id (the parent) to a smaller one (the child). `label` is a code
/// from the label table.
struct NodeRecord {
  std::uint64_t id = 0;
  std::uint32_t label = 0;
  std::uint32_t pad_ = 0;
};
static_assert(sizeof(NodeRecord) == 16);

/// One edge, stored as (parent, child). A valid graph file keeps child < parent
/// and sorts edges by child.
struct EdgeRecord {
  std::uint64_t parent = 0;
  std::uint64_t child = 0;
};
static_assert(sizeof(EdgeRecord) == 16);

/// Output of the partitioner: node -> block.
struct PartitionRecord {
  std::uint64_t orig_id = 0;
  std::uint64_t bisim_id = 0;
};
static_assert(sizeof(PartitionRecord) == 16);

/// Renumbering map produced when nodes are reordered.
struct IdMapRecord {
  std::uint64_t orig_id = 0;
  std::uint64_t new_id = 0;
};
static_assert(sizeof(IdMapRecord) == 16);

/// A node after the first pass: carries its rank (longest downward path),
/// optional structural hash, and the id it had in the input.
struct RankedNodeRecord {
  std::uint64_t id = 0;
  std::uint64_t orig_id = 0;
  std::uint32_t rank = 0;
  std::uint32_t label = 0;
  std::uint64_t hash = 0;
};
static_assert(sizeof(RankedNodeRecord) == 32);

/// Grouping records emitted during the second pass. `kind` orders a node's
/// marker before its family values before its parent list inside the
/// (second_hash, orig_id) group.
struct GroupRecord {
  std::uint64_t second_hash = 0;
  std::uint64_t orig_id = 0;
  std::uint32_t kind = 0;  // 0 marker, 1 family member, 2 parent
  std::uint32_t pad_ = 0;
  std::uint64_t value = 0;
};
static_assert(sizeof(GroupRecord) == 32);
inline constexpr std::uint32_t kGroupMarker = 0;
inline constexpr std::uint32_t kGroupFamily = 1;
inline constexpr std::uint32_t kGroupParent = 2;

/// Queue payload in the first pass: a child's rank (and hash, when the
/// hashing variant runs) on its way to a parent.
struct RankMessage {
  std::uint32_t rank = 0;
  std::uint32_t pad_ = 0;
  std::uint64_t hash = 0;
};
static_assert(sizeof(RankMessage) == 16);

/// Queue payload carrying an assigned block id to a parent.
struct IdMessage {
  std::uint64_t id = 0;
  std::uint64_t pad_ = 0;
};
static_assert(sizeof(IdMessage) == 16);

// --- document-shaped records -------------------------------------------------

/// A document element under the composite numbering: `rank` is its depth,
/// `id_on_level` its arrival index among elements of that depth.
struct XmlNodeRecord {
  std::uint64_t orig_id = 0;  // document order
  std::uint64_t label = 0;
  std::uint32_t rank = 0;
  std::uint32_t id_on_level = 0;
  std::uint64_t pad_ = 0;
};
static_assert(sizeof(XmlNodeRecord) == 32);

/// Containment edge addressed by composite ids: the parent sits at
/// (parent_rank, parent_id_on_level), the child one level deeper at
/// (parent_rank + 1, child_id_on_level).
struct XmlEdgeRecord {
  std::uint32_t parent_rank = 0;
  std::uint32_t parent_id_on_level = 0;
  std::uint32_t child_id_on_level = 0;
  std::uint32_t pad_ = 0;
};
static_assert(sizeof(XmlEdgeRecord) == 16);

/// Grouping record for the per-depth passes over a document.
struct XmlGroupRecord {
  std::uint64_t label = 0;
  std::uint64_t parent_bisim = 0;
  std::uint64_t orig_id = 0;
  std::uint32_t kind = 0;  // 0 node, 1 child pointer
  std::uint32_t child_id_on_level = 0;
};
static_assert(sizeof(XmlGroupRecord) == 32);

// =============================================================================
// Sequence identities (magic + scratch-name stem)
// =============================================================================

template <>
struct SequenceTraits<NodeRecord> {
  static const char* magic() { return "EXBG1"; }
  static const char* stem() { return "nodes"; }
};
template <>
struct SequenceTraits<EdgeRecord> {
  static const char* magic() { return "EXBE1"; }
  static const char* stem() { return "edges"; }
};
template <>
struct SequenceTraits<PartitionRecord> {
  static const char* magic() { return "EXBP1"; }
  static const char* stem() { return "partition"; }
};
template <>
struct SequenceTraits<IdMapRecord> {
  static const char* magic() { return "EXBM1"; }
  static const char* stem() { return "idmap"; }
};
template <>
struct SequenceTraits<RankedNodeRecord> {
  static const char* magic() { return "EXBR1"; }
  static const char* stem() { return "ranked"; }
};
template <>
struct SequenceTraits<GroupRecord> {
  static const char* magic() { return "EXBQ1"; }
  static const char* stem() { return "groups"; }
};
template <>
struct SequenceTraits<XmlNodeRecord> {
  static const char* magic() { return "EXBX1"; }
  static const char* stem() { return "xnodes"; }
};
template <>
struct SequenceTraits<XmlEdgeRecord> {
  static const char* magic() { return "EXBY1"; }
  static const char* stem() { return "xedges"; }
};
template <>
struct SequenceTraits<XmlGroupRecord> {
  static const char* magic() { return "EXBZ1"; }
  static const char* stem() { return "xgroups"; }
};

// =============================================================================
// Standard orderings
// =============================================================================

struct NodeById {
  bool operator()(const NodeRecord& a, const NodeRecord& b) const {
    return a.id < b.id;
  }
};

struct EdgeByChild {
  bool operator()(const EdgeRecord& a, const EdgeRecord& b) const {
    return a.child != b.child ? a.child < b.child : a.parent < b.parent;
  }
};

struct EdgeByParent {
  bool operator()(const EdgeRecord& a, const EdgeRecord& b) const {
    return a.parent != b.parent ? a.parent < b.parent : a.child < b.child;
  }
};

struct PartitionByOrigId {
  bool operator()(const PartitionRecord& a, const PartitionRecord& b) const {
    return a.orig_id < b.orig_id;
  }
};

struct RankedByRankLabelHash {
  bool operator()(const RankedNodeRecord& a, const RankedNodeRecord& b) const {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.label != b.label) return a.label < b.label;
    if (a.hash != b.hash) return a.hash < b.hash;
    return a.id < b.id;
  }
};

struct RankedByOrigId {
  bool operator()(const RankedNodeRecord& a, const RankedNodeRecord& b) const {
    return a.orig_id < b.orig_id;
  }
};

struct GroupOrder {
  bool operator()(const GroupRecord& a, const GroupRecord& b) const {
    if (a.second_hash != b.second_hash) return a.second_hash < b.second_hash;
    if (a.orig_id != b.orig_id) return a.orig_id < b.orig_id;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.value < b.value;
  }
};

struct XmlGroupOrder {
  bool operator()(const XmlGroupRecord& a, const XmlGroupRecord& b) const {
    if (a.label != b.label) return a.label < b.label;
    if (a.parent_bisim != b.parent_bisim) return a.parent_bisim < b.parent_bisim;
    if (a.orig_id != b.orig_id) return a.orig_id < b.orig_id;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.child_id_on_level < b.child_id_on_level;
  }
};

}  // namespace embisim
