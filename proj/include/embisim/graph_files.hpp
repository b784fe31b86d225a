#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "embisim/machine.hpp"
#include "embisim/records.hpp"
#include "embisim/sequence.hpp"
#include "embisim/sort.hpp"

namespace embisim {

// =============================================================================
// Label table: maps label strings to dense codes. Code 0 is reserved for the
// padding label used by bounded-trace indexes, so interned codes start at 1.
// Persisted as a CSV sidecar (`code,name`).
// =============================================================================

class LabelTable {
 public:
  std::uint32_t intern(const std::string& name) {
    auto it = codes_.find(name);
    if (it != codes_.end()) return it->second;
    names_.push_back(name);
    const std::uint32_t code = static_cast<std::uint32_t>(names_.size());
    codes_.emplace(name, code);
    return code;
  }

  /// Name for a code; code 0 renders as "_".
  const std::string& name(std::uint32_t code) const {
    static const std::string padding = "_";
    if (code == 0) return padding;
    if (code > names_.size())
      throw ValidationError("unknown label code " + std::to_string(code));
    return names_[code - 1];
  }

  std::uint32_t size() const { return static_cast<std::uint32_t>(names_.size()); }

  void save_csv(const std::filesystem::path& path) const {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw IoError("cannot write " + path.string());
    std::fputs("code,name\n", f);
    for (std::size_t i = 0; i < names_.size(); ++i)
      std::fprintf(f, "%zu,%s\n", i + 1, names_[i].c_str());
    std::fclose(f);
  }

  static LabelTable load_csv(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "r");
    if (!f) throw IoError("cannot read " + path.string());
    LabelTable t;
    char line[4096];
    bool first = true;
    while (std::fgets(line, sizeof line, f)) {
      std::string s(line);
      while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
      if (first) {
        first = false;
        if (s == "code,name") continue;
      }
      if (s.empty()) continue;
      const auto comma = s.find(',');
      if (comma == std::string::npos) {
        std::fclose(f);
        throw FormatError("bad label table line: " + s);
      }
      const std::uint32_t code = t.intern(s.substr(comma + 1));
      if (code != std::strtoul(s.c_str(), nullptr, 10)) {
        std::fclose(f);
        throw FormatError("label table codes must be dense and in order");
      }
    }
    std::fclose(f);
    return t;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> codes_;
};

// =============================================================================
// Input validation: one ordering scan over the node file, then a merged scan
// of the edge file against a second node cursor. Every violated precondition
// of the partitioner is reported.
// =============================================================================

struct ValidationReport {
  std::uint64_t node_count = 0;
  std::uint64_t edge_count = 0;
  std::uint64_t duplicate_edge_count = 0;
  bool dense_ids = false;  // ids are exactly 0..n-1
  std::uint64_t issue_count = 0;
  std::vector<std::string> issues;  // first few, for reporting

  bool ok() const { return issue_count == 0; }

  void add_issue(std::string message) {
    if (issues.size() < 64) issues.push_back(std::move(message));
    ++issue_count;
  }
};

/// Checks that nodes are strictly ascending by id, edges are sorted by child
/// with child < parent, every child id names a node, and no parent id exceeds
/// the maximum node id. With dense ids (the normal case) the parent bound
/// check is exact; with sparse ids a dangling parent inside the id range is
/// reported later by the partitioner itself. Duplicate (parent, child) pairs
/// are counted but are not errors.
inline ValidationReport validate_graph(ExternalSequence<NodeRecord>& nodes,
                                       ExternalSequence<EdgeRecord>& edges) {
  ValidationReport rep;
  std::uint64_t max_id = 0;
  std::uint64_t min_id = 0;
  bool have_nodes = false;

  {
    auto nr = nodes.reader();
    std::uint64_t prev_id = 0;
    std::uint64_t index = 0;
    while (const NodeRecord* n = nr.peek()) {
      if (have_nodes && n->id <= prev_id)
        rep.add_issue("node " + std::to_string(index) +
                      ": ids must be strictly increasing (saw " +
                      std::to_string(n->id) + " after " +
                      std::to_string(prev_id) + ")");
      if (!have_nodes) min_id = n->id;
      prev_id = n->id;
      max_id = n->id;
      have_nodes = true;
      ++index;
      ++rep.node_count;
      nr.advance();
    }
  }

  auto nr = nodes.reader();
  auto er = edges.reader();

  std::uint64_t current_child = 0;
  bool have_child = false;
  std::vector<std::uint64_t> parents_of_child;

  auto close_child = [&]() {
    if (!have_child) return;
    std::sort(parents_of_child.begin(), parents_of_child.end());
    for (std::size_t i = 1; i < parents_of_child.size(); ++i)
      if (parents_of_child[i] == parents_of_child[i - 1])
        ++rep.duplicate_edge_count;
    parents_of_child.clear();
  };

  // merge anchor: the most recent node id not exceeding the current child
  std::uint64_t anchor = 0;
  bool have_anchor = false;

  std::uint64_t edge_index = 0;
  std::uint64_t prev_edge_child = 0;
  bool have_edge = false;

  while (const EdgeRecord* e = er.peek()) {
    if (have_edge && e->child < prev_edge_child) {
      rep.add_issue("edge " + std::to_string(edge_index) +
                    ": edges are not sorted by child");
    }
    while (const NodeRecord* n = nr.peek()) {
      if (n->id > e->child) break;
      anchor = n->id;
      have_anchor = true;
      nr.advance();
    }
    if (e->child != current_child || !have_child) {
      close_child();
      current_child = e->child;
      have_child = true;
    }
    if (e->child >= e->parent)
      rep.add_issue("edge " + std::to_string(edge_index) + " (" +
                    std::to_string(e->parent) + " -> " +
                    std::to_string(e->child) +
                    "): child id must be smaller than parent id");
    if (!have_anchor || e->child != anchor)
      rep.add_issue("edge " + std::to_string(edge_index) + ": child " +
                    std::to_string(e->child) + " is not a node");
    if (!have_nodes || e->parent > max_id)
      rep.add_issue("edge " + std::to_string(edge_index) + ": parent " +
                    std::to_string(e->parent) + " exceeds the last node id");
    parents_of_child.push_back(e->parent);
    prev_edge_child = e->child;
    have_edge = true;
    ++edge_index;
    er.advance();
  }
  close_child();
  rep.edge_count = edge_index;
  rep.dense_ids = have_nodes && min_id == 0 && max_id == rep.node_count - 1;
  return rep;
}

// =============================================================================
// Renumbering: given nodes listed in their target order and the edge file in
// the old numbering, assigns new ids 1..n positionally and rewrites the edge
// file in two merge passes (children first, then parents).
// =============================================================================

struct RenumberedGraph {
  ExternalSequence<RankedNodeRecord> nodes;  // id = new id; file order == id order
  ExternalSequence<EdgeRecord> edges;        // new ids, sorted by child
  ExternalSequence<IdMapRecord> mapping;     // old id -> new id, sorted by old
};

inline RenumberedGraph renumber_by_order(
    ExternalSequence<RankedNodeRecord> nodes_in_target_order,
    ExternalSequence<EdgeRecord>& edges_by_child, Workspace& ws,
    bool remove_edge_input = false) {
  const std::uint64_t budget = ws.working_budget();

  auto renumbered = ExternalSequence<RankedNodeRecord>::create_temp(ws);
  auto mapping = ExternalSequence<IdMapRecord>::create_temp(ws);
  {
    auto r = nodes_in_target_order.reader();
    auto wn = renumbered.writer();
    auto wm = mapping.writer();
    std::uint64_t next = 1;
    while (const RankedNodeRecord* n = r.peek()) {
      RankedNodeRecord out = *n;
      out.id = next;
      wn.put(out);
      wm.put(IdMapRecord{n->id, next});
      ++next;
      r.advance();
    }
    wn.finish();
    wm.finish();
  }
  nodes_in_target_order.remove();

  auto map_by_old = external_sort(
      std::move(mapping),
      [](const IdMapRecord& a, const IdMapRecord& b) {
        return a.orig_id < b.orig_id;
      },
      ws, budget, "renum");

  // pass 1: children. Edges arrive sorted by child; the map is sorted by old
  // id, so one merged scan rewrites every child.
  auto half_renamed = ExternalSequence<EdgeRecord>::create_temp(ws);
  {
    auto re = edges_by_child.reader();
    auto rm = map_by_old.reader();
    auto w = half_renamed.writer();
    while (const EdgeRecord* e = re.peek()) {
      const IdMapRecord* m = rm.peek();
      while (m && m->orig_id < e->child) {
        rm.advance();
        m = rm.peek();
      }
      if (!m || m->orig_id != e->child)
        throw ValidationError("edge child " + std::to_string(e->child) +
                              " is not a node");
      w.put(EdgeRecord{e->parent, m->new_id});
      re.advance();
    }
    w.finish();
  }
  if (remove_edge_input) edges_by_child.remove();

  auto by_parent = external_sort(std::move(half_renamed), EdgeByParent(), ws,
                                 budget, "renum");

  auto renamed = ExternalSequence<EdgeRecord>::create_temp(ws);
  {
    auto re = by_parent.reader();
    auto rm = map_by_old.reader();
    auto w = renamed.writer();
    while (const EdgeRecord* e = re.peek()) {
      const IdMapRecord* m = rm.peek();
      while (m && m->orig_id < e->parent) {
        rm.advance();
        m = rm.peek();
      }
      if (!m || m->orig_id != e->parent)
        throw ValidationError("edge parent " + std::to_string(e->parent) +
                              " is not a node");
      w.put(EdgeRecord{m->new_id, e->child});
      re.advance();
    }
    w.finish();
  }
  by_parent.remove();

  auto by_child =
      external_sort(std::move(renamed), EdgeByChild(), ws, budget, "renum");

  return RenumberedGraph{std::move(renumbered), std::move(by_child),
                         std::move(map_by_old)};
}

// =============================================================================
// Canonical partitions. Two partitions describe the same grouping exactly
// when their canonical forms are byte-identical: blocks renumbered 1..k in
// order of each block's smallest member id, records sorted by member id.
// =============================================================================

inline ExternalSequence<PartitionRecord> canonicalize_partition(
    ExternalSequence<PartitionRecord>& partition, Workspace& ws) {
  const std::uint64_t budget = ws.working_budget();

  auto by_block = external_sort(
      std::move(partition),
      [](const PartitionRecord& a, const PartitionRecord& b) {
        return a.bisim_id != b.bisim_id ? a.bisim_id < b.bisim_id
                                        : a.orig_id < b.orig_id;
      },
      ws, budget, "canon", /*remove_input=*/false);

  // one representative (smallest member) per block
  auto reps = ExternalSequence<IdMapRecord>::create_temp(ws);
  {
    auto r = by_block.reader();
    auto w = reps.writer();
    bool have = false;
    std::uint64_t block = 0;
    while (const PartitionRecord* p = r.peek()) {
      if (!have || p->bisim_id != block) {
        w.put(IdMapRecord{p->orig_id, p->bisim_id});  // (representative, block)
        block = p->bisim_id;
        have = true;
      }
      r.advance();
    }
    w.finish();
  }

  auto reps_in_order = external_sort(
      std::move(reps),
      [](const IdMapRecord& a, const IdMapRecord& b) {
        return a.orig_id < b.orig_id;
      },
      ws, budget, "canon");

  // old block id -> canonical id, in representative order
  auto block_map = ExternalSequence<IdMapRecord>::create_temp(ws);
  {
    auto r = reps_in_order.reader();
    auto w = block_map.writer();
    std::uint64_t next = 1;
    while (const IdMapRecord* m = r.peek()) {
      w.put(IdMapRecord{m->new_id, next++});  // (old block, canonical block)
      r.advance();
    }
    w.finish();
  }
  reps_in_order.remove();

  auto map_sorted = external_sort(
      std::move(block_map),
      [](const IdMapRecord& a, const IdMapRecord& b) {
        return a.orig_id < b.orig_id;
      },
      ws, budget, "canon");

  auto relabeled = ExternalSequence<PartitionRecord>::create_temp(ws);
  {
    auto rp = by_block.reader();
    auto rm = map_sorted.reader();
    auto w = relabeled.writer();
    const IdMapRecord* m = rm.peek();
    while (const PartitionRecord* p = rp.peek()) {
      while (m && m->orig_id < p->bisim_id) {
        rm.advance();
        m = rm.peek();
      }
      if (!m || m->orig_id != p->bisim_id)
        throw InvariantError("canonicalization lost a block id");
      w.put(PartitionRecord{p->orig_id, m->new_id});
      rp.advance();
    }
    w.finish();
  }
  by_block.remove();
  map_sorted.remove();

  auto canonical = external_sort(
      std::move(relabeled),
      [](const PartitionRecord& a, const PartitionRecord& b) {
        if (a.orig_id != b.orig_id) return a.orig_id < b.orig_id;
        return a.bisim_id < b.bisim_id;
      },
      ws, budget, "canon");

  // a node listed twice makes the "partition" ill-formed
  {
    auto r = canonical.reader();
    bool have = false;
    std::uint64_t prev = 0;
    while (const PartitionRecord* p = r.peek()) {
      if (have && p->orig_id == prev)
        throw ValidationError("node " + std::to_string(prev) +
                              " appears in two partition records");
      prev = p->orig_id;
      have = true;
      r.advance();
    }
  }
  return canonical;
}

/// True when the two sequences hold identical records in identical order.
template <class T>
bool sequences_equal(ExternalSequence<T>& a, ExternalSequence<T>& b) {
  if (a.size() != b.size()) return false;
  auto ra = a.reader();
  auto rb = b.reader();
  while (const T* x = ra.peek()) {
    const T* y = rb.peek();
    if (std::memcmp(x, y, sizeof(T)) != 0) return false;
    ra.advance();
    rb.advance();
  }
  return true;
}

// =============================================================================
// Partition comparison: equality / refinement / incomparability, by two
// functional checks over the joined (block1, block2) pairs.
// =============================================================================

enum class PartitionRelation {
  equal,
  first_refines_second,
  second_refines_first,
  incomparable,
};

inline const char* to_string(PartitionRelation r) {
  switch (r) {
    case PartitionRelation::equal: return "equal";
    case PartitionRelation::first_refines_second: return "first-refines-second";
    case PartitionRelation::second_refines_first: return "second-refines-first";
    default: return "incomparable";
  }
}

inline PartitionRelation compare_partitions(
    ExternalSequence<PartitionRecord>& first,
    ExternalSequence<PartitionRecord>& second, Workspace& ws) {
  const std::uint64_t budget = ws.working_budget();
  auto s1 = external_sort(std::move(first), PartitionByOrigId(), ws, budget,
                          "cmp", /*remove_input=*/false);
  auto s2 = external_sort(std::move(second), PartitionByOrigId(), ws, budget,
                          "cmp", /*remove_input=*/false);

  // pair file: one record per node, (block in first, block in second)
  auto pairs = ExternalSequence<IdMapRecord>::create_temp(ws);
  {
    auto r1 = s1.reader();
    auto r2 = s2.reader();
    auto w = pairs.writer();
    while (true) {
      const PartitionRecord* a = r1.peek();
      const PartitionRecord* b = r2.peek();
      if (!a && !b) break;
      if (!a || !b || a->orig_id != b->orig_id)
        throw ValidationError("partitions cover different node sets");
      w.put(IdMapRecord{a->bisim_id, b->bisim_id});
      r1.advance();
      r2.advance();
    }
    w.finish();
  }
  s1.remove();
  s2.remove();

  // `first` refines `second` iff each block of `first` lands in one block
  // of `second`; checked on the pair file sorted by (first, second).
  auto functional = [&ws, budget](ExternalSequence<IdMapRecord> p,
                                  bool remove_in) {
    auto sorted = external_sort(
        std::move(p),
        [](const IdMapRecord& a, const IdMapRecord& b) {
          return a.orig_id != b.orig_id ? a.orig_id < b.orig_id
                                        : a.new_id < b.new_id;
        },
        ws, budget, "cmp", remove_in);
    bool is_functional = true;
    {
      auto r = sorted.reader();
      bool have = false;
      IdMapRecord prev{};
      while (const IdMapRecord* m = r.peek()) {
        if (have && m->orig_id == prev.orig_id && m->new_id != prev.new_id) {
          is_functional = false;
          break;
        }
        prev = *m;
        have = true;
        r.advance();
      }
    }
    sorted.remove();
    return is_functional;
  };

  // flipped copy for the reverse direction
  auto flipped = ExternalSequence<IdMapRecord>::create_temp(ws);
  {
    auto r = pairs.reader();
    auto w = flipped.writer();
    while (const IdMapRecord* m = r.peek()) {
      w.put(IdMapRecord{m->new_id, m->orig_id});
      r.advance();
    }
    w.finish();
  }

  const bool first_refines = functional(std::move(pairs), true);
  const bool second_refines = functional(std::move(flipped), true);
  if (first_refines && second_refines) return PartitionRelation::equal;
  if (first_refines) return PartitionRelation::first_refines_second;
  if (second_refines) return PartitionRelation::second_refines_first;
  return PartitionRelation::incomparable;
}

// =============================================================================
// Quotient graph: one node per partition block (labelled by a representative
// member), one edge per pair of blocks connected by at least one input edge.
// =============================================================================

struct QuotientGraph {
  ExternalSequence<NodeRecord> nodes;
  ExternalSequence<EdgeRecord> edges;
};

inline QuotientGraph build_quotient(ExternalSequence<NodeRecord>& nodes,
                                    ExternalSequence<EdgeRecord>& edges,
                                    ExternalSequence<PartitionRecord>& partition,
                                    Workspace& ws) {
  const std::uint64_t budget = ws.working_budget();
  auto by_orig = external_sort(std::move(partition), PartitionByOrigId(), ws,
                               budget, "quot", /*remove_input=*/false);

  // join nodes with blocks; collect (block, member, label) keyed for the
  // representative scan
  auto tagged = ExternalSequence<RankedNodeRecord>::create_temp(ws);
  {
    auto rn = nodes.reader();
    auto rp = by_orig.reader();
    auto w = tagged.writer();
    while (const NodeRecord* n = rn.peek()) {
      const PartitionRecord* p = rp.peek();
      while (p && p->orig_id < n->id) {
        rp.advance();
        p = rp.peek();
      }
      if (!p || p->orig_id != n->id)
        throw ValidationError("node " + std::to_string(n->id) +
                              " is missing from the partition");
      RankedNodeRecord t{};
      t.id = p->bisim_id;
      t.orig_id = n->id;
      t.label = n->label;
      w.put(t);
      rn.advance();
      rp.advance();
    }
    if (rp.peek())
      throw ValidationError("partition names node " +
                            std::to_string(rp.peek()->orig_id) +
                            " which is not in the node file");
    w.finish();
  }

  auto tagged_sorted = external_sort(
      std::move(tagged),
      [](const RankedNodeRecord& a, const RankedNodeRecord& b) {
        return a.id != b.id ? a.id < b.id : a.orig_id < b.orig_id;
      },
      ws, budget, "quot");

  auto qnodes = ExternalSequence<NodeRecord>::create_temp(ws);
  {
    auto r = tagged_sorted.reader();
    auto w = qnodes.writer();
    bool have = false;
    std::uint64_t block = 0;
    while (const RankedNodeRecord* t = r.peek()) {
      if (!have || t->id != block) {
        w.put(NodeRecord{t->id, t->label, 0});
        block = t->id;
        have = true;
      }
      r.advance();
    }
    w.finish();
  }
  tagged_sorted.remove();

  // edges: rename children, then parents, against the member->block map
  auto half = ExternalSequence<EdgeRecord>::create_temp(ws);
  {
    auto re = edges.reader();
    auto rp = by_orig.reader();
    auto w = half.writer();
    while (const EdgeRecord* e = re.peek()) {
      const PartitionRecord* p = rp.peek();
      while (p && p->orig_id < e->child) {
        rp.advance();
        p = rp.peek();
      }
      if (!p || p->orig_id != e->child)
        throw ValidationError("edge child " + std::to_string(e->child) +
                              " is missing from the partition");
      w.put(EdgeRecord{e->parent, p->bisim_id});
      re.advance();
    }
    w.finish();
  }

  auto by_parent =
      external_sort(std::move(half), EdgeByParent(), ws, budget, "quot");

  auto renamed = ExternalSequence<EdgeRecord>::create_temp(ws);
  {
    auto re = by_parent.reader();
    auto rp = by_orig.reader();
    auto w = renamed.writer();
    while (const EdgeRecord* e = re.peek()) {
      const PartitionRecord* p = rp.peek();
      while (p && p->orig_id < e->parent) {
        rp.advance();
        p = rp.peek();
      }
      if (!p || p->orig_id != e->parent)
        throw ValidationError("edge parent " + std::to_string(e->parent) +
                              " is missing from the partition");
      w.put(EdgeRecord{p->bisim_id, e->child});
      re.advance();
    }
    w.finish();
  }
  by_parent.remove();
  by_orig.remove();

  auto sorted = external_sort(std::move(renamed), EdgeByChild(), ws, budget,
                              "quot");

  auto qedges = ExternalSequence<EdgeRecord>::create_temp(ws);
  {
    auto r = sorted.reader();
    auto w = qedges.writer();
    bool have = false;
    EdgeRecord prev{};
    while (const EdgeRecord* e = r.peek()) {
      if (!have || e->parent != prev.parent || e->child != prev.child) {
        if (e->child >= e->parent)
          throw ValidationError(
              "quotient is not a valid graph (block " +
              std::to_string(e->parent) + " -> block " +
              std::to_string(e->child) +
              "); the partition is coarser than a bisimulation");
        w.put(*e);
        prev = *e;
        have = true;
      }
      r.advance();
    }
    w.finish();
  }
  sorted.remove();

  return QuotientGraph{std::move(qnodes), std::move(qedges)};
}

// =============================================================================
// Text interop: `id label` node lines, `parent child` edge lines,
// `node block` partition lines. '#' starts a comment, blank lines are
// skipped. Conversion is verbatim; run validation separately.
// =============================================================================

namespace detail {

inline bool parse_two_u64(const char* line, std::uint64_t& a, std::uint64_t& b,
                          const char** rest = nullptr) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(line, &end, 10);
  if (end == line || errno == ERANGE) return false;
  const char* p = end;
  if (*p != ' ' && *p != '\t') return false;
  errno = 0;
  const unsigned long long y = std::strtoull(p, &end, 10);
  if (end == p || errno == ERANGE) return false;
  for (p = end; *p == ' ' || *p == '\t' || *p == '\r'; ++p) {
  }
  if (rest) {
    *rest = p;
  } else if (*p != '\0' && *p != '\n' && *p != '#') {
    return false;
  }
  a = x;
  b = y;
  return true;
}

template <class PutLine>
void for_each_data_line(const std::filesystem::path& path, PutLine&& put) {
  std::FILE* f = std::fopen(path.string().c_str(), "r");
  if (!f) throw IoError("cannot read " + path.string());
  std::vector<char> line(1 << 16);
  std::uint64_t number = 0;
  while (std::fgets(line.data(), static_cast<int>(line.size()), f)) {
    ++number;
    const char* p = line.data();
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\0' || *p == '\n' || *p == '\r' || *p == '#') continue;
    try {
      put(p, number);
    } catch (...) {
      std::fclose(f);
      throw;
    }
  }
  std::fclose(f);
}

}  // namespace detail

inline ExternalSequence<NodeRecord> nodes_from_text(
    Workspace& ws, const std::filesystem::path& text,
    const std::filesystem::path& out) {
  auto seq = ExternalSequence<NodeRecord>::create(ws, out);
  auto w = seq.writer();
  detail::for_each_data_line(text, [&](const char* p, std::uint64_t ln) {
    std::uint64_t id, label;
    if (!detail::parse_two_u64(p, id, label) || label > 0xffffffffull)
      throw FormatError(text.string() + ":" + std::to_string(ln) +
                        ": expected `id label`");
    w.put(NodeRecord{id, static_cast<std::uint32_t>(label), 0});
  });
  w.finish();
  return seq;
}

inline ExternalSequence<EdgeRecord> edges_from_text(
    Workspace& ws, const std::filesystem::path& text,
    const std::filesystem::path& out) {
  auto seq = ExternalSequence<EdgeRecord>::create(ws, out);
  auto w = seq.writer();
  detail::for_each_data_line(text, [&](const char* p, std::uint64_t ln) {
    std::uint64_t parent, child;
    if (!detail::parse_two_u64(p, parent, child))
      throw FormatError(text.string() + ":" + std::to_string(ln) +
                        ": expected `parent child`");
    w.put(EdgeRecord{parent, child});
  });
  w.finish();
  return seq;
}

inline ExternalSequence<PartitionRecord> partition_from_text(
    Workspace& ws, const std::filesystem::path& text,
    const std::filesystem::path& out) {
  auto seq = ExternalSequence<PartitionRecord>::create(ws, out);
  auto w = seq.writer();
  detail::for_each_data_line(text, [&](const char* p, std::uint64_t ln) {
    std::uint64_t node, block;
    if (!detail::parse_two_u64(p, node, block))
      throw FormatError(text.string() + ":" + std::to_string(ln) +
                        ": expected `node block`");
    w.put(PartitionRecord{node, block});
  });
  w.finish();
  return seq;
}

inline void nodes_to_text(ExternalSequence<NodeRecord>& seq,
                          const std::filesystem::path& out) {
  std::FILE* f = std::fopen(out.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + out.string());
  auto r = seq.reader();
  while (const NodeRecord* n = r.peek()) {
    std::fprintf(f, "%" PRIu64 " %u\n", n->id, n->label);
    r.advance();
  }
  std::fclose(f);
}

inline void edges_to_text(ExternalSequence<EdgeRecord>& seq,
                          const std::filesystem::path& out) {
  std::FILE* f = std::fopen(out.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + out.string());
  auto r = seq.reader();
  while (const EdgeRecord* e = r.peek()) {
    std::fprintf(f, "%" PRIu64 " %" PRIu64 "\n", e->parent, e->child);
    r.advance();
  }
  std::fclose(f);
}

inline void partition_to_text(ExternalSequence<PartitionRecord>& seq,
                              const std::filesystem::path& out) {
  std::FILE* f = std::fopen(out.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + out.string());
  auto r = seq.reader();
  while (const PartitionRecord* p = r.peek()) {
    std::fprintf(f, "%" PRIu64 " %" PRIu64 "\n", p->orig_id, p->bisim_id);
    r.advance();
  }
  std::fclose(f);
}

/// Copies a typed sequence to a caller-named path.
template <class T>
ExternalSequence<T> copy_sequence(ExternalSequence<T>& in, Workspace& ws,
                                  const std::filesystem::path& out) {
  auto seq = ExternalSequence<T>::create(ws, out);
  auto w = seq.writer();
  auto r = in.reader();
  while (const T* p = r.peek()) {
    w.put(*p);
    r.advance();
  }
  w.finish();
  return seq;
}

/// Number of distinct block ids in a partition file.
inline std::uint64_t count_partition_blocks(
    ExternalSequence<PartitionRecord>& partition, Workspace& ws) {
  auto sorted = external_sort(
      std::move(partition),
      [](const PartitionRecord& a, const PartitionRecord& b) {
        return a.bisim_id < b.bisim_id;
      },
      ws, ws.working_budget(), "blocks", /*remove_input=*/false);
  std::uint64_t blocks = 0;
  auto r = sorted.reader();
  bool have = false;
  std::uint64_t prev = 0;
  while (const PartitionRecord* p = r.peek()) {
    if (!have || p->bisim_id != prev) ++blocks;
    prev = p->bisim_id;
    have = true;
    r.advance();
  }
  sorted.remove();
  return blocks;
}

}  // namespace embisim
