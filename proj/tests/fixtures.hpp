#pragma once

// Shared inputs for the test suites: a small labeled DAG whose coarsest
// bisimulation is known by hand, a nested document whose index partitions
// are known by hand, and helpers to lay vectors out as sequence files.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "embisim/graph_files.hpp"
#include "embisim/machine.hpp"
#include "embisim/records.hpp"
#include "embisim/sequence.hpp"

namespace testfx {

using namespace embisim;

/// Small-machine config so a few thousand records already exercise the
/// external paths (spills, run merges).
inline MachineConfig tiny_config(std::uint64_t memory = 1u << 20,
                                 std::size_t block = 4096) {
  MachineConfig cfg;
  cfg.memory_budget_bytes = memory;
  cfg.block_size_bytes = block;
  return cfg;
}

inline ExternalSequence<NodeRecord> make_nodes(
    Workspace& ws,
    const std::vector<std::pair<std::uint64_t, std::uint32_t>>& v) {
  auto seq = ExternalSequence<NodeRecord>::create_temp(ws);
  auto w = seq.writer();
  for (const auto& [id, label] : v) w.put(NodeRecord{id, label, 0});
  w.finish();
  return seq;
}

/// Pairs are (parent, child); callers supply them sorted by child.
inline ExternalSequence<EdgeRecord> make_edges(
    Workspace& ws,
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& v) {
  auto seq = ExternalSequence<EdgeRecord>::create_temp(ws);
  auto w = seq.writer();
  for (const auto& [parent, child] : v) w.put(EdgeRecord{parent, child});
  w.finish();
  return seq;
}

inline ExternalSequence<PartitionRecord> make_partition(
    Workspace& ws,
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& v) {
  auto seq = ExternalSequence<PartitionRecord>::create_temp(ws);
  auto w = seq.writer();
  for (const auto& [orig, block] : v) w.put(PartitionRecord{orig, block});
  w.finish();
  return seq;
}

/// (orig, block) pairs of a partition file, for direct comparison.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> partition_pairs(
    ExternalSequence<PartitionRecord>& p) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  auto r = p.reader();
  while (const PartitionRecord* rec = r.peek()) {
    out.emplace_back(rec->orig_id, rec->bisim_id);
    r.advance();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seven-node DAG with labels a=1, b=2, c=3, d=4:
//
//   node:  0:c  1:c  2:b  3:b  4:d  5:a  6:d
//   edges (parent -> child): 2->0 3->0 4->0 2->1 5->2 5->3 6->3
//
// Ranks are 0,0,1,1,1,2,2 and the coarsest bisimulation has the 5 blocks
// {0,1} {2,3} {4} {5} {6}: the two c-leaves are alike, the two b-nodes both
// reach only c-leaves, while the two d-nodes differ in rank.
// ---------------------------------------------------------------------------

struct GraphFixture {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> nodes;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;  // (parent, child)
};

inline GraphFixture two_branch_dag() {
  GraphFixture f;
  f.nodes = {{0, 3}, {1, 3}, {2, 2}, {3, 2}, {4, 4}, {5, 1}, {6, 4}};
  f.edges = {{2, 0}, {3, 0}, {4, 0}, {2, 1}, {5, 2}, {5, 3}, {6, 3}};
  return f;
}

/// Canonical assignment of the fixture's coarsest bisimulation:
/// blocks numbered 1.. in order of smallest member.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>>
two_branch_expected_partition() {
  return {{0, 1}, {1, 1}, {2, 2}, {3, 2}, {4, 3}, {5, 4}, {6, 5}};
}

/// The expected quotient of the fixture (5 nodes, 4 distinct block edges),
/// with dense ids in canonical block order.
inline GraphFixture two_branch_expected_quotient() {
  GraphFixture f;
  // block 1 = {0,1} label c; 2 = {2,3} label b; 3 = {4} d; 4 = {5} a; 5 = {6} d
  f.nodes = {{1, 3}, {2, 2}, {3, 4}, {4, 1}, {5, 4}};
  f.edges = {{2, 1}, {3, 1}, {4, 2}, {5, 2}};
  return f;
}

// ---------------------------------------------------------------------------
// Ten-element nested document. Element ids are document order:
//
//   <a>                      0   depth 0
//     <a>                    1   depth 1
//       <b/>  <c/>           2,3 depth 2
//     </a>
//     <a>                    4   depth 1
//       <b/>  <c/>           5,6 depth 2
//       <a>                  7   depth 2
//         <b/>  <c/>         8,9 depth 3
//       </a>
//     </a>
//   </a>
//
// Known partitions (document ids):
//   1-index         {0} {1,4} {2,5} {3,6} {7} {8} {9}            (7 blocks)
//   forward         {0} {4} {1,7} {2,5,8} {3,6,9}                (5 blocks)
//   combined (F&B)  {0} {1} {4} {2,5} {3,6} {7} {8} {9}          (8 blocks)
//   A(0)            {0,1,4,7} {2,5,8} {3,6,9}                    (3 blocks)
//   A(1)            {0} {1,4,7} {2,5,8} {3,6,9}                  (4 blocks)
//   A(2)            {0} {1,4} {7} {2,5,8} {3,6,9}                (5 blocks)
//   A(3)            = 1-index                                    (7 blocks)
// ---------------------------------------------------------------------------

inline void write_nested_document(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + path.string());
  std::fputs(
      "<a><a><b/><c/></a><a><b/><c/><a><b/><c/></a></a></a>\n", f);
  std::fclose(f);
}

/// Expected canonical 1-index assignment of the nested document.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>>
nested_one_index_expected() {
  return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 2},
          {5, 3}, {6, 4}, {7, 5}, {8, 6}, {9, 7}};
}

/// Expected canonical combined-index assignment of the nested document.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>>
nested_fb_expected() {
  return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5},
          {5, 3}, {6, 4}, {7, 6}, {8, 7}, {9, 8}};
}

/// Expected canonical A(k) assignments for k = 0..3.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> nested_ak_expected(
    std::uint32_t k) {
  switch (k) {
    case 0:
      return {{0, 1}, {1, 1}, {2, 2}, {3, 3}, {4, 1},
              {5, 2}, {6, 3}, {7, 1}, {8, 2}, {9, 3}};
    case 1:
      return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 2},
              {5, 3}, {6, 4}, {7, 2}, {8, 3}, {9, 4}};
    case 2:
      return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 2},
              {5, 3}, {6, 4}, {7, 5}, {8, 3}, {9, 4}};
    default:
      return nested_one_index_expected();
  }
}

/// The nested document's reversed containment edges under document-order ids
/// (each edge's child is the document parent), sorted by child.
inline GraphFixture nested_reversed_tree() {
  GraphFixture f;
  // labels: a=1, b=2, c=3 in document-scan interning order
  f.nodes = {{0, 1}, {1, 1}, {2, 2}, {3, 3}, {4, 1},
             {5, 2}, {6, 3}, {7, 1}, {8, 2}, {9, 3}};
  f.edges = {{1, 0}, {4, 0}, {2, 1}, {3, 1}, {5, 4},
             {6, 4}, {7, 4}, {8, 7}, {9, 7}};
  return f;
}

}  // namespace testfx
