#include "embisim/graph_files.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace embisim;
using testfx::make_edges;
using testfx::make_nodes;
using testfx::make_partition;
using testfx::partition_pairs;

TEST(LabelTable, InternNameRoundTrip) {
  LabelTable t;
  EXPECT_EQ(t.intern("alpha"), 1u);
  EXPECT_EQ(t.intern("beta"), 2u);
  EXPECT_EQ(t.intern("alpha"), 1u) << "re-interning is idempotent";
  EXPECT_EQ(t.name(1), "alpha");
  EXPECT_EQ(t.name(0), "_") << "code 0 is the reserved padding label";
  EXPECT_THROW(t.name(9), ValidationError);

  Workspace ws(testfx::tiny_config());
  const fs::path csv = ws.temp_path("labels");
  t.save_csv(csv);
  LabelTable back = LabelTable::load_csv(csv);
  EXPECT_EQ(back.size(), 2u);
  EXPECT_EQ(back.name(2), "beta");
  EXPECT_EQ(back.intern("beta"), 2u);
}

TEST(Validate, CleanFixturePasses) {
  Workspace ws(testfx::tiny_config());
  auto f = testfx::two_branch_dag();
  auto nodes = make_nodes(ws, f.nodes);
  auto edges = make_edges(ws, f.edges);
  const auto rep = validate_graph(nodes, edges);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.node_count, 7u);
  EXPECT_EQ(rep.edge_count, 7u);
  EXPECT_EQ(rep.duplicate_edge_count, 0u);
  EXPECT_TRUE(rep.dense_ids);
}

TEST(Validate, FlagsUnsortedNodes) {
  Workspace ws(testfx::tiny_config());
  auto nodes = make_nodes(ws, {{1, 1}, {0, 1}});
  auto edges = make_edges(ws, {});
  const auto rep = validate_graph(nodes, edges);
  EXPECT_FALSE(rep.ok());
  EXPECT_NE(rep.issues[0].find("strictly increasing"), std::string::npos);
}

TEST(Validate, FlagsChildNotBelowParent) {
  Workspace ws(testfx::tiny_config());
  auto nodes = make_nodes(ws, {{0, 1}, {1, 1}});
  auto edges = make_edges(ws, {{0, 1}});  // parent 0 < child 1: wrong way
  const auto rep = validate_graph(nodes, edges);
  EXPECT_FALSE(rep.ok());
}

TEST(Validate, FlagsDanglingEndpoints) {
  Workspace ws(testfx::tiny_config());
  {
    // child id 1 is inside the id range but not a node
    auto nodes = make_nodes(ws, {{0, 1}, {2, 1}});
    auto edges = make_edges(ws, {{2, 1}});
    const auto rep = validate_graph(nodes, edges);
    EXPECT_FALSE(rep.ok());
    EXPECT_FALSE(rep.dense_ids);
  }
  {
    // parent beyond the last node id
    auto nodes = make_nodes(ws, {{0, 1}, {1, 1}});
    auto edges = make_edges(ws, {{5, 0}});
    const auto rep = validate_graph(nodes, edges);
    EXPECT_FALSE(rep.ok());
  }
}

TEST(Validate, FlagsUnsortedEdges) {
  Workspace ws(testfx::tiny_config());
  auto nodes = make_nodes(ws, {{0, 1}, {1, 1}, {2, 1}});
  auto edges = make_edges(ws, {{2, 1}, {2, 0}});  // children 1 then 0
  const auto rep = validate_graph(nodes, edges);
  EXPECT_FALSE(rep.ok());
}

TEST(Validate, CountsDuplicateEdgesWithoutFailing) {
  Workspace ws(testfx::tiny_config());
  auto nodes = make_nodes(ws, {{0, 1}, {1, 1}, {2, 1}});
  auto edges = make_edges(ws, {{1, 0}, {1, 0}, {2, 0}});
  const auto rep = validate_graph(nodes, edges);
  EXPECT_TRUE(rep.ok()) << "duplicates are counted, not rejected";
  EXPECT_EQ(rep.duplicate_edge_count, 1u);
  EXPECT_EQ(rep.edge_count, 3u);
}

TEST(TextFormats, RoundTripWithCommentsAndBlanks) {
  Workspace ws(testfx::tiny_config());
  auto f = testfx::two_branch_dag();
  auto nodes = make_nodes(ws, f.nodes);
  auto edges = make_edges(ws, f.edges);
  auto part = make_partition(ws, testfx::two_branch_expected_partition());

  const fs::path nt = ws.temp_path("nodes_txt");
  const fs::path et = ws.temp_path("edges_txt");
  const fs::path pt = ws.temp_path("part_txt");
  nodes_to_text(nodes, nt);
  edges_to_text(edges, et);
  partition_to_text(part, pt);

  auto nodes2 = nodes_from_text(ws, nt, ws.temp_path("n2"));
  auto edges2 = edges_from_text(ws, et, ws.temp_path("e2"));
  auto part2 = partition_from_text(ws, pt, ws.temp_path("p2"));
  EXPECT_TRUE(sequences_equal(nodes, nodes2));
  EXPECT_TRUE(sequences_equal(edges, edges2));
  EXPECT_TRUE(sequences_equal(part, part2));

  // hand-written file with comments and blank lines
  const fs::path hand = ws.temp_path("hand_txt");
  {
    std::FILE* out = std::fopen(hand.string().c_str(), "w");
    std::fputs("# a comment\n\n0 7\n  1 8\n# trailing\n", out);
    std::fclose(out);
  }
  auto hand_nodes = nodes_from_text(ws, hand, ws.temp_path("h2"));
  const auto all = hand_nodes.read_all();
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].id, 0u);
  EXPECT_EQ(all[0].label, 7u);
  EXPECT_EQ(all[1].label, 8u);
}

TEST(TextFormats, MalformedLineNamesLineNumber) {
  Workspace ws(testfx::tiny_config());
  const fs::path bad = ws.temp_path("bad_txt");
  {
    std::FILE* out = std::fopen(bad.string().c_str(), "w");
    std::fputs("0 1\nnot numbers\n", out);
    std::fclose(out);
  }
  try {
    nodes_from_text(ws, bad, ws.temp_path("b2"));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos)
        << "error should carry the line number: " << e.what();
  }
}

TEST(Canonicalize, NormalizesBlockNames) {
  Workspace ws(testfx::tiny_config());
  // same grouping, scrambled block ids and record order is not possible for
  // records (they are keyed by orig), but block ids may be arbitrary
  auto a = make_partition(ws, {{0, 77}, {1, 77}, {2, 9}, {3, 9}, {4, 1000}});
  auto b = make_partition(ws, {{0, 5}, {1, 5}, {2, 6}, {3, 6}, {4, 7}});
  auto ca = canonicalize_partition(a, ws);
  auto cb = canonicalize_partition(b, ws);
  EXPECT_TRUE(sequences_equal(ca, cb));
  EXPECT_EQ(partition_pairs(ca),
            (std::vector<std::pair<std::uint64_t, std::uint64_t>>{
                {0, 1}, {1, 1}, {2, 2}, {3, 2}, {4, 3}}));

  auto cc = canonicalize_partition(ca, ws);
  EXPECT_TRUE(sequences_equal(cb, cc)) << "canonicalize is idempotent";
}

TEST(Canonicalize, RejectsDuplicateMembers) {
  Workspace ws(testfx::tiny_config());
  auto p = make_partition(ws, {{0, 1}, {0, 2}});
  EXPECT_THROW(canonicalize_partition(p, ws), ValidationError);
}

TEST(Compare, AllFourRelations) {
  Workspace ws(testfx::tiny_config());
  const std::vector<std::pair<std::uint64_t, std::uint64_t>> coarse = {
      {0, 1}, {1, 1}, {2, 1}, {3, 2}};
  const std::vector<std::pair<std::uint64_t, std::uint64_t>> fine = {
      {0, 1}, {1, 1}, {2, 2}, {3, 3}};
  const std::vector<std::pair<std::uint64_t, std::uint64_t>> cross = {
      {0, 1}, {1, 2}, {2, 2}, {3, 1}};

  {
    auto a = make_partition(ws, coarse);
    auto b = make_partition(ws, coarse);
    EXPECT_EQ(compare_partitions(a, b, ws), PartitionRelation::equal);
  }
  {
    auto a = make_partition(ws, fine);
    auto b = make_partition(ws, coarse);
    EXPECT_EQ(compare_partitions(a, b, ws),
              PartitionRelation::first_refines_second);
  }
  {
    auto a = make_partition(ws, coarse);
    auto b = make_partition(ws, fine);
    EXPECT_EQ(compare_partitions(a, b, ws),
              PartitionRelation::second_refines_first);
  }
  {
    auto a = make_partition(ws, cross);
    auto b = make_partition(ws, coarse);
    EXPECT_EQ(compare_partitions(a, b, ws), PartitionRelation::incomparable);
  }
  EXPECT_STREQ(to_string(PartitionRelation::equal), "equal");
}

TEST(Compare, DifferentNodeSetsRejected) {
  Workspace ws(testfx::tiny_config());
  auto a = make_partition(ws, {{0, 1}, {1, 1}});
  auto b = make_partition(ws, {{0, 1}, {2, 1}});
  EXPECT_THROW(compare_partitions(a, b, ws), ValidationError);
}

TEST(Quotient, FixtureCollapsesToExpectedGraph) {
  Workspace ws(testfx::tiny_config());
  auto f = testfx::two_branch_dag();
  auto nodes = make_nodes(ws, f.nodes);
  auto edges = make_edges(ws, f.edges);
  auto part = make_partition(ws, testfx::two_branch_expected_partition());

  QuotientGraph q = build_quotient(nodes, edges, part, ws);
  const auto expect = testfx::two_branch_expected_quotient();
  auto want_nodes = make_nodes(ws, expect.nodes);
  auto want_edges = make_edges(ws, expect.edges);
  EXPECT_TRUE(sequences_equal(q.nodes, want_nodes));
  EXPECT_TRUE(sequences_equal(q.edges, want_edges));

  // the quotient is itself a valid input graph
  const auto rep = validate_graph(q.nodes, q.edges);
  EXPECT_TRUE(rep.ok());
}

TEST(Quotient, RejectsPartitionCoarserThanBisimulation) {
  Workspace ws(testfx::tiny_config());
  auto f = testfx::two_branch_dag();
  auto nodes = make_nodes(ws, f.nodes);
  auto edges = make_edges(ws, f.edges);
  // merging {2,3} with {5} relates blocks in both directions; the quotient
  // of a non-bisimulation partition has an edge whose child is not smaller
  auto bad = make_partition(ws, {{0, 1}, {1, 1}, {2, 2}, {3, 2}, {4, 3},
                                 {5, 2}, {6, 5}});
  EXPECT_THROW(build_quotient(nodes, edges, bad, ws), ValidationError);
}

TEST(Quotient, RejectsPartialCoverage) {
  Workspace ws(testfx::tiny_config());
  auto f = testfx::two_branch_dag();
  auto nodes = make_nodes(ws, f.nodes);
  auto edges = make_edges(ws, f.edges);
  auto partial = make_partition(ws, {{0, 1}, {1, 1}});
  EXPECT_THROW(build_quotient(nodes, edges, partial, ws), ValidationError);
}

TEST(CountBlocks, CountsDistinctIds) {
  Workspace ws(testfx::tiny_config());
  auto p = make_partition(ws, {{0, 4}, {1, 9}, {2, 4}, {3, 1}});
  const fs::path kept = p.path();
  EXPECT_EQ(count_partition_blocks(p, ws), 3u);
  auto reopened = ExternalSequence<PartitionRecord>::open(ws, kept);
  EXPECT_EQ(reopened.size(), 4u) << "counting must not consume the input";
}

TEST(Renumber, PositionalIdsAndRewrittenEdges) {
  Workspace ws(testfx::tiny_config());
  // target order: node 5 first, then 3, then 7 (old ids)
  auto ordered = ExternalSequence<RankedNodeRecord>::create_temp(ws);
  {
    auto w = ordered.writer();
    w.put(RankedNodeRecord{5, 5, 0, 10, 0});
    w.put(RankedNodeRecord{3, 3, 0, 11, 0});
    w.put(RankedNodeRecord{7, 7, 1, 12, 0});
  }
  auto edges = make_edges(ws, {{5, 3}, {7, 3}, {7, 5}});
  auto renum = renumber_by_order(std::move(ordered), edges, ws);

  const auto nodes = renum.nodes.read_all();
  ASSERT_EQ(nodes.size(), 3u);
  EXPECT_EQ(nodes[0].id, 1u);  // old 5
  EXPECT_EQ(nodes[0].orig_id, 5u);
  EXPECT_EQ(nodes[1].id, 2u);  // old 3
  EXPECT_EQ(nodes[2].id, 3u);  // old 7

  // old (5,3) -> (1,2); (7,3) -> (3,2); (7,5) -> (3,1); sorted by child
  const auto e = renum.edges.read_all();
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].parent, 3u);
  EXPECT_EQ(e[0].child, 1u);
  EXPECT_EQ(e[1].parent, 1u);
  EXPECT_EQ(e[1].child, 2u);
  EXPECT_EQ(e[2].parent, 3u);
  EXPECT_EQ(e[2].child, 2u);

  const auto m = renum.mapping.read_all();
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].orig_id, 3u);
  EXPECT_EQ(m[0].new_id, 2u);
}

TEST(Renumber, MissingEndpointRejected) {
  Workspace ws(testfx::tiny_config());
  auto ordered = ExternalSequence<RankedNodeRecord>::create_temp(ws);
  {
    auto w = ordered.writer();
    w.put(RankedNodeRecord{1, 1, 0, 1, 0});
  }
  auto edges = make_edges(ws, {{2, 1}});  // parent 2 does not exist
  EXPECT_THROW(renumber_by_order(std::move(ordered), edges, ws),
               ValidationError);
}
