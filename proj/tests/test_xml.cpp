#include "embisim/xml.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "embisim/bisim.hpp"
#include "embisim/generator.hpp"
#include "embisim/graph_files.hpp"
#include "embisim/oracle.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace embisim;
using oracle::SmallGraph;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<xml::TagEvent> all_events(Workspace& ws, const fs::path& doc,
                                      LabelTable& labels) {
  xml::XmlScanner scan(ws, doc, labels);
  std::vector<xml::TagEvent> out;
  while (auto ev = scan.next()) out.push_back(*ev);
  return out;
}

/// The document tree read straight off the tag events: preorder labels and
/// parent pointers, plus the postorder view the downward oracles need.
struct DocOracle {
  std::vector<std::uint32_t> labels;        // by preorder id
  std::vector<std::int64_t> parent;         // by preorder id, root = -1
  std::vector<std::vector<std::uint64_t>> children;  // document order
  std::vector<std::uint64_t> post_of_pre;
  std::vector<std::uint64_t> pre_of_post;

  static DocOracle read(Workspace& ws, const fs::path& doc) {
    LabelTable labels;
    DocOracle d;
    std::vector<std::uint64_t> open;
    xml::XmlScanner scan(ws, doc, labels);
    while (auto ev = scan.next()) {
      if (!ev->start) {
        open.pop_back();
        continue;
      }
      d.labels.push_back(ev->label);
      d.parent.push_back(open.empty() ? -1
                                      : static_cast<std::int64_t>(open.back()));
      d.children.emplace_back();
      if (!open.empty()) d.children[open.back()].push_back(ev->node);
      open.push_back(ev->node);
    }
    d.number_postorder();
    return d;
  }

  void number_postorder() {
    const std::size_t n = labels.size();
    post_of_pre.assign(n, 0);
    pre_of_post.assign(n, 0);
    std::uint64_t next = 0;
    struct Frame {
      std::uint64_t node;
      std::size_t child;
    };
    std::vector<Frame> stack{{0, 0}};
    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.child < children[top.node].size()) {
        stack.push_back(Frame{children[top.node][top.child++], 0});
      } else {
        post_of_pre[top.node] = next;
        pre_of_post[next] = top.node;
        ++next;
        stack.pop_back();
      }
    }
  }

  SmallGraph reversed_graph() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
    for (std::size_t v = 1; v < labels.size(); ++v)
      edges.push_back({v, static_cast<std::uint64_t>(parent[v])});
    return SmallGraph::from_vectors(labels, edges);
  }

  SmallGraph forward_postorder_graph() const {
    std::vector<std::uint32_t> post_labels(labels.size());
    for (std::size_t pre = 0; pre < labels.size(); ++pre)
      post_labels[post_of_pre[pre]] = labels[pre];
    std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
    for (std::size_t v = 1; v < labels.size(); ++v)
      edges.push_back({post_of_pre[parent[v]], post_of_pre[v]});
    return SmallGraph::from_vectors(post_labels, edges);
  }

  /// Reindexes a preorder-aligned assignment vector into postorder.
  std::vector<std::uint64_t> to_postorder(
      const std::vector<std::uint64_t>& by_pre) const {
    std::vector<std::uint64_t> out(by_pre.size());
    for (std::size_t post = 0; post < by_pre.size(); ++post)
      out[post] = by_pre[pre_of_post[post]];
    return out;
  }
};

}  // namespace

TEST(Scanner, NestedFixtureEventStream) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);
  LabelTable labels;
  const auto ev = all_events(ws, doc, labels);

  ASSERT_EQ(ev.size(), 20u) << "10 elements, one start and one end each";
  EXPECT_EQ(labels.size(), 3u);
  EXPECT_EQ(labels.name(1), "a");
  EXPECT_EQ(labels.name(2), "b");
  EXPECT_EQ(labels.name(3), "c");

  // (start, label, node, depth) in document order
  const std::vector<std::tuple<bool, std::uint32_t, std::uint64_t, std::uint32_t>>
      want = {
          {true, 1, 0, 0}, {true, 1, 1, 1},  {true, 2, 2, 2},  {false, 2, 2, 2},
          {true, 3, 3, 2}, {false, 3, 3, 2}, {false, 1, 1, 1}, {true, 1, 4, 1},
          {true, 2, 5, 2}, {false, 2, 5, 2}, {true, 3, 6, 2},  {false, 3, 6, 2},
          {true, 1, 7, 2}, {true, 2, 8, 3},  {false, 2, 8, 3}, {true, 3, 9, 3},
          {false, 3, 9, 3}, {false, 1, 7, 2}, {false, 1, 4, 1}, {false, 1, 0, 0}};
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(ev[i].start, std::get<0>(want[i])) << "event " << i;
    EXPECT_EQ(ev[i].label, std::get<1>(want[i])) << "event " << i;
    EXPECT_EQ(ev[i].node, std::get<2>(want[i])) << "event " << i;
    EXPECT_EQ(ev[i].depth, std::get<3>(want[i])) << "event " << i;
  }
}

TEST(Scanner, MarkupNoiseDoesNotChangeTheTree) {
  Workspace ws(testfx::tiny_config());
  const fs::path plain = ws.temp_path("plain");
  testfx::write_nested_document(plain);

  const fs::path noisy = ws.temp_path("noisy");
  write_file(noisy,
             "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             "<!DOCTYPE a [ <!ELEMENT a ANY> ]>\n"
             "<!-- prologue comment with <a> inside -->\n"
             "<a id=\"root\" note='single quotes'>\n"
             "  text content\n"
             "  <a><b  /><c\n></c></a>\n"
             "  <![CDATA[ <not><a><tag> ]]>\n"
             "  <a><b/><c/><a><?pi hint?><b/><c/></a></a>\n"
             "</a>\n"
             "<!-- trailing comment -->\n");

  LabelTable l1, l2;
  const auto e1 = all_events(ws, plain, l1);
  const auto e2 = all_events(ws, noisy, l2);
  ASSERT_EQ(e1.size(), e2.size());
  for (std::size_t i = 0; i < e1.size(); ++i) {
    EXPECT_EQ(e1[i].start, e2[i].start) << "event " << i;
    EXPECT_EQ(e1[i].label, e2[i].label) << "event " << i;
    EXPECT_EQ(e1[i].node, e2[i].node) << "event " << i;
    EXPECT_EQ(e1[i].depth, e2[i].depth) << "event " << i;
  }
}

TEST(Scanner, MalformedDocumentsAreRejectedWithPositions) {
  Workspace ws(testfx::tiny_config());
  const std::vector<std::pair<const char*, std::string>> cases = {
      {"mismatched", "<a><b></a></b>"},
      {"outside", "<a/>stray"},
      {"tworoots", "<a/><b/>"},
      {"eof", "<a><b>"},
      {"empty", ""},
      {"strayclose", "</a>"},
      {"badattr", "<a x=1/>"},
      {"blank", "   \n  "},
  };
  for (const auto& [name, text] : cases) {
    const fs::path doc = ws.temp_path(name);
    write_file(doc, text);
    LabelTable labels;
    try {
      all_events(ws, doc, labels);
      ADD_FAILURE() << name << " should not scan";
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("near byte"), std::string::npos)
          << name << ": " << e.what();
    }
  }
}

TEST(ScanDocument, CompositeNumberingIsPerLevelArrival) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);
  LabelTable labels;
  auto g = xml::scan_document(ws, doc, labels);

  EXPECT_EQ(g.node_count, 10u);
  EXPECT_EQ(g.max_rank, 3u);

  const auto nodes = g.nodes.read_all();
  ASSERT_EQ(nodes.size(), 10u);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> composite = {
      {0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1},
      {2, 2}, {2, 3}, {2, 4}, {3, 0}, {3, 1}};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    EXPECT_EQ(nodes[i].orig_id, i);
    EXPECT_EQ(nodes[i].rank, composite[i].first) << "node " << i;
    EXPECT_EQ(nodes[i].id_on_level, composite[i].second) << "node " << i;
  }

  const auto edges = g.edges.read_all();
  ASSERT_EQ(edges.size(), 9u);
  // (parent rank, parent arrival, child arrival), one per non-root element
  const std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>>
      want = {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}, {1, 1, 2},
              {1, 1, 3}, {1, 1, 4}, {2, 4, 0}, {2, 4, 1}};
  for (std::size_t i = 0; i < edges.size(); ++i) {
    EXPECT_EQ(edges[i].parent_rank, std::get<0>(want[i])) << "edge " << i;
    EXPECT_EQ(edges[i].parent_id_on_level, std::get<1>(want[i])) << "edge " << i;
    EXPECT_EQ(edges[i].child_id_on_level, std::get<2>(want[i])) << "edge " << i;
  }
}

TEST(OneIndex, NestedFixture) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);
  LabelTable labels;
  auto run = xml::one_index(ws, doc, labels);

  EXPECT_EQ(run.stats.block_count, 7u);
  ASSERT_EQ(run.stats.phases.size(), 2u);
  EXPECT_EQ(run.stats.phases[0].name, "scan");
  EXPECT_EQ(run.stats.phases[1].name, "assign");

  auto canon = canonicalize_partition(run.partition, ws);
  auto want = testfx::make_partition(ws, testfx::nested_one_index_expected());
  EXPECT_TRUE(sequences_equal(canon, want));
}

TEST(OneIndex, AgreesWithReversedReferenceGraph) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);

  const DocOracle d = DocOracle::read(ws, doc);
  const SmallGraph rev = d.reversed_graph();
  const auto want = oracle::bisimulation(rev);

  LabelTable labels;
  auto run = xml::one_index(ws, doc, labels);
  const auto got = oracle::assignment_from_partition(run.partition, rev);
  EXPECT_TRUE(oracle::same_partition(got, want));
}

TEST(AkIndex, BoundedDepthsOnTheNestedFixture) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);

  for (const std::uint32_t k : {0u, 1u, 2u}) {
    LabelTable labels;
    auto run = xml::ak_index(ws, doc, k, labels);
    auto canon = canonicalize_partition(run.partition, ws);
    auto want = testfx::make_partition(ws, testfx::nested_ak_expected(k));
    EXPECT_TRUE(sequences_equal(canon, want)) << "k = " << k;
  }

  // from k = 3 on, the bounded index equals the full 1-index here
  LabelTable l1, l3, l9;
  auto one = xml::one_index(ws, doc, l1);
  auto one_canon = canonicalize_partition(one.partition, ws);
  for (std::uint32_t k : {3u, 9u}) {
    LabelTable& l = k == 3 ? l3 : l9;
    auto run = xml::ak_index(ws, doc, k, l);
    EXPECT_EQ(run.stats.block_count, 7u) << "k = " << k;
    auto canon = canonicalize_partition(run.partition, ws);
    EXPECT_TRUE(sequences_equal(canon, one_canon)) << "k = " << k;
  }
}

TEST(AkIndex, TraceRecordsMustFitABlock) {
  Workspace ws(testfx::tiny_config());  // 4 KiB blocks
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);
  LabelTable labels;
  EXPECT_THROW(xml::ak_index(ws, doc, 2000, labels), FormatError);
}

TEST(FbIndex, NestedFixture) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);
  LabelTable labels;
  auto run = xml::fb_index(ws, doc, labels);

  EXPECT_EQ(run.stats.block_count, 8u);
  EXPECT_EQ(run.forward_block_count, 5u);

  auto canon = canonicalize_partition(run.partition, ws);
  auto want = testfx::make_partition(ws, testfx::nested_fb_expected());
  EXPECT_TRUE(sequences_equal(canon, want));
}

TEST(FbIndex, HalvesMatchTheirOracles) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);

  const DocOracle d = DocOracle::read(ws, doc);
  const SmallGraph fwd = d.forward_postorder_graph();
  const SmallGraph rev = d.reversed_graph();

  LabelTable labels;
  auto run = xml::fb_index(ws, doc, labels);

  const auto fwd_got =
      d.to_postorder(oracle::assignment_from_partition(run.forward, rev));
  EXPECT_TRUE(oracle::same_partition(fwd_got, oracle::bisimulation(fwd)))
      << "forward half";

  const auto both_got =
      d.to_postorder(oracle::assignment_from_partition(run.partition, rev));
  EXPECT_TRUE(oracle::same_partition(both_got, oracle::fb(fwd)))
      << "combined index";
}

TEST(ReversedTree, MatchesTheHandBuiltFixture) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);
  LabelTable labels;
  auto t = xml::reversed_tree_files(ws, doc, labels);

  const auto f = testfx::nested_reversed_tree();
  auto want_nodes = testfx::make_nodes(ws, f.nodes);
  auto want_edges = testfx::make_edges(ws, f.edges);
  EXPECT_TRUE(sequences_equal(t.nodes, want_nodes));
  EXPECT_TRUE(sequences_equal(t.edges, want_edges));

  const auto rep = validate_graph(t.nodes, t.edges);
  EXPECT_TRUE(rep.ok());
  EXPECT_TRUE(rep.dense_ids);
}

TEST(ReversedTree, GeneralPipelineReproducesTheOneIndex) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("doc");
  testfx::write_nested_document(doc);

  LabelTable l1, l2;
  auto t = xml::reversed_tree_files(ws, doc, l1);
  auto general = partition_dag(t.nodes, t.edges, ws, Variant::rank_label_hash);
  auto dedicated = xml::one_index(ws, doc, l2);

  EXPECT_EQ(general.stats.block_count, dedicated.stats.block_count);
  auto cg = canonicalize_partition(general.partition, ws);
  auto cd = canonicalize_partition(dedicated.partition, ws);
  EXPECT_TRUE(sequences_equal(cg, cd));
}

TEST(DocumentWriter, RendersTreeFilesExactly) {
  Workspace ws(testfx::tiny_config());
  LabelTable labels;
  ASSERT_EQ(labels.intern("a"), 1u);
  ASSERT_EQ(labels.intern("b"), 2u);

  auto nodes = testfx::make_nodes(ws, {{0, 1}, {1, 2}, {2, 1}, {3, 2}, {4, 1}});
  auto edges = testfx::make_edges(ws, {{1, 0}, {4, 1}, {3, 2}, {4, 3}});
  const fs::path out = ws.temp_path("out_doc");
  xml::document_from_tree_files(ws, nodes, edges, out, &labels);

  EXPECT_EQ(read_file(out),
            "<?xml version=\"1.0\"?>\n"
            "<a><b><a/></b><b><a/></b></a>\n");

  // without a label table, tags fall back to coded names
  const fs::path coded = ws.temp_path("coded_doc");
  xml::document_from_tree_files(ws, nodes, edges, coded);
  EXPECT_EQ(read_file(coded),
            "<?xml version=\"1.0\"?>\n"
            "<n1><n2><n1/></n2><n2><n1/></n2></n1>\n");
}

TEST(DocumentWriter, RejectsNonTrees) {
  Workspace ws(testfx::tiny_config());
  {
    auto nodes = testfx::make_nodes(ws, {});
    auto edges = testfx::make_edges(ws, {});
    EXPECT_THROW(xml::document_from_tree_files(ws, nodes, edges,
                                               ws.temp_path("d1")),
                 ValidationError);
  }
  {
    // two components: edge count is off by one
    auto nodes = testfx::make_nodes(ws, {{0, 1}, {1, 1}, {2, 1}, {3, 1}});
    auto edges = testfx::make_edges(ws, {{1, 0}, {3, 2}});
    EXPECT_THROW(xml::document_from_tree_files(ws, nodes, edges,
                                               ws.temp_path("d2")),
                 ValidationError);
  }
  {
    // node 0 with two parents
    auto nodes = testfx::make_nodes(ws, {{0, 1}, {1, 1}, {2, 1}});
    auto edges = testfx::make_edges(ws, {{1, 0}, {2, 0}});
    EXPECT_THROW(xml::document_from_tree_files(ws, nodes, edges,
                                               ws.temp_path("d3")),
                 ValidationError);
  }
  {
    // edge endpoint that is not a node
    auto nodes = testfx::make_nodes(ws, {{0, 1}, {1, 1}});
    auto edges = testfx::make_edges(ws, {{5, 0}});
    EXPECT_THROW(xml::document_from_tree_files(ws, nodes, edges,
                                               ws.temp_path("d4")),
                 ValidationError);
  }
}

TEST(DocumentWriter, RoundTripsThroughTheScanner) {
  Workspace ws(testfx::tiny_config());
  LabelTable labels;
  ASSERT_EQ(labels.intern("a"), 1u);
  ASSERT_EQ(labels.intern("b"), 2u);

  auto nodes = testfx::make_nodes(ws, {{0, 1}, {1, 2}, {2, 1}, {3, 2}, {4, 1}});
  auto edges = testfx::make_edges(ws, {{1, 0}, {4, 1}, {3, 2}, {4, 3}});
  const fs::path out = ws.temp_path("rt_doc");
  xml::document_from_tree_files(ws, nodes, edges, out, &labels);

  // scanning the document back gives the same tree under preorder ids:
  // root 4 -> 0, 1 -> 1, 0 -> 2, 3 -> 3, 2 -> 4
  LabelTable scan_labels;
  auto t = xml::reversed_tree_files(ws, out, scan_labels);
  auto want_nodes =
      testfx::make_nodes(ws, {{0, 1}, {1, 2}, {2, 1}, {3, 2}, {4, 1}});
  auto want_edges = testfx::make_edges(ws, {{1, 0}, {3, 0}, {2, 1}, {4, 3}});
  EXPECT_TRUE(sequences_equal(t.nodes, want_nodes));
  EXPECT_TRUE(sequences_equal(t.edges, want_edges));
}

TEST(RandomDocuments, AllIndexesMatchTheOracles) {
  Workspace ws(testfx::tiny_config());
  SplitMix64 seeds(0xd0c5u);
  for (int round = 0; round < 50; ++round) {
    const std::uint64_t n = 1 + seeds.below(60);
    const std::uint64_t seed = seeds.next();
    const fs::path doc = ws.temp_path("rand_doc");
    gen::write_random_document(doc, n, seed, 3);

    const DocOracle d = DocOracle::read(ws, doc);
    ASSERT_EQ(d.labels.size(), n);
    const SmallGraph rev = d.reversed_graph();
    const SmallGraph fwd = d.forward_postorder_graph();

    {
      LabelTable labels;
      auto run = xml::one_index(ws, doc, labels);
      const auto got = oracle::assignment_from_partition(run.partition, rev);
      EXPECT_TRUE(oracle::same_partition(got, oracle::bisimulation(rev)))
          << "1-index, round " << round << " n " << n << " seed " << seed;
      EXPECT_EQ(run.stats.block_count,
                oracle::block_count(oracle::bisimulation(rev)));
    }
    for (std::uint32_t k = 0; k <= 4; ++k) {
      LabelTable labels;
      auto run = xml::ak_index(ws, doc, k, labels);
      const auto got =
          d.to_postorder(oracle::assignment_from_partition(run.partition, rev));
      EXPECT_TRUE(
          oracle::same_partition(got, oracle::backward_bounded(fwd, k)))
          << "bounded index k=" << k << ", round " << round << " seed " << seed;
    }
    {
      LabelTable labels;
      auto run = xml::fb_index(ws, doc, labels);
      const auto got =
          d.to_postorder(oracle::assignment_from_partition(run.partition, rev));
      EXPECT_TRUE(oracle::same_partition(got, oracle::fb(fwd)))
          << "two-way index, round " << round << " seed " << seed;
      const auto fwd_got =
          d.to_postorder(oracle::assignment_from_partition(run.forward, rev));
      EXPECT_TRUE(oracle::same_partition(fwd_got, oracle::bisimulation(fwd)))
          << "forward half, round " << round << " seed " << seed;
    }
    if (::testing::Test::HasFailure()) break;
    std::error_code ec;
    fs::remove(doc, ec);
  }
}

TEST(SingleElement, AllIndexesDegenerate) {
  Workspace ws(testfx::tiny_config());
  const fs::path doc = ws.temp_path("single");
  write_file(doc, "<only/>\n");

  LabelTable l1;
  auto one = xml::one_index(ws, doc, l1);
  EXPECT_EQ(one.stats.block_count, 1u);
  const auto recs = one.partition.read_all();
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].orig_id, 0u);

  LabelTable l2;
  auto ak = xml::ak_index(ws, doc, 2, l2);
  EXPECT_EQ(ak.stats.block_count, 1u);

  LabelTable l3;
  auto both = xml::fb_index(ws, doc, l3);
  EXPECT_EQ(both.stats.block_count, 1u);
  EXPECT_EQ(both.forward_block_count, 1u);
}
