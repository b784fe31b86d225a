#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "embisim/bisim.hpp"
#include "embisim/block_array.hpp"
#include "embisim/block_io.hpp"
#include "embisim/graph_files.hpp"
#include "embisim/machine.hpp"
#include "embisim/priority_queue.hpp"
#include "embisim/records.hpp"
#include "embisim/sequence.hpp"
#include "embisim/sort.hpp"

namespace embisim::xml {

// =============================================================================
// Streaming element scanner. Only element structure is observed: attributes,
// text, comments, CDATA, processing instructions and the document type
// declaration are skipped. Elements are numbered in document order from 0.
// Malformed nesting or trailing content fails with a byte offset.
// =============================================================================

struct TagEvent {
  bool start = false;
  std::uint32_t label = 0;  // interned element name
  std::uint64_t node = 0;   // document-order id of the element
  std::uint32_t depth = 0;  // root = 0
};

class XmlScanner {
 public:
  XmlScanner(Workspace& ws, const std::filesystem::path& doc,
             LabelTable& labels)
      : io_(BlockIo::open_raw(ws, doc)),
        buffer_(ws.config().block_size_bytes),
        labels_(&labels) {}

  /// Next tag event, or nothing at a well-formed end of document.
  std::optional<TagEvent> next() {
    if (pending_end_) {
      auto ev = *pending_end_;
      pending_end_.reset();
      return ev;
    }
    while (true) {
      int c = get();
      if (c < 0) {
        if (!open_.empty())
          fail("unexpected end of document inside <" +
               labels_->name(open_.back().label) + ">");
        if (!root_done_) fail("document has no root element");
        return std::nullopt;
      }
      if (c != '<') {
        if (open_.empty() && !is_space(c))
          fail("content outside the root element");
        continue;  // character data
      }
      c = get();
      if (c < 0) fail("unterminated markup");
      if (c == '!') {
        skip_declaration();
        continue;
      }
      if (c == '?') {
        skip_until("?>");
        continue;
      }
      if (c == '/') return close_tag();
      return open_tag(c);
    }
  }

  std::uint64_t nodes_seen() const { return next_node_; }

 private:
  struct Open {
    std::uint32_t label;
    std::uint64_t node;
  };

  static bool is_space(int c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  }
  static bool is_name_end(int c) {
    return is_space(c) || c == '>' || c == '/' || c == '<' || c == '=';
  }

  TagEvent open_tag(int first) {
    if (root_done_ && open_.empty()) fail("more than one root element");
    std::string name = read_name(first);
    // attributes
    while (true) {
      int c = get();
      while (is_space(c)) c = get();
      if (c < 0) fail("unterminated start tag <" + name + ">");
      if (c == '>') break;
      if (c == '/') {
        if (get() != '>') fail("malformed empty-element tag <" + name + "/>");
        return emit_open(name, true);
      }
      // attribute: name [= "value"]
      while (!is_name_end(c)) {
        c = get();
        if (c < 0) fail("unterminated start tag <" + name + ">");
      }
      while (is_space(c)) c = get();
      if (c == '=') {
        c = get();
        while (is_space(c)) c = get();
        if (c != '"' && c != '\'')
          fail("attribute value must be quoted in <" + name + ">");
        const int quote = c;
        do {
          c = get();
          if (c < 0) fail("unterminated attribute value in <" + name + ">");
        } while (c != quote);
      } else if (c == '>') {
        break;
      } else if (c == '/') {
        if (get() != '>') fail("malformed empty-element tag <" + name + "/>");
        return emit_open(name, true);
      }
    }
    return emit_open(name, false);
  }

  TagEvent emit_open(const std::string& name, bool self_closing) {
    const std::uint32_t label = labels_->intern(name);
    const std::uint32_t depth = static_cast<std::uint32_t>(open_.size());
    const std::uint64_t node = next_node_++;
    TagEvent ev{true, label, node, depth};
    if (self_closing) {
      pending_end_ = TagEvent{false, label, node, depth};
      if (open_.empty()) root_done_ = true;
    } else {
      open_.push_back(Open{label, node});
    }
    return ev;
  }

  TagEvent close_tag() {
    int c = get();
    if (c < 0) fail("unterminated end tag");
    std::string name = read_name(c);
    c = get();
    while (is_space(c)) c = get();
    if (c != '>') fail("malformed end tag </" + name + ">");
    if (open_.empty()) fail("end tag </" + name + "> without an open element");
    const Open top = open_.back();
    if (labels_->intern(name) != top.label)
      fail("end tag </" + name + "> does not match <" +
           labels_->name(top.label) + ">");
    open_.pop_back();
    if (open_.empty()) root_done_ = true;
    return TagEvent{false, top.label,
                    top.node, static_cast<std::uint32_t>(open_.size())};
  }

  std::string read_name(int first) {
    if (is_name_end(first) || first < 0) fail("missing tag name");
    std::string name(1, static_cast<char>(first));
    while (true) {
      const int c = peek_byte();
      if (c < 0 || is_name_end(c)) break;
      name.push_back(static_cast<char>(get()));
    }
    return name;
  }

  void skip_declaration() {
    // <!-- comment -->, <![CDATA[ ... ]]>, or <!DOCTYPE ... [ ... ]>
    int c = get();
    if (c == '-') {
      if (get() != '-') fail("malformed comment");
      skip_until("-->");
      return;
    }
    if (c == '[') {
      for (const char expect : {'C', 'D', 'A', 'T', 'A', '['})
        if (get() != expect) fail("malformed CDATA section");
      skip_until("]]>");
      return;
    }
    int bracket_depth = 0;
    while (true) {
      if (c < 0) fail("unterminated <! declaration");
      if (c == '[') ++bracket_depth;
      if (c == ']') --bracket_depth;
      if (c == '>' && bracket_depth <= 0) return;
      c = get();
    }
  }

  void skip_until(const char* pattern) {
    const std::size_t len = std::strlen(pattern);
    std::size_t matched = 0;
    while (matched < len) {
      const int c = get();
      if (c < 0) fail(std::string("unterminated section (expected ") +
                      pattern + ")");
      if (c == pattern[matched]) {
        ++matched;
      } else {
        matched = c == pattern[0] ? 1 : 0;
      }
    }
  }

  int peek_byte() {
    if (pos_ >= filled_) {
      filled_ = io_.read_block(next_block_++, buffer_.data());
      pos_ = 0;
      if (filled_ == 0) return -1;
    }
    return static_cast<int>(static_cast<unsigned char>(
        reinterpret_cast<const char*>(buffer_.data())[pos_]));
  }

  int get() {
    const int c = peek_byte();
    if (c >= 0) {
      ++pos_;
      ++offset_;
    }
    return c;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw FormatError(io_.path().string() + ": " + what + " (near byte " +
                      std::to_string(offset_) + ")");
  }

  BlockIo io_;
  std::vector<std::byte> buffer_;
  std::size_t pos_ = 0;
  std::size_t filled_ = 0;
  std::uint64_t next_block_ = 0;
  std::uint64_t offset_ = 0;
  LabelTable* labels_;
  std::vector<Open> open_;
  std::uint64_t next_node_ = 0;
  bool root_done_ = false;
  std::optional<TagEvent> pending_end_;
};

// =============================================================================
// Composite numbering scan: each element gets (rank = depth, id_on_level =
// arrival index among elements of that depth). The per-depth arrival counters
// live in a block-backed array; since consecutive elements sit at adjacent
// depths, its two-block cache keeps the whole scan sequential.
// =============================================================================

struct XmlNodeByComposite {
  bool operator()(const XmlNodeRecord& a, const XmlNodeRecord& b) const {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.id_on_level < b.id_on_level;
  }
};

struct XmlEdgeByParent {
  bool operator()(const XmlEdgeRecord& a, const XmlEdgeRecord& b) const {
    if (a.parent_rank != b.parent_rank) return a.parent_rank < b.parent_rank;
    if (a.parent_id_on_level != b.parent_id_on_level)
      return a.parent_id_on_level < b.parent_id_on_level;
    return a.child_id_on_level < b.child_id_on_level;
  }
};

struct DocumentGraph {
  ExternalSequence<XmlNodeRecord> nodes;  // document order
  ExternalSequence<XmlEdgeRecord> edges;  // document order of the child
  std::uint64_t node_count = 0;
  std::uint32_t max_rank = 0;
};

inline DocumentGraph scan_document(Workspace& ws,
                                   const std::filesystem::path& doc,
                                   LabelTable& labels) {
  DocumentGraph g;
  g.nodes = ExternalSequence<XmlNodeRecord>::create_temp(ws);
  g.edges = ExternalSequence<XmlEdgeRecord>::create_temp(ws);
  auto wn = g.nodes.writer();
  auto we = g.edges.writer();

  XmlScanner scan(ws, doc, labels);
  BlockCachedArray arrivals(ws, "levels");
  std::vector<std::uint32_t> open_arrival;

  while (auto ev = scan.next()) {
    if (!ev->start) {
      open_arrival.pop_back();
      continue;
    }
    const std::uint64_t arrival = arrivals.fetch_add(ev->depth, 1);
    if (arrival > 0xffffffffull)
      throw FormatError("too many elements at depth " +
                        std::to_string(ev->depth));
    const std::uint32_t id_on_level = static_cast<std::uint32_t>(arrival);
    wn.put(XmlNodeRecord{ev->node, ev->label, ev->depth, id_on_level, 0});
    if (ev->depth > 0)
      we.put(XmlEdgeRecord{ev->depth - 1, open_arrival.back(), id_on_level, 0});
    open_arrival.push_back(id_on_level);
    g.max_rank = std::max(g.max_rank, ev->depth);
    ++g.node_count;
  }
  wn.finish();
  we.finish();
  return g;
}

// =============================================================================
// 1-index: upward bisimulation of the document tree. After ordering nodes by
// (rank, id_on_level), one downward sweep assigns block ids per depth: nodes
// at a depth are grouped by (label, block of parent), and each group's id is
// sent to its children through the queue. The root receives the sentinel
// parent block 0.
// =============================================================================

inline std::uint64_t composite_key(std::uint32_t rank, std::uint32_t id) {
  return (static_cast<std::uint64_t>(rank) << 32) | id;
}

struct BackwardPassResult {
  ExternalSequence<PartitionRecord> partition;  // sorted by document id
  std::uint64_t block_count = 0;
};

inline BackwardPassResult backward_pass(DocumentGraph g, Workspace& ws) {
  const std::uint64_t share = std::max<std::uint64_t>(
      ws.working_budget() / 2, ws.config().block_size_bytes);

  auto nodes = external_sort(std::move(g.nodes), XmlNodeByComposite(), ws,
                             ws.working_budget(), "xml1");
  auto edges = external_sort(std::move(g.edges), XmlEdgeByParent(), ws,
                             ws.working_budget(), "xml1");

  auto assigned = ExternalSequence<PartitionRecord>::create_temp(ws);
  std::uint64_t last_block = 0;
  {
    ExternalPriorityQueue<std::uint64_t, IdMessage> queue(
        ws, share, std::less<std::uint64_t>(), "xmlq");
    SpillableBuffer<XmlGroupRecord, XmlGroupOrder> buffer(ws, share,
                                                          XmlGroupOrder(),
                                                          "xmlgrp");
    auto out = assigned.writer();

    std::uint32_t flush_rank = 0;
    auto flush = [&](std::uint32_t rank) {
      bool have = false;
      std::uint64_t label = 0, parent = 0, block = 0;
      buffer.drain([&](const XmlGroupRecord& r) {
        if (!have || r.label != label || r.parent_bisim != parent) {
          block = ++last_block;
          label = r.label;
          parent = r.parent_bisim;
          have = true;
        }
        if (r.kind == 0) {
          out.put(PartitionRecord{r.orig_id, block});
        } else {
          queue.push(composite_key(rank + 1, r.child_id_on_level),
                     IdMessage{block, 0});
        }
      });
    };

    queue.push(composite_key(0, 0), IdMessage{0, 0});  // root sentinel

    auto nr = nodes.reader();
    auto er = edges.reader();
    while (const XmlNodeRecord* n = nr.peek()) {
      if (n->rank != flush_rank) {
        flush(flush_rank);
        flush_rank = n->rank;
      }
      const std::uint64_t key = composite_key(n->rank, n->id_on_level);
      if (queue.empty() || queue.min_key() != key)
        throw InvariantError("document sweep lost a parent message");
      const std::uint64_t parent_block = queue.pop().payload.id;

      buffer.push(XmlGroupRecord{n->label, parent_block, n->orig_id, 0, 0});
      while (const XmlEdgeRecord* e = er.peek()) {
        if (e->parent_rank != n->rank ||
            e->parent_id_on_level != n->id_on_level)
          break;
        buffer.push(XmlGroupRecord{n->label, parent_block, n->orig_id, 1,
                                   e->child_id_on_level});
        er.advance();
      }
      nr.advance();
    }
    flush(flush_rank);
    if (er.peek() || !queue.empty())
      throw InvariantError("document sweep finished with pending records");
    out.finish();
  }
  nodes.remove();
  edges.remove();

  BackwardPassResult result;
  result.block_count = last_block;
  result.partition = external_sort(std::move(assigned), PartitionByOrigId(),
                                   ws, ws.working_budget(), "xml1");
  return result;
}

struct XmlIndexRun {
  ExternalSequence<PartitionRecord> partition;  // document ids, sorted
  RunStats stats;
};

inline XmlIndexRun one_index(Workspace& ws, const std::filesystem::path& doc,
                             LabelTable& labels) {
  XmlIndexRun run;
  DocumentGraph g;
  ws.run_phase(run.stats, "scan", [&]() { g = scan_document(ws, doc, labels); });
  BackwardPassResult r;
  ws.run_phase(run.stats, "assign",
               [&]() { r = backward_pass(std::move(g), ws); });
  run.stats.block_count = r.block_count;
  run.partition = std::move(r.partition);
  return run;
}

// =============================================================================
// A(k)-index: nodes grouped by their upward label string of length k+1 (the
// element's label, then its nearest k ancestors' labels, padded with the
// reserved label 0 above the root). One scan emits a fixed-width trace record
// per element; a sort and a boundary scan assign the ids.
// =============================================================================

inline XmlIndexRun ak_index(Workspace& ws, const std::filesystem::path& doc,
                            std::uint32_t k, LabelTable& labels) {
  XmlIndexRun run;

  const std::size_t payload = 8 + 4 * (static_cast<std::size_t>(k) + 1);
  const std::size_t width = std::bit_ceil(payload);
  if (width > ws.config().block_size_bytes)
    throw FormatError("trace records for k=" + std::to_string(k) +
                      " do not fit a block");

  RawSequence traces;
  ws.run_phase(run.stats, "scan", [&]() {
    traces = RawSequence::create_temp(ws, "traces", "EXBK1", width);
    auto w = traces.writer();
    XmlScanner scan(ws, doc, labels);
    // the label stack is seeded with k padding labels so every element,
    // however shallow, has k ancestors to read
    std::vector<std::uint32_t> stack(k, 0);
    std::vector<std::byte> record(width);
    while (auto ev = scan.next()) {
      if (!ev->start) {
        stack.pop_back();
        continue;
      }
      stack.push_back(ev->label);
      std::memset(record.data(), 0, width);
      std::memcpy(record.data(), &ev->node, 8);
      for (std::uint32_t i = 0; i <= k; ++i) {
        const std::uint32_t lbl = stack[stack.size() - 1 - i];
        std::memcpy(record.data() + 8 + 4 * i, &lbl, 4);
      }
      w.put(record.data());
    }
    w.finish();
  });

  const std::uint32_t entries = k + 1;
  auto trace_less = [entries](const std::byte* a, const std::byte* b) {
    std::uint32_t la, lb;
    for (std::uint32_t i = 0; i < entries; ++i) {
      std::memcpy(&la, a + 8 + 4 * i, 4);
      std::memcpy(&lb, b + 8 + 4 * i, 4);
      if (la != lb) return la < lb;
    }
    std::uint64_t oa, ob;
    std::memcpy(&oa, a, 8);
    std::memcpy(&ob, b, 8);
    return oa < ob;
  };

  RawSequence sorted;
  ws.run_phase(run.stats, "order", [&]() {
    sorted = external_sort_raw(std::move(traces), trace_less, ws,
                               ws.working_budget(), "ak");
  });

  ws.run_phase(run.stats, "assign", [&]() {
    auto assigned = ExternalSequence<PartitionRecord>::create_temp(ws);
    std::uint64_t block = 0;
    {
      auto w = assigned.writer();
      auto r = sorted.reader();
      std::vector<std::byte> prev(width);
      bool have = false;
      while (const std::byte* rec = r.peek()) {
        if (!have ||
            std::memcmp(rec + 8, prev.data() + 8, 4 * entries) != 0) {
          ++block;
          std::memcpy(prev.data(), rec, width);
          have = true;
        }
        std::uint64_t orig;
        std::memcpy(&orig, rec, 8);
        w.put(PartitionRecord{orig, block});
        r.advance();
      }
      w.finish();
    }
    sorted.remove();
    run.stats.block_count = block;
    run.partition = external_sort(std::move(assigned), PartitionByOrigId(),
                                  ws, ws.working_budget(), "ak");
  });
  return run;
}

// =============================================================================
// Combined downward + upward index on a document: the forward (subtree)
// bisimulation partition refined by the upward 1-index partition. The
// forward half runs the general partitioner on the tree numbered in
// postorder (children before parents, as it requires).
// =============================================================================

struct ForwardTree {
  ExternalSequence<NodeRecord> nodes;   // postorder ids
  ExternalSequence<EdgeRecord> edges;   // sorted by child
  ExternalSequence<IdMapRecord> to_doc; // postorder id -> document id
};

inline ForwardTree scan_forward_tree(Workspace& ws,
                                     const std::filesystem::path& doc,
                                     LabelTable& labels) {
  ForwardTree t;
  t.nodes = ExternalSequence<NodeRecord>::create_temp(ws);
  t.to_doc = ExternalSequence<IdMapRecord>::create_temp(ws);
  auto edges = ExternalSequence<EdgeRecord>::create_temp(ws);
  {
    auto wn = t.nodes.writer();
    auto wm = t.to_doc.writer();
    auto we = edges.writer();

    struct OpenNode {
      std::uint32_t label;
      std::uint64_t doc_id;
      std::vector<std::uint64_t> children;  // postorder ids
    };
    std::vector<OpenNode> open;
    std::uint64_t next_post = 0;

    XmlScanner scan(ws, doc, labels);
    while (auto ev = scan.next()) {
      if (ev->start) {
        open.push_back(OpenNode{ev->label, ev->node, {}});
        continue;
      }
      OpenNode done = std::move(open.back());
      open.pop_back();
      const std::uint64_t post = next_post++;
      wn.put(NodeRecord{post, done.label, 0});
      wm.put(IdMapRecord{post, done.doc_id});
      for (std::uint64_t c : done.children)
        we.put(EdgeRecord{post, c});
      if (!open.empty()) open.back().children.push_back(post);
    }
    wn.finish();
    wm.finish();
    we.finish();
  }
  t.edges =
      external_sort(std::move(edges), EdgeByChild(), ws, ws.working_budget(),
                    "fwd");
  return t;
}

struct FbIndexRun {
  ExternalSequence<PartitionRecord> partition;  // combined, document ids
  ExternalSequence<PartitionRecord> forward;    // forward half, document ids
  std::uint64_t forward_block_count = 0;
  RunStats stats;
};

inline FbIndexRun fb_index(Workspace& ws, const std::filesystem::path& doc,
                           LabelTable& labels,
                           Variant variant = Variant::rank_label_hash) {
  FbIndexRun run;
  const std::uint64_t budget = ws.working_budget();

  ForwardTree tree;
  ws.run_phase(run.stats, "forward-scan",
               [&]() { tree = scan_forward_tree(ws, doc, labels); });

  PartitionRun fwd = partition_dag(tree.nodes, tree.edges, ws, variant);
  for (auto& p : fwd.stats.phases) {
    p.name = "forward-" + p.name;
    run.stats.phases.push_back(std::move(p));
  }
  run.forward_block_count = fwd.stats.block_count;

  ws.run_phase(run.stats, "forward-rename", [&]() {
    // forward partition is on postorder ids; move it to document ids
    auto renamed = ExternalSequence<PartitionRecord>::create_temp(ws);
    {
      auto rp = fwd.partition.reader();
      auto rm = tree.to_doc.reader();
      auto w = renamed.writer();
      while (const PartitionRecord* p = rp.peek()) {
        const IdMapRecord* m = rm.peek();
        if (!m || m->orig_id != p->orig_id)
          throw InvariantError("postorder map out of step");
        w.put(PartitionRecord{m->new_id, p->bisim_id});
        rp.advance();
        rm.advance();
      }
      w.finish();
    }
    fwd.partition.remove();
    tree.nodes.remove();
    tree.edges.remove();
    tree.to_doc.remove();
    run.forward = external_sort(std::move(renamed), PartitionByOrigId(), ws,
                                budget, "fb");
  });

  DocumentGraph g;
  ws.run_phase(run.stats, "backward-scan",
               [&]() { g = scan_document(ws, doc, labels); });
  BackwardPassResult backward;
  ws.run_phase(run.stats, "backward-assign",
               [&]() { backward = backward_pass(std::move(g), ws); });

  ws.run_phase(run.stats, "combine", [&]() {
    // one block per distinct (forward block, backward block) pair
    auto pairs = ExternalSequence<XmlGroupRecord>::create_temp(ws);
    {
      auto rf = run.forward.reader();
      auto rb = backward.partition.reader();
      auto w = pairs.writer();
      while (const PartitionRecord* f = rf.peek()) {
        const PartitionRecord* b = rb.peek();
        if (!b || b->orig_id != f->orig_id)
          throw InvariantError("index halves cover different elements");
        w.put(XmlGroupRecord{f->bisim_id, b->bisim_id, f->orig_id, 0, 0});
        rf.advance();
        rb.advance();
      }
      if (rb.peek())
        throw InvariantError("index halves cover different elements");
      w.finish();
    }
    backward.partition.remove();

    auto sorted = external_sort(std::move(pairs), XmlGroupOrder(), ws, budget,
                                "fb");
    auto assigned = ExternalSequence<PartitionRecord>::create_temp(ws);
    {
      auto r = sorted.reader();
      auto w = assigned.writer();
      bool have = false;
      std::uint64_t f = 0, b = 0, block = 0;
      while (const XmlGroupRecord* rec = r.peek()) {
        if (!have || rec->label != f || rec->parent_bisim != b) {
          ++block;
          f = rec->label;
          b = rec->parent_bisim;
          have = true;
        }
        w.put(PartitionRecord{rec->orig_id, block});
        r.advance();
      }
      w.finish();
      run.stats.block_count = block;
    }
    sorted.remove();
    run.partition = external_sort(std::move(assigned), PartitionByOrigId(),
                                  ws, budget, "fb");
  });
  return run;
}

// =============================================================================
// Conversions between documents and tree-shaped graph files
// =============================================================================

/// The document's containment edges reversed: node ids are document order
/// (so a reversed edge's child, the document parent, has the smaller id) and
/// the result is a valid input for the general partitioner. Bisimulation on
/// this graph equals the document's 1-index.
struct ReversedTree {
  ExternalSequence<NodeRecord> nodes;
  ExternalSequence<EdgeRecord> edges;
};

inline ReversedTree reversed_tree_files(Workspace& ws,
                                        const std::filesystem::path& doc,
                                        LabelTable& labels) {
  ReversedTree t;
  t.nodes = ExternalSequence<NodeRecord>::create_temp(ws);
  auto edges = ExternalSequence<EdgeRecord>::create_temp(ws);
  {
    auto wn = t.nodes.writer();
    auto we = edges.writer();
    std::vector<std::uint64_t> open;
    XmlScanner scan(ws, doc, labels);
    while (auto ev = scan.next()) {
      if (!ev->start) {
        open.pop_back();
        continue;
      }
      wn.put(NodeRecord{ev->node, ev->label, 0});
      if (!open.empty()) we.put(EdgeRecord{ev->node, open.back()});
      open.push_back(ev->node);
    }
    wn.finish();
    we.finish();
  }
  t.edges = external_sort(std::move(edges), EdgeByChild(), ws,
                          ws.working_budget(), "rev");
  return t;
}

/// Writes a document whose element tree mirrors a tree-shaped graph: one
/// root, every other node exactly one parent. Children appear in ascending
/// id order. Labels are rendered through `labels` when given, else as "n<code>".
/// The tree is held in memory, so this is for preparing inputs, not part of
/// the streaming pipelines.
inline void document_from_tree_files(Workspace& ws,
                                     ExternalSequence<NodeRecord>& nodes,
                                     ExternalSequence<EdgeRecord>& edges,
                                     const std::filesystem::path& out,
                                     const LabelTable* labels = nullptr) {
  std::vector<std::uint64_t> ids;
  std::vector<std::uint32_t> label_codes;
  {
    auto r = nodes.reader();
    while (const NodeRecord* n = r.peek()) {
      if (!ids.empty() && n->id <= ids.back())
        throw ValidationError("node ids must be strictly increasing");
      ids.push_back(n->id);
      label_codes.push_back(n->label);
      r.advance();
    }
  }
  if (ids.empty()) throw ValidationError("empty tree has no document form");

  auto index_of = [&ids](std::uint64_t id) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id)
      throw ValidationError("edge endpoint " + std::to_string(id) +
                            " is not a node");
    return static_cast<std::size_t>(it - ids.begin());
  };

  std::vector<std::vector<std::uint32_t>> children(ids.size());
  std::vector<bool> has_parent(ids.size(), false);
  std::uint64_t edge_count = 0;
  {
    auto r = edges.reader();
    while (const EdgeRecord* e = r.peek()) {
      if (e->child >= e->parent)
        throw ValidationError("edge child id must be smaller than parent id");
      const std::size_t p = index_of(e->parent);
      const std::size_t c = index_of(e->child);
      if (has_parent[c])
        throw ValidationError("node " + std::to_string(e->child) +
                              " has two parents; not a tree");
      has_parent[c] = true;
      children[p].push_back(static_cast<std::uint32_t>(c));
      ++edge_count;
      r.advance();
    }
  }
  if (edge_count + 1 != ids.size())
    throw ValidationError("a tree with " + std::to_string(ids.size()) +
                          " nodes needs exactly " +
                          std::to_string(ids.size() - 1) + " edges");
  std::size_t root = ids.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!has_parent[i]) {
      if (root != ids.size())
        throw ValidationError("more than one root; not a tree");
      root = i;
    }
  }
  if (root == ids.size()) throw ValidationError("no root; not a tree");
  for (auto& c : children) std::sort(c.begin(), c.end());

  std::FILE* f = std::fopen(out.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + out.string());
  std::fputs("<?xml version=\"1.0\"?>\n", f);

  auto tag_name = [&](std::size_t i) {
    return labels ? labels->name(label_codes[i])
                  : "n" + std::to_string(label_codes[i]);
  };

  // iterative DFS; children in ascending id order
  struct Frame {
    std::size_t node;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{root, 0}};
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_child == 0) {
      if (children[top.node].empty()) {
        std::fprintf(f, "<%s/>", tag_name(top.node).c_str());
        stack.pop_back();
        continue;
      }
      std::fprintf(f, "<%s>", tag_name(top.node).c_str());
    }
    if (top.next_child < children[top.node].size()) {
      const std::size_t c = children[top.node][top.next_child++];
      stack.push_back(Frame{c, 0});
    } else {
      std::fprintf(f, "</%s>", tag_name(top.node).c_str());
      stack.pop_back();
    }
  }
  std::fputc('\n', f);
  std::fclose(f);
  (void)ws;
}

}  // namespace embisim::xml
