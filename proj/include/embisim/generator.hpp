#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "embisim/common.hpp"
#include "embisim/graph_files.hpp"
#include "embisim/machine.hpp"
#include "embisim/records.hpp"
#include "embisim/sequence.hpp"
#include "embisim/sort.hpp"

namespace embisim::gen {

// =============================================================================
// Seeded benchmark inputs. Every shape emits node ids 0..n-1 with each edge's
// child id smaller than its parent id, node files ascending and edge files
// sorted by child — ready for validation and partitioning as-is. The same
// spec always reproduces the same bytes.
// =============================================================================

enum class Shape { dag_geometric, dag_pairwise, tree, chain, tc_chain };

inline std::string to_string(Shape s) {
  switch (s) {
    case Shape::dag_geometric: return "dag-geometric";
    case Shape::dag_pairwise: return "dag-pairwise";
    case Shape::tree: return "tree";
    case Shape::chain: return "chain";
    case Shape::tc_chain: return "tc-chain";
  }
  return "?";
}

inline Shape shape_from_string(const std::string& s) {
  if (s == "dag-geometric") return Shape::dag_geometric;
  if (s == "dag-pairwise") return Shape::dag_pairwise;
  if (s == "tree") return Shape::tree;
  if (s == "chain") return Shape::chain;
  if (s == "tc-chain") return Shape::tc_chain;
  throw ValidationError("unknown shape '" + s + "'");
}

struct GenSpec {
  Shape shape = Shape::dag_geometric;
  std::uint64_t n = 0;
  /// dag_geometric: probability the child-drawing coin keeps going (expected
  /// children per node before de-duplication = p/(1-p); 0.78 gives ~3.5).
  /// dag_pairwise: independent probability of each earlier/later pair.
  double p = 0.78;
  /// 0 picks the default max(2, ceil(log2 n)).
  std::uint32_t label_alphabet = 0;
  std::uint64_t seed = 1;

  std::uint32_t resolved_alphabet() const {
    if (label_alphabet > 0) return label_alphabet;
    std::uint32_t bits = 0;
    while ((1ull << bits) < n) ++bits;
    return std::max<std::uint32_t>(2, bits);
  }

  void validate() const {
    if (n < 1) throw ValidationError("node count must be at least 1");
    const bool uses_p =
        shape == Shape::dag_geometric || shape == Shape::dag_pairwise;
    if (uses_p && !(p > 0.0 && p < 1.0))
      throw ValidationError("probability must lie strictly between 0 and 1");
    const bool quadratic =
        shape == Shape::dag_pairwise || shape == Shape::tc_chain;
    if (quadratic && n > 100000)
      throw ValidationError(to_string(shape) +
                            " enumerates node pairs; n is capped at 100000");
  }
};

struct GeneratedGraph {
  ExternalSequence<NodeRecord> nodes;
  ExternalSequence<EdgeRecord> edges;
};

namespace detail {

/// Geometric(p) gap: number of tails-before-heads coin flips, used to jump
/// straight to the next success in a long Bernoulli(p) pair scan.
inline std::uint64_t geometric_gap(SplitMix64& rng, double p) {
  const double u = rng.unit();
  if (u <= 0.0) return 0;
  const double g = std::floor(std::log1p(-u) / std::log1p(-p));
  if (g < 0.0) return 0;
  if (g > 1e18) return static_cast<std::uint64_t>(1e18);
  return static_cast<std::uint64_t>(g);
}

}  // namespace detail

/// Generates the graph at the given paths (node file ascending by id, edge
/// file sorted by child).
inline GeneratedGraph generate(const GenSpec& spec, Workspace& ws,
                               const std::filesystem::path& nodes_path,
                               const std::filesystem::path& edges_path) {
  spec.validate();
  const std::uint64_t n = spec.n;
  const std::uint32_t alphabet = spec.resolved_alphabet();

  SplitMix64 root(spec.seed);
  SplitMix64 label_rng = root.split();
  SplitMix64 shape_rng = root.split();

  GeneratedGraph g;
  g.nodes = ExternalSequence<NodeRecord>::create(ws, nodes_path);
  {
    auto wn = g.nodes.writer();
    for (std::uint64_t v = 0; v < n; ++v) {
      const std::uint32_t label =
          1 + static_cast<std::uint32_t>(label_rng.below(alphabet));
      wn.put(NodeRecord{v, label, 0});
    }
    wn.finish();
  }

  switch (spec.shape) {
    case Shape::dag_geometric: {
      // Children drawn per parent, so edges arrive sorted by parent and a
      // sort by child finishes the job.
      auto staged = ExternalSequence<EdgeRecord>::create_temp(ws);
      {
        auto we = staged.writer();
        std::vector<std::uint64_t> drawn;
        for (std::uint64_t v = 1; v < n; ++v) {
          drawn.clear();
          while (shape_rng.coin(spec.p)) {
            const std::uint64_t child = shape_rng.below(v);
            if (std::find(drawn.begin(), drawn.end(), child) != drawn.end())
              continue;  // repeated draw for this parent: ignored
            drawn.push_back(child);
            we.put(EdgeRecord{v, child});
          }
        }
        we.finish();
      }
      auto sorted = external_sort(std::move(staged), EdgeByChild(), ws,
                                  ws.working_budget(), "gen");
      g.edges = copy_sequence(sorted, ws, edges_path);
      sorted.remove();
      break;
    }
    case Shape::dag_pairwise: {
      // Bernoulli(p) over ordered pairs (child, parent), child outer loop, so
      // the stream is already sorted by child. Geometric gaps jump between
      // successes without flipping every coin.
      g.edges = ExternalSequence<EdgeRecord>::create(ws, edges_path);
      auto we = g.edges.writer();
      const std::uint64_t pairs = n * (n - 1) / 2;
      std::uint64_t at = detail::geometric_gap(shape_rng, spec.p);
      // pair index k enumerates (child c, parent q): all parents of child 0
      // first, then child 1, ...
      std::uint64_t child = 0;
      std::uint64_t offset = 0;  // first pair index of this child's range
      while (at < pairs) {
        while (at - offset >= n - 1 - child) {
          offset += n - 1 - child;
          ++child;
        }
        const std::uint64_t parent = child + 1 + (at - offset);
        we.put(EdgeRecord{parent, child});
        at += 1 + detail::geometric_gap(shape_rng, spec.p);
      }
      we.finish();
      break;
    }
    case Shape::tree: {
      // Every node except the last picks a parent uniformly among the later
      // ids; the last node is the root.
      g.edges = ExternalSequence<EdgeRecord>::create(ws, edges_path);
      auto we = g.edges.writer();
      for (std::uint64_t v = 0; v + 1 < n; ++v) {
        const std::uint64_t parent = v + 1 + shape_rng.below(n - 1 - v);
        we.put(EdgeRecord{parent, v});
      }
      we.finish();
      break;
    }
    case Shape::chain: {
      g.edges = ExternalSequence<EdgeRecord>::create(ws, edges_path);
      auto we = g.edges.writer();
      for (std::uint64_t v = 0; v + 1 < n; ++v)
        we.put(EdgeRecord{v + 1, v});
      we.finish();
      break;
    }
    case Shape::tc_chain: {
      g.edges = ExternalSequence<EdgeRecord>::create(ws, edges_path);
      auto we = g.edges.writer();
      for (std::uint64_t c = 0; c < n; ++c)
        for (std::uint64_t q = c + 1; q < n; ++q)
          we.put(EdgeRecord{q, c});
      we.finish();
      break;
    }
  }
  return g;
}

/// Synthetic element names: 1 -> "a", 26 -> "z", 27 -> "aa", ...
inline std::string alpha_name(std::uint32_t code) {
  std::string s;
  while (code > 0) {
    --code;
    s.push_back(static_cast<char>('a' + code % 26));
    code /= 26;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

/// Writes a random document: a uniform recursive tree (each element's parent
/// drawn uniformly among earlier elements) with labels uniform over the
/// alphabet. The tree is built in memory before being streamed out, so this
/// is a test/benchmark input maker, not an external-memory pipeline.
inline void write_random_document(const std::filesystem::path& path,
                                  std::uint64_t n, std::uint64_t seed,
                                  std::uint32_t label_alphabet = 0) {
  if (n < 1) throw ValidationError("a document needs at least one element");
  GenSpec probe;
  probe.n = n;
  probe.label_alphabet = label_alphabet;
  const std::uint32_t alphabet = probe.resolved_alphabet();

  SplitMix64 root_rng(seed);
  SplitMix64 label_rng = root_rng.split();
  SplitMix64 shape_rng = root_rng.split();

  std::vector<std::uint32_t> labels(n);
  for (auto& l : labels)
    l = 1 + static_cast<std::uint32_t>(label_rng.below(alphabet));

  std::vector<std::vector<std::uint64_t>> children(n);
  for (std::uint64_t v = 1; v < n; ++v)
    children[shape_rng.below(v)].push_back(v);

  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + path.string());
  std::fputs("<?xml version=\"1.0\"?>\n", f);

  struct Frame {
    std::uint64_t node;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{0, 0}};
  while (!stack.empty()) {
    Frame& top = stack.back();
    const std::string tag = alpha_name(labels[top.node]);
    if (top.next_child == 0 && children[top.node].empty()) {
      std::fprintf(f, "<%s/>", tag.c_str());
      stack.pop_back();
      continue;
    }
    if (top.next_child == 0) std::fprintf(f, "<%s>", tag.c_str());
    if (top.next_child < children[top.node].size()) {
      stack.push_back(Frame{children[top.node][top.next_child++], 0});
    } else {
      std::fprintf(f, "</%s>", tag.c_str());
      stack.pop_back();
    }
  }
  std::fputc('\n', f);
  std::fclose(f);
}

}  // namespace embisim::gen
