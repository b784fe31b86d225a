// embisim — external-memory bisimulation partitioning toolkit.
//
// One binary, subcommand style:
//   gen        write a seeded benchmark graph (nodes + edges files)
//   gendoc     write a seeded random XML document
//   validate   check graph files against the input contract
//   partition  run the two-phase bisimulation partitioner
//   xml        build a document index (1index / ak / fb)
//   compare    relate two partitions (equal / refines / incomparable)
//   quotient   build the quotient graph of a partition
//   convert    translate node/edge/partition files between bin and text
//   doc2graph  document -> reversed containment-edge graph files
//   graph2doc  tree-shaped graph files -> document
//   bench      sweep n, memory, or k and emit benchmark CSV rows

#include <unistd.h>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "embisim/bisim.hpp"
#include "embisim/generator.hpp"
#include "embisim/graph_files.hpp"
#include "embisim/machine.hpp"
#include "embisim/oracle.hpp"
#include "embisim/xml.hpp"

namespace fs = std::filesystem;
using namespace embisim;

namespace {

// ---------------------------------------------------------------------------
// shared flag blocks
// ---------------------------------------------------------------------------

struct MachineFlags {
  std::uint64_t memory = 256ull << 20;
  std::uint64_t block = 64u << 10;
  std::string tmp;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--memory", memory, "memory budget in bytes (K/M/G suffixes)")
        ->transform(CLI::AsSizeValue(false))
        ->capture_default_str();
    cmd->add_option("--block-size", block, "block size in bytes (K/M/G suffixes)")
        ->transform(CLI::AsSizeValue(false))
        ->capture_default_str();
    cmd->add_option("--tmp", tmp, "scratch directory (default: system temp)");
  }

  MachineConfig config() const {
    MachineConfig cfg;
    cfg.memory_budget_bytes = memory;
    cfg.block_size_bytes = static_cast<std::size_t>(block);
    if (!tmp.empty()) cfg.temp_directory = tmp;
    return cfg;
  }
};

struct FormatFlag {
  std::string format = "bin";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--format", format, "graph/partition file format")
        ->check(CLI::IsMember({"bin", "text"}))
        ->capture_default_str();
  }
  bool text() const { return format == "text"; }
};

Variant variant_from_string(const std::string& s) {
  if (s == "rank-label") return Variant::rank_label;
  if (s == "rank-label-hash") return Variant::rank_label_hash;
  throw ValidationError("unknown variant '" + s + "'");
}

// ---------------------------------------------------------------------------
// file loading/writing in either format
// ---------------------------------------------------------------------------

ExternalSequence<NodeRecord> load_nodes(Workspace& ws, const fs::path& p,
                                        bool text) {
  return text ? nodes_from_text(ws, p, ws.temp_path("tnodes"))
              : ExternalSequence<NodeRecord>::open(ws, p);
}
ExternalSequence<EdgeRecord> load_edges(Workspace& ws, const fs::path& p,
                                        bool text) {
  return text ? edges_from_text(ws, p, ws.temp_path("tedges"))
              : ExternalSequence<EdgeRecord>::open(ws, p);
}
ExternalSequence<PartitionRecord> load_partition(Workspace& ws,
                                                 const fs::path& p,
                                                 bool text) {
  return text ? partition_from_text(ws, p, ws.temp_path("tpart"))
              : ExternalSequence<PartitionRecord>::open(ws, p);
}

void deliver_partition(ExternalSequence<PartitionRecord>& seq, Workspace& ws,
                       const fs::path& out, bool text) {
  if (text)
    partition_to_text(seq, out);
  else
    copy_sequence(seq, ws, out);
}

// ---------------------------------------------------------------------------
// run reports: one CSV line-set per pipeline run, append-safe
// ---------------------------------------------------------------------------

constexpr const char* kReportHeader =
    "command,phase,reads,writes,bytes_read,bytes_written,seconds,"
    "memory_bytes,block_size_bytes,variant,k,seed,blocks,collisions,"
    "group_spill_bytes";

class ReportWriter {
 public:
  ReportWriter(const std::string& path, std::string command,
               const MachineConfig& cfg, std::string variant, std::string k,
               std::string seed)
      : command_(std::move(command)),
        fixed_("," + std::to_string(cfg.memory_budget_bytes) + "," +
               std::to_string(cfg.block_size_bytes) + "," +
               std::move(variant) + "," + std::move(k) + "," +
               std::move(seed)) {
    if (path.empty()) return;
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    f_ = std::fopen(path.c_str(), "a");
    if (!f_) throw IoError("cannot open report file " + path);
    if (fresh) std::fprintf(f_, "%s\n", kReportHeader);
  }
  ~ReportWriter() {
    if (f_) std::fclose(f_);
  }

  void run(const RunStats& stats) {
    if (!f_) return;
    for (const auto& p : stats.phases) phase_row(p, "", "", "");
    PhaseStats total{"total", stats.total_io(), stats.total_seconds()};
    phase_row(total, std::to_string(stats.block_count),
              std::to_string(stats.collision_count),
              std::to_string(stats.group_spill_bytes));
  }

 private:
  void phase_row(const PhaseStats& p, const std::string& blocks,
                 const std::string& collisions, const std::string& spill) {
    std::fprintf(f_, "%s,%.6f%s,%s,%s,%s\n",
                 (command_ + "," + p.io.csv_line(p.name)).c_str(), p.seconds,
                 fixed_.c_str(), blocks.c_str(), collisions.c_str(),
                 spill.c_str());
  }

  std::string command_;
  std::string fixed_;
  std::FILE* f_ = nullptr;
};

void print_run_summary(const RunStats& stats, std::uint64_t elements) {
  const IoStats io = stats.total_io();
  for (const auto& p : stats.phases)
    std::printf("phase %-16s %8" PRIu64 " reads %8" PRIu64 " writes  %.3fs\n",
                p.name.c_str(), p.io.reads, p.io.writes, p.seconds);
  std::printf("blocks: %" PRIu64 "\n", stats.block_count);
  std::printf("collisions: %" PRIu64 "\n", stats.collision_count);
  std::printf("total-ios: %" PRIu64 "\n", io.total_ios());
  if (elements > 0)
    std::printf("ios-per-element: %.6f\n",
                static_cast<double>(io.total_ios()) /
                    static_cast<double>(elements));
  std::printf("seconds: %.3f\n", stats.total_seconds());
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_gen(const MachineFlags& mf, const FormatFlag& ff,
            const std::string& shape, std::uint64_t n, double p,
            std::uint32_t alphabet, std::uint64_t seed,
            const std::string& nodes_out, const std::string& edges_out) {
  Workspace ws(mf.config());
  gen::GenSpec spec;
  spec.shape = gen::shape_from_string(shape);
  spec.n = n;
  spec.p = p;
  spec.label_alphabet = alphabet;
  spec.seed = seed;

  if (ff.text()) {
    auto g = gen::generate(spec, ws, ws.temp_path("gnodes"),
                           ws.temp_path("gedges"));
    nodes_to_text(g.nodes, nodes_out);
    edges_to_text(g.edges, edges_out);
    std::printf("nodes: %" PRIu64 "\nedges: %" PRIu64 "\n", g.nodes.size(),
                g.edges.size());
  } else {
    auto g = gen::generate(spec, ws, nodes_out, edges_out);
    std::printf("nodes: %" PRIu64 "\nedges: %" PRIu64 "\n", g.nodes.size(),
                g.edges.size());
  }
  std::printf("alphabet: %u\nseed: %" PRIu64 "\n", spec.resolved_alphabet(),
              seed);
  return 0;
}

int cmd_validate(const MachineFlags& mf, const FormatFlag& ff,
                 const std::string& nodes_path, const std::string& edges_path) {
  Workspace ws(mf.config());
  auto nodes = load_nodes(ws, nodes_path, ff.text());
  auto edges = load_edges(ws, edges_path, ff.text());
  const ValidationReport rep = validate_graph(nodes, edges);
  std::printf("nodes: %" PRIu64 "\nedges: %" PRIu64 "\n", rep.node_count,
              rep.edge_count);
  std::printf("duplicate-edges: %" PRIu64 "\n", rep.duplicate_edge_count);
  std::printf("dense-ids: %s\n", rep.dense_ids ? "yes" : "no");
  std::printf("issues: %" PRIu64 "\n", rep.issue_count);
  for (const auto& i : rep.issues) std::printf("  %s\n", i.c_str());
  if (rep.issue_count > rep.issues.size())
    std::printf("  ... and %" PRIu64 " more\n",
                rep.issue_count - rep.issues.size());
  std::printf("result: %s\n", rep.ok() ? "ok" : "invalid");
  return rep.ok() ? 0 : 1;
}

int cmd_partition(const MachineFlags& mf, const FormatFlag& ff,
                  const std::string& variant_name, bool canonical,
                  const std::string& report_path,
                  const std::string& nodes_path, const std::string& edges_path,
                  const std::string& out) {
  Workspace ws(mf.config());
  const Variant variant = variant_from_string(variant_name);
  auto nodes = load_nodes(ws, nodes_path, ff.text());
  auto edges = load_edges(ws, edges_path, ff.text());
  const std::uint64_t elements = nodes.size() + edges.size();

  PartitionRun run = partition_dag(nodes, edges, ws, variant);
  auto result = canonical ? canonicalize_partition(run.partition, ws)
                          : std::move(run.partition);
  deliver_partition(result, ws, out, ff.text());

  print_run_summary(run.stats, elements);
  ReportWriter report(report_path, "partition", ws.config(),
                      to_string(variant), "", "");
  report.run(run.stats);
  return 0;
}

int cmd_xml(const MachineFlags& mf, const FormatFlag& ff,
            const std::string& mode, std::uint32_t k, bool canonical,
            const std::string& report_path, const std::string& labels_out,
            const std::string& doc, const std::string& out) {
  Workspace ws(mf.config());
  LabelTable labels;
  RunStats stats;
  ExternalSequence<PartitionRecord> partition;

  if (mode == "1index") {
    auto run = xml::one_index(ws, doc, labels);
    stats = std::move(run.stats);
    partition = std::move(run.partition);
  } else if (mode == "ak") {
    auto run = xml::ak_index(ws, doc, k, labels);
    stats = std::move(run.stats);
    partition = std::move(run.partition);
  } else if (mode == "fb") {
    auto run = xml::fb_index(ws, doc, labels);
    stats = std::move(run.stats);
    partition = std::move(run.partition);
  } else {
    throw ValidationError("unknown mode '" + mode + "'");
  }

  const std::uint64_t elements = partition.size();
  auto result =
      canonical ? canonicalize_partition(partition, ws) : std::move(partition);
  deliver_partition(result, ws, out, ff.text());
  if (!labels_out.empty()) labels.save_csv(labels_out);

  print_run_summary(stats, elements);
  ReportWriter report(report_path, "xml-" + mode, ws.config(), "",
                      mode == "ak" ? std::to_string(k) : "", "");
  report.run(stats);
  return 0;
}

int cmd_compare(const MachineFlags& mf, const FormatFlag& ff,
                const std::string& p1, const std::string& p2) {
  Workspace ws(mf.config());
  auto a = load_partition(ws, p1, ff.text());
  auto b = load_partition(ws, p2, ff.text());
  const PartitionRelation rel = compare_partitions(a, b, ws);
  std::printf("%s\n", to_string(rel));
  return 0;
}

int cmd_quotient(const MachineFlags& mf, const FormatFlag& ff,
                 const std::string& nodes_path, const std::string& edges_path,
                 const std::string& partition_path,
                 const std::string& nodes_out, const std::string& edges_out) {
  Workspace ws(mf.config());
  auto nodes = load_nodes(ws, nodes_path, ff.text());
  auto edges = load_edges(ws, edges_path, ff.text());
  auto partition = load_partition(ws, partition_path, ff.text());
  QuotientGraph q = build_quotient(nodes, edges, partition, ws);
  if (ff.text()) {
    nodes_to_text(q.nodes, nodes_out);
    edges_to_text(q.edges, edges_out);
  } else {
    copy_sequence(q.nodes, ws, nodes_out);
    copy_sequence(q.edges, ws, edges_out);
  }
  std::printf("blocks: %" PRIu64 "\nquotient-edges: %" PRIu64 "\n",
              q.nodes.size(), q.edges.size());
  return 0;
}

int cmd_convert(const MachineFlags& mf, const std::string& kind,
                const std::string& from, const std::string& to,
                const std::string& in, const std::string& out) {
  Workspace ws(mf.config());
  const bool from_text = from == "text";
  const bool to_text = to == "text";
  if (kind == "nodes") {
    auto seq = load_nodes(ws, in, from_text);
    if (to_text)
      nodes_to_text(seq, out);
    else
      copy_sequence(seq, ws, out);
  } else if (kind == "edges") {
    auto seq = load_edges(ws, in, from_text);
    if (to_text)
      edges_to_text(seq, out);
    else
      copy_sequence(seq, ws, out);
  } else if (kind == "partition") {
    auto seq = load_partition(ws, in, from_text);
    if (to_text)
      partition_to_text(seq, out);
    else
      copy_sequence(seq, ws, out);
  } else {
    throw ValidationError("unknown kind '" + kind + "'");
  }
  return 0;
}

int cmd_doc2graph(const MachineFlags& mf, const FormatFlag& ff,
                  const std::string& doc, const std::string& nodes_out,
                  const std::string& edges_out,
                  const std::string& labels_out) {
  Workspace ws(mf.config());
  LabelTable labels;
  auto tree = xml::reversed_tree_files(ws, doc, labels);
  if (ff.text()) {
    nodes_to_text(tree.nodes, nodes_out);
    edges_to_text(tree.edges, edges_out);
  } else {
    copy_sequence(tree.nodes, ws, nodes_out);
    copy_sequence(tree.edges, ws, edges_out);
  }
  if (!labels_out.empty()) labels.save_csv(labels_out);
  std::printf("nodes: %" PRIu64 "\nedges: %" PRIu64 "\n", tree.nodes.size(),
              tree.edges.size());
  return 0;
}

int cmd_graph2doc(const MachineFlags& mf, const FormatFlag& ff,
                  const std::string& nodes_path, const std::string& edges_path,
                  const std::string& doc_out, const std::string& labels_csv) {
  Workspace ws(mf.config());
  auto nodes = load_nodes(ws, nodes_path, ff.text());
  auto edges = load_edges(ws, edges_path, ff.text());
  if (labels_csv.empty()) {
    xml::document_from_tree_files(ws, nodes, edges, doc_out, nullptr);
  } else {
    LabelTable labels = LabelTable::load_csv(labels_csv);
    xml::document_from_tree_files(ws, nodes, edges, doc_out, &labels);
  }
  return 0;
}

int cmd_bench(const MachineFlags& mf, const std::string& sweep,
              std::vector<std::uint64_t> values, std::uint64_t n,
              const std::string& shape, double p, std::uint32_t alphabet,
              std::uint64_t seed, const std::string& variant_name,
              const std::string& out_path) {
  const Variant variant = variant_from_string(variant_name);
  std::FILE* out = stdout;
  bool header = true;
  if (!out_path.empty()) {
    header = !fs::exists(out_path) || fs::file_size(out_path) == 0;
    out = std::fopen(out_path.c_str(), "a");
    if (!out) throw IoError("cannot open " + out_path);
  }
  if (header)
    std::fprintf(out,
                 "sweep,parameter,nodes,edges,blocks,collisions,total_ios,"
                 "ios_per_element,total_seconds,seconds_per_element\n");

  auto emit = [&](std::uint64_t parameter, std::uint64_t nn, std::uint64_t ee,
                  const RunStats& stats) {
    const double elements = static_cast<double>(nn + ee);
    const IoStats io = stats.total_io();
    std::fprintf(out,
                 "%s,%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64
                 ",%" PRIu64 ",%" PRIu64 ",%.8f,%.3f,%.9f\n",
                 sweep.c_str(), parameter, nn, ee, stats.block_count,
                 stats.collision_count, io.total_ios(),
                 static_cast<double>(io.total_ios()) / elements,
                 stats.total_seconds(), stats.total_seconds() / elements);
    std::fflush(out);
  };

  gen::GenSpec spec;
  spec.shape = gen::shape_from_string(shape);
  spec.p = p;
  spec.label_alphabet = alphabet;
  spec.seed = seed;

  if (sweep == "n") {
    for (std::uint64_t value : values) {
      Workspace ws(mf.config());
      spec.n = value;
      auto g = gen::generate(spec, ws, ws.temp_path("bnodes"),
                             ws.temp_path("bedges"));
      PartitionRun run = partition_dag(g.nodes, g.edges, ws, variant);
      emit(value, g.nodes.size(), g.edges.size(), run.stats);
    }
  } else if (sweep == "memory") {
    // one shared input graph, partitioned under each memory budget
    MachineConfig gen_cfg = mf.config();
    const fs::path keep =
        gen_cfg.resolved_temp_directory() /
        ("embisim-bench-" + std::to_string(::getpid()));
    fs::create_directories(keep);
    spec.n = n;
    {
      Workspace ws(gen_cfg);
      gen::generate(spec, ws, keep / "nodes.bin", keep / "edges.bin");
    }
    for (std::uint64_t value : values) {
      MachineConfig cfg = mf.config();
      cfg.memory_budget_bytes = value;
      Workspace ws(cfg);
      auto nodes = ExternalSequence<NodeRecord>::open(ws, keep / "nodes.bin");
      auto edges = ExternalSequence<EdgeRecord>::open(ws, keep / "edges.bin");
      PartitionRun run = partition_dag(nodes, edges, ws, variant);
      emit(value, nodes.size(), edges.size(), run.stats);
    }
    fs::remove_all(keep);
  } else if (sweep == "k") {
    MachineConfig cfg = mf.config();
    const fs::path keep =
        cfg.resolved_temp_directory() /
        ("embisim-bench-" + std::to_string(::getpid()));
    fs::create_directories(keep);
    const fs::path doc = keep / "doc.xml";
    gen::write_random_document(doc, n, seed, alphabet);
    for (std::uint64_t value : values) {
      Workspace ws(cfg);
      LabelTable labels;
      auto run = xml::ak_index(ws, doc, static_cast<std::uint32_t>(value),
                               labels);
      emit(value, run.partition.size(), run.partition.size() - 1, run.stats);
    }
    fs::remove_all(keep);
  } else {
    if (out != stdout) std::fclose(out);
    throw ValidationError("unknown sweep '" + sweep + "'");
  }
  if (out != stdout) std::fclose(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"external-memory bisimulation partitioning toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  // --- gen ---
  auto* gen_cmd = app.add_subcommand("gen", "generate a benchmark graph");
  MachineFlags gen_mf;
  FormatFlag gen_ff;
  std::string gen_shape = "dag-geometric";
  std::uint64_t gen_n = 0;
  double gen_p = 0.78;
  std::uint32_t gen_alpha = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_nodes, gen_edges;
  gen_cmd->add_option("--shape", gen_shape, "graph shape")
      ->check(CLI::IsMember({"dag-geometric", "dag-pairwise", "tree", "chain",
                             "tc-chain"}))
      ->capture_default_str();
  gen_cmd->add_option("--n", gen_n, "node count")->required();
  gen_cmd->add_option("--p", gen_p, "probability parameter")
      ->capture_default_str();
  gen_cmd->add_option("--alphabet", gen_alpha,
                      "label alphabet size (0 = max(2, ceil(log2 n)))");
  gen_cmd->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen_cmd->add_option("nodes", gen_nodes, "output node file")->required();
  gen_cmd->add_option("edges", gen_edges, "output edge file")->required();
  gen_mf.add_to(gen_cmd);
  gen_ff.add_to(gen_cmd);
  gen_cmd->callback([&]() {
    rc = cmd_gen(gen_mf, gen_ff, gen_shape, gen_n, gen_p, gen_alpha, gen_seed,
                 gen_nodes, gen_edges);
  });

  // --- gendoc ---
  auto* gendoc_cmd = app.add_subcommand("gendoc", "generate a random document");
  std::uint64_t gendoc_n = 0;
  std::uint32_t gendoc_alpha = 0;
  std::uint64_t gendoc_seed = 1;
  std::string gendoc_out;
  gendoc_cmd->add_option("--n", gendoc_n, "element count")->required();
  gendoc_cmd->add_option("--alphabet", gendoc_alpha,
                         "label alphabet size (0 = default)");
  gendoc_cmd->add_option("--seed", gendoc_seed, "random seed")
      ->capture_default_str();
  gendoc_cmd->add_option("document", gendoc_out, "output document")->required();
  gendoc_cmd->callback([&]() {
    gen::write_random_document(gendoc_out, gendoc_n, gendoc_seed, gendoc_alpha);
  });

  // --- validate ---
  auto* val_cmd = app.add_subcommand("validate", "check graph input files");
  MachineFlags val_mf;
  FormatFlag val_ff;
  std::string val_nodes, val_edges;
  val_cmd->add_option("nodes", val_nodes, "node file")->required();
  val_cmd->add_option("edges", val_edges, "edge file")->required();
  val_mf.add_to(val_cmd);
  val_ff.add_to(val_cmd);
  val_cmd->callback(
      [&]() { rc = cmd_validate(val_mf, val_ff, val_nodes, val_edges); });

  // --- partition ---
  auto* part_cmd =
      app.add_subcommand("partition", "compute the bisimulation partition");
  MachineFlags part_mf;
  FormatFlag part_ff;
  std::string part_variant = "rank-label-hash";
  bool part_canonical = false;
  std::string part_report, part_nodes, part_edges, part_out;
  part_cmd->add_option("--variant", part_variant, "partitioning variant")
      ->check(CLI::IsMember({"rank-label", "rank-label-hash"}))
      ->capture_default_str();
  part_cmd->add_flag("--canonical", part_canonical,
                     "renumber blocks canonically before writing");
  part_cmd->add_option("--report", part_report, "append run report CSV here");
  part_cmd->add_option("nodes", part_nodes, "node file")->required();
  part_cmd->add_option("edges", part_edges, "edge file")->required();
  part_cmd->add_option("partition", part_out, "output partition file")
      ->required();
  part_mf.add_to(part_cmd);
  part_ff.add_to(part_cmd);
  part_cmd->callback([&]() {
    rc = cmd_partition(part_mf, part_ff, part_variant, part_canonical,
                       part_report, part_nodes, part_edges, part_out);
  });

  // --- xml ---
  auto* xml_cmd = app.add_subcommand("xml", "build a document index");
  MachineFlags xml_mf;
  FormatFlag xml_ff;
  std::string xml_mode = "1index";
  std::uint32_t xml_k = 2;
  bool xml_canonical = false;
  std::string xml_report, xml_labels, xml_doc, xml_out;
  xml_cmd->add_option("--mode", xml_mode, "index kind")
      ->check(CLI::IsMember({"1index", "ak", "fb"}))
      ->capture_default_str();
  xml_cmd->add_option("--k", xml_k, "trace length bound for --mode ak")
      ->capture_default_str();
  xml_cmd->add_flag("--canonical", xml_canonical,
                    "renumber blocks canonically before writing");
  xml_cmd->add_option("--report", xml_report, "append run report CSV here");
  xml_cmd->add_option("--labels-out", xml_labels, "save the label table CSV");
  xml_cmd->add_option("document", xml_doc, "input document")->required();
  xml_cmd->add_option("partition", xml_out, "output partition file")
      ->required();
  xml_mf.add_to(xml_cmd);
  xml_ff.add_to(xml_cmd);
  xml_cmd->callback([&]() {
    rc = cmd_xml(xml_mf, xml_ff, xml_mode, xml_k, xml_canonical, xml_report,
                 xml_labels, xml_doc, xml_out);
  });

  // --- compare ---
  auto* cmp_cmd = app.add_subcommand("compare", "relate two partitions");
  MachineFlags cmp_mf;
  FormatFlag cmp_ff;
  std::string cmp_a, cmp_b;
  cmp_cmd->add_option("first", cmp_a, "first partition")->required();
  cmp_cmd->add_option("second", cmp_b, "second partition")->required();
  cmp_mf.add_to(cmp_cmd);
  cmp_ff.add_to(cmp_cmd);
  cmp_cmd->callback([&]() { rc = cmd_compare(cmp_mf, cmp_ff, cmp_a, cmp_b); });

  // --- quotient ---
  auto* quot_cmd = app.add_subcommand("quotient", "build the quotient graph");
  MachineFlags quot_mf;
  FormatFlag quot_ff;
  std::string quot_nodes, quot_edges, quot_part, quot_nout, quot_eout;
  quot_cmd->add_option("nodes", quot_nodes, "node file")->required();
  quot_cmd->add_option("edges", quot_edges, "edge file")->required();
  quot_cmd->add_option("partition", quot_part, "partition file")->required();
  quot_cmd->add_option("nodes-out", quot_nout, "output quotient node file")
      ->required();
  quot_cmd->add_option("edges-out", quot_eout, "output quotient edge file")
      ->required();
  quot_mf.add_to(quot_cmd);
  quot_ff.add_to(quot_cmd);
  quot_cmd->callback([&]() {
    rc = cmd_quotient(quot_mf, quot_ff, quot_nodes, quot_edges, quot_part,
                      quot_nout, quot_eout);
  });

  // --- convert ---
  auto* conv_cmd =
      app.add_subcommand("convert", "translate files between bin and text");
  MachineFlags conv_mf;
  std::string conv_kind, conv_from = "bin", conv_to = "text";
  std::string conv_in, conv_out;
  conv_cmd->add_option("--kind", conv_kind, "file kind")
      ->check(CLI::IsMember({"nodes", "edges", "partition"}))
      ->required();
  conv_cmd->add_option("--from", conv_from, "input format")
      ->check(CLI::IsMember({"bin", "text"}))
      ->capture_default_str();
  conv_cmd->add_option("--to", conv_to, "output format")
      ->check(CLI::IsMember({"bin", "text"}))
      ->capture_default_str();
  conv_cmd->add_option("input", conv_in, "input file")->required();
  conv_cmd->add_option("output", conv_out, "output file")->required();
  conv_mf.add_to(conv_cmd);
  conv_cmd->callback([&]() {
    rc = cmd_convert(conv_mf, conv_kind, conv_from, conv_to, conv_in, conv_out);
  });

  // --- doc2graph ---
  auto* d2g_cmd = app.add_subcommand(
      "doc2graph", "write a document's reversed containment edges as graph files");
  MachineFlags d2g_mf;
  FormatFlag d2g_ff;
  std::string d2g_doc, d2g_nodes, d2g_edges, d2g_labels;
  d2g_cmd->add_option("document", d2g_doc, "input document")->required();
  d2g_cmd->add_option("nodes", d2g_nodes, "output node file")->required();
  d2g_cmd->add_option("edges", d2g_edges, "output edge file")->required();
  d2g_cmd->add_option("--labels-out", d2g_labels, "save the label table CSV");
  d2g_mf.add_to(d2g_cmd);
  d2g_ff.add_to(d2g_cmd);
  d2g_cmd->callback([&]() {
    rc = cmd_doc2graph(d2g_mf, d2g_ff, d2g_doc, d2g_nodes, d2g_edges,
                       d2g_labels);
  });

  // --- graph2doc ---
  auto* g2d_cmd = app.add_subcommand(
      "graph2doc", "write a tree-shaped graph as a document");
  MachineFlags g2d_mf;
  FormatFlag g2d_ff;
  std::string g2d_nodes, g2d_edges, g2d_doc, g2d_labels;
  g2d_cmd->add_option("nodes", g2d_nodes, "node file")->required();
  g2d_cmd->add_option("edges", g2d_edges, "edge file")->required();
  g2d_cmd->add_option("document", g2d_doc, "output document")->required();
  g2d_cmd->add_option("--labels", g2d_labels, "label table CSV for names");
  g2d_mf.add_to(g2d_cmd);
  g2d_ff.add_to(g2d_cmd);
  g2d_cmd->callback([&]() {
    rc = cmd_graph2doc(g2d_mf, g2d_ff, g2d_nodes, g2d_edges, g2d_doc,
                       g2d_labels);
  });

  // --- bench ---
  auto* bench_cmd =
      app.add_subcommand("bench", "sweep a parameter and emit CSV rows");
  MachineFlags bench_mf;
  std::string bench_sweep;
  std::vector<std::uint64_t> bench_values;
  std::uint64_t bench_n = 1000000;
  std::string bench_shape = "dag-geometric";
  double bench_p = 0.78;
  std::uint32_t bench_alpha = 0;
  std::uint64_t bench_seed = 1;
  std::string bench_variant = "rank-label-hash";
  std::string bench_out;
  bench_cmd->add_option("--sweep", bench_sweep, "swept parameter")
      ->check(CLI::IsMember({"n", "memory", "k"}))
      ->required();
  bench_cmd
      ->add_option("--values", bench_values,
                   "parameter values (bytes for --sweep memory)")
      ->required()
      ->delimiter(',')
      ->transform(CLI::AsSizeValue(false));
  bench_cmd->add_option("--n", bench_n,
                        "fixed input size for memory/k sweeps")
      ->capture_default_str();
  bench_cmd->add_option("--shape", bench_shape, "graph shape")
      ->check(CLI::IsMember({"dag-geometric", "dag-pairwise", "tree", "chain",
                             "tc-chain"}))
      ->capture_default_str();
  bench_cmd->add_option("--p", bench_p, "probability parameter")
      ->capture_default_str();
  bench_cmd->add_option("--alphabet", bench_alpha, "label alphabet size");
  bench_cmd->add_option("--seed", bench_seed, "random seed")
      ->capture_default_str();
  bench_cmd->add_option("--variant", bench_variant, "partitioning variant")
      ->check(CLI::IsMember({"rank-label", "rank-label-hash"}))
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "append CSV here (default stdout)");
  bench_mf.add_to(bench_cmd);
  bench_cmd->callback([&]() {
    rc = cmd_bench(bench_mf, bench_sweep, bench_values, bench_n, bench_shape,
                   bench_p, bench_alpha, bench_seed, bench_variant, bench_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
