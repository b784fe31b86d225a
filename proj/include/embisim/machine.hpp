#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include "embisim/common.hpp"

namespace embisim {

// =============================================================================
// Machine model: a main memory of `memory_budget_bytes` and a block device
// moving `block_size_bytes` at a time. Every algorithm in the library draws
// its buffers from the budget and counts its transfers in an IoStats.
// =============================================================================

struct MachineConfig {
  std::uint64_t memory_budget_bytes = 256ull << 20;  // 256 MiB
  std::size_t block_size_bytes = 64u << 10;          // 64 KiB
  std::filesystem::path temp_directory;              // empty = system default

  /// Throws FormatError unless the budget admits at least a handful of
  /// block buffers (one input, one output, one of slack).
  void validate() const {
    if (block_size_bytes == 0) throw FormatError("block size must be positive");
    if (memory_budget_bytes < 3 * static_cast<std::uint64_t>(block_size_bytes))
      throw FormatError("memory budget must be at least 3 blocks (" +
                        std::to_string(3 * block_size_bytes) + " bytes)");
  }

  std::filesystem::path resolved_temp_directory() const {
    return temp_directory.empty() ? std::filesystem::temp_directory_path()
                                  : temp_directory;
  }
};

// =============================================================================
// Transfer counters
// =============================================================================

struct IoStats {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;

  std::uint64_t total_ios() const { return reads + writes; }

  IoStats& operator+=(const IoStats& o) {
    reads += o.reads;
    writes += o.writes;
    bytes_read += o.bytes_read;
    bytes_written += o.bytes_written;
    return *this;
  }

  friend IoStats operator+(IoStats a, const IoStats& b) { return a += b; }

  /// Difference since an earlier snapshot (counters only grow).
  friend IoStats operator-(IoStats a, const IoStats& b) {
    a.reads -= b.reads;
    a.writes -= b.writes;
    a.bytes_read -= b.bytes_read;
    a.bytes_written -= b.bytes_written;
    return a;
  }

  friend bool operator==(const IoStats& a, const IoStats& b) {
    return a.reads == b.reads && a.writes == b.writes &&
           a.bytes_read == b.bytes_read && a.bytes_written == b.bytes_written;
  }

  /// One CSV row: phase,reads,writes,bytes_read,bytes_written
  std::string csv_line(const std::string& phase) const {
    return phase + "," + std::to_string(reads) + "," + std::to_string(writes) +
           "," + std::to_string(bytes_read) + "," + std::to_string(bytes_written);
  }

  static const char* csv_header() {
    return "phase,reads,writes,bytes_read,bytes_written";
  }
};

/// Blocks needed to scan `record_count` records of `record_width` bytes.
inline std::uint64_t scan_cost(std::uint64_t record_count,
                               std::size_t record_width,
                               const MachineConfig& cfg) {
  const std::uint64_t bytes = record_count * record_width;
  return (bytes + cfg.block_size_bytes - 1) / cfg.block_size_bytes;
}

// =============================================================================
// Per-phase reporting
// =============================================================================

struct PhaseStats {
  std::string name;
  IoStats io;
  double seconds = 0.0;
};

struct RunStats {
  std::vector<PhaseStats> phases;
  std::uint64_t block_count = 0;        // partition blocks produced
  std::uint64_t collision_count = 0;    // second-hash collisions resolved
  std::uint64_t group_spill_bytes = 0;  // grouping buffers spilled to disk

  IoStats total_io() const {
    IoStats t;
    for (const auto& p : phases) t += p.io;
    return t;
  }

  double total_seconds() const {
    double t = 0;
    for (const auto& p : phases) t += p.seconds;
    return t;
  }
};

// =============================================================================
// Workspace: the machine instance algorithms run on. Owns a scratch directory
// (removed on destruction) and the cumulative transfer counters.
// =============================================================================

class Workspace {
 public:
  explicit Workspace(MachineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    namespace fs = std::filesystem;
    const fs::path base = cfg_.resolved_temp_directory();
    fs::create_directories(base);
    SplitMix64 rng(std::chrono::steady_clock::now().time_since_epoch().count() ^
                   reinterpret_cast<std::uintptr_t>(this));
    for (int attempt = 0; attempt < 64; ++attempt) {
      char name[32];
      std::snprintf(name, sizeof name, "embisim-%012llx",
                    static_cast<unsigned long long>(rng.next() & 0xffffffffffffull));
      fs::path candidate = base / name;
      std::error_code ec;
      if (fs::create_directory(candidate, ec) && !ec) {
        root_ = std::move(candidate);
        return;
      }
    }
    throw IoError("could not create scratch directory under " + base.string());
  }

  ~Workspace() {
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);  // best effort
  }

  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const MachineConfig& config() const { return cfg_; }
  const std::filesystem::path& scratch_directory() const { return root_; }

  IoStats& stats() { return stats_; }
  const IoStats& stats() const { return stats_; }

  /// Fresh path inside the scratch directory (file not created).
  std::filesystem::path temp_path(const std::string& stem) {
    return root_ / (stem + "-" + std::to_string(next_id_++) + ".bin");
  }

  // --- memory shares -------------------------------------------------------
  // A fixed slice of the budget is reserved for stream buffers that stay open
  // across an algorithm step (inputs, outputs, the dictionary); the rest is
  // the working share handed to sorts, queues and grouping buffers.

  std::uint64_t working_budget() const {
    const std::uint64_t reserve = 8ull * cfg_.block_size_bytes;
    const std::uint64_t floor = 2ull * cfg_.block_size_bytes;
    return cfg_.memory_budget_bytes > reserve + floor
               ? cfg_.memory_budget_bytes - reserve
               : floor;
  }

  /// Run a step, recording its transfer delta and wall time into `out`.
  template <class F>
  void run_phase(RunStats& out, const std::string& name, F&& body) {
    const IoStats before = stats_;
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    out.phases.push_back(PhaseStats{
        name, stats_ - before, std::chrono::duration<double>(t1 - t0).count()});
  }

 private:
  MachineConfig cfg_;
  IoStats stats_;
  std::filesystem::path root_;
  std::uint64_t next_id_ = 0;
};

}  // namespace embisim
