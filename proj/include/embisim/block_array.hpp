#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "embisim/block_io.hpp"
#include "embisim/machine.hpp"

namespace embisim {

// =============================================================================
// BlockCachedArray: an unbounded array of u64 cells backed by a scratch block
// file, with a two-block cache. Cells read before being written are zero.
//
// Two resident blocks are enough to make an access pattern that only moves
// between adjacent indices (like per-depth counters during a document scan)
// cost O(n / cells_per_block) transfers overall: the current block and its
// neighbour stay cached while the pattern oscillates across a boundary.
// =============================================================================

class BlockCachedArray {
 public:
  BlockCachedArray(Workspace& ws, const std::string& stem)
      : io_(BlockIo::create(ws, ws.temp_path(stem))),
        cells_per_block_(ws.config().block_size_bytes / sizeof(std::uint64_t)) {
    for (auto& s : slots_) s.cells.resize(cells_per_block_);
  }

  std::uint64_t get(std::uint64_t index) {
    Slot& s = load(index / cells_per_block_);
    return s.cells[index % cells_per_block_];
  }

  void set(std::uint64_t index, std::uint64_t value) {
    Slot& s = load(index / cells_per_block_);
    s.cells[index % cells_per_block_] = value;
    s.dirty = true;
  }

  /// Returns the previous value and stores previous + delta.
  std::uint64_t fetch_add(std::uint64_t index, std::uint64_t delta) {
    Slot& s = load(index / cells_per_block_);
    const std::uint64_t old = s.cells[index % cells_per_block_];
    s.cells[index % cells_per_block_] = old + delta;
    s.dirty = true;
    return old;
  }

 private:
  struct Slot {
    std::uint64_t block = ~0ull;
    std::uint64_t last_use = 0;
    bool dirty = false;
    std::vector<std::uint64_t> cells;
  };

  Slot& load(std::uint64_t block_index) {
    Slot* victim = &slots_[0];
    for (auto& s : slots_) {
      if (s.block == block_index) {
        s.last_use = ++tick_;
        return s;
      }
      if (s.last_use < victim->last_use) victim = &s;
    }
    if (victim->dirty) {
      io_.write_block(victim->block,
                      reinterpret_cast<const std::byte*>(victim->cells.data()),
                      cells_per_block_ * sizeof(std::uint64_t));
    }
    const std::size_t got = io_.read_block(
        block_index, reinterpret_cast<std::byte*>(victim->cells.data()));
    if (got < cells_per_block_ * sizeof(std::uint64_t)) {
      std::memset(reinterpret_cast<std::byte*>(victim->cells.data()) + got, 0,
                  cells_per_block_ * sizeof(std::uint64_t) - got);
    }
    victim->block = block_index;
    victim->dirty = false;
    victim->last_use = ++tick_;
    return *victim;
  }

  BlockIo io_;
  std::size_t cells_per_block_;
  Slot slots_[2];
  std::uint64_t tick_ = 0;
};

}  // namespace embisim
