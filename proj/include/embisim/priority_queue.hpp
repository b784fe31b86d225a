#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <queue>
#include <string>
#include <type_traits>
#include <vector>

#include "embisim/machine.hpp"
#include "embisim/sequence.hpp"

namespace embisim {

// =============================================================================
// ExternalPriorityQueue: the queue that carries messages "forward in time"
// between a node and the later-numbered nodes that consume its result.
//
// Entries live in an in-memory min-heap until the heap reaches its memory
// share; then the whole heap is written out as one sorted run. Extraction
// takes the minimum over the heap and the heads of all open runs. Ties on the
// key come out in insertion order (a global sequence number), which keeps
// every run of the library bit-for-bit deterministic.
//
// When the number of open runs would exceed the share of block buffers, all
// runs are merged into one. With a share of S bytes, each spill moves S bytes,
// so the total transfer volume stays within a constant factor of sorting
// everything that ever passes through the queue.
// =============================================================================

template <class Key, class Payload, class KeyLess = std::less<Key>>
class ExternalPriorityQueue {
 public:
  struct Item {
    Key key;
    Payload payload;
  };

  ExternalPriorityQueue(Workspace& ws, std::uint64_t budget_bytes,
                        KeyLess key_less = KeyLess(),
                        std::string stem = "queue")
      : ws_(&ws), key_less_(key_less), stem_(std::move(stem)) {
    // Half the share holds the resident heap, half pays for the block
    // buffers of open run readers.
    const std::size_t block = ws.config().block_size_bytes;
    const std::uint64_t half = std::max<std::uint64_t>(budget_bytes / 2, block);
    heap_capacity_ = static_cast<std::size_t>(
        std::max<std::uint64_t>(64, half / sizeof(Entry)));
    max_open_runs_ =
        static_cast<std::size_t>(std::max<std::uint64_t>(4, half / block));
  }

  std::uint64_t size() const { return heap_.size() + in_runs_; }
  bool empty() const { return size() == 0; }
  std::uint64_t spilled_bytes() const { return spilled_bytes_; }

  void push(const Key& key, const Payload& payload) {
    if (heap_.size() >= heap_capacity_) spill();
    heap_.push_back(Entry{key, next_seq_++, payload});
    std::push_heap(heap_.begin(), heap_.end(), entry_after());
  }

  /// Smallest key currently queued; queue must be non-empty.
  const Key& min_key() {
    const Entry* h = heap_.empty() ? nullptr : &heap_.front();
    const Entry* r = run_front();
    if (!h && !r) throw InvariantError("min_key on empty queue");
    if (h && r) return entry_before(*h, *r) ? h->key : r->key;
    return h ? h->key : r->key;
  }

  Item pop() {
    const Entry* h = heap_.empty() ? nullptr : &heap_.front();
    const Entry* r = run_front();
    if (!h && !r) throw InvariantError("pop on empty queue");
    if (h && (!r || entry_before(*h, *r))) {
      Item item{h->key, h->payload};
      std::pop_heap(heap_.begin(), heap_.end(), entry_after());
      heap_.pop_back();
      return item;
    }
    Item item{r->key, r->payload};
    pop_run_front();
    return item;
  }

 private:
  struct Entry {
    Key key;
    std::uint64_t seq;
    Payload payload;
  };
  static_assert(std::is_trivially_copyable_v<Entry>);
  static_assert(std::has_single_bit(sizeof(Entry)),
                "pad Payload so entries pack a block exactly");

  bool entry_before(const Entry& a, const Entry& b) const {
    if (key_less_(a.key, b.key)) return true;
    if (key_less_(b.key, a.key)) return false;
    return a.seq < b.seq;
  }

  auto entry_after() const {
    return [this](const Entry& a, const Entry& b) { return entry_before(b, a); };
  }

  // --- spilled runs ----------------------------------------------------------

  // A run's file lives behind a unique_ptr so its reader stays valid while
  // the run vector reshuffles.
  struct OpenRun {
    std::unique_ptr<RawSequence> file;
    std::unique_ptr<RawSequence::Reader> reader;
  };

  void attach_run(RawSequence run) {
    OpenRun open;
    open.file = std::make_unique<RawSequence>(std::move(run));
    open.reader = std::make_unique<RawSequence::Reader>(*open.file);
    runs_.push_back(std::move(open));
  }

  void spill() {
    if (runs_.size() + 1 > max_open_runs_) consolidate();
    std::sort(heap_.begin(), heap_.end(),
              [this](const Entry& a, const Entry& b) {
                return entry_before(a, b);
              });
    RawSequence run =
        RawSequence::create_temp(*ws_, stem_, "EXBT1", sizeof(Entry));
    {
      auto w = run.writer();
      for (const Entry& e : heap_)
        w.put(reinterpret_cast<const std::byte*>(&e));
      w.finish();
    }
    spilled_bytes_ += heap_.size() * sizeof(Entry);
    in_runs_ += heap_.size();
    heap_.clear();
    attach_run(std::move(run));
  }

  /// Merges every open run (from its current position) into a single run.
  void consolidate() {
    RawSequence merged =
        RawSequence::create_temp(*ws_, stem_, "EXBT1", sizeof(Entry));
    {
      auto w = merged.writer();
      while (const Entry* e = run_front()) {
        w.put(reinterpret_cast<const std::byte*>(e));
        pop_run_front_keep_count();
      }
      w.finish();
    }
    spilled_bytes_ += merged.size() * sizeof(Entry);
    for (auto& r : runs_) r.file->remove();
    runs_.clear();
    attach_run(std::move(merged));
  }

  /// Head entry among all runs, or nullptr. Linear in the number of open
  /// runs, which the consolidation policy keeps small.
  const Entry* run_front() {
    const Entry* best = nullptr;
    best_run_ = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const Entry* head =
          reinterpret_cast<const Entry*>(runs_[i].reader->peek());
      if (head && (!best || entry_before(*head, *best))) {
        best = head;
        best_run_ = i;
      }
    }
    return best;
  }

  void pop_run_front_keep_count() {
    runs_[best_run_].reader->advance();
  }

  void pop_run_front() {
    pop_run_front_keep_count();
    --in_runs_;
    if (runs_[best_run_].reader->remaining() == 0) {
      runs_[best_run_].file->remove();
      runs_.erase(runs_.begin() + static_cast<std::ptrdiff_t>(best_run_));
    }
  }

  Workspace* ws_;
  KeyLess key_less_;
  std::string stem_;
  std::size_t heap_capacity_ = 0;
  std::size_t max_open_runs_ = 0;
  std::vector<Entry> heap_;
  std::vector<OpenRun> runs_;
  std::uint64_t in_runs_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t spilled_bytes_ = 0;
  std::size_t best_run_ = 0;
};

}  // namespace embisim
