#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "embisim/machine.hpp"
#include "embisim/sequence.hpp"

namespace embisim {

namespace detail {

inline std::size_t merge_fan_in(std::uint64_t budget_bytes,
                                std::size_t block_bytes) {
  const std::uint64_t buffers =
      budget_bytes > block_bytes ? budget_bytes / block_bytes : 1;
  // one buffer is reserved for the merged output
  return static_cast<std::size_t>(buffers > 3 ? buffers - 1 : 2);
}

/// Streams the merge of sorted `runs` (stable: ties keep run order) into
/// `emit(const std::byte*)`. Consumes and deletes the run files.
template <class Less, class Emit>
void merge_run_batch(std::vector<RawSequence>& runs, std::size_t first,
                     std::size_t count, Less& less, Emit&& emit) {
  struct Head {
    const std::byte* record;
    std::size_t run;
  };
  auto after = [&less](const Head& a, const Head& b) {
    // true when `a` must come out after `b`
    if (less(b.record, a.record)) return true;
    if (less(a.record, b.record)) return false;
    return a.run > b.run;
  };
  std::vector<RawSequence::Reader> readers;
  readers.reserve(count);
  std::priority_queue<Head, std::vector<Head>, decltype(after)> heads(after);
  for (std::size_t i = 0; i < count; ++i) {
    readers.emplace_back(runs[first + i]);
    if (const std::byte* p = readers.back().peek())
      heads.push(Head{p, i});
  }
  while (!heads.empty()) {
    Head h = heads.top();
    heads.pop();
    emit(h.record);
    readers[h.run].advance();
    if (const std::byte* p = readers[h.run].peek())
      heads.push(Head{p, h.run});
  }
  for (std::size_t i = 0; i < count; ++i) runs[first + i].remove();
}

/// Reduces `runs` until at most `fan_in` remain, merging batches of
/// consecutive runs per round so stability is preserved.
template <class Less>
void consolidate_runs(std::vector<RawSequence>& runs, Less& less,
                      std::size_t fan_in, Workspace& ws,
                      const std::string& stem) {
  while (runs.size() > fan_in) {
    std::vector<RawSequence> next;
    next.reserve(runs.size() / fan_in + 1);
    for (std::size_t i = 0; i < runs.size(); i += fan_in) {
      const std::size_t count = std::min(fan_in, runs.size() - i);
      if (count == 1) {
        next.push_back(std::move(runs[i]));
        continue;
      }
      RawSequence merged =
          RawSequence::create_temp(ws, stem, "EXBT1", runs[i].width());
      auto w = merged.writer();
      merge_run_batch(runs, i, count, less,
                      [&w](const std::byte* r) { w.put(r); });
      w.finish();
      next.push_back(std::move(merged));
    }
    runs = std::move(next);
  }
}

/// In-memory sort of a batch of packed records; calls emit in sorted order.
/// std::stable_sort on an index array keeps equal records in input order.
template <class Less, class Emit>
void sort_batch(const std::vector<std::byte>& data, std::size_t width,
                std::size_t count, Less& less, Emit&& emit) {
  std::vector<std::uint64_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  const std::byte* base = data.data();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint64_t a, std::uint64_t b) {
                     return less(base + a * width, base + b * width);
                   });
  for (std::size_t i = 0; i < count; ++i) emit(base + order[i] * width);
}

}  // namespace detail

// =============================================================================
// External merge sort.
//
// Run formation fills `budget_bytes` of memory per run (record payload plus
// one index word per record), then sorted runs are merged in rounds of
// fan-in = budget/block - 1. Inputs that fit in one run never touch scratch
// space: they stream straight to the output. The sort is stable.
// =============================================================================

template <class Less>
RawSequence external_sort_raw(RawSequence input, Less less, Workspace& ws,
                              std::uint64_t budget_bytes,
                              const std::string& stem = "sort",
                              bool remove_input = true) {
  const std::size_t width = input.width();
  const std::size_t block = ws.config().block_size_bytes;
  const std::uint64_t usable =
      budget_bytes > 2ull * block ? budget_bytes - 2ull * block : block;
  const std::uint64_t per_run =
      std::max<std::uint64_t>(1, usable / (width + sizeof(std::uint64_t)));

  RawSequence output =
      RawSequence::create_temp(ws, stem, input.magic(), width);
  auto out = output.writer();

  std::vector<std::byte> batch;
  batch.resize(static_cast<std::size_t>(
      std::min<std::uint64_t>(per_run, std::max<std::uint64_t>(input.size(), 1)) *
      width));

  if (input.size() <= per_run) {
    // single batch: read, sort, write
    std::size_t count = 0;
    {
      auto r = input.reader();
      while (const std::byte* p = r.peek()) {
        std::memcpy(batch.data() + count * width, p, width);
        ++count;
        r.advance();
      }
    }
    detail::sort_batch(batch, width, count, less,
                       [&out](const std::byte* rec) { out.put(rec); });
    out.finish();
    if (remove_input) input.remove();
    return output;
  }

  std::vector<RawSequence> runs;
  {
    auto r = input.reader();
    while (r.remaining() > 0) {
      std::size_t count = 0;
      while (count < per_run) {
        const std::byte* p = r.peek();
        if (!p) break;
        std::memcpy(batch.data() + count * width, p, width);
        ++count;
        r.advance();
      }
      RawSequence run = RawSequence::create_temp(ws, stem, "EXBT1", width);
      auto w = run.writer();
      detail::sort_batch(batch, width, count, less,
                         [&w](const std::byte* rec) { w.put(rec); });
      w.finish();
      runs.push_back(std::move(run));
    }
  }
  if (remove_input) input.remove();

  const std::size_t fan_in = detail::merge_fan_in(budget_bytes, block);
  detail::consolidate_runs(runs, less, fan_in, ws, stem);
  detail::merge_run_batch(runs, 0, runs.size(), less,
                          [&out](const std::byte* rec) { out.put(rec); });
  out.finish();
  return output;
}

/// Typed external sort. The comparator sees records as `const T&`. The input
/// file is deleted unless `remove_input` is false (pass false when sorting a
/// caller-owned file rather than a pipeline intermediate).
template <class T, class Less>
ExternalSequence<T> external_sort(ExternalSequence<T> input, Less less,
                                  Workspace& ws, std::uint64_t budget_bytes,
                                  const std::string& stem = "sort",
                                  bool remove_input = true) {
  auto raw_less = [&less](const std::byte* a, const std::byte* b) {
    return less(*reinterpret_cast<const T*>(a),
                *reinterpret_cast<const T*>(b));
  };
  return ExternalSequence<T>(external_sort_raw(std::move(input).take_raw(),
                                               raw_less, ws, budget_bytes,
                                               stem, remove_input));
}

// =============================================================================
// SpillableBuffer<T>: collects records, spills sorted runs to scratch space
// when its memory share fills, and replays everything in sorted order on
// drain(). Total bytes ever spilled are tracked for reporting. Reusable
// across rounds via the implicit reset that drain() performs.
// =============================================================================

template <class T, class Less>
class SpillableBuffer {
  static_assert(std::is_trivially_copyable_v<T>);

 public:
  SpillableBuffer(Workspace& ws, std::uint64_t budget_bytes, Less less,
                  std::string stem = "spill")
      : ws_(&ws), less_(std::move(less)), stem_(std::move(stem)) {
    const std::size_t block = ws.config().block_size_bytes;
    const std::uint64_t usable =
        budget_bytes > block ? budget_bytes - block : block;
    capacity_ = static_cast<std::size_t>(
        std::max<std::uint64_t>(1, usable / sizeof(T)));
    items_.reserve(std::min<std::size_t>(capacity_, 1u << 16));
  }

  void push(const T& v) {
    if (items_.size() >= capacity_) spill();
    items_.push_back(v);
    ++total_count_;
  }

  std::uint64_t size() const { return total_count_; }
  std::uint64_t spilled_bytes() const { return spilled_bytes_; }

  /// Emits all records in sorted order (stable) and resets the buffer.
  template <class Emit>
  void drain(Emit&& emit) {
    if (runs_.empty()) {
      std::stable_sort(items_.begin(), items_.end(), less_);
      for (const T& v : items_) emit(v);
    } else {
      if (!items_.empty()) spill();
      auto raw_less = [this](const std::byte* a, const std::byte* b) {
        return less_(*reinterpret_cast<const T*>(a),
                     *reinterpret_cast<const T*>(b));
      };
      const std::size_t fan_in = detail::merge_fan_in(
          capacity_ * sizeof(T), ws_->config().block_size_bytes);
      detail::consolidate_runs(runs_, raw_less, fan_in, *ws_, stem_);
      detail::merge_run_batch(runs_, 0, runs_.size(), raw_less,
                              [&emit](const std::byte* r) {
                                emit(*reinterpret_cast<const T*>(r));
                              });
      runs_.clear();
    }
    items_.clear();
    total_count_ = 0;
  }

 private:
  void spill() {
    std::stable_sort(items_.begin(), items_.end(), less_);
    RawSequence run = RawSequence::create_temp(*ws_, stem_, "EXBT1", sizeof(T));
    auto w = run.writer();
    for (const T& v : items_)
      w.put(reinterpret_cast<const std::byte*>(&v));
    w.finish();
    spilled_bytes_ += items_.size() * sizeof(T);
    runs_.push_back(std::move(run));
    items_.clear();
  }

  Workspace* ws_;
  Less less_;
  std::string stem_;
  std::size_t capacity_ = 0;
  std::vector<T> items_;
  std::vector<RawSequence> runs_;
  std::uint64_t spilled_bytes_ = 0;
  std::uint64_t total_count_ = 0;
};

}  // namespace embisim
