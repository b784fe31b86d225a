#include "embisim/priority_queue.hpp"

#include <gtest/gtest.h>

#include <queue>
#include <tuple>
#include <vector>

#include "embisim/records.hpp"
#include "fixtures.hpp"

using namespace embisim;

namespace {

using Queue = ExternalPriorityQueue<std::uint64_t, IdMessage>;

}  // namespace

TEST(PriorityQueue, EmptyPopAndMinKeyThrow) {
  Workspace ws(testfx::tiny_config());
  Queue q(ws, ws.working_budget());
  EXPECT_TRUE(q.empty());
  EXPECT_THROW(q.pop(), InvariantError);
  EXPECT_THROW(q.min_key(), InvariantError);
}

TEST(PriorityQueue, PopsInKeyOrder) {
  Workspace ws(testfx::tiny_config());
  Queue q(ws, ws.working_budget());
  q.push(5, IdMessage{50, 0});
  q.push(1, IdMessage{10, 0});
  q.push(3, IdMessage{30, 0});
  EXPECT_EQ(q.size(), 3u);
  EXPECT_EQ(q.min_key(), 1u);
  EXPECT_EQ(q.pop().payload.id, 10u);
  EXPECT_EQ(q.pop().payload.id, 30u);
  EXPECT_EQ(q.pop().payload.id, 50u);
  EXPECT_TRUE(q.empty());
}

// One million random keys in, one million keys out as a non-decreasing
// stream, under a budget small enough to force spill runs.
TEST(PriorityQueue, MillionKeysComeOutNonDecreasing) {
  Workspace ws(testfx::tiny_config(1u << 20, 4096));
  Queue q(ws, ws.working_budget());
  const std::uint64_t n = 1000000;
  SplitMix64 rng(99);
  std::uint64_t checksum_in = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t key = rng.below(1u << 24);
    checksum_in += key;
    q.push(key, IdMessage{key ^ 0xabcdef, 0});
  }
  EXPECT_GT(q.spilled_bytes(), 0u) << "budget should have forced runs";

  std::uint64_t prev = 0;
  std::uint64_t checksum_out = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    ASSERT_FALSE(q.empty());
    const auto item = q.pop();
    ASSERT_GE(item.key, prev) << "at pop " << i;
    ASSERT_EQ(item.payload.id, item.key ^ 0xabcdef) << "payload corrupted";
    checksum_out += item.key;
    prev = item.key;
  }
  EXPECT_TRUE(q.empty());
  EXPECT_EQ(checksum_in, checksum_out);
}

// Interleaved pushes and pops replayed against std::priority_queue. The
// reference breaks key ties by insertion sequence, which is the documented
// contract of the external queue.
TEST(PriorityQueue, MatchesReferenceUnderInterleaving) {
  Workspace ws(testfx::tiny_config(1u << 20, 4096));
  Queue q(ws, ws.working_budget());

  using Ref = std::pair<std::uint64_t, std::uint64_t>;  // (key, seq)
  std::priority_queue<Ref, std::vector<Ref>, std::greater<Ref>> ref;
  std::uint64_t seq = 0;

  SplitMix64 rng(123);
  for (int step = 0; step < 200000; ++step) {
    const bool push = ref.empty() || rng.below(100) < 60;
    if (push) {
      const std::uint64_t key = rng.below(5000);
      q.push(key, IdMessage{seq, 0});
      ref.emplace(key, seq);
      ++seq;
    } else {
      ASSERT_FALSE(q.empty());
      const auto got = q.pop();
      const Ref want = ref.top();
      ref.pop();
      ASSERT_EQ(got.key, want.first) << "at step " << step;
      ASSERT_EQ(got.payload.id, want.second)
          << "tie not broken by insertion order at step " << step;
    }
  }
  while (!ref.empty()) {
    const auto got = q.pop();
    EXPECT_EQ(got.key, ref.top().first);
    EXPECT_EQ(got.payload.id, ref.top().second);
    ref.pop();
  }
  EXPECT_TRUE(q.empty());
}

// Equal keys come back first-in first-out even when some of the entries have
// been spilled to a run and others still sit in the heap.
TEST(PriorityQueue, InsertionOrderSurvivesSpills) {
  Workspace ws(testfx::tiny_config(3 * 4096, 4096));
  Queue q(ws, 2 * 4096);  // minimum heap capacity (64 entries)
  q.push(5, IdMessage{1, 0});
  q.push(5, IdMessage{2, 0});
  for (std::uint64_t i = 0; i < 500; ++i) q.push(10 + i, IdMessage{0, 0});
  EXPECT_GT(q.spilled_bytes(), 0u) << "fillers must have forced a spill";
  q.push(5, IdMessage{3, 0});  // lives in the heap, not in the run

  EXPECT_EQ(q.pop().payload.id, 1u);
  EXPECT_EQ(q.pop().payload.id, 2u);
  EXPECT_EQ(q.pop().payload.id, 3u);
  EXPECT_EQ(q.min_key(), 10u);
}

// Time-forward usage pattern: keys only ever grow past what was popped.
TEST(PriorityQueue, MonotoneDrainWhilePushing) {
  Workspace ws(testfx::tiny_config(1u << 20, 4096));
  Queue q(ws, ws.working_budget());
  SplitMix64 rng(7);
  q.push(0, IdMessage{0, 0});
  std::uint64_t popped = 0;
  std::uint64_t count = 1;
  while (!q.empty() && popped < 300000) {
    const auto item = q.pop();
    ASSERT_GE(item.key, popped == 0 ? 0 : popped);
    popped = item.key;
    ++count;
    if (count < 200000) {
      // push a few receivers strictly in the future
      const int fanout = 1 + static_cast<int>(rng.below(3));
      for (int i = 0; i < fanout; ++i)
        q.push(item.key + 1 + rng.below(1000), IdMessage{count, 0});
    }
  }
  SUCCEED();
}
