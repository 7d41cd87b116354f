#include <algorithm>
#include <vector>

#include "doctest.h"
#include "stochsplit/schedule.hpp"
#include "support.hpp"

using namespace stochsplit;

namespace {

// Drives a selector for `iterations` steps, maintaining last_activated the
// way the solver does.
std::vector<std::vector<std::size_t>> run(const ActivationSchedule& schedule, std::size_t S, std::size_t iterations) {
  BlockSelector sel(schedule, S);
  std::vector<std::size_t> last(S, 0);
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t n = 0; n < iterations; ++n) {
    auto b = sel.next(n, last);
    for (std::size_t s : b) last[s] = n;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

bool covers_every_window(const std::vector<std::vector<std::size_t>>& blocks, std::size_t S, std::size_t m) {
  for (std::size_t start = 0; start + m + 1 <= blocks.size(); ++start) {
    std::vector<bool> seen(S, false);
    for (std::size_t n = start; n <= start + m; ++n)
      for (std::size_t s : blocks[n]) seen[s] = true;
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("cover windows") {
  CHECK(cover_window(FullSchedule{}, 7) == 0);
  CHECK(cover_window(RoundRobinSchedule{1}, 3) == 2);
  CHECK(cover_window(RoundRobinSchedule{2}, 5) == 2);
  CHECK(cover_window(RoundRobinSchedule{5}, 5) == 0);
  CHECK(cover_window(SeededRandomSchedule{1, 4, 9}, 3) == 4);
}

TEST_CASE("full schedule activates everything") {
  for (const auto& b : run(FullSchedule{}, 4, 10)) CHECK(b == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("round robin blocks") {
  const auto b = run(RoundRobinSchedule{1}, 3, 8);
  CHECK(b[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(b[1] == std::vector<std::size_t>{0});
  CHECK(b[2] == std::vector<std::size_t>{1});
  CHECK(b[3] == std::vector<std::size_t>{2});
  CHECK(b[4] == std::vector<std::size_t>{0});

  const auto c = run(RoundRobinSchedule{2}, 5, 5);
  CHECK(c[1] == std::vector<std::size_t>{0, 1});
  CHECK(c[2] == std::vector<std::size_t>{2, 3});
  CHECK(c[3] == std::vector<std::size_t>{4});
  CHECK(c[4] == std::vector<std::size_t>{0, 1});
}

TEST_CASE("seeded random forcing") {
  // Block size 1 alone would leave scenarios idle arbitrarily long.
  const SeededRandomSchedule sch{1, 2, 17};
  const auto b = run(sch, 3, 200);
  CHECK(covers_every_window(b, 3, 2));
  for (const auto& block : b) CHECK(std::is_sorted(block.begin(), block.end()));
}

TEST_CASE("seeded random determinism") {
  const SeededRandomSchedule a{2, 6, 42};
  CHECK(run(a, 6, 100) == run(a, 6, 100));
  SeededRandomSchedule other = a;
  other.seed = 43;
  CHECK(run(a, 6, 100) != run(other, 6, 100));
}

TEST_CASE("covering property on random parameters") {
  testing::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t S = rng.index(1, 9);
    const std::size_t bs = rng.index(1, S);
    ActivationSchedule sch;
    switch (rng.index(0, 2)) {
      case 0:
        sch = FullSchedule{};
        break;
      case 1:
        sch = RoundRobinSchedule{bs};
        break;
      default:
        sch = SeededRandomSchedule{bs, rng.index(1, 2 * S), rng.index(0, 1000)};
    }
    const auto blocks = run(sch, S, 200);
    CHECK(blocks[0].size() == S);
    CHECK(covers_every_window(blocks, S, cover_window(sch, S)));
  }
}

TEST_CASE("zero block size") {
  CHECK(testing::error_code([] { BlockSelector(RoundRobinSchedule{0}, 3); }) == ErrorCode::ParameterOutOfRange);
  CHECK(testing::error_code([] { BlockSelector(SeededRandomSchedule{0, 3, 1}, 3); }) == ErrorCode::ParameterOutOfRange);
}
