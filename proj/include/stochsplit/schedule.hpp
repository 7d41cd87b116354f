#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace stochsplit {

/// Every scenario on every iteration.
struct FullSchedule {};

/// Cyclic contiguous blocks of `block_size` scenarios after the initial full
/// sweep. Covers all scenarios in every ceil(S / block_size) iterations.
struct RoundRobinSchedule {
  std::size_t block_size = 1;
};

/// Uniformly random blocks of `block_size` scenarios. A scenario left idle for
/// `cover_window` consecutive iterations is forced into the next block, so
/// every window of cover_window + 1 iterations covers all scenarios.
struct SeededRandomSchedule {
  std::size_t block_size = 1;
  std::size_t cover_window = 1;
  std::uint64_t seed = 0;
};

using ActivationSchedule = std::variant<FullSchedule, RoundRobinSchedule, SeededRandomSchedule>;

/// The m of the covering condition: every m + 1 consecutive iterations
/// activate every scenario.
std::size_t cover_window(const ActivationSchedule& schedule, std::size_t num_scenarios);

/// Stateful generator of the active blocks. Iteration 0 always activates all
/// scenarios. Throws ParameterOutOfRange for a zero block size.
class BlockSelector {
 public:
  BlockSelector(ActivationSchedule schedule, std::size_t num_scenarios);

  /// Active scenarios (ascending) for iteration n. `last_activated[s]` is the
  /// most recent iteration that activated s; only read for n > 0.
  std::vector<std::size_t> next(std::size_t n, std::span<const std::size_t> last_activated);

  const ActivationSchedule& schedule() const noexcept { return schedule_; }

 private:
  ActivationSchedule schedule_;
  std::size_t num_scenarios_;
  std::mt19937_64 rng_;
};

}  // namespace stochsplit
