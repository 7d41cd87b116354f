#include "stochsplit/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "stochsplit/error.hpp"

namespace stochsplit {

namespace {

std::size_t num_blocks(std::size_t num_scenarios, std::size_t block_size) {
  return (num_scenarios + block_size - 1) / block_size;
}

}  // namespace

std::size_t cover_window(const ActivationSchedule& schedule, std::size_t num_scenarios) {
  if (const auto* rr = std::get_if<RoundRobinSchedule>(&schedule))
    return num_blocks(num_scenarios, rr->block_size) - 1;
  if (const auto* sr = std::get_if<SeededRandomSchedule>(&schedule)) return sr->cover_window;
  return 0;
}

BlockSelector::BlockSelector(ActivationSchedule schedule, std::size_t num_scenarios)
    : schedule_(std::move(schedule)), num_scenarios_(num_scenarios) {
  if (const auto* rr = std::get_if<RoundRobinSchedule>(&schedule_)) {
    if (rr->block_size == 0) throw Error(ErrorCode::ParameterOutOfRange, "block size must be >= 1");
  }
  if (const auto* sr = std::get_if<SeededRandomSchedule>(&schedule_)) {
    if (sr->block_size == 0) throw Error(ErrorCode::ParameterOutOfRange, "block size must be >= 1");
    rng_.seed(sr->seed);
  }
}

std::vector<std::size_t> BlockSelector::next(std::size_t n, std::span<const std::size_t> last_activated) {
  std::vector<std::size_t> all(num_scenarios_);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (n == 0 || std::holds_alternative<FullSchedule>(schedule_)) return all;

  if (const auto* rr = std::get_if<RoundRobinSchedule>(&schedule_)) {
    const std::size_t block = (n - 1) % num_blocks(num_scenarios_, rr->block_size);
    const std::size_t first = block * rr->block_size;
    const std::size_t last = std::min(first + rr->block_size, num_scenarios_);
    return {all.begin() + static_cast<std::ptrdiff_t>(first), all.begin() + static_cast<std::ptrdiff_t>(last)};
  }

  const auto& sr = std::get<SeededRandomSchedule>(schedule_);
  if (last_activated.size() != num_scenarios_)
    throw Error(ErrorCode::ShapeMismatch, "last_activated has wrong length");

  // Scenarios whose idle streak would otherwise reach cover_window + 1.
  std::vector<std::size_t> active;
  std::vector<std::size_t> rest;
  for (std::size_t s = 0; s < num_scenarios_; ++s) {
    if (n - last_activated[s] > sr.cover_window) {
      active.push_back(s);
    } else {
      rest.push_back(s);
    }
  }
  if (active.size() < sr.block_size && !rest.empty()) {
    const std::size_t need = std::min(sr.block_size - active.size(), rest.size());
    std::shuffle(rest.begin(), rest.end(), rng_);
    active.insert(active.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need));
  }
  std::sort(active.begin(), active.end());
  return active;
}

}  // namespace stochsplit
