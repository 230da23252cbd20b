#include "ptx/slot_scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ptx {

SlotScheduler::SlotScheduler(std::size_t window, std::vector<std::size_t> slot_order)
    : window_(window), order_(std::move(slot_order)) {
  if (window_ == 0) throw std::invalid_argument("SlotScheduler: window must be >= 1");
  if (order_.empty()) {
    order_.resize(window_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }
  std::vector<std::size_t> sorted = order_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted.size() != window_ || sorted[i] != i) {
      throw std::invalid_argument("SlotScheduler: slot order must be a permutation of 0..W-1");
    }
  }
}

std::vector<std::size_t> slot_mask(const SlotScheduler& scheduler, std::size_t t) {
  const std::size_t w = scheduler.window();
  const std::size_t first = t + 1 > w ? t + 1 - w : 0;
  std::vector<std::size_t> slots;
  slots.reserve(t + 1 - first);
  for (std::size_t token = first; token <= t; ++token) slots.push_back(scheduler.slot_of(token));
  return slots;
}

}  // namespace ptx
