#pragma once

#include <cstddef>
#include <vector>

namespace ptx {

/// FIFO assignment of tokens to W cache slots. Token t lands in
/// slot_order[t mod W]; slot_order defaults to the identity.
class SlotScheduler {
 public:
  explicit SlotScheduler(std::size_t window, std::vector<std::size_t> slot_order = {});

  std::size_t window() const noexcept { return window_; }
  std::size_t tokens_seen() const noexcept { return tokens_; }
  std::size_t next_slot() const noexcept { return slot_of(tokens_); }
  std::size_t filled() const noexcept { return tokens_ < window_ ? tokens_ : window_; }
  std::size_t slot_of(std::size_t token) const noexcept { return order_[token % window_]; }

  void advance() noexcept { ++tokens_; }
  void reset() noexcept { tokens_ = 0; }

 private:
  std::size_t window_;
  std::vector<std::size_t> order_;
  std::size_t tokens_ = 0;
};

/// Slots holding tokens max(0, t + 1 - W) .. t, oldest first.
std::vector<std::size_t> slot_mask(const SlotScheduler& scheduler, std::size_t t);

}  // namespace ptx
