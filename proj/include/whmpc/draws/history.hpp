#pragma once

#include <deque>
#include <stdexcept>
#include <vector>

namespace whmpc::draws {

/// Rolling store of per-step draw estimates, binned by time of day. Values
/// are kept raw (possibly negative); clamping happens at forecast time.
class DrawHistory {
 public:
  explicit DrawHistory(int capacity = 28 * 144, int bins_per_day = 144)
      : capacity_(capacity), bins_(bins_per_day) {
    if (capacity < 1 || bins_per_day < 1)
      throw std::invalid_argument("draw history: capacity and bins must be positive");
  }

  /// Appends the estimate for control step `step`; steps must be consecutive.
  void push(long step, double value) {
    if (!values_.empty() && step != next_step_)
      throw std::invalid_argument("draw history: steps must be pushed consecutively");
    values_.push_back(value);
    if (static_cast<int>(values_.size()) > capacity_) values_.pop_front();
    next_step_ = step + 1;
  }
  /// Appends at the step following the newest value (step 0 when empty).
  void push(double value) { push(next_step_, value); }

  int capacity() const { return capacity_; }
  int bins_per_day() const { return bins_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double oldest() const { return values_.front(); }
  double newest() const { return values_.back(); }

  /// Control-step index of the k-th stored value.
  long step_of(std::size_t k) const {
    return next_step_ - static_cast<long>(values_.size()) + static_cast<long>(k);
  }
  int bin_of_step(long step) const { return static_cast<int>(((step % bins_) + bins_) % bins_); }
  bool has_full_day() const { return static_cast<int>(values_.size()) >= bins_; }

  /// Stored samples grouped by time-of-day bin.
  std::vector<std::vector<double>> by_bin() const {
    std::vector<std::vector<double>> out(bins_);
    for (std::size_t k = 0; k < values_.size(); ++k) out[bin_of_step(step_of(k))].push_back(values_[k]);
    return out;
  }

 private:
  int capacity_;
  int bins_;
  long next_step_ = 0;
  std::deque<double> values_;
};

}  // namespace whmpc::draws
