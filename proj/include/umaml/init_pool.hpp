#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <span>
#include <vector>

#include "umaml/mlp.hpp"
#include "umaml/param_vector.hpp"
#include "umaml/tasks.hpp"

namespace umaml {

struct Snapshot {
  std::size_t iteration = 0;
  ParamVector params;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct Selection {
  std::size_t index = 0;
  double loss = 0.0;
  // Evaluation loss of every snapshot, in pool order.
  std::vector<double> losses;
};

// Bounded FIFO of post-update parameter snapshots; index 0 is the oldest.
class InitPool {
 public:
  explicit InitPool(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }
  const Snapshot& operator[](std::size_t i) const { return snapshots_.at(i); }
  const Snapshot& latest() const;

  // Iteration ids must be strictly increasing.
  void store(ParamVector params, std::size_t iteration);

  // Snapshot with the lowest mean pre-adaptation support loss over the
  // episodes; the smallest index wins ties.
  Selection select_best(std::span<const Episode> episodes, const MlpSpec& spec,
                        LossKind kind) const;

  // One snapshot_<iteration>.bin per entry.
  void save(const std::filesystem::path& dir) const;
  static InitPool load(const std::filesystem::path& dir, std::size_t capacity);

 private:
  std::size_t capacity_;
  std::deque<Snapshot> snapshots_;
};

}  // namespace umaml
