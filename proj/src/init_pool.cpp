#include "umaml/init_pool.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <string>

#include "umaml/loss.hpp"

namespace umaml {

InitPool::InitPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("pool capacity must be >= 1");
}

const Snapshot& InitPool::latest() const {
  if (snapshots_.empty()) throw std::logic_error("empty initialization pool");
  return snapshots_.back();
}

void InitPool::store(ParamVector params, std::size_t iteration) {
  if (!snapshots_.empty() && iteration <= snapshots_.back().iteration) {
    throw std::invalid_argument("snapshot iteration " + std::to_string(iteration) +
                                " is not after " +
                                std::to_string(snapshots_.back().iteration));
  }
  snapshots_.push_back({iteration, std::move(params)});
  while (snapshots_.size() > capacity_) snapshots_.pop_front();
}

Selection InitPool::select_best(std::span<const Episode> episodes, const MlpSpec& spec,
                                LossKind kind) const {
  if (snapshots_.empty()) throw std::logic_error("select_best on an empty pool");
  if (episodes.empty()) throw std::invalid_argument("select_best needs episodes");
  Selection sel;
  sel.losses.reserve(snapshots_.size());
  for (const auto& snap : snapshots_) {
    double total = 0.0;
    for (const auto& ep : episodes) {
      total += evaluate_loss(spec, snap.params, ep.support_x, ep.support_y, kind).loss;
    }
    sel.losses.push_back(total / static_cast<double>(episodes.size()));
  }
  const auto best = std::min_element(sel.losses.begin(), sel.losses.end());
  sel.index = static_cast<std::size_t>(best - sel.losses.begin());
  sel.loss = *best;
  return sel;
}

void InitPool::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& snap : snapshots_) {
    save_params(dir / ("snapshot_" + std::to_string(snap.iteration) + ".bin"), snap.params);
  }
}

InitPool InitPool::load(const std::filesystem::path& dir, std::size_t capacity) {
  std::vector<std::pair<std::size_t, std::filesystem::path>> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string stem = entry.path().stem().string();
    constexpr std::string_view prefix = "snapshot_";
    if (entry.path().extension() != ".bin" || !stem.starts_with(prefix)) continue;
    std::size_t id = 0;
    const char* first = stem.data() + prefix.size();
    const auto [ptr, ec] = std::from_chars(first, stem.data() + stem.size(), id);
    if (ec != std::errc{} || ptr != stem.data() + stem.size()) continue;
    files.emplace_back(id, entry.path());
  }
  std::sort(files.begin(), files.end());
  InitPool pool(capacity);
  for (const auto& [id, path] : files) pool.store(load_params(path), id);
  return pool;
}

}  // namespace umaml
