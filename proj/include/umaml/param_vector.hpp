#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "umaml/tensor.hpp"

namespace umaml {

struct ParamEntry {
  std::string name;
  Tensor value;

  friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

// Ordered, named model parameters.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<ParamEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Total scalar count across entries.
  std::size_t numel() const;

  const ParamEntry& operator[](std::size_t i) const { return entries_[i]; }
  ParamEntry& operator[](std::size_t i) { return entries_[i]; }
  const Tensor& at(std::string_view name) const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  bool same_layout(const ParamVector& other) const;

  // Flat coordinate access in entry order.
  double coord(std::size_t i) const;
  double& coord(std::size_t i);

  // this + c * other, entrywise.
  ParamVector axpy(double c, const ParamVector& other) const;
  ParamVector zeros_like() const;

  std::vector<double> flatten() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<ParamEntry> entries_;
};

// Binary record format, all integers and floats little-endian:
//   "UPV1" magic, u64 record count, then per record:
//   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values[numel].
void write_params(std::ostream& out, const ParamVector& params);
ParamVector read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_params(const std::filesystem::path& path);

}  // namespace umaml
