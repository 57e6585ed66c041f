#include "umaml/param_vector.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace umaml {

ParamVector::ParamVector(std::vector<ParamEntry> entries)
    : entries_(std::move(entries)) {}

std::size_t ParamVector::numel() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

const Tensor& ParamVector::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].value.shape() != other.entries_[i].value.shape()) {
      return false;
    }
  }
  return true;
}

double ParamVector::coord(std::size_t i) const {
  for (const auto& e : entries_) {
    if (i < e.value.size()) return e.value[i];
    i -= e.value.size();
  }
  throw std::out_of_range("parameter coordinate out of range");
}

double& ParamVector::coord(std::size_t i) {
  for (auto& e : entries_) {
    if (i < e.value.size()) return e.value[i];
    i -= e.value.size();
  }
  throw std::out_of_range("parameter coordinate out of range");
}

ParamVector ParamVector::axpy(double c, const ParamVector& other) const {
  if (!same_layout(other)) {
    throw std::invalid_argument("axpy on parameter vectors of different layout");
  }
  ParamVector r = *this;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto dst = r.entries_[i].value.values();
    auto src = other.entries_[i].value.values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += c * src[j];
  }
  return r;
}

ParamVector ParamVector::zeros_like() const {
  ParamVector r = *this;
  for (auto& e : r.entries_) e.value = Tensor(e.value.shape());
  return r;
}

std::vector<double> ParamVector::flatten() const {
  std::vector<double> out;
  out.reserve(numel());
  for (const auto& e : entries_) {
    out.insert(out.end(), e.value.values().begin(), e.value.values().end());
  }
  return out;
}

namespace {

constexpr std::array<char, 4> kMagic{'U', 'P', 'V', '1'};

template <typename T>
void put_le(std::ostream& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(v);
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw std::runtime_error("truncated parameter file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(buf[i]) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_params(std::ostream& out, const ParamVector& params) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint64_t>(out, params.size());
  for (const auto& e : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) put_le<std::uint64_t>(out, d);
    for (double v : e.value.values()) put_le<double>(out, v);
  }
  if (!out) throw std::runtime_error("failed writing parameter records");
}

ParamVector read_params(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a parameter file");
  const auto count = get_le<std::uint64_t>(in);
  std::vector<ParamEntry> entries;
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto name_len = get_le<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get_le<std::uint32_t>(in);
    if (!in || rank == 0 || rank > 2) {
      throw std::runtime_error("corrupt parameter record '" + name + "'");
    }
    Shape shape(rank);
    for (auto& d : shape) d = get_le<std::uint64_t>(in);
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = get_le<double>(in);
    entries.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return ParamVector(std::move(entries));
}

void save_params(const std::filesystem::path& path, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_params(out, params);
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_params(in);
}

}  // namespace umaml
