#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "umaml/meta_engine.hpp"

namespace umaml::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw key -> value text. Strings are unquoted; arrays keep their brackets.
using KeyValues = std::map<std::string, std::string, std::less<>>;

// Flat TOML subset: `key = value` lines, `#` comments, blank lines. Values are
// numbers, booleans, "strings" or [arrays] of numbers.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);

// `overrides` wins on every key present in both.
KeyValues merge(KeyValues base, const KeyValues& overrides);

enum class TaskFamily { kSinusoid, kSynthCls, kDataset };

struct RunConfig {
  MetaConfig meta;
  std::string task = "sinusoid";  // sinusoid | synthcls | dataset:<path>
  std::uint64_t seed = 0;
  std::string out = "out";

  std::size_t shot = 10;
  std::size_t query = 10;  // points (sinusoid) or per class (classification)
  std::size_t way = 5;
  std::size_t dim = 16;
  double noise_std = 0.3;
  double prototype_range = 1.0;

  std::vector<std::size_t> hidden{40, 40};
  Activation activation = Activation::kRelu;

  std::size_t eval_tasks = 100;
  std::size_t eval_inner_steps = 10;
  std::size_t log_interval = 100;

  std::vector<double> alphas{1e-3, 1e-2, 1e-1};
  std::vector<std::size_t> n_queries{1, 5, 15};

  TaskFamily family() const;
  std::filesystem::path dataset_path() const;
  bool classification() const { return family() != TaskFamily::kSinusoid; }
  void validate() const;
};

// Task defaults first, then every key in kv. Unknown keys and malformed values
// raise ConfigError. Without an explicit threshold, classification tasks use
// ln(way) and regression uses 1.
RunConfig build_config(const KeyValues& kv);

// Every key, in a fixed order; parse_key_values + build_config reproduces cfg.
std::string echo_config(const RunConfig& cfg);

// Shortest round-trip decimal form.
std::string format_double(double v);

// Task plumbing derived from a config.
class TaskFactory {
 public:
  explicit TaskFactory(const RunConfig& cfg);

  std::unique_ptr<TaskSource> source(Split split, std::size_t query) const;
  std::unique_ptr<TaskSource> source(Split split) const { return source(split, cfg_.query); }
  // First `count` episodes of the evaluation stream.
  std::vector<Episode> eval_set(std::size_t count, std::size_t query) const;
  std::vector<Episode> eval_set() const { return eval_set(cfg_.eval_tasks, cfg_.query); }
  MlpSpec model_spec() const;
  LossKind loss_kind() const;

 private:
  RunConfig cfg_;
  std::shared_ptr<const Dataset> dataset_;
};

}  // namespace umaml::harness
