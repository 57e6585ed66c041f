#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "umaml/rng.hpp"
#include "umaml/tensor.hpp"

namespace umaml {

enum class LossKind { kMse, kCrossEntropy };

// One task's support and query sets. Targets are [rows x 1]: regression
// values, or class indices in [0, way) stored as doubles.
struct Episode {
  Tensor support_x;
  Tensor support_y;
  Tensor query_x;
  Tensor query_y;
  std::size_t way = 1;
  std::size_t shot = 0;
  std::size_t query_per_class = 0;
  // Source class occupying each label slot (classification only).
  std::vector<std::size_t> slot_classes;

  friend bool operator==(const Episode&, const Episode&) = default;
};

// The independent streams a sampler draws from.
struct EpisodeStreams {
  CounterRng task;
  CounterRng data;
  CounterRng permutation;

  static EpisodeStreams train(std::uint64_t seed);
  static EpisodeStreams eval(std::uint64_t seed);
};

// ---------------------------------------------------------------------------
// Sinusoid regression: y = amplitude * sin(x + phase), x ~ U[-5, 5].

struct SinusoidTask {
  static constexpr double kMinAmplitude = 0.1;
  static constexpr double kMaxAmplitude = 5.0;
  static constexpr double kMinPhase = 0.0;
  static constexpr double kMaxPhase = 3.14159265358979323846;
  static constexpr double kInputRange = 5.0;

  double amplitude = 1.0;
  double phase = 0.0;

  double operator()(double x) const;
};

SinusoidTask sample_sinusoid_task(CounterRng& rng);
Episode sample_sinusoid_episode(const SinusoidTask& task, std::size_t shot,
                                std::size_t query, CounterRng& rng);

// ---------------------------------------------------------------------------
// Synthetic N-way K-shot classification: Gaussian clusters around prototypes
// drawn uniformly from a cube.

struct SynthClsConfig {
  std::size_t way = 5;
  std::size_t shot = 1;
  std::size_t query_per_class = 15;
  std::size_t dim = 16;
  double noise_std = 0.3;
  double prototype_range = 1.0;

  void validate() const;
};

Episode sample_synth_cls_episode(const SynthClsConfig& cfg, EpisodeStreams& rng);

// ---------------------------------------------------------------------------
// External class-labelled vector datasets: a meta.json manifest plus one raw
// little-endian f64 row-major file per class.

struct DatasetClass {
  std::string name;
  std::string file;
  std::size_t count = 0;
};

struct DatasetManifest {
  std::size_t dim = 0;
  std::vector<DatasetClass> classes;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Tensor> class_data;  // [count x dim] per class

  std::size_t dim() const { return manifest.dim; }
  std::size_t num_classes() const { return class_data.size(); }
};

// `path` is either the manifest itself or a directory containing meta.json.
// Class file paths are resolved relative to the manifest's directory.
Dataset load_dataset(const std::filesystem::path& path);

// Writes meta.json and one .bin file per class into `dir`.
void write_dataset(const std::filesystem::path& dir,
                   const std::vector<std::string>& class_names,
                   const std::vector<Tensor>& class_data);

// Picks `way` distinct classes, assigns them to shuffled label slots, and draws
// non-overlapping support and query rows within each class.
Episode sample_dataset_episode(const Dataset& dataset, std::size_t way,
                               std::size_t shot, std::size_t query_per_class,
                               EpisodeStreams& rng);

// ---------------------------------------------------------------------------

enum class Split { kTrain, kEval };

class TaskSource {
 public:
  virtual ~TaskSource() = default;
  virtual Episode next() = 0;
  virtual LossKind loss_kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
};

class SinusoidSource final : public TaskSource {
 public:
  SinusoidSource(std::size_t shot, std::size_t query, std::uint64_t seed, Split split);
  Episode next() override;
  LossKind loss_kind() const override { return LossKind::kMse; }
  std::size_t input_dim() const override { return 1; }
  std::size_t output_dim() const override { return 1; }

 private:
  std::size_t shot_;
  std::size_t query_;
  EpisodeStreams rng_;
};

class SynthClsSource final : public TaskSource {
 public:
  SynthClsSource(SynthClsConfig cfg, std::uint64_t seed, Split split);
  Episode next() override;
  LossKind loss_kind() const override { return LossKind::kCrossEntropy; }
  std::size_t input_dim() const override { return cfg_.dim; }
  std::size_t output_dim() const override { return cfg_.way; }

 private:
  SynthClsConfig cfg_;
  EpisodeStreams rng_;
};

class DatasetSource final : public TaskSource {
 public:
  DatasetSource(std::shared_ptr<const Dataset> dataset, std::size_t way,
                std::size_t shot, std::size_t query, std::uint64_t seed, Split split);
  Episode next() override;
  LossKind loss_kind() const override { return LossKind::kCrossEntropy; }
  std::size_t input_dim() const override { return dataset_->dim(); }
  std::size_t output_dim() const override { return way_; }

 private:
  std::shared_ptr<const Dataset> dataset_;
  std::size_t way_;
  std::size_t shot_;
  std::size_t query_;
  EpisodeStreams rng_;
};

// [rows x classes] indicator matrix for integer-valued labels.
Tensor one_hot(const Tensor& labels, std::size_t classes);

}  // namespace umaml
