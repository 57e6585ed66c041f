#include "umaml/tasks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace umaml {

EpisodeStreams EpisodeStreams::train(std::uint64_t seed) {
  return {CounterRng(seed, Stream::kTrainTasks), CounterRng(seed, Stream::kTrainData),
          CounterRng(seed, Stream::kTrainPermutation)};
}

EpisodeStreams EpisodeStreams::eval(std::uint64_t seed) {
  return {CounterRng(seed, Stream::kEvalTasks), CounterRng(seed, Stream::kEvalData),
          CounterRng(seed, Stream::kEvalPermutation)};
}

double SinusoidTask::operator()(double x) const { return amplitude * std::sin(x + phase); }

SinusoidTask sample_sinusoid_task(CounterRng& rng) {
  std::uniform_real_distribution<double> amp(SinusoidTask::kMinAmplitude,
                                             SinusoidTask::kMaxAmplitude);
  std::uniform_real_distribution<double> phase(SinusoidTask::kMinPhase,
                                               SinusoidTask::kMaxPhase);
  SinusoidTask t;
  t.amplitude = amp(rng);
  t.phase = phase(rng);
  return t;
}

Episode sample_sinusoid_episode(const SinusoidTask& task, std::size_t shot,
                                std::size_t query, CounterRng& rng) {
  if (shot == 0 || query == 0) {
    throw std::invalid_argument("sinusoid episodes need at least one support and query point");
  }
  std::uniform_real_distribution<double> xs(-SinusoidTask::kInputRange,
                                            SinusoidTask::kInputRange);
  auto draw = [&](std::size_t n, Tensor& x, Tensor& y) {
    x = Tensor({n, 1});
    y = Tensor({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = xs(rng);
      y[i] = task(x[i]);
    }
  };
  Episode ep;
  draw(shot, ep.support_x, ep.support_y);
  draw(query, ep.query_x, ep.query_y);
  ep.way = 1;
  ep.shot = shot;
  ep.query_per_class = query;
  return ep;
}

void SynthClsConfig::validate() const {
  if (way < 2) throw std::invalid_argument("synthetic classification needs way >= 2");
  if (shot < 1) throw std::invalid_argument("synthetic classification needs shot >= 1");
  if (query_per_class < 1) throw std::invalid_argument("query_per_class must be >= 1");
  if (dim < 1) throw std::invalid_argument("feature dim must be >= 1");
  if (!(noise_std > 0.0)) throw std::invalid_argument("noise_std must be > 0");
  if (!(prototype_range > 0.0)) throw std::invalid_argument("prototype_range must be > 0");
}

namespace {

// Emits rows [row, row + n) for class `slot`; `make` fills the features.
template <typename MakeRow>
void fill_rows(Tensor& y, std::size_t& row, std::size_t n,
               std::size_t slot, MakeRow make) {
  for (std::size_t i = 0; i < n; ++i, ++row) {
    make(row);
    y[row] = static_cast<double>(slot);
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

Episode sample_synth_cls_episode(const SynthClsConfig& cfg, EpisodeStreams& rng) {
  cfg.validate();
  const std::size_t way = cfg.way, dim = cfg.dim;
  std::uniform_real_distribution<double> proto_dist(-cfg.prototype_range,
                                                    cfg.prototype_range);
  Tensor prototypes({way, dim});
  for (double& v : prototypes.values()) v = proto_dist(rng.task);

  Episode ep;
  ep.way = way;
  ep.shot = cfg.shot;
  ep.query_per_class = cfg.query_per_class;
  ep.slot_classes = shuffled_indices(way, rng.permutation);

  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  auto sample_set = [&](std::size_t per_class, Tensor& x, Tensor& y) {
    x = Tensor({way * per_class, dim});
    y = Tensor({way * per_class, 1});
    std::size_t row = 0;
    for (std::size_t slot = 0; slot < way; ++slot) {
      const std::size_t cls = ep.slot_classes[slot];
      fill_rows(y, row, per_class, slot, [&](std::size_t r) {
        for (std::size_t d = 0; d < dim; ++d) {
          x.at(r, d) = prototypes.at(cls, d) + noise(rng.data);
        }
      });
    }
  };
  sample_set(cfg.shot, ep.support_x, ep.support_y);
  sample_set(cfg.query_per_class, ep.query_x, ep.query_y);
  return ep;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> read_f64_file(const std::filesystem::path& file,
                                  const DatasetClass& cls, std::size_t dim) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw std::runtime_error("missing class file for '" + cls.name + "': " +
                             file.string());
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const std::size_t expected = cls.count * dim * sizeof(double);
  if (bytes.size() != expected) {
    throw std::runtime_error("size mismatch for class '" + cls.name + "': expected " +
                             std::to_string(expected) + " bytes, got " +
                             std::to_string(bytes.size()));
  }
  std::vector<double> values(cls.count * dim);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b]))
              << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  const auto manifest_path =
      std::filesystem::is_directory(path) ? path / "meta.json" : path;
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("missing dataset manifest " + manifest_path.string());

  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse " + manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  const auto dim = j.at("dim").get<std::int64_t>();
  if (dim <= 0) throw std::runtime_error("dataset dim must be positive");
  ds.manifest.dim = static_cast<std::size_t>(dim);
  for (const auto& c : j.at("classes")) {
    const auto count = c.at("count").get<std::int64_t>();
    if (count <= 0) {
      throw std::runtime_error("class '" + c.at("name").get<std::string>() +
                               "' must have a positive count");
    }
    ds.manifest.classes.push_back({c.at("name").get<std::string>(),
                                   c.at("file").get<std::string>(),
                                   static_cast<std::size_t>(count)});
  }
  if (ds.manifest.classes.empty()) throw std::runtime_error("dataset has no classes");

  const auto root = manifest_path.parent_path();
  for (const auto& cls : ds.manifest.classes) {
    auto values = read_f64_file(root / cls.file, cls, ds.manifest.dim);
    ds.class_data.emplace_back(Shape{cls.count, ds.manifest.dim}, std::move(values));
  }
  return ds;
}

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<std::string>& class_names,
                   const std::vector<Tensor>& class_data) {
  if (class_names.size() != class_data.size() || class_data.empty()) {
    throw std::invalid_argument("need one name per non-empty class array");
  }
  std::filesystem::create_directories(dir);
  const std::size_t dim = class_data.front().cols();
  nlohmann::json j;
  j["dim"] = dim;
  j["classes"] = nlohmann::json::array();
  for (std::size_t c = 0; c < class_data.size(); ++c) {
    if (class_data[c].rank() != 2 || class_data[c].cols() != dim) {
      throw std::invalid_argument("class arrays must all be [count x dim]");
    }
    const std::string file = class_names[c] + ".bin";
    std::ofstream out(dir / file, std::ios::binary);
    for (double v : class_data[c].values()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      char buf[8];
      for (std::size_t b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
      out.write(buf, 8);
    }
    j["classes"].push_back(
        {{"name", class_names[c]}, {"file", file}, {"count", class_data[c].rows()}});
  }
  std::ofstream(dir / "meta.json") << j.dump(2) << "\n";
}

Episode sample_dataset_episode(const Dataset& dataset, std::size_t way,
                               std::size_t shot, std::size_t query_per_class,
                               EpisodeStreams& rng) {
  if (way < 2 || way > dataset.num_classes()) {
    throw std::invalid_argument("way must be in [2, " +
                                std::to_string(dataset.num_classes()) + "]");
  }
  if (shot < 1 || query_per_class < 1) {
    throw std::invalid_argument("shot and query_per_class must be >= 1");
  }
  auto chosen = shuffled_indices(dataset.num_classes(), rng.task);
  chosen.resize(way);
  std::sort(chosen.begin(), chosen.end());
  const auto order = shuffled_indices(way, rng.permutation);

  Episode ep;
  ep.way = way;
  ep.shot = shot;
  ep.query_per_class = query_per_class;
  for (std::size_t slot = 0; slot < way; ++slot) ep.slot_classes.push_back(chosen[order[slot]]);

  const std::size_t dim = dataset.dim();
  ep.support_x = Tensor({way * shot, dim});
  ep.support_y = Tensor({way * shot, 1});
  ep.query_x = Tensor({way * query_per_class, dim});
  ep.query_y = Tensor({way * query_per_class, 1});
  for (std::size_t slot = 0; slot < way; ++slot) {
    const std::size_t cls = ep.slot_classes[slot];
    const Tensor& data = dataset.class_data[cls];
    if (data.rows() < shot + query_per_class) {
      throw std::invalid_argument("class '" + dataset.manifest.classes[cls].name +
                                  "' has too few examples for shot + query");
    }
    // Support and query come from disjoint positions of one permutation.
    const auto rows = shuffled_indices(data.rows(), rng.data);
    for (std::size_t i = 0; i < shot + query_per_class; ++i) {
      const bool support = i < shot;
      Tensor& x = support ? ep.support_x : ep.query_x;
      Tensor& y = support ? ep.support_y : ep.query_y;
      const std::size_t r = support ? slot * shot + i : slot * query_per_class + (i - shot);
      for (std::size_t d = 0; d < dim; ++d) x.at(r, d) = data.at(rows[i], d);
      y[r] = static_cast<double>(slot);
    }
  }
  return ep;
}

// ---------------------------------------------------------------------------

SinusoidSource::SinusoidSource(std::size_t shot, std::size_t query, std::uint64_t seed,
                               Split split)
    : shot_(shot),
      query_(query),
      rng_(split == Split::kTrain ? EpisodeStreams::train(seed) : EpisodeStreams::eval(seed)) {}

Episode SinusoidSource::next() {
  const SinusoidTask task = sample_sinusoid_task(rng_.task);
  return sample_sinusoid_episode(task, shot_, query_, rng_.data);
}

SynthClsSource::SynthClsSource(SynthClsConfig cfg, std::uint64_t seed, Split split)
    : cfg_(cfg),
      rng_(split == Split::kTrain ? EpisodeStreams::train(seed) : EpisodeStreams::eval(seed)) {
  cfg_.validate();
}

Episode SynthClsSource::next() { return sample_synth_cls_episode(cfg_, rng_); }

DatasetSource::DatasetSource(std::shared_ptr<const Dataset> dataset, std::size_t way,
                             std::size_t shot, std::size_t query, std::uint64_t seed,
                             Split split)
    : dataset_(std::move(dataset)),
      way_(way),
      shot_(shot),
      query_(query),
      rng_(split == Split::kTrain ? EpisodeStreams::train(seed) : EpisodeStreams::eval(seed)) {}

Episode DatasetSource::next() {
  return sample_dataset_episode(*dataset_, way_, shot_, query_, rng_);
}

Tensor one_hot(const Tensor& labels, std::size_t classes) {
  Tensor out({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = labels[i];
    if (v < 0 || v >= static_cast<double>(classes) || v != std::floor(v)) {
      throw std::invalid_argument("label out of range for one-hot encoding");
    }
    out.at(i, static_cast<std::size_t>(v)) = 1.0;
  }
  return out;
}

}  // namespace umaml
