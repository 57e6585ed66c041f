#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "umaml/tasks.hpp"

using namespace umaml;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("umaml_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Dataset toy_dataset(const fs::path& dir, std::size_t classes, std::size_t count, std::size_t dim) {
  std::vector<std::string> names;
  std::vector<Tensor> data;
  for (std::size_t c = 0; c < classes; ++c) {
    names.push_back("class" + std::to_string(c));
    Tensor t({count, dim});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(c * 1000 + i);
    data.push_back(t);
  }
  write_dataset(dir, names, data);
  return load_dataset(dir);
}

}  // namespace

TEST(Sinusoid, TaskRanges) {
  CounterRng rng(1, Stream::kTrainTasks);
  for (int i = 0; i < 10000; ++i) {
    const SinusoidTask t = sample_sinusoid_task(rng);
    EXPECT_GE(t.amplitude, 0.1);
    EXPECT_LE(t.amplitude, 5.0);
    EXPECT_GE(t.phase, 0.0);
    EXPECT_LE(t.phase, std::numbers::pi);
  }
}

TEST(Sinusoid, TaskSequenceDeterministic) {
  CounterRng a(42, Stream::kTrainTasks), b(42, Stream::kTrainTasks);
  for (int i = 0; i < 100; ++i) {
    const SinusoidTask x = sample_sinusoid_task(a), y = sample_sinusoid_task(b);
    EXPECT_EQ(x.amplitude, y.amplitude);
    EXPECT_EQ(x.phase, y.phase);
  }
}

TEST(Sinusoid, TargetExamples) {
  EXPECT_EQ((SinusoidTask{1.0, 0.0})(0.0), 0.0);
  EXPECT_NEAR((SinusoidTask{2.0, std::numbers::pi / 2})(0.0), 2.0, 1e-15);
}

TEST(Sinusoid, EpisodeShapesAndTargets) {
  CounterRng rng(3, Stream::kTrainData);
  const SinusoidTask task{1.7, 0.4};
  const Episode ep = sample_sinusoid_episode(task, 10, 25, rng);
  EXPECT_EQ(ep.support_x.shape(), (Shape{10, 1}));
  EXPECT_EQ(ep.query_x.shape(), (Shape{25, 1}));
  EXPECT_EQ(ep.way, 1u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_GE(ep.support_x[i], -5.0);
    EXPECT_LE(ep.support_x[i], 5.0);
    EXPECT_DOUBLE_EQ(ep.support_y[i], task(ep.support_x[i]));
  }
}

TEST(Sinusoid, SourceReproducible) {
  SinusoidSource a(10, 10, 5, Split::kTrain), b(10, 10, 5, Split::kTrain);
  SinusoidSource e(10, 10, 5, Split::kEval);
  for (int i = 0; i < 20; ++i) {
    const Episode x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_FALSE(x == e.next());
  }
}

TEST(SynthCls, EpisodeShapes) {
  SynthClsConfig cfg;
  auto rng = EpisodeStreams::train(0);
  const Episode ep = sample_synth_cls_episode(cfg, rng);
  EXPECT_EQ(ep.support_x.shape(), (Shape{5, 16}));
  EXPECT_EQ(ep.query_x.shape(), (Shape{75, 16}));
  EXPECT_EQ(ep.support_y.shape(), (Shape{5, 1}));
  for (double y : ep.query_y.values()) {
    EXPECT_GE(y, 0.0);
    EXPECT_LT(y, 5.0);
    EXPECT_EQ(y, std::floor(y));
  }
}

TEST(SynthCls, TinyNoiseCollapsesToPrototypes) {
  SynthClsConfig cfg;
  cfg.noise_std = 1e-300;
  cfg.shot = 2;
  cfg.query_per_class = 3;
  auto rng = EpisodeStreams::train(9);
  const Episode ep = sample_synth_cls_episode(cfg, rng);
  // Every row of a class must equal that class's first support row.
  for (std::size_t label = 0; label < cfg.way; ++label) {
    std::vector<const double*> rows;
    for (std::size_t r = 0; r < ep.support_x.rows(); ++r)
      if (ep.support_y[r] == double(label)) rows.push_back(&ep.support_x.data()[r * cfg.dim]);
    for (std::size_t r = 0; r < ep.query_x.rows(); ++r)
      if (ep.query_y[r] == double(label)) rows.push_back(&ep.query_x.data()[r * cfg.dim]);
    ASSERT_EQ(rows.size(), cfg.shot + cfg.query_per_class);
    for (const double* row : rows)
      for (std::size_t d = 0; d < cfg.dim; ++d) EXPECT_EQ(row[d], rows[0][d]);
  }
}

TEST(SynthCls, Deterministic) {
  SynthClsConfig cfg;
  auto a = EpisodeStreams::train(17), b = EpisodeStreams::train(17);
  EXPECT_EQ(sample_synth_cls_episode(cfg, a), sample_synth_cls_episode(cfg, b));
}

TEST(SynthCls, InvalidConfigRejected) {
  SynthClsConfig cfg;
  cfg.way = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.noise_std = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(SynthCls, SlotPermutationIsUniform) {
  SynthClsConfig cfg;
  cfg.dim = 1;
  cfg.query_per_class = 1;
  auto rng = EpisodeStreams::train(123);
  std::vector<std::vector<int>> counts(5, std::vector<int>(5, 0));
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Episode ep = sample_synth_cls_episode(cfg, rng);
    for (std::size_t slot = 0; slot < 5; ++slot) ++counts[ep.slot_classes[slot]][slot];
  }
  for (const auto& row : counts)
    for (int c : row) EXPECT_NEAR(c / double(n), 0.2, 0.02);
}

TEST(Dataset, ClassFilesHaveDeclaredLength) {
  const fs::path dir = fresh_dir("ds_len");
  const Dataset ds = toy_dataset(dir, 3, 10, 16);
  EXPECT_EQ(ds.num_classes(), 3u);
  EXPECT_EQ(ds.dim(), 16u);
  for (const auto& c : ds.manifest.classes) EXPECT_EQ(fs::file_size(dir / c.file), 1280u);
  EXPECT_EQ(load_dataset(dir / "meta.json").class_data, ds.class_data);
}

TEST(Dataset, EmptyClassListRejected) {
  const fs::path dir = fresh_dir("ds_empty");
  std::ofstream(dir / "meta.json") << R"({"dim": 4, "classes": []})";
  try {
    load_dataset(dir);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("dataset has no classes"), std::string::npos);
  }
}

TEST(Dataset, TruncatedFileNamesTheClass) {
  const fs::path dir = fresh_dir("ds_short");
  toy_dataset(dir, 3, 10, 16);
  fs::resize_file(dir / "class1.bin", 1279);
  try {
    load_dataset(dir);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("class1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("1280"), std::string::npos) << msg;
    EXPECT_NE(msg.find("1279"), std::string::npos) << msg;
  }
}

TEST(Dataset, BadDimAndMissingFilesRejected) {
  const fs::path dir = fresh_dir("ds_bad");
  std::ofstream(dir / "meta.json") << R"({"dim": 0, "classes": [{"name": "a", "file": "a.bin", "count": 1}]})";
  EXPECT_ANY_THROW(load_dataset(dir));
  std::ofstream(dir / "meta.json") << R"({"dim": 2, "classes": [{"name": "a", "file": "missing.bin", "count": 1}]})";
  EXPECT_ANY_THROW(load_dataset(dir));
  EXPECT_ANY_THROW(load_dataset(dir / "nothing_here"));
}

TEST(Dataset, SupportAndQueryRowsNeverOverlap) {
  const fs::path dir = fresh_dir("ds_disjoint");
  const Dataset ds = toy_dataset(dir, 6, 8, 2);
  auto rng = EpisodeStreams::train(4);
  for (int i = 0; i < 200; ++i) {
    const Episode ep = sample_dataset_episode(ds, 5, 3, 5, rng);
    EXPECT_EQ(ep.support_x.rows(), 15u);
    EXPECT_EQ(ep.query_x.rows(), 25u);
    std::set<double> support_ids;
    // First feature identifies the source row uniquely.
    for (std::size_t r = 0; r < ep.support_x.rows(); ++r) support_ids.insert(ep.support_x.at(r, 0));
    for (std::size_t r = 0; r < ep.query_x.rows(); ++r) {
      EXPECT_FALSE(support_ids.contains(ep.query_x.at(r, 0)));
    }
  }
}

TEST(Dataset, TooFewRowsRejected) {
  const fs::path dir = fresh_dir("ds_small");
  const Dataset ds = toy_dataset(dir, 5, 4, 2);
  auto rng = EpisodeStreams::train(0);
  EXPECT_THROW(sample_dataset_episode(ds, 5, 2, 3, rng), std::invalid_argument);
  EXPECT_THROW(sample_dataset_episode(ds, 6, 1, 1, rng), std::invalid_argument);
}

TEST(OneHot, Basic) {
  EXPECT_EQ(one_hot(Tensor::matrix(2, 1, {2, 0}), 3), Tensor::matrix(2, 3, {0, 0, 1, 1, 0, 0}));
}
