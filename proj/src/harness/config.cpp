#include "umaml/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace umaml::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

// Rest of a line after a value must be blank or a comment.
void expect_end(std::string_view rest, std::size_t line) {
  rest = trim(rest);
  if (!rest.empty() && rest.front() != '#') fail_line(line, "trailing text '" + std::string(rest) + "'");
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::string_view> list_items(std::string_view key, std::string_view v) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw ConfigError("key '" + std::string(key) + "': expected an array, got '" + std::string(v) + "'");
  }
  std::vector<std::string_view> items;
  std::string_view body = trim(v.substr(1, v.size() - 2));
  while (!body.empty()) {
    const auto comma = body.find(',');
    items.push_back(trim(body.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    body = trim(body.substr(comma + 1));
  }
  if (items.empty()) throw ConfigError("key '" + std::string(key) + "': array is empty");
  return items;
}

template <typename T, typename Convert>
std::vector<T> to_list(std::string_view key, std::string_view v, Convert convert) {
  std::vector<T> out;
  for (auto item : list_items(key, v)) out.push_back(convert(key, item));
  return out;
}

std::size_t to_count(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out + "]";
}

void apply_task_defaults(RunConfig& c) {
  if (c.family() == TaskFamily::kSinusoid) {
    c.shot = 10;
    c.query = 10;
    c.hidden = {40, 40};
    c.meta.inner_lr = 0.01;
    c.meta.outer_lr = 1e-2;
    c.meta.iterations = 2000;
    c.meta.loss_kind = LossKind::kMse;
    c.eval_tasks = 100;
    c.eval_inner_steps = 10;
  } else {
    c.shot = 1;
    c.query = 15;
    c.way = 5;
    c.hidden = {64, 64};
    c.meta.inner_lr = 0.1;
    c.meta.outer_lr = 1e-3;
    c.meta.iterations = 3000;
    c.meta.loss_kind = LossKind::kCrossEntropy;
    c.eval_tasks = 500;
    c.eval_inner_steps = 1;
  }
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail_line(line_no, "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) fail_line(line_no, "empty key");
    for (char c : key) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
        fail_line(line_no, "invalid key '" + std::string(key) + "'");
      }
    }
    std::string_view rest = trim(line.substr(eq + 1));
    if (rest.empty()) fail_line(line_no, "missing value for '" + std::string(key) + "'");

    std::string value;
    if (rest.front() == '"') {
      std::size_t i = 1;
      for (; i < rest.size() && rest[i] != '"'; ++i) {
        if (rest[i] == '\\' && i + 1 < rest.size()) ++i;
        value += rest[i];
      }
      if (i >= rest.size()) fail_line(line_no, "unterminated string");
      expect_end(rest.substr(i + 1), line_no);
    } else if (rest.front() == '[') {
      const auto close = rest.find(']');
      if (close == std::string_view::npos) fail_line(line_no, "unterminated array");
      value = rest.substr(0, close + 1);
      expect_end(rest.substr(close + 1), line_no);
    } else {
      value = trim(rest.substr(0, rest.find('#')));
    }
    if (!kv.emplace(std::string(key), std::move(value)).second) {
      fail_line(line_no, "duplicate key '" + std::string(key) + "'");
    }
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

KeyValues merge(KeyValues base, const KeyValues& overrides) {
  for (const auto& [k, v] : overrides) base[k] = v;
  return base;
}

TaskFamily RunConfig::family() const {
  if (task == "sinusoid") return TaskFamily::kSinusoid;
  if (task == "synthcls") return TaskFamily::kSynthCls;
  if (task.starts_with("dataset:") && task.size() > 8) return TaskFamily::kDataset;
  throw ConfigError("unknown task '" + task + "' (expected sinusoid, synthcls or dataset:<path>)");
}

std::filesystem::path RunConfig::dataset_path() const {
  if (family() != TaskFamily::kDataset) throw ConfigError("task is not a dataset");
  return task.substr(8);
}

void RunConfig::validate() const {
  family();
  try {
    meta.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (shot < 1 || query < 1) throw ConfigError("shot and query must be >= 1");
  if (classification() && way < 2) throw ConfigError("way must be >= 2");
  if (family() == TaskFamily::kSynthCls && dim < 1) throw ConfigError("dim must be >= 1");
  if (!(noise_std > 0.0) || !(prototype_range > 0.0)) {
    throw ConfigError("noise_std and prototype_range must be > 0");
  }
  for (std::size_t h : hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  }
  if (eval_tasks < 1) throw ConfigError("eval_tasks must be >= 1");
  if (eval_inner_steps < 1) throw ConfigError("eval_inner_steps must be >= 1");
  if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
  for (double a : alphas) {
    if (!(a > 0.0)) throw ConfigError("alphas must be > 0");
  }
  for (std::size_t n : n_queries) {
    if (n < 1) throw ConfigError("n_queries must be >= 1");
  }
}

RunConfig build_config(const KeyValues& kv) {
  RunConfig c;
  if (auto it = kv.find("task"); it != kv.end()) c.task = it->second;
  c.family();
  apply_task_defaults(c);

  bool threshold_set = false;
  for (const auto& [key, v] : kv) {
    MetaConfig& m = c.meta;
    try {
      if (key == "task") continue;
      else if (key == "seed") c.seed = to_u64(key, v);
      else if (key == "out") c.out = v;
      else if (key == "mode") m.mode = parse_mode(v);
      else if (key == "order") m.order = parse_order(v);
      else if (key == "inner_lr") m.inner_lr = to_double(key, v);
      else if (key == "outer_lr") m.outer_lr = to_double(key, v);
      else if (key == "inner_steps") m.inner_steps = to_count(key, v);
      else if (key == "meta_batch") m.meta_batch = to_count(key, v);
      else if (key == "iterations") m.iterations = to_count(key, v);
      else if (key == "threshold") { m.threshold = to_double(key, v); threshold_set = true; }
      else if (key == "weight_floor") m.weight_floor = to_double(key, v);
      else if (key == "signed_weights") m.signed_weights = to_bool(key, v);
      else if (key == "use_pool") m.use_pool = to_bool(key, v);
      else if (key == "pool_capacity") m.pool_capacity = to_count(key, v);
      else if (key == "selection_stride") m.selection_stride = to_count(key, v);
      else if (key == "fresh_uncertainty") m.fresh_uncertainty = to_bool(key, v);
      else if (key == "shot") c.shot = to_count(key, v);
      else if (key == "query") c.query = to_count(key, v);
      else if (key == "way") c.way = to_count(key, v);
      else if (key == "dim") c.dim = to_count(key, v);
      else if (key == "noise_std") c.noise_std = to_double(key, v);
      else if (key == "prototype_range") c.prototype_range = to_double(key, v);
      else if (key == "hidden") c.hidden = to_list<std::size_t>(key, v, to_count);
      else if (key == "activation") c.activation = parse_activation(v);
      else if (key == "eval_tasks") c.eval_tasks = to_count(key, v);
      else if (key == "eval_inner_steps") c.eval_inner_steps = to_count(key, v);
      else if (key == "log_interval") c.log_interval = to_count(key, v);
      else if (key == "alphas") c.alphas = to_list<double>(key, v, to_double);
      else if (key == "n_queries") c.n_queries = to_list<std::size_t>(key, v, to_count);
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  }
  if (!threshold_set) {
    c.meta.threshold = c.classification() ? std::log(static_cast<double>(c.way)) : 1.0;
  }
  c.validate();
  return c;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string echo_config(const RunConfig& c) {
  const MetaConfig& m = c.meta;
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  std::ostringstream o;
  o << "task = " << quote(c.task) << '\n'
    << "seed = " << c.seed << '\n'
    << "out = " << quote(c.out) << '\n'
    << "mode = " << quote(to_string(m.mode)) << '\n'
    << "order = " << to_string(m.order) << '\n'
    << "inner_lr = " << format_double(m.inner_lr) << '\n'
    << "outer_lr = " << format_double(m.outer_lr) << '\n'
    << "inner_steps = " << m.inner_steps << '\n'
    << "meta_batch = " << m.meta_batch << '\n'
    << "iterations = " << m.iterations << '\n'
    << "threshold = " << format_double(m.threshold) << '\n'
    << "weight_floor = " << format_double(m.weight_floor) << '\n'
    << "signed_weights = " << b(m.signed_weights) << '\n'
    << "use_pool = " << b(m.use_pool) << '\n'
    << "pool_capacity = " << m.pool_capacity << '\n'
    << "selection_stride = " << m.selection_stride << '\n'
    << "fresh_uncertainty = " << b(m.fresh_uncertainty) << '\n'
    << "shot = " << c.shot << '\n'
    << "query = " << c.query << '\n'
    << "way = " << c.way << '\n'
    << "dim = " << c.dim << '\n'
    << "noise_std = " << format_double(c.noise_std) << '\n'
    << "prototype_range = " << format_double(c.prototype_range) << '\n'
    << "hidden = " << join(c.hidden) << '\n'
    << "activation = " << quote(to_string(c.activation)) << '\n'
    << "eval_tasks = " << c.eval_tasks << '\n'
    << "eval_inner_steps = " << c.eval_inner_steps << '\n'
    << "log_interval = " << c.log_interval << '\n'
    << "alphas = " << join(c.alphas) << '\n'
    << "n_queries = " << join(c.n_queries) << '\n';
  return o.str();
}

TaskFactory::TaskFactory(const RunConfig& cfg) : cfg_(cfg) {
  if (cfg_.family() == TaskFamily::kDataset) {
    dataset_ = std::make_shared<const Dataset>(load_dataset(cfg_.dataset_path()));
    if (dataset_->num_classes() < cfg_.way) {
      throw ConfigError("dataset has " + std::to_string(dataset_->num_classes()) +
                        " classes, fewer than way = " + std::to_string(cfg_.way));
    }
  }
}

std::unique_ptr<TaskSource> TaskFactory::source(Split split, std::size_t query) const {
  switch (cfg_.family()) {
    case TaskFamily::kSinusoid:
      return std::make_unique<SinusoidSource>(cfg_.shot, query, cfg_.seed, split);
    case TaskFamily::kSynthCls: {
      SynthClsConfig sc;
      sc.way = cfg_.way;
      sc.shot = cfg_.shot;
      sc.query_per_class = query;
      sc.dim = cfg_.dim;
      sc.noise_std = cfg_.noise_std;
      sc.prototype_range = cfg_.prototype_range;
      return std::make_unique<SynthClsSource>(sc, cfg_.seed, split);
    }
    case TaskFamily::kDataset:
      return std::make_unique<DatasetSource>(dataset_, cfg_.way, cfg_.shot, query, cfg_.seed,
                                             split);
  }
  throw ConfigError("unknown task");
}

std::vector<Episode> TaskFactory::eval_set(std::size_t count, std::size_t query) const {
  auto src = source(Split::kEval, query);
  std::vector<Episode> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(src->next());
  return out;
}

MlpSpec TaskFactory::model_spec() const {
  auto src = source(Split::kTrain);
  MlpSpec spec;
  spec.activation = cfg_.activation;
  spec.layer_sizes.push_back(src->input_dim());
  spec.layer_sizes.insert(spec.layer_sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  spec.layer_sizes.push_back(src->output_dim());
  return spec;
}

LossKind TaskFactory::loss_kind() const {
  return cfg_.classification() ? LossKind::kCrossEntropy : LossKind::kMse;
}

}  // namespace umaml::harness
