#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "umaml/harness/commands.hpp"
#include "umaml/harness/csv.hpp"

namespace {

using namespace umaml::harness;

struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> seed, mode, order, inner_lr, outer_lr, inner_steps, meta_batch,
      iterations, task, out, alphas, n_queries;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "Flat key = value config file");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--mode", mode, "maml | weightgen | uncertainty");
    app.add_option("--order", order, "Meta-gradient order: 1 | 2");
    app.add_option("--inner-lr", inner_lr, "Inner step size alpha");
    app.add_option("--outer-lr", outer_lr, "Adam step size beta");
    app.add_option("--inner-steps", inner_steps, "Inner gradient steps during training");
    app.add_option("--meta-batch", meta_batch, "Tasks per meta-update");
    app.add_option("--iterations", iterations, "Meta-updates");
    app.add_option("--task", task, "sinusoid | synthcls | dataset:<path>");
    app.add_option("--out", out, "Output directory");
    app.add_option("--set", sets, "Any config key as key=value (repeatable)");
  }

  KeyValues overrides() const {
    KeyValues kv;
    auto put = [&](const char* key, const std::optional<std::string>& v) {
      if (v) kv[key] = *v;
    };
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      const KeyValues one = parse_key_values(s);
      kv.insert(one.begin(), one.end());
    }
    put("seed", seed);
    put("mode", mode);
    put("order", order);
    put("inner_lr", inner_lr);
    put("outer_lr", outer_lr);
    put("inner_steps", inner_steps);
    put("meta_batch", meta_batch);
    put("iterations", iterations);
    put("task", task);
    put("out", out);
    if (alphas) kv["alphas"] = "[" + *alphas + "]";
    if (n_queries) kv["n_queries"] = "[" + *n_queries + "]";
    return kv;
  }

  RunConfig build() const {
    KeyValues kv = config.empty() ? KeyValues{} : read_key_values(config);
    return build_config(merge(std::move(kv), overrides()));
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learning experiment runner"};
  app.require_subcommand(1);

  RunFlags train_flags, lr_flags, query_flags;
  auto* train = app.add_subcommand("train", "Meta-train one model");
  train_flags.attach(*train);

  auto* sweep_lr = app.add_subcommand("sweep-lr", "Inner step size sweep over maml and uncertainty");
  lr_flags.attach(*sweep_lr);
  sweep_lr->add_option("--alphas", lr_flags.alphas, "Comma-separated step sizes");

  auto* sweep_query = app.add_subcommand("sweep-query", "Query-count sweep over maml and uncertainty");
  query_flags.attach(*sweep_query);
  sweep_query->add_option("--n-queries", query_flags.n_queries, "Comma-separated query counts");

  std::uint64_t gc_seed = 0;
  bool gc_first = false;
  std::optional<std::string> gc_out;
  auto* gradcheck = app.add_subcommand("gradcheck", "Gradient verification suite");
  gradcheck->add_option("--seed", gc_seed, "Random seed");
  gradcheck->add_option("--out", gc_out, "Directory for gradcheck.txt");
  gradcheck->add_flag("--force-first-order", gc_first, "Drop the second-order term");

  std::string plot_csv, plot_kind = "loss_curve", plot_out;
  auto* plot = app.add_subcommand("plot", "Render a CSV file as SVG");
  plot->add_option("--csv", plot_csv, "metrics.csv or summary.csv")->required();
  plot->add_option("--kind", plot_kind, "loss_curve | sweep_bars");
  plot->add_option("--out", plot_out, "Output .svg path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_flags.build(), std::cout);
    if (*sweep_lr) return cmd_sweep_lr(lr_flags.build(), std::cout);
    if (*sweep_query) return cmd_sweep_query(query_flags.build(), std::cout);
    if (*gradcheck) {
      std::optional<std::filesystem::path> out;
      if (gc_out) out = *gc_out;
      return cmd_gradcheck(gc_seed, gc_first, out, std::cout);
    }
    if (*plot) return cmd_plot(plot_csv, parse_plot_kind(plot_kind), plot_out, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CsvError& e) {
    std::cerr << "csv error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
