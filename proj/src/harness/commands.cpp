#include "umaml/harness/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "umaml/harness/csv.hpp"
#include "umaml/harness/gradcheck.hpp"

namespace umaml::harness {

namespace fs = std::filesystem;

namespace {

const CombineMode kSweepModes[] = {CombineMode::kUniform, CombineMode::kUncertainty};

void write_uncertainty(const fs::path& path, const UncertaintyState& u) {
  std::string text = "slot,s,weight\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    text += csv_line({std::to_string(i), format_double(u.s[i]), format_double(u.weight(i))});
  }
  write_text(path, text);
}

}  // namespace

RunOutcome run_training(const RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  RunConfig echoed = cfg;
  echoed.out = dir.string();
  write_text(dir / "config.toml", echo_config(echoed));

  const TaskFactory factory(cfg);
  const MlpSpec spec = factory.model_spec();
  const auto train_source = factory.source(Split::kTrain);
  const std::vector<Episode> eval = factory.eval_set();

  MetricsWriter writer(dir / "metrics.csv", cfg.meta.mode, cfg.classification(),
                       cfg.meta.meta_batch);
  TrainOptions opt;
  opt.log_interval = cfg.log_interval;
  opt.eval_inner_steps = cfg.eval_inner_steps;
  opt.on_row = [&](const MetricsRow& row) { writer.write(row); };

  RunOutcome outcome;
  try {
    outcome.result = meta_train(spec, cfg.meta, *train_source, eval, cfg.seed, opt);
  } catch (const NonFiniteLoss& e) {
    outcome.diagnostic = std::string("diverged: ") + e.what();
    return outcome;
  }
  save_params(dir / "checkpoint.bin", outcome.result->params);
  if (cfg.meta.use_pool) outcome.result->pool.save(dir / "pool");
  if (cfg.meta.mode == CombineMode::kUncertainty) {
    write_uncertainty(dir / "uncertainty.csv", outcome.result->uncertainty);
  }
  return outcome;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  const RunOutcome r = run_training(cfg, cfg.out);
  if (!r.result) {
    log << r.diagnostic << '\n';
    return kExitDiverged;
  }
  log << "wrote " << (fs::path(cfg.out) / "metrics.csv").string() << '\n';
  return kExitOk;
}

int cmd_sweep_lr(const RunConfig& cfg, std::ostream& log) {
  if (cfg.alphas.empty()) throw ConfigError("sweep-lr needs at least one alpha");
  const fs::path root = cfg.out;
  fs::create_directories(root);
  std::ofstream summary(root / "summary.csv", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write " + (root / "summary.csv").string());
  summary << "mode,alpha,final_eval_loss,status\n";
  std::string spread_text = "mode,spread\n";
  bool any_diverged = false;

  for (CombineMode mode : kSweepModes) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool diverged = false;
    for (double alpha : cfg.alphas) {
      RunConfig cell = cfg;
      cell.meta.mode = mode;
      cell.meta.inner_lr = alpha;
      const fs::path dir = root / (to_string(mode) + "_alpha_" + format_double(alpha));
      const RunOutcome r = run_training(cell, dir);
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (r.result) {
        const TaskFactory factory(cell);
        loss = evaluate_adaptation(factory.model_spec(), r.result->params, factory.eval_set(),
                                   factory.loss_kind(), alpha, cell.eval_inner_steps)
                   .mean_loss;
        lo = std::min(lo, loss);
        hi = std::max(hi, loss);
      } else {
        diverged = true;
        log << to_string(mode) << " alpha=" << format_double(alpha) << ' ' << r.diagnostic << '\n';
      }
      summary << csv_line({to_string(mode), format_double(alpha), format_double(loss),
                           r.result ? "ok" : "diverged"});
      summary.flush();
    }
    const double spread =
        diverged ? std::numeric_limits<double>::infinity() : hi - lo;
    spread_text += csv_line({to_string(mode), format_double(spread)});
    any_diverged = any_diverged || diverged;
  }
  write_text(root / "spread.csv", spread_text);
  log << "wrote " << (root / "summary.csv").string() << '\n';
  return any_diverged ? kExitDiverged : kExitOk;
}

std::pair<double, double> mean_ci95(const std::vector<double>& xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

int cmd_sweep_query(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.classification()) throw ConfigError("sweep-query needs a classification task");
  if (cfg.n_queries.empty()) throw ConfigError("sweep-query needs at least one n_query");
  const fs::path root = cfg.out;
  fs::create_directories(root);
  std::ofstream summary(root / "summary.csv", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write " + (root / "summary.csv").string());
  summary << "mode,n_query,accuracy,ci95\n";

  bool any_diverged = false;
  for (CombineMode mode : kSweepModes) {
    RunConfig cell = cfg;
    cell.meta.mode = mode;
    const RunOutcome r = run_training(cell, root / to_string(mode));
    if (!r.result) {
      any_diverged = true;
      log << to_string(mode) << ' ' << r.diagnostic << '\n';
      continue;
    }
    const TaskFactory factory(cell);
    const MlpSpec spec = factory.model_spec();
    for (std::size_t n : cfg.n_queries) {
      const EvalSummary s =
          evaluate_adaptation(spec, r.result->params, factory.eval_set(cfg.eval_tasks, n),
                              factory.loss_kind(), cell.meta.inner_lr, cell.eval_inner_steps);
      const auto [acc, ci] = mean_ci95(s.accuracies);
      summary << csv_line({to_string(mode), std::to_string(n), format_double(acc),
                           format_double(ci)});
      summary.flush();
    }
  }
  log << "wrote " << (root / "summary.csv").string() << '\n';
  return any_diverged ? kExitDiverged : kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, bool force_first_order,
                  const std::optional<fs::path>& out_dir, std::ostream& report) {
  verify::GradcheckOptions opt;
  opt.seed = seed;
  opt.force_first_order = force_first_order;
  const auto results = verify::run_gradcheck(opt);
  const std::string text = verify::format_report(results);
  report << text;
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_text(*out_dir / "gradcheck.txt", text);
  }
  return verify::all_passed(results) ? kExitOk : kExitCheckFailed;
}

int cmd_plot(const fs::path& csv, PlotKind kind, const fs::path& out, std::ostream& log) {
  const CsvTable table = read_csv(csv);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text(out, render_plot(table, kind, csv.stem().string()));
  log << "wrote " << out.string() << '\n';
  return kExitOk;
}

}  // namespace umaml::harness
