#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "umaml/adam.hpp"
#include "umaml/autodiff.hpp"
#include "umaml/init_pool.hpp"
#include "umaml/loss.hpp"
#include "umaml/mlp.hpp"
#include "umaml/tasks.hpp"
#include "umaml/uncertainty.hpp"
#include "umaml/weight_gen.hpp"

namespace umaml {

enum class GradOrder { kFirst, kSecond };
enum class CombineMode { kUniform, kWeightGen, kUncertainty };

std::string to_string(CombineMode m);
CombineMode parse_mode(std::string_view s);  // "maml" | "uniform" | "weightgen" | "uncertainty"
std::string to_string(GradOrder o);
GradOrder parse_order(std::string_view s);  // "1" | "2" | "first" | "second"

struct MetaConfig {
  double inner_lr = 0.01;
  double outer_lr = 1e-3;
  std::size_t inner_steps = 1;
  std::size_t meta_batch = 4;
  std::size_t iterations = 2000;
  GradOrder order = GradOrder::kSecond;
  CombineMode mode = CombineMode::kUniform;
  LossKind loss_kind = LossKind::kMse;

  // Weight generator.
  double threshold = 1.0;
  double weight_floor = 0.0;
  bool signed_weights = false;

  // Initialization pool. With use_pool off, every iteration starts from the
  // latest parameters.
  bool use_pool = false;
  std::size_t pool_capacity = 10;
  std::size_t selection_stride = 1;

  // Reset the log-variances to zero at every iteration (ablation).
  bool fresh_uncertainty = false;

  void validate() const;
  WeightConfig weight_config() const;
  TaskKind task_kind() const;
};

// Raised when a loss or parameter turns non-finite; the run is aborted.
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using LossFn = std::function<Var(std::span<const Var>)>;

struct AdaptResult {
  std::vector<Var> params;
  double initial_loss = 0.0;
};

// `steps` plain gradient-descent updates p <- p - lr * dL/dp. With kSecond the
// updates stay differentiable; with kFirst each inner gradient is detached.
AdaptResult inner_adapt(std::span<const Var> params, const LossFn& loss, double lr,
                        std::size_t steps, GradOrder order);

// Value-level adaptation on (x, y); no graph survives the call.
ParamVector adapt_params(const MlpSpec& spec, const ParamVector& params, const Tensor& x,
                         const Tensor& y, LossKind kind, double lr, std::size_t steps);

// Mean query loss of adapted params (and argmax accuracy for classification).
LossValue evaluate_query(const MlpSpec& spec, const ParamVector& adapted,
                         const Episode& episode, LossKind kind);

struct TaskOutcome {
  double support_loss = 0.0;  // before adaptation
  double query_loss = 0.0;    // after adaptation
  ParamVector adapted_params;
  std::optional<double> query_accuracy;
};

struct MetaGradient {
  ParamVector grad;                 // d objective / d theta
  std::vector<double> s_grad;       // d objective / d s (uncertainty mode)
  std::vector<TaskOutcome> outcomes;
  std::vector<double> weights;      // per-task multipliers actually applied
  double objective = 0.0;
};

MetaGradient meta_gradient(const MlpSpec& spec, const ParamVector& theta,
                           std::span<const Episode> episodes, const MetaConfig& cfg,
                           const UncertaintyState* uncertainty = nullptr);

struct MetaStepResult {
  ParamVector params;
  std::vector<TaskOutcome> outcomes;
  std::vector<double> weights;
  double objective = 0.0;
};

// One outer update. In uncertainty mode the state is updated in place by the
// same optimizer as theta.
MetaStepResult meta_step(const MlpSpec& spec, const ParamVector& theta,
                         std::span<const Episode> episodes, const MetaConfig& cfg,
                         UncertaintyState* uncertainty, Adam& optimizer);

struct EvalSummary {
  double mean_loss = 0.0;      // after adaptation
  double mean_pre_loss = 0.0;  // before adaptation
  std::optional<double> mean_accuracy;
  std::vector<double> losses;
  std::vector<double> pre_losses;
  std::vector<double> accuracies;
};

EvalSummary evaluate_adaptation(const MlpSpec& spec, const ParamVector& theta,
                                std::span<const Episode> episodes, LossKind kind,
                                double lr, std::size_t steps);

struct MetricsRow {
  std::size_t iteration = 0;
  double mean_support_loss = 0.0;
  double mean_query_loss = 0.0;
  double post_adapt_eval_loss = 0.0;
  std::optional<double> accuracy;
  std::size_t init_idx = 0;
  std::vector<double> weights;
  std::vector<double> s;
  double wall_ms = 0.0;
};

struct TrainOptions {
  // Rows are emitted at multiples of this and at the last iteration.
  std::size_t log_interval = 100;
  std::size_t eval_inner_steps = 10;
  std::function<void(const MetricsRow&)> on_row;
};

struct TrainResult {
  ParamVector params;
  UncertaintyState uncertainty;
  InitPool pool{1};
  std::vector<MetricsRow> trace;
};

// Outer loop: select an initialization from the pool, sample a meta-batch,
// meta_step, store the result. Evaluation rows use `eval_set`.
TrainResult meta_train(const MlpSpec& spec, const MetaConfig& cfg, TaskSource& tasks,
                       std::span<const Episode> eval_set, std::uint64_t seed,
                       const TrainOptions& options = {});

}  // namespace umaml
