#include "umaml/uncertainty.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace umaml {

double UncertaintyState::weight(std::size_t i) const { return std::exp(-s.at(i)); }

namespace {

void check_sigma(double sigma_sq) {
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
    throw std::invalid_argument("sigma^2 must be positive and finite");
  }
}

double loss_factor(TaskKind kind) { return kind == TaskKind::kRegression ? 0.5 : 1.0; }

}  // namespace

Tensor scaled_softmax(const Tensor& logits, double sigma_sq) {
  check_sigma(sigma_sq);
  Graph g;
  return scaled_softmax(g.constant(logits), sigma_sq).value();
}

Var scaled_softmax(Var logits, double sigma_sq) {
  check_sigma(sigma_sq);
  Graph& g = *logits.graph;
  return g.softmax(g.scale(logits, 1.0 / sigma_sq));
}

double scaled_nll(const Tensor& logits, const Tensor& labels, double sigma_sq) {
  const Tensor p = scaled_softmax(logits, sigma_sq);
  if (labels.size() != p.rows()) throw std::invalid_argument("one label per row required");
  double total = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    total -= std::log(p.at(r, static_cast<std::size_t>(labels[r])));
  }
  return total / static_cast<double>(p.rows());
}

Var combined_loss(std::span<const Var> task_losses, std::span<const Var> s,
                  TaskKind kind) {
  if (task_losses.size() != s.size()) {
    throw std::invalid_argument("combined_loss: " + std::to_string(task_losses.size()) +
                                " losses for " + std::to_string(s.size()) + " slots");
  }
  if (task_losses.empty()) throw std::invalid_argument("combined_loss: no tasks");
  Graph& g = *task_losses.front().graph;
  std::optional<Var> total;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double li = task_losses[i].value().item();
    if (!std::isfinite(li)) throw std::domain_error("non-finite task loss");
    const Var precision = g.exp(g.scale(s[i], -1.0));
    const Var term = g.add(g.scale(g.mul(precision, task_losses[i]), loss_factor(kind)),
                           g.scale(s[i], 0.5));
    total = total ? g.add(*total, term) : term;
  }
  return *total;
}

double combined_loss(std::span<const double> task_losses, std::span<const double> s,
                     TaskKind kind) {
  if (task_losses.size() != s.size()) {
    throw std::invalid_argument("combined_loss: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(task_losses[i])) throw std::domain_error("non-finite task loss");
    total += loss_factor(kind) * std::exp(-s[i]) * task_losses[i] + 0.5 * s[i];
  }
  return total;
}

double optimal_s(double loss, TaskKind kind) {
  if (!(loss > 0.0)) throw std::invalid_argument("optimal_s needs a positive loss");
  return kind == TaskKind::kClassification ? std::log(2.0 * loss) : std::log(loss);
}

}  // namespace umaml
