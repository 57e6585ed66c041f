#pragma once

#include <string>
#include <string_view>

#include "umaml/harness/csv.hpp"

namespace umaml::harness {

enum class PlotKind { kLossCurve, kSweepBars };

PlotKind parse_plot_kind(std::string_view s);  // "loss_curve" | "sweep_bars"

// Self-contained SVG derived only from the table.
//   loss_curve: x = iteration; one line per loss column present.
//   sweep_bars: one bar series per `mode`, grouped by `alpha` or `n_query`,
//               height `final_eval_loss` or `accuracy`.
// A table with a header and no rows gives empty axes.
std::string render_plot(const CsvTable& table, PlotKind kind, std::string_view title);

}  // namespace umaml::harness
