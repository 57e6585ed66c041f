#include "umaml/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace umaml::harness {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#8c564b"};

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string num(double v) { return fmt("%.2f", v); }

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish(bool from_zero) {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (from_zero) lo = std::min(lo, 0.0);
    if (hi - lo < 1e-12) hi = lo + 1.0;
  }
};

class Canvas {
 public:
  Canvas(std::string_view title, std::string_view xlabel, std::string_view ylabel) {
    svg_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
            "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
            num(kHeight) + "\">\n";
    svg_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(kWidth / 2 - kRight / 2 + kLeft / 2, 22, title, "middle", 15);
    text(kLeft + plot_w() / 2, kHeight - 12, xlabel, "middle", 12);
    svg_ += "<text x=\"16\" y=\"" + num(kTop + plot_h() / 2) +
            "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
            "transform=\"rotate(-90 16 " +
            num(kTop + plot_h() / 2) + ")\">" + escape(ylabel) + "</text>\n";
  }

  static double plot_w() { return kWidth - kLeft - kRight; }
  static double plot_h() { return kHeight - kTop - kBottom; }

  void axes(const Range& y) {
    y_ = y;
    line(kLeft, kTop, kLeft, kTop + plot_h(), "black");
    line(kLeft, kTop + plot_h(), kLeft + plot_w(), kTop + plot_h(), "black");
    for (int i = 0; i <= 4; ++i) {
      const double v = y.lo + (y.hi - y.lo) * i / 4.0;
      const double py = ypos(v);
      line(kLeft - 4, py, kLeft, py, "black");
      text(kLeft - 6, py + 4, fmt("%.3g", v), "end", 10);
    }
  }

  double ypos(double v) const { return kTop + plot_h() * (1.0 - (v - y_.lo) / (y_.hi - y_.lo)); }

  void line(double x1, double y1, double x2, double y2, std::string_view color) {
    svg_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
            "\" y2=\"" + num(y2) + "\" stroke=\"" + std::string(color) + "\"/>\n";
  }

  void text(double x, double y, std::string_view s, std::string_view anchor, int size) {
    svg_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) +
            "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) +
            "\" text-anchor=\"" + std::string(anchor) + "\">" + escape(s) + "</text>\n";
  }

  void legend(std::size_t i, std::string_view label) {
    const double x = kLeft + plot_w() + 15, y = kTop + 10 + 20.0 * static_cast<double>(i);
    svg_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
            kColors[i % std::size(kColors)] + "\"/>\n";
    text(x + 18, y + 2, label, "start", 11);
  }

  void raw(std::string_view s) { svg_ += s; }

  std::string finish() { return svg_ + "</svg>\n"; }

 private:
  std::string svg_;
  Range y_;
};

std::string loss_curve(const CsvTable& t, std::string_view title) {
  const std::size_t xcol = t.column("iteration");
  std::vector<std::string> series;
  for (const char* name : {"mean_support_loss", "mean_query_loss", "post_adapt_eval_loss"}) {
    if (t.has_column(name)) series.emplace_back(name);
  }
  Range x, y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    x.add(t.number(r, xcol));
    for (const auto& s : series) y.add(t.number(r, t.column(s)));
  }
  x.finish(false);
  y.finish(true);

  Canvas c(title, "iteration", "loss");
  c.axes(y);
  c.text(kLeft, kTop + Canvas::plot_h() + 16, fmt("%.6g", x.lo), "middle", 10);
  c.text(kLeft + Canvas::plot_w(), kTop + Canvas::plot_h() + 16, fmt("%.6g", x.hi), "middle", 10);
  auto xpos = [&](double v) { return kLeft + Canvas::plot_w() * (v - x.lo) / (x.hi - x.lo); };
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t col = t.column(series[i]);
    std::string pts;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double v = t.number(r, col);
      if (!std::isfinite(v)) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(xpos(t.number(r, xcol))) + "," + num(c.ypos(v));
    }
    if (!pts.empty()) {
      c.raw("<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" +
            std::string(kColors[i % std::size(kColors)]) + "\" points=\"" + pts + "\"/>\n");
    }
    c.legend(i, series[i]);
  }
  return c.finish();
}

template <typename T>
std::size_t index_of(std::vector<T>& xs, const T& v) {
  const auto it = std::find(xs.begin(), xs.end(), v);
  if (it != xs.end()) return static_cast<std::size_t>(it - xs.begin());
  xs.push_back(v);
  return xs.size() - 1;
}

std::string sweep_bars(const CsvTable& t, std::string_view title) {
  const std::size_t mode_col = t.column("mode");
  const std::string group_name = t.has_column("alpha") ? "alpha" : "n_query";
  const std::string value_name = t.has_column("final_eval_loss") ? "final_eval_loss" : "accuracy";
  const std::size_t group_col = t.column(group_name);
  const std::size_t value_col = t.column(value_name);

  std::vector<std::string> modes, groups;
  for (const auto& row : t.rows) {
    index_of(modes, row[mode_col]);
    index_of(groups, row[group_col]);
  }
  Range y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) y.add(t.number(r, value_col));
  y.finish(true);

  Canvas c(title, group_name, value_name);
  c.axes(y);
  const double group_w = Canvas::plot_w() / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(modes.size(), 1));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    c.text(kLeft + group_w * (static_cast<double>(g) + 0.5), kTop + Canvas::plot_h() + 16,
           groups[g], "middle", 10);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double v = t.number(r, value_col);
    if (!std::isfinite(v)) continue;
    const std::size_t m = index_of(modes, t.rows[r][mode_col]);
    const std::size_t g = index_of(groups, t.rows[r][group_col]);
    const double x = kLeft + group_w * static_cast<double>(g) + group_w * 0.1 +
                     bar_w * static_cast<double>(m);
    const double top = c.ypos(std::max(v, 0.0)), base = c.ypos(std::min(v, 0.0));
    c.raw("<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(bar_w) +
          "\" height=\"" + num(base - top) + "\" fill=\"" + kColors[m % std::size(kColors)] +
          "\"/>\n");
  }
  for (std::size_t m = 0; m < modes.size(); ++m) c.legend(m, modes[m]);
  return c.finish();
}

}  // namespace

PlotKind parse_plot_kind(std::string_view s) {
  if (s == "loss_curve") return PlotKind::kLossCurve;
  if (s == "sweep_bars") return PlotKind::kSweepBars;
  throw std::invalid_argument("unknown plot kind '" + std::string(s) + "'");
}

std::string render_plot(const CsvTable& table, PlotKind kind, std::string_view title) {
  return kind == PlotKind::kLossCurve ? loss_curve(table, title) : sweep_bars(table, title);
}

}  // namespace umaml::harness
