#include "umaml/harness/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "umaml/harness/config.hpp"

namespace umaml::harness {

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw CsvError("missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [p, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw CsvError("row " + std::to_string(row + 1) + ", column '" + header.at(col) +
                   "': not a number: '" + cell + "'");
  }
  return v;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else if (fields.size() != t.header.size()) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(t.header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  if (t.header.empty()) throw CsvError("CSV has no header row");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out + '\n';
}

std::vector<std::string> metrics_header(CombineMode mode, bool classification,
                                        std::size_t meta_batch) {
  std::vector<std::string> h{"iteration", "mean_support_loss", "mean_query_loss",
                             "post_adapt_eval_loss"};
  if (classification) h.push_back("accuracy");
  h.push_back("init_idx");
  if (mode == CombineMode::kWeightGen) {
    for (std::size_t i = 0; i < meta_batch; ++i) h.push_back("w_" + std::to_string(i));
  }
  if (mode == CombineMode::kUncertainty) {
    for (std::size_t i = 0; i < meta_batch; ++i) h.push_back("s_" + std::to_string(i));
  }
  h.push_back("wall_ms");
  return h;
}

std::vector<std::string> metrics_fields(const MetricsRow& row, CombineMode mode,
                                        bool classification) {
  std::vector<std::string> f{std::to_string(row.iteration), format_double(row.mean_support_loss),
                             format_double(row.mean_query_loss),
                             format_double(row.post_adapt_eval_loss)};
  if (classification) f.push_back(format_double(row.accuracy.value_or(std::nan(""))));
  f.push_back(std::to_string(row.init_idx));
  if (mode == CombineMode::kWeightGen) {
    for (double w : row.weights) f.push_back(format_double(w));
  }
  if (mode == CombineMode::kUncertainty) {
    for (double s : row.s) f.push_back(format_double(s));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", row.wall_ms);
  f.emplace_back(buf);
  return f;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, CombineMode mode,
                             bool classification, std::size_t meta_batch)
    : out_(path, std::ios::binary), mode_(mode), classification_(classification) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << csv_line(metrics_header(mode, classification, meta_batch));
  out_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
  out_ << csv_line(metrics_fields(row, mode_, classification_));
  out_.flush();
  if (!out_) throw std::runtime_error("write to metrics.csv failed");
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace umaml::harness
