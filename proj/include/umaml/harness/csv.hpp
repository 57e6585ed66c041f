#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "umaml/meta_engine.hpp"

namespace umaml::harness {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws CsvError when the column is absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  // Numeric value of one cell; throws CsvError if it does not parse.
  double number(std::size_t row, std::size_t col) const;
};

// Comma-separated, header row required, every row the header's width. No
// quoting; fields must not contain commas or newlines.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_line(const std::vector<std::string>& fields);

// Column set for one run: accuracy only for classification, w_i only for the
// weight generator, s_i only for uncertainty mode.
std::vector<std::string> metrics_header(CombineMode mode, bool classification,
                                        std::size_t meta_batch);
std::vector<std::string> metrics_fields(const MetricsRow& row, CombineMode mode,
                                        bool classification);

// Streams rows to disk, flushing each so a diverged run keeps its prefix.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, CombineMode mode, bool classification,
                std::size_t meta_batch);
  void write(const MetricsRow& row);

 private:
  std::ofstream out_;
  CombineMode mode_;
  bool classification_;
};

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace umaml::harness
