#pragma once

#include <string>
#include <vector>

namespace fsel::app {

/// Shortest round-trip decimal. Throws on NaN/inf: a non-finite value in an
/// output table is a hard failure.
std::string format_number(double v);

/// RFC 4180 table: quoted only when needed, CRLF line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<std::string> row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

  static std::string escape(const std::string& field);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool step = false;  // staircase, for empirical CDFs
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::string desc;  // embedded as <desc>, used for the manifest reference
};

/// Static SVG 1.1 line plot with axes, ticks and a legend.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

/// Writes atomically (temp file + rename). Throws std::runtime_error.
void write_file(const std::string& path, const std::string& content);

}  // namespace fsel::app
