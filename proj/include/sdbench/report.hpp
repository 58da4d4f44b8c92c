#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdbench::report {

enum class CellFormat {
  Percent,  ///< 2 decimals
  PValue,   ///< 4 decimals, flagged below 0.05 in text output
  Fixed4,   ///< 4 decimals, no flag
  Scientific,  ///< "%.3e", for error magnitudes
  Integer,  ///< "%.0f"
  General,  ///< "%.10g"
};

struct ReportRow {
  std::string name;
  std::vector<double> values;
};

struct ReportTable {
  std::string title;
  std::string row_header = "algorithm";
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;
  CellFormat format = CellFormat::Fixed4;
  /// Per-column override; empty means `format` everywhere.
  std::vector<CellFormat> column_formats;

  CellFormat format_of(std::size_t column) const {
    return column < column_formats.size() ? column_formats[column] : format;
  }
};

inline constexpr double kSignificance = 0.05;

/// Percentages (in hundredths) that add up to exactly 100.00. Each count gets
/// the floor of its share and the leftover hundredths go to the largest
/// remainders, earlier columns winning ties. Throws ArgumentError when the
/// counts sum to zero.
std::vector<double> reconcile_percentages(const std::vector<std::size_t>& counts);

/// Cell text without decoration. Non-finite values print
/// as "nan", "inf" or "-inf".
std::string format_value(double v, CellFormat format);

/// Aligned plain-text table. P-value cells below 0.05 carry a trailing "*"
/// and a legend line follows the table.
std::string render_text(const ReportTable& table);
/// Header `<row_header>,<columns...>`, one line per row.
std::string render_csv(const ReportTable& table);
/// {title, columns, rows: [{name, values}]} with values rounded as displayed.
nlohmann::ordered_json to_json(const ReportTable& table);
std::string render_json(const ReportTable& table);

}  // namespace sdbench::report
