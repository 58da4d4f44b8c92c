#include "sdbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sdbench/errors.hpp"

namespace sdbench::report {

std::vector<double> reconcile_percentages(const std::vector<std::size_t>& counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw ArgumentError("reconcile_percentages: counts sum to zero");
  constexpr std::size_t kUnits = 10000;  // hundredths of a percent
  std::vector<std::size_t> units(counts.size());
  std::vector<std::size_t> rem(counts.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    // integer arithmetic keeps the remainders exact
    units[i] = counts[i] * kUnits / total;
    rem[i] = counts[i] * kUnits % total;
    assigned += units[i];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < kUnits; ++k, ++assigned) ++units[order[k]];
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(units[i]) / 100.0;
  return out;
}

std::string format_value(double v, CellFormat format) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const char* fmt = "%.4f";
  switch (format) {
    case CellFormat::Percent: fmt = "%.2f"; break;
    case CellFormat::Scientific: fmt = "%.3e"; break;
    case CellFormat::Integer: fmt = "%.0f"; break;
    case CellFormat::General: fmt = "%.10g"; break;
    default: break;
  }
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

namespace {

bool flagged(double v, CellFormat f) { return f == CellFormat::PValue && v < kSignificance; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_text(const ReportTable& t) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({t.row_header});
  for (const auto& c : t.columns) cells.back().push_back(c);
  bool any_flag = false;
  for (const auto& r : t.rows) {
    std::vector<std::string> line{r.name};
    for (std::size_t c = 0; c < r.values.size(); ++c) {
      const double v = r.values[c];
      const CellFormat f = t.format_of(c);
      std::string s = format_value(v, f);
      if (flagged(v, f)) {
        s += '*';
        any_flag = true;
      } else if (f == CellFormat::PValue) {
        s += ' ';  // keeps digits aligned with flagged cells
      }
      line.push_back(std::move(s));
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width;
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], line[i].size());
    }

  std::ostringstream os;
  os << t.title << '\n';
  for (std::size_t li = 0; li < cells.size(); ++li) {
    const auto& line = cells[li];
    std::string row;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i == 0) {
        row += line[i] + std::string(width[i] - line[i].size(), ' ');
      } else {
        row += "  " + std::string(width[i] - line[i].size(), ' ') + line[i];
      }
    }
    while (!row.empty() && row.back() == ' ') row.pop_back();
    os << row << '\n';
    if (li == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i ? 2 : 0);
      os << std::string(total, '-') << '\n';
    }
  }
  if (any_flag) os << "* p < 0.05\n";
  return os.str();
}

std::string render_csv(const ReportTable& t) {
  std::ostringstream os;
  os << csv_field(t.row_header);
  for (const auto& c : t.columns) os << ',' << csv_field(c);
  os << '\n';
  for (const auto& r : t.rows) {
    os << csv_field(r.name);
    for (std::size_t c = 0; c < r.values.size(); ++c)
      os << ',' << format_value(r.values[c], t.format_of(c));
    os << '\n';
  }
  return os.str();
}

nlohmann::ordered_json to_json(const ReportTable& t) {
  nlohmann::ordered_json j;
  j["title"] = t.title;
  j["columns"] = t.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json row;
    row["name"] = r.name;
    auto vals = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < r.values.size(); ++c) {
      const std::string text = format_value(r.values[c], t.format_of(c));
      if (std::isfinite(r.values[c]))
        vals.push_back(std::stod(text));
      else
        vals.push_back(text);  // JSON has no inf/nan literal
    }
    row["values"] = std::move(vals);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string render_json(const ReportTable& t) { return to_json(t).dump(2) + "\n"; }

}  // namespace sdbench::report
