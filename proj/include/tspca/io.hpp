#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tspca/dgp.hpp"
#include "tspca/error.hpp"
#include "tspca/experiments.hpp"
#include "tspca/inference.hpp"
#include "tspca/model.hpp"
#include "tspca/series.hpp"

namespace tspca::io {

using Json = nlohmann::ordered_json;

/// Numeric table read from CSV. When the first column held non-numeric
/// values it is kept in `index` and excluded from `data`.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::string> index;
  std::string index_name;
  Matrix data;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Reads a comma-separated table with a mandatory header row. Every data
/// cell must be a finite number; a leading column whose first data cell is
/// not numeric is treated as a date/label column and skipped.
[[nodiscard]] inline CsvTable read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (!detail::trim(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw InvalidInput("csv: empty input, header row required");
  auto header = detail::split(line);
  for (const auto& h : header) {
    double dummy;
    if (detail::parse_number(h, dummy)) {
      throw InvalidInput("csv: line " + std::to_string(line_no) + ": header row required, found numeric cell '" + h +
                         "'");
    }
  }

  CsvTable table;
  bool has_index = false;
  bool decided = false;
  std::vector<std::vector<double>> rows;
  while (next_line()) {
    auto cells = detail::split(line);
    if (cells.size() != header.size()) {
      throw InvalidInput("csv: line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                         " cells, found " + std::to_string(cells.size()));
    }
    if (!decided) {
      double dummy;
      has_index = header.size() > 1 && !cells.front().empty() && !detail::parse_number(cells.front(), dummy);
      decided = true;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = has_index ? 1 : 0; j < cells.size(); ++j) {
      double v;
      if (!detail::parse_number(cells[j], v) || !std::isfinite(v)) {
        throw InvalidInput("csv: line " + std::to_string(line_no) + ", column '" + header[j] +
                           "': non-numeric or non-finite cell '" + cells[j] + "'");
      }
      row.push_back(v);
    }
    if (has_index) table.index.push_back(cells.front());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("csv: no data rows");
  if (has_index) {
    table.index_name = header.front();
    header.erase(header.begin());
  }
  table.columns = std::move(header);
  table.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t j = 0; j < rows[t].size(); ++j)
      table.data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
  return table;
}

[[nodiscard]] inline CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("csv: cannot open " + path.string());
  return read_csv(in);
}

/// Keeps the named columns, in the given order.
[[nodiscard]] inline CsvTable select_columns(const CsvTable& table, const std::vector<std::string>& names) {
  if (names.empty()) return table;
  CsvTable out;
  out.index = table.index;
  out.index_name = table.index_name;
  out.data.resize(table.data.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto it = std::find(table.columns.begin(), table.columns.end(), names[k]);
    if (it == table.columns.end()) throw InvalidInput("csv: no column named '" + names[k] + "'");
    out.data.col(static_cast<Eigen::Index>(k)) = table.data.col(it - table.columns.begin());
    out.columns.push_back(names[k]);
  }
  return out;
}

inline void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& m,
                             const std::vector<std::string>& row_labels = {}) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    bool first = true;
    if (!row_labels.empty()) {
      out << row_labels[static_cast<std::size_t>(i)];
      first = false;
    }
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (first ? "" : ",") << detail::format_double(m(i, j));
      first = false;
    }
    out << '\n';
  }
}

inline void write_series_csv(const std::filesystem::path& path, const MultivariateSeries& series,
                             std::vector<std::string> names = {}) {
  if (names.empty()) {
    for (std::size_t j = 0; j < series.p(); ++j) names.push_back("X" + std::to_string(j + 1));
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_matrix_csv(out, names, series.data());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// ---- JSON encoders -------------------------------------------------------

inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

/// Row-major nested arrays.
inline Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

inline Json to_json(const NoiseSpec& noise) {
  return std::visit(
      [](const auto& n) -> Json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          return {{"family", "gaussian"}, {"mean", to_json(n.mean)}, {"covariance", to_json(n.covariance)}};
        } else if constexpr (std::is_same_v<T, ContaminatedNoise>) {
          Json means = Json::array();
          for (const auto& m : n.outlier_means) means.push_back(to_json(m));
          return {{"family", "contaminated"},
                  {"base", {{"mean", to_json(n.base.mean)}, {"covariance", to_json(n.base.covariance)}}},
                  {"outlier_rate", n.outlier_rate},
                  {"outlier_means", means}};
        } else if constexpr (std::is_same_v<T, SkewNormalNoise>) {
          return {{"family", "skew_normal"},
                  {"xi", to_json(n.xi)},
                  {"omega", to_json(n.omega)},
                  {"alpha", to_json(n.alpha)},
                  {"recenter", n.recenter}};
        } else {
          return {{"family", "student_t"}, {"mu", to_json(n.mu)}, {"sigma", to_json(n.sigma)}, {"dof", n.dof}};
        }
      },
      noise);
}

inline std::string checksum_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Json to_json(const DGPSpec& spec) {
  Json coeffs = Json::array();
  for (const auto& c : spec.coefficients) coeffs.push_back(to_json(c));
  return {{"name", spec.name},
          {"kind", spec.kind == ModelKind::var ? "VAR" : "VMA"},
          {"order", spec.order()},
          {"p", spec.p()},
          {"coefficients", coeffs},
          {"noise", to_json(spec.noise)},
          {"checksum", checksum_hex(spec_checksum(spec))}};
}

inline Json to_json(const MethodSd& sd) {
  return {{"sd_values", to_json(sd.values)},
          {"sd_loadings", to_json(sd.loadings)},
          {"sd_r", to_json(sd.r)},
          {"cov_values", sd.cov_values.size() > 0 ? to_json(sd.cov_values) : Json(nullptr)}};
}

inline Json to_json(const MetricTable& t) {
  Json methods = Json::object();
  for (const auto& [name, m] : t.methods) {
    methods[name] = {{"delta_r", to_json(m.delta_r)},
                     {"delta_star_a", to_json(m.delta_star_a)},
                     {"delta_tilde", to_json(m.delta_tilde)},
                     {"flagged_entries", m.flagged}};
  }
  return {{"dgp", t.dgp_id}, {"n", t.n}, {"replicates", t.replicates}, {"methods", methods}};
}

/// Long format: method, metric, k, k2, value (k2 empty for vector metrics).
inline std::string metric_table_csv(const MetricTable& t) {
  std::ostringstream os;
  os << "dgp,method,metric,k,k2,value\n";
  for (const auto& [name, m] : t.methods) {
    for (Eigen::Index k = 0; k < m.delta_r.size(); ++k) {
      os << t.dgp_id << ',' << name << ",delta_r," << k + 1 << ",," << detail::format_double(m.delta_r(k)) << '\n';
    }
    for (Eigen::Index k = 0; k < m.delta_star_a.rows(); ++k)
      for (Eigen::Index j = 0; j < m.delta_star_a.cols(); ++j)
        os << t.dgp_id << ',' << name << ",delta_star_a," << k + 1 << ',' << j + 1 << ','
           << detail::format_double(m.delta_star_a(k, j)) << '\n';
    for (Eigen::Index k = 0; k < m.delta_tilde.size(); ++k) {
      os << t.dgp_id << ',' << name << ",delta_tilde," << k + 1 << ",," << detail::format_double(m.delta_tilde(k))
         << '\n';
    }
  }
  return os.str();
}

inline std::string plot_csv(const std::vector<PlotPoint>& plot) {
  std::ostringstream os;
  os << "series,x,y\n";
  for (const auto& pt : plot) os << pt.series << ',' << pt.x << ',' << detail::format_double(pt.y) << '\n';
  return os.str();
}

inline Json to_json(const LoadingTestResult& r, const std::vector<std::string>& variables) {
  Json rows = Json::array();
  for (Eigen::Index k = 0; k < r.estimate.rows(); ++k) {
    Json cells = Json::array();
    for (Eigen::Index j = 0; j < r.estimate.cols(); ++j) {
      const auto ks = static_cast<std::size_t>(k), js = static_cast<std::size_t>(j);
      cells.push_back({{"variable", variables[js]},
                       {"estimate", number(r.estimate(k, j))},
                       {"sd", number(r.sd(k, j))},
                       {"z", number(r.z(k, j))},
                       {"p_value", number(r.p_value(k, j))},
                       {"significant", static_cast<bool>(r.significant[ks][js])}});
    }
    rows.push_back({{"component", k + 1}, {"cells", cells}});
  }
  return {{"method", r.method},
          {"inferential", r.inferential},
          {"alpha", number(r.alpha)},
          {"critical_value", r.critical_value},
          {"components", rows}};
}

}  // namespace tspca::io
