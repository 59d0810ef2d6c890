#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "tspca/eigensystem.hpp"
#include "tspca/error.hpp"
#include "tspca/series.hpp"

namespace tspca {

enum class LoadingSign { positive, negative, suppressed };

/// Per-entry two-sided z-tests of H0: a_{kj} = 0. All matrices are
/// component-by-variable.
struct LoadingTestResult {
  Matrix estimate;
  Matrix sd;
  Matrix z;
  Matrix p_value;
  std::vector<std::vector<bool>> significant;
  std::vector<std::vector<LoadingSign>> sign_map;
  double alpha = 0.05;
  double critical_value = 0.0;
  /// False for threshold screening, which is not a hypothesis test.
  bool inferential = true;
  std::string method;
};

struct ProportionCI {
  Vector r;
  Vector lower;
  Vector upper;
  double alpha = 0.05;
};

struct LoadingTestOptions {
  /// Divide alpha by the number of tested entries.
  bool bonferroni = false;
  /// Test only the first `components` rows (0 = all).
  std::size_t components = 0;
};

/// z_{1 - alpha/2}.
[[nodiscard]] inline double normal_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("level alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>{}, alpha / 2.0));
}

/// Tests every loading against zero using the supplied standard deviations.
///
/// An entry is significant iff |z| is strictly greater than z_{1-alpha/2}.
/// With sd = 0 the entry is significant exactly when the estimate is nonzero.
[[nodiscard]] inline LoadingTestResult test_loadings(const EigenDecomposition& decomp, const Matrix& sd,
                                                     double alpha, const LoadingTestOptions& opts = {}) {
  const auto p = static_cast<Eigen::Index>(decomp.p());
  if (sd.rows() != p || sd.cols() != p) throw InvalidArgument("test_loadings: sd shape mismatch");
  if (!(alpha > 0.0 && alpha <= 0.5)) throw InvalidArgument("test_loadings: alpha must lie in (0, 0.5]");
  if ((sd.array() < 0.0).any() || !sd.allFinite()) throw InvalidArgument("test_loadings: negative or non-finite sd");
  const auto rows = opts.components == 0 ? p : std::min<Eigen::Index>(p, static_cast<Eigen::Index>(opts.components));

  LoadingTestResult out;
  out.method = "z-test";
  out.alpha = alpha;
  out.estimate = decomp.loadings().topRows(rows);
  out.sd = sd.topRows(rows);
  const double tests = static_cast<double>(rows * p);
  out.critical_value = normal_critical_value(opts.bonferroni ? alpha / tests : alpha);
  out.z.resize(rows, p);
  out.p_value.resize(rows, p);
  out.significant.assign(static_cast<std::size_t>(rows), std::vector<bool>(static_cast<std::size_t>(p), false));
  out.sign_map.assign(static_cast<std::size_t>(rows),
                      std::vector<LoadingSign>(static_cast<std::size_t>(p), LoadingSign::suppressed));
  for (Eigen::Index k = 0; k < rows; ++k) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double est = out.estimate(k, j);
      const double s = out.sd(k, j);
      double z;
      if (s > 0.0) {
        z = est / s;
      } else {
        z = est == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), est);
      }
      out.z(k, j) = z;
      out.p_value(k, j) = std::erfc(std::abs(z) / std::sqrt(2.0));
      const bool sig = std::abs(z) > out.critical_value;
      const auto ks = static_cast<std::size_t>(k), js = static_cast<std::size_t>(j);
      out.significant[ks][js] = sig;
      if (sig) out.sign_map[ks][js] = est > 0.0 ? LoadingSign::positive : LoadingSign::negative;
    }
  }
  return out;
}

/// Screening that keeps loadings with |a| >= threshold. Not inferential;
/// provided for comparison with ad-hoc truncation practice.
[[nodiscard]] inline LoadingTestResult truncation_screen(const EigenDecomposition& decomp, double threshold = 0.1,
                                                         std::size_t components = 0) {
  const auto p = static_cast<Eigen::Index>(decomp.p());
  const auto rows = components == 0 ? p : std::min<Eigen::Index>(p, static_cast<Eigen::Index>(components));
  LoadingTestResult out;
  out.method = "truncation";
  out.inferential = false;
  out.alpha = std::numeric_limits<double>::quiet_NaN();
  out.critical_value = threshold;
  out.estimate = decomp.loadings().topRows(rows);
  out.sd = Matrix::Constant(rows, p, std::numeric_limits<double>::quiet_NaN());
  out.z = out.sd;
  out.p_value = out.sd;
  out.significant.assign(static_cast<std::size_t>(rows), std::vector<bool>(static_cast<std::size_t>(p), false));
  out.sign_map.assign(static_cast<std::size_t>(rows),
                      std::vector<LoadingSign>(static_cast<std::size_t>(p), LoadingSign::suppressed));
  for (Eigen::Index k = 0; k < rows; ++k) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double est = out.estimate(k, j);
      if (std::abs(est) < threshold) continue;
      const auto ks = static_cast<std::size_t>(k), js = static_cast<std::size_t>(j);
      out.significant[ks][js] = true;
      out.sign_map[ks][js] = est > 0.0 ? LoadingSign::positive : LoadingSign::negative;
    }
  }
  return out;
}

/// r_k -/+ z_{1-alpha/2} sd_r_k, clamped to [0, 1].
[[nodiscard]] inline ProportionCI proportion_ci(const ProportionOfVariation& r, const Vector& sd_r, double alpha) {
  if (sd_r.size() != r.r.size()) throw InvalidArgument("proportion_ci: size mismatch");
  if ((sd_r.array() < 0.0).any()) throw InvalidArgument("proportion_ci: negative sd");
  const double z = normal_critical_value(alpha);
  ProportionCI ci;
  ci.alpha = alpha;
  ci.r = r.r;
  ci.lower = (r.r - z * sd_r).cwiseMax(0.0).cwiseMin(1.0);
  ci.upper = (r.r + z * sd_r).cwiseMax(0.0).cwiseMin(1.0);
  const auto last = r.r.size() - 1;
  ci.lower(last) = ci.upper(last) = 1.0;
  return ci;
}

/// Sign table: rows are components, columns variables, cells '+', '-' or blank.
struct LoadingTable {
  std::vector<std::string> variables;
  std::vector<std::string> sectors;  // empty, or one label per variable
  std::vector<std::vector<LoadingSign>> cells;
  bool inferential = true;
  std::string method;

  [[nodiscard]] static const char* symbol(LoadingSign s) {
    switch (s) {
      case LoadingSign::positive: return "+";
      case LoadingSign::negative: return "-";
      case LoadingSign::suppressed: return "";
    }
    return "";
  }

  [[nodiscard]] bool sector_break_before(std::size_t j) const {
    return !sectors.empty() && j > 0 && sectors[j] != sectors[j - 1];
  }

  /// Fixed-width text; ':' separates sectors.
  [[nodiscard]] std::string render_text() const {
    std::size_t width = 3;
    for (const auto& v : variables) width = std::max(width, v.size());
    std::ostringstream os;
    if (!inferential) os << "# " << method << " (screening, not a significance test)\n";
    auto cell = [&](const std::string& s) { os << ' ' << std::setw(static_cast<int>(width)) << s; };
    os << std::setw(5) << "";
    for (std::size_t j = 0; j < variables.size(); ++j) {
      if (sector_break_before(j)) os << " :";
      cell(variables[j]);
    }
    os << '\n';
    for (std::size_t k = 0; k < cells.size(); ++k) {
      os << std::left << std::setw(5) << ("PC" + std::to_string(k + 1)) << std::right;
      for (std::size_t j = 0; j < variables.size(); ++j) {
        if (sector_break_before(j)) os << " :";
        cell(symbol(cells[k][j]));
      }
      os << '\n';
    }
    return os.str();
  }

  /// CSV with a header of variable names; a "sector" row follows when sectors are set.
  [[nodiscard]] std::string render_csv() const {
    std::ostringstream os;
    os << "component";
    for (const auto& v : variables) os << ',' << v;
    os << '\n';
    if (!sectors.empty()) {
      os << "sector";
      for (const auto& s : sectors) os << ',' << s;
      os << '\n';
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      os << "PC" << (k + 1);
      for (const auto& c : cells[k]) os << ',' << symbol(c);
      os << '\n';
    }
    return os.str();
  }
};

[[nodiscard]] inline LoadingTable loading_table(const LoadingTestResult& results, std::vector<std::string> variables,
                                                std::vector<std::string> sectors = {}) {
  const auto p = static_cast<std::size_t>(results.estimate.cols());
  if (variables.empty()) {
    for (std::size_t j = 0; j < p; ++j) variables.push_back("X" + std::to_string(j + 1));
  }
  if (variables.size() != p) throw InvalidArgument("loading_table: expected " + std::to_string(p) + " variable labels");
  if (!sectors.empty() && sectors.size() != p) {
    throw InvalidArgument("loading_table: expected " + std::to_string(p) + " sector labels");
  }
  LoadingTable table;
  table.variables = std::move(variables);
  table.sectors = std::move(sectors);
  table.cells = results.sign_map;
  table.inferential = results.inferential;
  table.method = results.method;
  return table;
}

}  // namespace tspca
