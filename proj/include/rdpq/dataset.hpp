#pragma once

// User datasets: a CSV with covariate columns, a 0/1 indicator column and an
// outcome column that is empty wherever the indicator is 0.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "rdpq/csv.hpp"
#include "rdpq/error.hpp"
#include "rdpq/estimators.hpp"

namespace rdpq {

struct Dataset {
  ObservedSample sample;
  std::vector<std::string> covariate_names;  // name k lives in covariates column k + 1
};

inline constexpr std::size_t min_dataset_rows = 10;

inline Dataset load_dataset(const csv::Table& t, std::string_view a_col = "a", std::string_view y_col = "y") {
  const auto ia = t.column(a_col), iy = t.column(y_col);
  if (ia < 0) throw error(error_kind::data, "missing indicator column '" + std::string(a_col) + "'");
  if (iy < 0) throw error(error_kind::data, "missing outcome column '" + std::string(y_col) + "'");
  if (t.rows.size() < min_dataset_rows) {
    throw error(error_kind::data, "dataset has " + std::to_string(t.rows.size()) + " rows; at least " +
                                      std::to_string(min_dataset_rows) + " are required");
  }
  Dataset d;
  std::vector<std::size_t> cov_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (static_cast<std::ptrdiff_t>(c) == ia || static_cast<std::ptrdiff_t>(c) == iy) continue;
    cov_cols.push_back(c);
    d.covariate_names.push_back(t.header[c]);
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  auto& s = d.sample;
  s.covariates.resize(n, static_cast<Eigen::Index>(cov_cols.size()) + 1);
  s.a.resize(t.rows.size());
  s.y.resize(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    const auto i = static_cast<Eigen::Index>(r);
    s.covariates(i, 0) = 1.0;
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      s.covariates(i, static_cast<Eigen::Index>(k) + 1) =
          csv::parse_number(row[cov_cols[k]], line, t.header[cov_cols[k]], false);
    }
    const auto& acell = row[static_cast<std::size_t>(ia)];
    if (acell != "0" && acell != "1") {
      throw error(error_kind::data, "line " + std::to_string(line) + ": indicator '" + std::string(a_col) +
                                        "' must be 0 or 1, found '" + acell + "'");
    }
    s.a[r] = acell == "1" ? 1 : 0;
    const double y = csv::parse_number(row[static_cast<std::size_t>(iy)], line, y_col, true);
    if (s.a[r] == 1 && std::isnan(y)) {
      throw error(error_kind::data, "line " + std::to_string(line) + ": outcome is empty on an observed row");
    }
    s.y[r] = s.a[r] == 1 ? y : std::numeric_limits<double>::quiet_NaN();
  }
  if (s.m() < 1) throw error(error_kind::data, "dataset has no observed outcomes");
  return d;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (csv::trim(s).empty()) return out;
  for (auto& f : csv::split_line(s)) out.push_back(std::move(f));
  return out;
}

/// Intercept plus the named covariates; an empty list selects all of them.
inline DesignSpec design_from_names(const Dataset& d, std::string_view names) {
  DesignSpec spec{{}, true};
  const auto wanted = split_list(names);
  if (wanted.empty()) {
    for (std::size_t k = 0; k < d.covariate_names.size(); ++k) spec.columns.push_back(static_cast<int>(k) + 1);
    return spec;
  }
  for (const auto& w : wanted) {
    std::ptrdiff_t found = -1;
    for (std::size_t k = 0; k < d.covariate_names.size(); ++k) {
      if (d.covariate_names[k] == w) found = static_cast<std::ptrdiff_t>(k);
    }
    if (found < 0) throw error(error_kind::data, "unknown covariate column '" + w + "'");
    spec.columns.push_back(static_cast<int>(found) + 1);
  }
  return spec;
}

}  // namespace rdpq
