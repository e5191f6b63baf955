#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "labrisk/errors.hpp"

namespace labrisk {

// Dense row-major feature table. NaN marks a missing cell. Row metadata
// (subject id, label) rides along so grouped splitting and leakage checks
// can see it; fixtures that don't need metadata may leave those empty.
struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<double> values;  // n_rows * n_cols, row-major
  std::vector<std::string> subject_ids;
  std::vector<int> labels;
  std::vector<int> tags;  // optional per-row partition tag for leakage audits
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;

  static double missing() { return std::numeric_limits<double>::quiet_NaN(); }
  static bool is_missing(double v) { return std::isnan(v); }

  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> cols, std::size_t rows)
      : columns(std::move(cols)), n_rows(rows), n_cols(columns.size()) {
    values.assign(n_rows * n_cols, missing());
  }

  double at(std::size_t r, std::size_t c) const {
    return values[r * n_cols + c];
  }
  double& at(std::size_t r, std::size_t c) { return values[r * n_cols + c]; }
  const double* row(std::size_t r) const { return values.data() + r * n_cols; }

  int col(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }

  std::size_t require_col(std::string_view name) const {
    int c = col(name);
    if (c < 0)
      throw UserError("feature matrix has no column '" + std::string(name) +
                      "'");
    return static_cast<std::size_t>(c);
  }

  FeatureMatrix select_rows(const std::vector<std::size_t>& idx) const {
    FeatureMatrix out(columns, idx.size());
    out.subject_ids.reserve(subject_ids.empty() ? 0 : idx.size());
    out.labels.reserve(labels.empty() ? 0 : idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t r = idx[i];
      for (std::size_t c = 0; c < n_cols; ++c) out.at(i, c) = at(r, c);
      if (!subject_ids.empty()) out.subject_ids.push_back(subject_ids[r]);
      if (!labels.empty()) out.labels.push_back(labels[r]);
      if (!tags.empty()) out.tags.push_back(tags[r]);
    }
    return out;
  }

  FeatureMatrix select_columns(const std::vector<std::string>& names) const {
    FeatureMatrix out(names, n_rows);
    out.subject_ids = subject_ids;
    out.labels = labels;
    out.tags = tags;
    for (std::size_t j = 0; j < names.size(); ++j) {
      const std::size_t src = require_col(names[j]);
      for (std::size_t r = 0; r < n_rows; ++r) out.at(r, j) = at(r, src);
    }
    return out;
  }

  void append_column(const std::string& name, const std::vector<double>& col) {
    if (col.size() != n_rows)
      throw UserError("append_column: size mismatch for '" + name + "'");
    std::vector<double> next((n_cols + 1) * n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      for (std::size_t c = 0; c < n_cols; ++c)
        next[r * (n_cols + 1) + c] = at(r, c);
      next[r * (n_cols + 1) + n_cols] = col[r];
    }
    values = std::move(next);
    columns.push_back(name);
    ++n_cols;
  }

  std::size_t missing_count(std::size_t c) const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < n_rows; ++r)
      if (is_missing(at(r, c))) ++n;
    return n;
  }

  bool has_missing() const {
    for (double v : values)
      if (is_missing(v)) return true;
    return false;
  }
};

}  // namespace labrisk
