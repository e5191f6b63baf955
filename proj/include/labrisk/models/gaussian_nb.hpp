#pragma once

#include <cmath>
#include <vector>

#include "labrisk/models/common.hpp"

namespace labrisk::models {

struct GaussianNbModel {
  std::vector<double> mean0, mean1, var0, var1;
  double log_prior0 = 0.0, log_prior1 = 0.0;

  // log P(1|x) - log P(0|x)
  double margin(const double* x) const {
    double m = log_prior1 - log_prior0;
    for (std::size_t j = 0; j < mean0.size(); ++j) {
      const double d1 = x[j] - mean1[j];
      const double d0 = x[j] - mean0[j];
      m += -0.5 * std::log(var1[j]) - d1 * d1 / (2.0 * var1[j]);
      m -= -0.5 * std::log(var0[j]) - d0 * d0 / (2.0 * var0[j]);
    }
    return m;
  }
};

// Weighted per-class Gaussian likelihoods with a shared variance floor of
// 1e-9 times the largest overall feature variance. Scaling all weights by a
// constant leaves the fit unchanged.
inline GaussianNbModel fit_gaussian_nb(const DataView& d) {
  d.require_both_classes("fit_gaussian_nb");
  const std::size_t p = d.p;
  GaussianNbModel m;
  m.mean0.assign(p, 0.0);
  m.mean1.assign(p, 0.0);
  m.var0.assign(p, 0.0);
  m.var1.assign(p, 0.0);

  double w0 = 0.0, w1 = 0.0;
  for (std::size_t i = 0; i < d.n; ++i)
    (d.y[i] == 1 ? w1 : w0) += d.weight(i);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double wi = d.weight(i);
    const double* xi = d.row(i);
    auto& mean = d.y[i] == 1 ? m.mean1 : m.mean0;
    for (std::size_t j = 0; j < p; ++j) mean[j] += wi * xi[j];
  }
  for (std::size_t j = 0; j < p; ++j) {
    m.mean0[j] /= w0;
    m.mean1[j] /= w1;
  }
  for (std::size_t i = 0; i < d.n; ++i) {
    const double wi = d.weight(i);
    const double* xi = d.row(i);
    auto& mean = d.y[i] == 1 ? m.mean1 : m.mean0;
    auto& var = d.y[i] == 1 ? m.var1 : m.var0;
    for (std::size_t j = 0; j < p; ++j) {
      const double diff = xi[j] - mean[j];
      var[j] += wi * diff * diff;
    }
  }
  double max_overall_var = 0.0;
  {
    const double w = w0 + w1;
    for (std::size_t j = 0; j < p; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < d.n; ++i) mean += d.weight(i) * d.row(i)[j];
      mean /= w;
      double var = 0.0;
      for (std::size_t i = 0; i < d.n; ++i) {
        const double diff = d.row(i)[j] - mean;
        var += d.weight(i) * diff * diff;
      }
      max_overall_var = std::max(max_overall_var, var / w);
    }
  }
  const double floor = std::max(1e-9 * max_overall_var, 1e-300);
  for (std::size_t j = 0; j < p; ++j) {
    m.var0[j] = std::max(m.var0[j] / w0, floor);
    m.var1[j] = std::max(m.var1[j] / w1, floor);
  }
  m.log_prior0 = std::log(w0 / (w0 + w1));
  m.log_prior1 = std::log(w1 / (w0 + w1));
  return m;
}

}  // namespace labrisk::models
