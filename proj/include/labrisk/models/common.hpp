#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "labrisk/errors.hpp"
#include "labrisk/matrix.hpp"

namespace labrisk::models {

// Borrowed view of a dense training set. `w` may be null (unit weights).
struct DataView {
  const double* x = nullptr;
  std::size_t n = 0;
  std::size_t p = 0;
  const int* y = nullptr;
  const double* w = nullptr;

  DataView() = default;
  DataView(const std::vector<double>& xs, std::size_t cols,
           const std::vector<int>& ys, const std::vector<double>& ws = {})
      : x(xs.data()), n(ys.size()), p(cols), y(ys.data()),
        w(ws.empty() ? nullptr : ws.data()) {
    if (xs.size() != ys.size() * cols)
      throw UserError("DataView: X size does not match n*p");
    if (!ws.empty() && ws.size() != ys.size())
      throw UserError("DataView: weight size mismatch");
  }

  const double* row(std::size_t i) const { return x + i * p; }
  double weight(std::size_t i) const { return w ? w[i] : 1.0; }

  void require_both_classes(const char* who) const {
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) (y[i] == 1 ? pos : neg) = true;
    if (!pos || !neg)
      throw UserError(std::string(who) + ": both classes required");
  }
};

inline double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// log(1 + exp(m)) without overflow.
inline double softplus(double m) {
  return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

inline double clip_prob(double p) {
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

inline double logit(double p) {
  p = clip_prob(p);
  return std::log(p / (1.0 - p));
}

}  // namespace labrisk::models
