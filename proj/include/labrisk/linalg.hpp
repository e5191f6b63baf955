#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace labrisk::linalg {

// Solve A x = b for symmetric positive definite A (n x n, row-major) by
// Cholesky. Retries with growing diagonal jitter when A is only
// semidefinite (collinear designs); throws if that fails too.
inline std::vector<double> cholesky_solve(std::vector<double> a,
                                          std::vector<double> b) {
  const std::size_t n = b.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += a[i * n + i];
  const double base = trace > 0 ? trace / n : 1.0;

  std::vector<double> l(n * n);
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double sum = a[i * n + j] + (i == j ? jitter : 0.0);
        for (std::size_t k = 0; k < j; ++k) sum -= l[i * n + k] * l[j * n + k];
        if (i == j) {
          if (sum <= 0.0) {
            ok = false;
            break;
          }
          l[i * n + i] = std::sqrt(sum);
        } else {
          l[i * n + j] = sum / l[j * n + j];
        }
      }
    }
    if (ok) {
      // forward then backward substitution
      std::vector<double> y(n), x(n);
      for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= l[i * n + k] * y[k];
        y[i] = sum / l[i * n + i];
      }
      for (std::size_t ii = n; ii-- > 0;) {
        double sum = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= l[k * n + ii] * x[k];
        x[ii] = sum / l[ii * n + ii];
      }
      return x;
    }
    jitter = jitter == 0.0 ? base * 1e-12 : jitter * 100.0;
  }
  throw std::runtime_error("cholesky_solve: matrix not positive definite");
}

}  // namespace labrisk::linalg
