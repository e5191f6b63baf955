#pragma once

#include <cmath>
#include <vector>

#include "labrisk/linalg.hpp"
#include "labrisk/models/common.hpp"

namespace labrisk::models {

struct LogRegOptions {
  double C = 1.0;       // inverse regularization strength
  double tol = 1e-6;    // gradient max-norm at convergence
  int max_iter = 1000;
};

struct LogRegModel {
  std::vector<double> coef;
  double intercept = 0.0;
  bool converged = false;
  int iterations = 0;

  double margin(const double* x) const {
    double m = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) m += coef[j] * x[j];
    return m;
  }
};

// Weighted L2-penalized logistic regression, objective
//   sum_i w_i * ce(m_i, y_i) + ||beta||^2 / (2C)
// with the intercept unpenalized, minimized by damped Newton iterations.
inline LogRegModel fit_logreg(const DataView& d, const LogRegOptions& opt = {}) {
  if (opt.C <= 0) throw UserError("fit_logreg: C must be positive");
  d.require_both_classes("fit_logreg");
  const std::size_t p = d.p;
  const std::size_t dim = p + 1;  // coef..., intercept

  std::vector<double> theta(dim, 0.0);
  std::vector<double> margins(d.n), probs(d.n);

  auto compute_margins = [&](const std::vector<double>& t) {
    for (std::size_t i = 0; i < d.n; ++i) {
      double m = t[p];
      const double* xi = d.row(i);
      for (std::size_t j = 0; j < p; ++j) m += t[j] * xi[j];
      margins[i] = m;
    }
  };
  auto objective = [&](const std::vector<double>& t) {
    compute_margins(t);
    double J = 0.0;
    for (std::size_t i = 0; i < d.n; ++i)
      J += d.weight(i) * (softplus(margins[i]) - d.y[i] * margins[i]);
    double pen = 0.0;
    for (std::size_t j = 0; j < p; ++j) pen += t[j] * t[j];
    return J + pen / (2.0 * opt.C);
  };

  LogRegModel model;
  double J = objective(theta);
  std::vector<double> grad(dim), step(dim), trial(dim);
  std::vector<double> hess(dim * dim);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    compute_margins(theta);
    for (std::size_t i = 0; i < d.n; ++i) probs[i] = sigmoid(margins[i]);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < d.n; ++i) {
      const double g = d.weight(i) * (probs[i] - d.y[i]);
      const double* xi = d.row(i);
      for (std::size_t j = 0; j < p; ++j) grad[j] += g * xi[j];
      grad[p] += g;
    }
    for (std::size_t j = 0; j < p; ++j) grad[j] += theta[j] / opt.C;

    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax < opt.tol) {
      model.converged = true;
      break;
    }

    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < d.n; ++i) {
      const double h = d.weight(i) * probs[i] * (1.0 - probs[i]);
      if (h == 0.0) continue;
      const double* xi = d.row(i);
      for (std::size_t a = 0; a <= p; ++a) {
        const double xa = a < p ? xi[a] : 1.0;
        for (std::size_t b = 0; b <= a; ++b) {
          const double xb = b < p ? xi[b] : 1.0;
          hess[a * dim + b] += h * xa * xb;
        }
      }
    }
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = a + 1; b < dim; ++b)
        hess[a * dim + b] = hess[b * dim + a];
    for (std::size_t j = 0; j < p; ++j) hess[j * dim + j] += 1.0 / opt.C;

    step = linalg::cholesky_solve(hess, grad);

    // Backtracking keeps Newton honest far from the optimum.
    double scale = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < dim; ++j)
        trial[j] = theta[j] - scale * step[j];
      const double Jt = objective(trial);
      if (Jt < J) {
        theta = trial;
        J = Jt;
        moved = true;
        break;
      }
      scale /= 2.0;
    }
    if (!moved) break;  // numerically stuck; report non-convergence
  }
  model.iterations = it;
  model.coef.assign(theta.begin(), theta.begin() + p);
  model.intercept = theta[p];
  return model;
}

}  // namespace labrisk::models
