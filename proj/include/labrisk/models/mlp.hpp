#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "labrisk/models/common.hpp"
#include "labrisk/rng.hpp"

namespace labrisk::models {

struct MlpOptions {
  std::vector<int> hidden = {100};
  double alpha = 1e-4;        // L2 on weights (not biases)
  bool adaptive = false;      // halve lr after 2 stalled epochs
  double learning_rate0 = 0.05;
  int max_epochs = 200;
  int batch_size = 32;
  double improve_tol = 1e-4;  // minimum epoch-loss improvement
  std::uint64_t seed = 1;
};

// Fully connected rectifier network with a single sigmoid output unit.
// Weights are stored per layer, row-major (out x in).
struct MlpModel {
  std::vector<int> sizes;  // input, hidden..., 1
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  bool converged = false;
  int epochs = 0;

  double margin(const double* x) const {
    std::vector<double> a(x, x + sizes.front());
    std::vector<double> next;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int in = sizes[l], out = sizes[l + 1];
      next.assign(out, 0.0);
      for (int o = 0; o < out; ++o) {
        double s = biases[l][o];
        const double* wrow = weights[l].data() + o * in;
        for (int j = 0; j < in; ++j) s += wrow[j] * a[j];
        next[o] = l + 2 < sizes.size() ? std::max(0.0, s) : s;
      }
      a.swap(next);
    }
    return a[0];
  }
};

struct MlpGradients {
  double loss = 0.0;
  std::vector<std::vector<double>> weights;  // same shapes as the model
  std::vector<std::vector<double>> biases;
};

namespace detail {

struct MlpWorkspace {
  std::vector<std::vector<double>> activ;  // per layer, post-activation
  std::vector<std::vector<double>> delta;
};

// Forward + backward for a subset of rows. Accumulates sum_i w~_i * ce_i and
// the matching gradients; the caller handles batch/penalty scaling.
inline double accumulate_grads(const MlpModel& m, const DataView& d,
                               const std::vector<double>& wnorm,
                               const std::vector<std::size_t>& rows,
                               MlpGradients& g, MlpWorkspace& ws) {
  const std::size_t layers = m.weights.size();
  ws.activ.resize(layers + 1);
  ws.delta.resize(layers);
  double loss = 0.0;
  for (std::size_t r : rows) {
    ws.activ[0].assign(d.row(r), d.row(r) + m.sizes.front());
    for (std::size_t l = 0; l < layers; ++l) {
      const int in = m.sizes[l], out = m.sizes[l + 1];
      ws.activ[l + 1].assign(out, 0.0);
      for (int o = 0; o < out; ++o) {
        double s = m.biases[l][o];
        const double* wrow = m.weights[l].data() + o * in;
        for (int j = 0; j < in; ++j) s += wrow[j] * ws.activ[l][j];
        ws.activ[l + 1][o] = l + 1 < layers ? std::max(0.0, s) : s;
      }
    }
    const double margin = ws.activ[layers][0];
    const double wi = wnorm[r];
    loss += wi * (softplus(margin) - d.y[r] * margin);
    // output delta, then backprop through the rectifiers
    ws.delta[layers - 1].assign(1, wi * (sigmoid(margin) - d.y[r]));
    for (std::size_t l = layers - 1; l-- > 0;) {
      const int out = m.sizes[l + 1];
      const int out_next = m.sizes[l + 2];
      ws.delta[l].assign(out, 0.0);
      for (int o = 0; o < out; ++o) {
        if (ws.activ[l + 1][o] <= 0.0) continue;  // ReLU gate
        double s = 0.0;
        for (int q = 0; q < out_next; ++q)
          s += m.weights[l + 1][q * out + o] * ws.delta[l + 1][q];
        ws.delta[l][o] = s;
      }
    }
    for (std::size_t l = 0; l < layers; ++l) {
      const int in = m.sizes[l], out = m.sizes[l + 1];
      for (int o = 0; o < out; ++o) {
        const double dl = ws.delta[l][o];
        if (dl == 0.0) continue;
        double* grow = g.weights[l].data() + o * in;
        for (int j = 0; j < in; ++j) grow[j] += dl * ws.activ[l][j];
        g.biases[l][o] += dl;
      }
    }
  }
  return loss;
}

inline MlpGradients zero_like(const MlpModel& m) {
  MlpGradients g;
  g.weights.resize(m.weights.size());
  g.biases.resize(m.biases.size());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    g.weights[l].assign(m.weights[l].size(), 0.0);
    g.biases[l].assign(m.biases[l].size(), 0.0);
  }
  return g;
}

}  // namespace detail

// Full-batch objective and analytic gradient at the model's current
// parameters:
//   J = (1/n) sum_i w~_i ce_i + (alpha / 2n) sum ||W||^2,
// where w~ rescales the sample weights to mean one.
inline MlpGradients mlp_loss_and_grad(const MlpModel& m, const DataView& d,
                                      double alpha) {
  std::vector<double> wnorm(d.n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) wsum += d.weight(i);
  for (std::size_t i = 0; i < d.n; ++i)
    wnorm[i] = d.weight(i) * d.n / wsum;

  std::vector<std::size_t> rows(d.n);
  std::iota(rows.begin(), rows.end(), 0);
  MlpGradients g = detail::zero_like(m);
  detail::MlpWorkspace ws;
  double loss = detail::accumulate_grads(m, d, wnorm, rows, g, ws);
  loss /= d.n;
  double pen = 0.0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (double w : m.weights[l]) pen += w * w;
    for (auto& v : g.weights[l]) v /= d.n;
    for (auto& v : g.biases[l]) v /= d.n;
  }
  loss += alpha * pen / (2.0 * d.n);
  for (std::size_t l = 0; l < m.weights.size(); ++l)
    for (std::size_t k = 0; k < m.weights[l].size(); ++k)
      g.weights[l][k] += alpha * m.weights[l][k] / d.n;
  g.loss = loss;
  return g;
}

// Mini-batch first-order training of the weighted cross-entropy objective.
// The adaptive schedule halves the step after the epoch loss twice fails to
// improve by improve_tol. A NaN loss aborts with the offending seed/config.
inline MlpModel fit_mlp(const DataView& d, const MlpOptions& opt = {}) {
  d.require_both_classes("fit_mlp");
  MlpModel m;
  m.sizes.push_back(static_cast<int>(d.p));
  for (int h : opt.hidden) {
    if (h < 1) throw UserError("fit_mlp: hidden layer sizes must be >= 1");
    m.sizes.push_back(h);
  }
  m.sizes.push_back(1);

  Rng rng(opt.seed);
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    const int in = m.sizes[l], out = m.sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::vector<double> w(static_cast<std::size_t>(in) * out);
    for (auto& v : w) v = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }

  std::vector<double> wnorm(d.n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) wsum += d.weight(i);
  for (std::size_t i = 0; i < d.n; ++i)
    wnorm[i] = d.weight(i) * d.n / wsum;

  std::vector<std::size_t> order(d.n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch =
      std::min<std::size_t>(d.n, std::max(1, opt.batch_size));

  double lr = opt.learning_rate0;
  double best_loss = std::numeric_limits<double>::infinity();
  int stalls = 0;
  detail::MlpWorkspace ws;
  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < d.n; start += batch) {
      const std::size_t end = std::min(d.n, start + batch);
      std::vector<std::size_t> rows(order.begin() + start, order.begin() + end);
      MlpGradients g = detail::zero_like(m);
      detail::accumulate_grads(m, d, wnorm, rows, g, ws);
      const double inv = 1.0 / rows.size();
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        for (std::size_t k = 0; k < m.weights[l].size(); ++k)
          m.weights[l][k] -= lr * (g.weights[l][k] * inv +
                                   opt.alpha * m.weights[l][k] / d.n);
        for (std::size_t k = 0; k < m.biases[l].size(); ++k)
          m.biases[l][k] -= lr * g.biases[l][k] * inv;
      }
    }
    m.epochs = epoch + 1;
    const double loss = mlp_loss_and_grad(m, d, opt.alpha).loss;
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "fit_mlp diverged (loss not finite) at epoch " << epoch
          << "; seed=" << opt.seed << " lr0=" << opt.learning_rate0
          << " alpha=" << opt.alpha << " hidden=";
      for (int h : opt.hidden) msg << h << ",";
      throw std::runtime_error(msg.str());
    }
    if (loss < best_loss - opt.improve_tol) {
      best_loss = loss;
      stalls = 0;
    } else {
      best_loss = std::min(best_loss, loss);
      if (++stalls >= 2) {
        if (opt.adaptive) lr /= 2.0;
        stalls = 0;
      }
    }
  }
  m.converged = true;
  return m;
}

}  // namespace labrisk::models
