#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "labrisk/matrix.hpp"
#include "labrisk/models/common.hpp"
#include "labrisk/models/gaussian_nb.hpp"
#include "labrisk/models/gbdt.hpp"
#include "labrisk/models/logreg.hpp"
#include "labrisk/models/mlp.hpp"
#include "labrisk/models/random_forest.hpp"

namespace labrisk::models {

enum class ModelFamily { logreg, gaussian_nb, random_forest, gbdt, mlp };

inline std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::logreg: return "logreg";
    case ModelFamily::gaussian_nb: return "gaussian_nb";
    case ModelFamily::random_forest: return "random_forest";
    case ModelFamily::gbdt: return "gbdt";
    case ModelFamily::mlp: return "mlp";
  }
  return "?";
}

// One contract for every family: class-1 probability, plus a margin
// (log-odds) view used by threshold-free consumers such as the explainers.
struct FittedModel {
  ModelFamily family = ModelFamily::logreg;
  std::variant<LogRegModel, GaussianNbModel, ForestModel, GbdtModel, MlpModel>
      impl;

  double prob1(const double* x) const {
    switch (family) {
      case ModelFamily::logreg:
        return sigmoid(std::get<LogRegModel>(impl).margin(x));
      case ModelFamily::gaussian_nb:
        return sigmoid(std::get<GaussianNbModel>(impl).margin(x));
      case ModelFamily::random_forest:
        return std::get<ForestModel>(impl).prob(x);
      case ModelFamily::gbdt:
        return sigmoid(std::get<GbdtModel>(impl).margin(x));
      case ModelFamily::mlp:
        return sigmoid(std::get<MlpModel>(impl).margin(x));
    }
    return 0.5;
  }

  // log-odds of P(1), clipped away from 0 and 1 for the forest case.
  double margin(const double* x) const {
    switch (family) {
      case ModelFamily::logreg:
        return std::get<LogRegModel>(impl).margin(x);
      case ModelFamily::gaussian_nb:
        return std::get<GaussianNbModel>(impl).margin(x);
      case ModelFamily::gbdt:
        return std::get<GbdtModel>(impl).margin(x);
      case ModelFamily::mlp:
        return std::get<MlpModel>(impl).margin(x);
      case ModelFamily::random_forest:
        return logit(std::get<ForestModel>(impl).prob(x));
    }
    return 0.0;
  }
};

inline std::vector<double> predict_proba(const FittedModel& m,
                                         const FeatureMatrix& X) {
  std::vector<double> out(X.n_rows);
  for (std::size_t r = 0; r < X.n_rows; ++r) out[r] = m.prob1(X.row(r));
  return out;
}

namespace detail {
inline nlohmann::json tree_to_json(const Tree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({{"f", n.feature},
                     {"t", n.threshold},
                     {"l", n.left},
                     {"r", n.right},
                     {"v", n.value}});
  return nodes;
}
}  // namespace detail

// Versioned parameter dump for the run report bundle.
inline nlohmann::json to_json(const FittedModel& m) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["family"] = to_string(m.family);
  switch (m.family) {
    case ModelFamily::logreg: {
      const auto& lm = std::get<LogRegModel>(m.impl);
      j["coef"] = lm.coef;
      j["intercept"] = lm.intercept;
      j["converged"] = lm.converged;
      j["iterations"] = lm.iterations;
      break;
    }
    case ModelFamily::gaussian_nb: {
      const auto& nb = std::get<GaussianNbModel>(m.impl);
      j["mean0"] = nb.mean0;
      j["mean1"] = nb.mean1;
      j["var0"] = nb.var0;
      j["var1"] = nb.var1;
      j["log_prior0"] = nb.log_prior0;
      j["log_prior1"] = nb.log_prior1;
      break;
    }
    case ModelFamily::random_forest: {
      const auto& rf = std::get<ForestModel>(m.impl);
      nlohmann::json trees = nlohmann::json::array();
      for (const auto& t : rf.trees) trees.push_back(detail::tree_to_json(t));
      j["trees"] = std::move(trees);
      j["importances"] = rf.importances;
      break;
    }
    case ModelFamily::gbdt: {
      const auto& gb = std::get<GbdtModel>(m.impl);
      nlohmann::json trees = nlohmann::json::array();
      for (const auto& t : gb.trees) trees.push_back(detail::tree_to_json(t));
      j["trees"] = std::move(trees);
      j["base_margin"] = gb.base_margin;
      j["learning_rate"] = gb.learning_rate;
      j["importances"] = gb.importances;
      break;
    }
    case ModelFamily::mlp: {
      const auto& nn = std::get<MlpModel>(m.impl);
      j["sizes"] = nn.sizes;
      j["weights"] = nn.weights;
      j["biases"] = nn.biases;
      j["epochs"] = nn.epochs;
      j["converged"] = nn.converged;
      break;
    }
  }
  return j;
}

}  // namespace labrisk::models
