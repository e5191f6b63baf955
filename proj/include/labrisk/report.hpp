#pragma once

#include <string>

#include <json.hpp>

#include "labrisk/csv.hpp"
#include "labrisk/evaluate.hpp"

namespace labrisk::eval {

// Everything the final test-set evaluation produces, serializable as one
// JSON document plus plot-ready curve CSVs.
struct EvaluationReport {
  double mcc = 0.0;
  double auc = 0.0;
  double auc_ci_low = 0.0, auc_ci_high = 0.0;
  BasicRates rates;
  double threshold = 0.5;
  bool threshold_degenerate = false;
  std::string threshold_mode;  // "oof_mcc" or "fixed_0.5"
  double prevalence = 0.0;
  CurvePoints roc, pr;
};

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["mcc"] = r.mcc;
  j["auc"] = r.auc;
  j["auc_ci_low"] = r.auc_ci_low;
  j["auc_ci_high"] = r.auc_ci_high;
  j["ppv"] = r.rates.ppv;
  j["npv"] = r.rates.npv;
  j["recall"] = r.rates.recall;
  j["specificity"] = r.rates.specificity;
  j["accuracy"] = r.rates.accuracy;
  j["f1"] = r.rates.f1;
  j["rates_degenerate"] = r.rates.degenerate;
  j["threshold"] = r.threshold;
  j["threshold_degenerate"] = r.threshold_degenerate;
  j["threshold_mode"] = r.threshold_mode;
  j["prevalence"] = r.prevalence;
  j["pr_baseline"] = r.pr.baseline;
  return j;
}

inline void write_curve_csv(const CurvePoints& c, const std::string& x_name,
                            const std::string& y_name,
                            const std::string& path) {
  CsvWriter w(path);
  w.row({"threshold", x_name, y_name});
  for (std::size_t i = 0; i < c.xs.size(); ++i)
    w.row({fmt_double(c.thresholds.empty() ? 0.0 : c.thresholds[i]),
           fmt_double(c.xs[i]), fmt_double(c.ys[i])});
}

}  // namespace labrisk::eval
