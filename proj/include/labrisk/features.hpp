#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace labrisk {

// Canonical snake_case names for the routine lab panel: 14 CBC + 25 chemistry
// analytes. This is the full set of feature columns accepted in visits.csv.
inline const std::vector<std::string>& lab_features() {
  static const std::vector<std::string> names = {
      // CBC
      "hematocrit", "hemoglobin", "mch", "mchc", "mcv", "rbc", "wbc",
      "band_neutrophils", "basophils", "eosinophils", "lymphocytes",
      "monocytes", "neutrophils", "platelets",
      // Chemistry
      "alp", "alt", "ast", "albumin", "globulin", "albumin_globulin_ratio",
      "amylase", "bun", "creatinine", "bun_creatinine_ratio", "calcium",
      "chloride", "cholesterol", "creatine_kinase", "ggt", "glucose", "lipase",
      "magnesium", "phosphorus", "potassium", "sodium",
      "sodium_potassium_ratio", "total_bilirubin", "total_protein",
      "triglycerides"};
  return names;
}

inline bool is_lab_feature(std::string_view name) {
  for (const auto& f : lab_features())
    if (f == name) return true;
  return false;
}

// The 15-biomarker clinically curated panel.
inline const std::vector<std::string>& manual_panel_features() {
  static const std::vector<std::string> names = {
      "age_at_visit", "hemoglobin",  "platelets",
      "mchc",         "wbc",         "band_neutrophils",
      "lymphocytes",  "albumin",     "globulin",
      "albumin_globulin_ratio",      "magnesium",
      "calcium",      "sodium",      "ggt",
      "glucose"};
  return names;
}

// Baseline sampling model for one synthetic lab analyte. Values are loosely
// based on adult canine reference intervals; they only shape the synthetic
// cohorts and are all overridable, so their exact values carry no meaning
// for correctness.
struct LabBaseline {
  enum class Dist { normal, lognormal };
  Dist dist;
  double a;  // mean (normal) or log-median (lognormal)
  double b;  // sd (normal) or log-sd (lognormal)

  double interquartile_range() const {
    constexpr double z75 = 0.6744897501960817;  // Phi^-1(0.75)
    if (dist == Dist::normal) return 2.0 * z75 * b;
    return std::exp(a + z75 * b) - std::exp(a - z75 * b);
  }
};

// Ratio analytes reported by the panel are synthesized from their components
// so the generated data carries realistic correlations.
struct DerivedRatio {
  std::string numerator, denominator;
};

inline const std::map<std::string, DerivedRatio>& derived_lab_ratios() {
  static const std::map<std::string, DerivedRatio> m = {
      {"albumin_globulin_ratio", {"albumin", "globulin"}},
      {"bun_creatinine_ratio", {"bun", "creatinine"}},
      {"sodium_potassium_ratio", {"sodium", "potassium"}},
  };
  return m;
}

inline const std::map<std::string, LabBaseline>& lab_baselines() {
  using D = LabBaseline::Dist;
  auto ln = [](double median, double sigma) {
    return LabBaseline{D::lognormal, std::log(median), sigma};
  };
  auto nm = [](double mean, double sd) {
    return LabBaseline{D::normal, mean, sd};
  };
  static const std::map<std::string, LabBaseline> m = {
      {"hematocrit", nm(47.0, 5.0)},
      {"hemoglobin", nm(16.0, 1.6)},
      {"mch", nm(23.0, 1.5)},
      {"mchc", nm(34.0, 1.2)},
      {"mcv", nm(68.0, 3.5)},
      {"rbc", nm(6.8, 0.7)},
      {"wbc", ln(8.5, 0.25)},
      {"band_neutrophils", ln(0.08, 0.8)},
      {"basophils", ln(0.04, 0.6)},
      {"eosinophils", ln(0.5, 0.5)},
      {"lymphocytes", ln(2.0, 0.35)},
      {"monocytes", ln(0.5, 0.4)},
      {"neutrophils", ln(5.5, 0.3)},
      {"platelets", nm(300.0, 60.0)},
      {"alp", ln(60.0, 0.5)},
      {"alt", ln(50.0, 0.5)},
      {"ast", ln(30.0, 0.4)},
      {"albumin", nm(3.3, 0.3)},
      {"globulin", nm(2.9, 0.35)},
      {"amylase", ln(700.0, 0.35)},
      {"bun", ln(15.0, 0.3)},
      {"creatinine", nm(1.0, 0.15)},
      {"calcium", nm(10.0, 0.5)},
      {"chloride", nm(110.0, 3.0)},
      {"cholesterol", ln(230.0, 0.25)},
      {"creatine_kinase", ln(120.0, 0.5)},
      {"ggt", ln(5.0, 0.5)},
      {"glucose", nm(95.0, 10.0)},
      {"lipase", ln(400.0, 0.5)},
      {"magnesium", nm(2.0, 0.2)},
      {"phosphorus", nm(4.0, 0.6)},
      {"potassium", nm(4.6, 0.35)},
      {"sodium", nm(147.0, 2.5)},
      {"total_bilirubin", ln(0.2, 0.4)},
      {"total_protein", nm(6.2, 0.5)},
      {"triglycerides", ln(70.0, 0.4)},
  };
  return m;
}

// Default per-feature missingness for synthetic cohorts. The heavy-missing
// analytes mirror what a send-out reference panel typically leaves blank.
inline const std::map<std::string, double>& default_missingness() {
  static const std::map<std::string, double> m = {
      {"band_neutrophils", 0.5905},
      {"lipase", 0.5793},
      {"amylase", 0.1752},
      {"triglycerides", 0.1705},
      {"basophils", 0.1631},
      {"mch", 0.1618},
      {"sodium_potassium_ratio", 0.0145},
      {"creatine_kinase", 0.0145},
      {"albumin_globulin_ratio", 0.0145},
      {"globulin", 0.0145},
  };
  return m;
}

// Interquartile range implied by the baseline model, used to convert
// "robust-scaled units" signal shifts into raw analyte units. Ratio analytes
// get an IQR propagated from a first-order delta approximation.
inline double baseline_iqr(const std::string& feature) {
  auto it = lab_baselines().find(feature);
  if (it != lab_baselines().end()) return it->second.interquartile_range();
  auto rit = derived_lab_ratios().find(feature);
  if (rit != derived_lab_ratios().end()) {
    const auto& num = lab_baselines().at(rit->second.numerator);
    const auto& den = lab_baselines().at(rit->second.denominator);
    auto mean_of = [](const LabBaseline& b) {
      return b.dist == LabBaseline::Dist::normal ? b.a
                                                 : std::exp(b.a + b.b * b.b / 2);
    };
    auto sd_of = [&](const LabBaseline& b) {
      if (b.dist == LabBaseline::Dist::normal) return b.b;
      double m = mean_of(b);
      return m * std::sqrt(std::exp(b.b * b.b) - 1.0);
    };
    double mn = mean_of(num), md = mean_of(den);
    double r = mn / md;
    double rel = std::sqrt(std::pow(sd_of(num) / mn, 2) +
                           std::pow(sd_of(den) / md, 2));
    return 1.349 * r * rel;
  }
  return 1.0;
}

}  // namespace labrisk
