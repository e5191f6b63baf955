#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "labrisk/cohort.hpp"
#include "labrisk/features.hpp"
#include "labrisk/rng.hpp"

namespace labrisk::cohort {

struct AgeBracketRate {
  double age_lo = 0.0;
  double age_hi = 0.0;  // exclusive; <= age_lo means open-ended
  double rate = 0.0;    // positive-visit fraction inside the bracket
};

inline std::vector<AgeBracketRate> default_bracket_rates() {
  return {{0, 2, 0.0020},
          {2, 4, 0.0122},
          {4, 6, 0.0417},
          {6, 8, 0.1104},
          {8, 0, 0.1823}};
}

struct SynthConfig {
  int n_subjects = 3044;
  int target_visits = 22460;  // 0 = leave visit counts as drawn
  // Empty list = one uniform bracket at prevalence_visit.
  std::vector<AgeBracketRate> age_bracket_rates = default_bracket_rates();
  double prevalence_visit = 0.063;
  // Shift of the positive-visit mean, in robust-scaled units of the feature.
  std::map<std::string, double> signal_effects;
  std::map<std::string, double> missingness_rates = default_missingness();
  std::uint64_t seed = 1;
};

namespace detail {

struct SynthSubject {
  std::string id;
  Sex sex;
  Date birth;
  std::vector<Date> dates;
  std::vector<double> ages;
  std::vector<int> bracket;  // -1 when outside every bracket
  int onset = -1;            // visit index of first positive; -1 = healthy
};

// Representative endpoint-source raw names for synthesized diagnoses.
inline std::string endpoint_raw_name(const std::string& category) {
  static const std::map<std::string, std::string> m = {
      {"hemangiosarcoma", "Hemangiosarcoma - other/not specified"},
      {"mast_cell_tumor", "Mast cell tumor - cutaneous"},
      {"lymphoma", "Lymphoma - multicentric"},
      {"soft_tissue_sarcoma", "Soft tissue sarcoma - other/not specified"},
      {"histiocytic_sarcoma", "Histiocytic sarcoma"},
      {"melanoma", "Malignant melanoma"},
      {"cns_tumor", "CNS tumor"},
      {"osteosarcoma", "Osteosarcoma - other/unspecified"},
      {"leukemia", "Leukemia"},
      {"unknown_neoplasia", "Unknown neoplasia"},
  };
  auto it = m.find(category);
  return it == m.end() ? category : it->second;
}

// Condition-source indicator column for categories that have one.
inline std::string condition_raw_name(const std::string& category) {
  static const std::map<std::string, std::string> m = {
      {"hemangiosarcoma", "hemangiosarcoma"},
      {"mast_cell_tumor", "mast_cell_tumor"},
      {"lymphoma", "lymphoma"},
      {"soft_tissue_sarcoma", "soft_tissue_sarcoma"},
      {"histiocytic_sarcoma", "histiocytic_sarcoma"},
      {"melanoma", "melanoma"},
      {"cns_tumor", "brain_spinal_cord_tumor"},
      {"eye_tumor", "eye_tumor"},
      {"osteosarcoma", "osteosarcoma"},
      {"leukemia", "leukemia"},
  };
  auto it = m.find(category);
  return it == m.end() ? std::string() : it->second;
}

inline std::string sample_tumor_category(Rng& rng) {
  // Mix loosely shaped like the common malignancies of a cancer-prone breed.
  static const std::vector<std::pair<std::string, double>> mix = {
      {"hemangiosarcoma", 0.2555},    {"mast_cell_tumor", 0.1743},
      {"lymphoma", 0.1521},           {"soft_tissue_sarcoma", 0.0886},
      {"histiocytic_sarcoma", 0.0473}, {"melanoma", 0.0281},
      {"cns_tumor", 0.0266},          {"eye_tumor", 0.0251},
      {"osteosarcoma", 0.0177},       {"leukemia", 0.0177},
  };
  double u = rng.uniform();
  for (const auto& [cat, p] : mix) {
    if (u < p) return cat;
    u -= p;
  }
  return "unknown_neoplasia";
}

}  // namespace detail

// Deterministic synthetic cohort with the study's shape: annual visits,
// age-dependent positive-visit rates, configurable feature shifts on
// positive visits, and per-feature missingness. Positive visits always form
// a date-suffix per subject, with the diagnosis date placed so that
// label_visits() reproduces the generated labels exactly.
//
// Per-bracket positive counts are hit by construction (not in expectation):
// brackets are filled oldest-first by moving subjects' onset visit backward
// one step at a time, which touches only the bracket being balanced.
inline Cohort synthesize_cohort(const SynthConfig& config) {
  if (config.n_subjects < 2)
    throw UserError("synth: n_subjects must be at least 2");
  for (const auto& b : config.age_bracket_rates)
    if (b.rate < 0 || b.rate > 1)
      throw UserError("synth: bracket rate out of [0,1]");
  if (config.prevalence_visit < 0 || config.prevalence_visit > 1)
    throw UserError("synth: prevalence out of [0,1]");
  for (const auto& [name, rate] : config.missingness_rates) {
    if (rate < 0 || rate > 1)
      throw UserError("synth: missingness rate out of [0,1] for " + name);
    if (!is_lab_feature(name))
      throw UserError("synth: missingness target '" + name +
                      "' is not a lab feature");
  }
  for (const auto& [name, _] : config.signal_effects)
    if (!is_lab_feature(name))
      throw UserError("synth: signal target '" + name +
                      "' is not a lab feature");

  std::vector<AgeBracketRate> brackets = config.age_bracket_rates;
  if (brackets.empty())
    brackets = {{0.0, 0.0, config.prevalence_visit}};

  Rng rng(config.seed);
  const int n = config.n_subjects;

  std::vector<detail::SynthSubject> subs(n);
  std::vector<int> n_visits(n);
  const Date enroll_start = Date::from_ymd(2012, 6, 1);
  for (int i = 0; i < n; ++i) {
    auto& s = subs[i];
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%05d", i);
    s.id = buf;
    s.sex = rng.uniform() < 0.506 ? Sex::male : Sex::female;
    Date first{enroll_start.days +
               static_cast<std::int32_t>(rng.uniform_index(1035))};
    double enroll_age = rng.uniform(0.5, 2.0);
    s.birth = Date{first.days -
                   static_cast<std::int32_t>(std::llround(enroll_age * 365.25))};
    s.dates.push_back(first);
    n_visits[i] = 3 + static_cast<int>(rng.uniform_index(9));  // 3..11
  }
  if (config.target_visits > 0) {
    long total = 0;
    for (int c : n_visits) total += c;
    long target = std::clamp<long>(config.target_visits, 3L * n, 11L * n);
    while (total != target) {
      int j = static_cast<int>(rng.uniform_index(n));
      if (total > target && n_visits[j] > 3) {
        --n_visits[j];
        --total;
      } else if (total < target && n_visits[j] < 11) {
        ++n_visits[j];
        ++total;
      }
    }
  }

  auto bracket_of = [&](double age) -> int {
    for (std::size_t b = 0; b < brackets.size(); ++b) {
      const bool open_ended = brackets[b].age_hi <= brackets[b].age_lo;
      if (age >= brackets[b].age_lo &&
          (open_ended || age < brackets[b].age_hi))
        return static_cast<int>(b);
    }
    return -1;
  };

  for (int i = 0; i < n; ++i) {
    auto& s = subs[i];
    for (int k = 1; k < n_visits[i]; ++k) {
      std::int32_t jitter = static_cast<std::int32_t>(rng.uniform_index(43)) - 21;
      s.dates.push_back(Date{s.dates.front().days +
                             static_cast<std::int32_t>(std::llround(365.25 * k)) +
                             jitter});
    }
    for (const auto& d : s.dates) {
      s.ages.push_back(years_between(s.birth, d));
      s.bracket.push_back(bracket_of(s.ages.back()));
    }
  }

  // Bracket occupancy and integer targets.
  const std::size_t nb = brackets.size();
  std::vector<long> bracket_visits(nb, 0);
  for (const auto& s : subs)
    for (int b : s.bracket)
      if (b >= 0) ++bracket_visits[b];
  std::vector<long> target_pos(nb, 0);
  for (std::size_t b = 0; b < nb; ++b)
    target_pos[b] = std::llround(brackets[b].rate * bracket_visits[b]);

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  for (int b = static_cast<int>(nb) - 1; b >= 0; --b) {
    long deficit = target_pos[b];
    std::deque<int> extend, fresh;
    for (int i : order) {
      const auto& s = subs[i];
      if (s.onset > 0 && s.bracket[s.onset - 1] == b)
        extend.push_back(i);
      else if (s.onset < 0 && s.bracket.back() == b)
        fresh.push_back(i);
    }
    while (deficit > 0 && (!extend.empty() || !fresh.empty())) {
      if (!fresh.empty()) {
        // New onset: take the subject's trailing run of visits inside this
        // bracket (capped by the remaining deficit). Taking the whole run at
        // once keeps single-bracket configs free of within-subject age bias.
        int i = fresh.front();
        fresh.pop_front();
        auto& s = subs[i];
        const int m = static_cast<int>(s.dates.size());
        int run = 0;
        while (run < m && s.bracket[m - 1 - run] == b) ++run;
        const int add = static_cast<int>(
            std::min<long>(run, deficit));
        s.onset = m - add;
        deficit -= add;
        if (s.onset > 0 && s.bracket[s.onset - 1] == b) extend.push_back(i);
      } else {
        int i = extend.front();
        extend.pop_front();
        --subs[i].onset;
        --deficit;
        if (subs[i].onset > 0 && subs[i].bracket[subs[i].onset - 1] == b)
          extend.push_back(i);
      }
    }
  }

  // Diagnosis records. When the onset visit is the subject's last visit, a
  // coin decides whether the diagnosis lands after it, exercising the
  // last-pre-diagnosis labeling clause downstream.
  Cohort out;
  std::vector<Date> diag_date(n);
  for (int i = 0; i < n; ++i) {
    auto& s = subs[i];
    if (s.onset < 0) continue;
    Date d = s.dates[s.onset];
    if (s.onset == static_cast<int>(s.dates.size()) - 1 &&
        rng.uniform() < 0.5)
      d = Date{d.days + 30 + static_cast<std::int32_t>(rng.uniform_index(300))};
    diag_date[i] = d;
    DiagnosisRecord rec;
    rec.subject_id = s.id;
    std::string category = detail::sample_tumor_category(rng);
    std::string cond_raw = detail::condition_raw_name(category);
    bool use_endpoint = cond_raw.empty() || rng.uniform() < 0.877;
    if (use_endpoint) {
      rec.source = DiagnosisSource::endpoint;
      rec.tumor_type_raw = detail::endpoint_raw_name(category);
      double u = rng.uniform();
      rec.tier = u < 0.738 ? 1 : (u < 0.907 ? 2 : 3);
    } else {
      rec.source = DiagnosisSource::condition;
      rec.tumor_type_raw = cond_raw;
    }
    rec.tumor_type_std = category;
    rec.diagnosis_date = d;
    out.diagnoses.push_back(std::move(rec));
  }

  // Lab values, signal shifts, missingness.
  const auto& baselines = lab_baselines();
  const auto& derived = derived_lab_ratios();
  for (int i = 0; i < n; ++i) {
    auto& s = subs[i];
    out.subjects.push_back({s.id, s.sex, s.birth});
    for (std::size_t k = 0; k < s.dates.size(); ++k) {
      VisitRecord v;
      v.subject_id = s.id;
      v.visit_date = s.dates[k];
      v.age_at_visit = s.ages[k];
      v.sex = s.sex;
      v.tumor_label = (s.onset >= 0 && static_cast<int>(k) >= s.onset) ? 1 : 0;
      for (const auto& f : lab_features()) {
        auto bl = baselines.find(f);
        if (bl == baselines.end()) continue;  // derived ratios handled below
        double val = bl->second.dist == LabBaseline::Dist::normal
                         ? rng.normal(bl->second.a, bl->second.b)
                         : rng.lognormal(bl->second.a, bl->second.b);
        if (v.tumor_label == 1) {
          auto eff = config.signal_effects.find(f);
          if (eff != config.signal_effects.end())
            val += eff->second * baseline_iqr(f);
        }
        v.labs[f] = val;
      }
      for (const auto& f : lab_features()) {
        auto dr = derived.find(f);
        if (dr == derived.end()) continue;
        double num = v.labs.at(dr->second.numerator);
        double den = v.labs.at(dr->second.denominator);
        double val = den != 0.0 ? num / den : 0.0;
        if (v.tumor_label == 1) {
          auto eff = config.signal_effects.find(f);
          if (eff != config.signal_effects.end())
            val += eff->second * baseline_iqr(f);
        }
        v.labs[f] = val;
      }
      for (const auto& f : lab_features()) {
        auto mr = config.missingness_rates.find(f);
        if (mr == config.missingness_rates.end()) continue;
        if (rng.uniform() < mr->second) v.labs.erase(f);
      }
      out.visits.push_back(std::move(v));
    }
  }

  std::stable_sort(out.visits.begin(), out.visits.end(),
                   [](const VisitRecord& a, const VisitRecord& b) {
                     if (a.subject_id != b.subject_id)
                       return a.subject_id < b.subject_id;
                     return a.visit_date < b.visit_date;
                   });
  return out;
}

}  // namespace labrisk::cohort
