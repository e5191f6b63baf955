#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "labrisk/csv.hpp"
#include "labrisk/dates.hpp"
#include "labrisk/errors.hpp"
#include "labrisk/features.hpp"
#include "labrisk/matrix.hpp"
#include "labrisk/tumor_types.hpp"

namespace labrisk::cohort {

enum class Sex { male, female };

inline std::string to_string(Sex s) { return s == Sex::male ? "male" : "female"; }

inline Sex parse_sex(std::string_view s) {
  std::string low;
  for (char c : s) low.push_back(static_cast<char>(std::tolower(c)));
  if (low == "male" || low == "m") return Sex::male;
  if (low == "female" || low == "f") return Sex::female;
  throw UserError("unrecognized sex value '" + std::string(s) + "'");
}

enum class DiagnosisSource { endpoint, condition };

struct Subject {
  std::string subject_id;
  Sex sex = Sex::male;
  Date birth_date;
  bool operator==(const Subject&) const = default;
};

struct DiagnosisRecord {
  std::string subject_id;
  std::string tumor_type_raw;
  std::string tumor_type_std;
  Date diagnosis_date;
  DiagnosisSource source = DiagnosisSource::endpoint;
  std::optional<int> tier;
  bool operator==(const DiagnosisRecord&) const = default;
};

struct VisitRecord {
  std::string subject_id;
  Date visit_date;
  double age_at_visit = 0.0;
  Sex sex = Sex::male;
  std::map<std::string, double> labs;  // absent key = missing value
  int tumor_label = 0;
  bool operator==(const VisitRecord&) const = default;
};

struct Cohort {
  std::vector<Subject> subjects;
  std::vector<VisitRecord> visits;  // sorted by (subject_id, visit_date)
  std::vector<DiagnosisRecord> diagnoses;
  bool operator==(const Cohort&) const = default;
};

// Non-fatal data issues accumulate here instead of aborting a run.
struct CurationLog {
  std::vector<std::string> warnings;
  std::size_t visits_ingested = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t rows_dropped = 0;
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

// One parsed row of the condition-source diagnosis table.
struct ConditionRow {
  std::string subject_id;
  std::string record_date;  // free text, may contain several dates
  int to_date = 0;
  std::vector<std::string> tumors;  // indicator columns set to 1
};

// Raw tumor vocabulary of the condition-source table (its indicator columns).
inline const std::vector<std::string>& condition_indicator_columns() {
  static const std::vector<std::string> cols = {
      "adrenal_tumor", "basal_cell_tumor", "bile_duct_tumor", "bladder_tumor",
      "brain_spinal_cord_tumor", "breast_or_mammary_tumor", "eye_tumor",
      "hair_matrix_tumor", "heart_tumor", "hemangiosarcoma",
      "histiocytic_sarcoma", "kidney_tumor", "leukemia", "liver_tumor",
      "lung_tumor", "lymphoma", "mast_cell_tumor", "melanoma",
      "multiple_myeloma", "nasal_tumor", "osteosarcoma", "pancreatic_tumor",
      "perianal_adenoma", "pituitary_tumor", "plasma_cell_tumor",
      "plasmacytoma", "prostate_tumor", "soft_tissue_sarcoma", "splenic_tumor",
      "squamous_cell_carcinoma", "stomach_intestinal_tumor",
      "testicular_tumor", "thymoma", "thyroid_tumor"};
  return cols;
}

// Condition-source rows carry only questionnaire dates. Keep incident rows
// (to_date = 0), take the earliest date found in the record_date string, and
// reduce to one record per (subject, tumor) pair at its earliest date.
inline std::vector<DiagnosisRecord> approximate_diagnosis_dates(
    const std::vector<ConditionRow>& rows, CurationLog& log) {
  std::map<std::pair<std::string, std::string>, Date> earliest;
  for (const auto& row : rows) {
    if (row.to_date != 0) continue;
    auto date = earliest_date_in(row.record_date);
    if (!date) {
      log.warn("condition row for subject " + row.subject_id +
               ": no parseable date in record_date '" + row.record_date +
               "', row rejected");
      continue;
    }
    for (const auto& tumor : row.tumors) {
      auto key = std::make_pair(row.subject_id, tumor);
      auto it = earliest.find(key);
      if (it == earliest.end() || *date < it->second) earliest[key] = *date;
    }
  }
  std::vector<DiagnosisRecord> out;
  out.reserve(earliest.size());
  for (const auto& [key, date] : earliest) {
    DiagnosisRecord rec;
    rec.subject_id = key.first;
    rec.tumor_type_raw = key.second;
    auto std_type = standardize_tumor_type(key.second);
    if (!std_type.known)
      log.warn("unknown tumor type '" + key.second + "' for subject " +
               key.first + ", using unknown_neoplasia");
    rec.tumor_type_std = std_type.category;
    rec.diagnosis_date = date;
    rec.source = DiagnosisSource::condition;
    out.push_back(std::move(rec));
  }
  return out;
}

// Unify the two ascertainment sources into one record per cancer subject.
// The endpoint source is authoritative: when a subject appears in both, the
// endpoint record's date and tumor type win regardless of which is earlier.
// Within one source, the earliest diagnosis is kept (ties broken by
// standardized type name so output is stable).
inline std::vector<DiagnosisRecord> merge_cancer_sources(
    const std::vector<DiagnosisRecord>& endpoint,
    const std::vector<DiagnosisRecord>& condition) {
  auto better = [](const DiagnosisRecord& a, const DiagnosisRecord& b) {
    if (a.diagnosis_date != b.diagnosis_date)
      return a.diagnosis_date < b.diagnosis_date;
    return a.tumor_type_std < b.tumor_type_std;
  };
  std::map<std::string, DiagnosisRecord> chosen;
  for (const auto& rec : endpoint) {
    auto it = chosen.find(rec.subject_id);
    if (it == chosen.end() || better(rec, it->second))
      chosen[rec.subject_id] = rec;
  }
  for (const auto& rec : condition) {
    auto it = chosen.find(rec.subject_id);
    if (it == chosen.end()) {
      chosen[rec.subject_id] = rec;
    } else if (it->second.source == DiagnosisSource::condition &&
               better(rec, it->second)) {
      it->second = rec;
    }
  }
  std::vector<DiagnosisRecord> out;
  out.reserve(chosen.size());
  for (auto& [id, rec] : chosen) out.push_back(std::move(rec));
  return out;
}

// Temporal labeling. Every visit on or after the subject's diagnosis date is
// positive. A cancer subject whose visits all precede the diagnosis date
// keeps one positive example: its last pre-diagnosis visit. Everyone else is
// negative. Idempotent; existing labels are ignored.
inline Cohort label_visits(const Cohort& input, CurationLog& log) {
  Cohort out = input;
  std::stable_sort(out.visits.begin(), out.visits.end(),
                   [](const VisitRecord& a, const VisitRecord& b) {
                     if (a.subject_id != b.subject_id)
                       return a.subject_id < b.subject_id;
                     return a.visit_date < b.visit_date;
                   });
  std::map<std::string, Date> diag;
  for (const auto& rec : out.diagnoses) {
    auto it = diag.find(rec.subject_id);
    if (it == diag.end() || rec.diagnosis_date < it->second)
      diag[rec.subject_id] = rec.diagnosis_date;
  }
  for (auto& v : out.visits) v.tumor_label = 0;
  std::set<std::string> subjects_with_visits;
  for (std::size_t i = 0; i < out.visits.size();) {
    std::size_t j = i;
    while (j < out.visits.size() &&
           out.visits[j].subject_id == out.visits[i].subject_id)
      ++j;
    subjects_with_visits.insert(out.visits[i].subject_id);
    auto it = diag.find(out.visits[i].subject_id);
    if (it != diag.end()) {
      bool any = false;
      for (std::size_t k = i; k < j; ++k) {
        if (out.visits[k].visit_date >= it->second) {
          out.visits[k].tumor_label = 1;
          any = true;
        }
      }
      if (!any) out.visits[j - 1].tumor_label = 1;  // last pre-diagnosis visit
    }
    i = j;
  }
  for (const auto& [id, date] : diag) {
    if (!subjects_with_visits.count(id))
      log.warn("cancer subject " + id + " has no visits; no labels emitted");
  }
  return out;
}

inline Cohort label_visits(const Cohort& input) {
  CurationLog log;
  return label_visits(input, log);
}

struct IngestResult {
  Cohort cohort;  // diagnoses left empty; sources returned separately
  std::vector<DiagnosisRecord> endpoint_records;
  std::vector<DiagnosisRecord> condition_records;
  CurationLog log;
};

namespace detail {

inline std::map<std::string, Subject> read_demographics(
    const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.require_col("subject_id", path);
  int c_sex = t.require_col("sex", path);
  int c_birth = t.require_col("birth_date", path);
  std::map<std::string, Subject> out;
  for (const auto& row : t.rows) {
    Subject s;
    s.subject_id = row[c_id];
    s.sex = parse_sex(row[c_sex]);
    auto d = parse_iso_date(row[c_birth]);
    if (!d)
      throw UserError(path + ": bad birth_date '" + row[c_birth] +
                      "' for subject " + s.subject_id);
    s.birth_date = *d;
    out[s.subject_id] = std::move(s);
  }
  return out;
}

inline std::vector<DiagnosisRecord> read_endpoint(const std::string& path,
                                                  CurationLog& log) {
  CsvTable t = read_csv(path);
  int c_id = t.require_col("subject_id", path);
  int c_type = t.require_col("tumor_type", path);
  int c_date = t.require_col("diagnosis_date", path);
  int c_tier = t.col("tier");
  std::vector<DiagnosisRecord> out;
  for (const auto& row : t.rows) {
    DiagnosisRecord rec;
    rec.subject_id = row[c_id];
    rec.tumor_type_raw = row[c_type];
    auto std_type = standardize_tumor_type(rec.tumor_type_raw);
    if (!std_type.known)
      log.warn("unknown tumor type '" + rec.tumor_type_raw + "' for subject " +
               rec.subject_id + ", using unknown_neoplasia");
    rec.tumor_type_std = std_type.category;
    auto d = parse_iso_date(row[c_date]);
    if (!d) {
      log.warn(path + ": bad diagnosis_date '" + row[c_date] +
               "' for subject " + rec.subject_id + ", row rejected");
      continue;
    }
    rec.diagnosis_date = *d;
    rec.source = DiagnosisSource::endpoint;
    if (c_tier >= 0 && !row[c_tier].empty()) {
      auto tier = parse_long(row[c_tier]);
      if (tier && *tier >= 1 && *tier <= 3)
        rec.tier = static_cast<int>(*tier);
      else
        log.warn(path + ": bad tier '" + row[c_tier] + "' for subject " +
                 rec.subject_id + ", tier ignored");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<ConditionRow> read_condition(const std::string& path,
                                                CurationLog& log) {
  CsvTable t = read_csv(path);
  int c_id = t.require_col("subject_id", path);
  int c_date = t.require_col("record_date", path);
  int c_todate = t.require_col("to_date", path);
  std::vector<int> tumor_cols;
  std::vector<std::string> tumor_names;
  const auto& vocab = condition_indicator_columns();
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const auto& h = t.header[i];
    if (h == "subject_id" || h == "record_date" || h == "to_date") continue;
    if (std::find(vocab.begin(), vocab.end(), h) == vocab.end())
      throw UserError(path + ": unknown tumor indicator column '" + h + "'");
    tumor_cols.push_back(static_cast<int>(i));
    tumor_names.push_back(h);
  }
  std::vector<ConditionRow> out;
  for (const auto& row : t.rows) {
    ConditionRow r;
    r.subject_id = row[c_id];
    r.record_date = row[c_date];
    auto flag = parse_long(row[c_todate]);
    if (!flag) {
      log.warn(path + ": bad to_date '" + row[c_todate] + "' for subject " +
               r.subject_id + ", row rejected");
      continue;
    }
    r.to_date = static_cast<int>(*flag);
    for (std::size_t k = 0; k < tumor_cols.size(); ++k) {
      const auto& cell = row[tumor_cols[k]];
      if (!cell.empty() && cell != "0") r.tumors.push_back(tumor_names[k]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

// Parse and join the raw tables. Feature columns must come from the known
// lab panel; rows referencing unknown subjects, with unparseable dates, or
// duplicating a (subject, visit_date) pair are dropped with a warning.
// Diagnosis tables are optional (pass "" to skip).
inline IngestResult ingest_csv(const std::string& visits_path,
                               const std::string& demographics_path,
                               const std::string& endpoint_path = "",
                               const std::string& condition_path = "") {
  IngestResult res;
  auto subjects = detail::read_demographics(demographics_path);

  CsvTable vt = read_csv(visits_path);
  int c_id = vt.require_col("subject_id", visits_path);
  int c_date = vt.require_col("visit_date", visits_path);
  std::vector<std::pair<int, std::string>> feature_cols;
  for (std::size_t i = 0; i < vt.header.size(); ++i) {
    const auto& h = vt.header[i];
    if (h == "subject_id" || h == "visit_date") continue;
    if (!is_lab_feature(h))
      throw UserError(visits_path + ": column '" + h +
                      "' is not a recognized lab feature");
    feature_cols.emplace_back(static_cast<int>(i), h);
  }

  std::set<std::pair<std::string, std::int32_t>> seen;
  for (std::size_t r = 0; r < vt.rows.size(); ++r) {
    const auto& row = vt.rows[r];
    VisitRecord v;
    v.subject_id = row[c_id];
    auto sub = subjects.find(v.subject_id);
    if (sub == subjects.end()) {
      res.log.warn(visits_path + ": row " + std::to_string(r + 2) +
                   " references unknown subject '" + v.subject_id +
                   "', row dropped");
      ++res.log.rows_dropped;
      continue;
    }
    auto d = parse_iso_date(row[c_date]);
    if (!d) {
      res.log.warn(visits_path + ": row " + std::to_string(r + 2) +
                   " has bad visit_date '" + row[c_date] + "', row dropped");
      ++res.log.rows_dropped;
      continue;
    }
    v.visit_date = *d;
    if (!seen.insert({v.subject_id, v.visit_date.days}).second) {
      res.log.warn(visits_path + ": duplicate visit for subject " +
                   v.subject_id + " on " + v.visit_date.to_string() +
                   ", deduplicated");
      ++res.log.duplicates_dropped;
      continue;
    }
    v.age_at_visit = years_between(sub->second.birth_date, v.visit_date);
    if (v.age_at_visit < 0) {
      res.log.warn(visits_path + ": visit before birth for subject " +
                   v.subject_id + ", row dropped");
      ++res.log.rows_dropped;
      continue;
    }
    v.sex = sub->second.sex;
    for (const auto& [ci, name] : feature_cols) {
      const auto& cell = row[ci];
      if (cell.empty()) continue;
      auto val = parse_double(cell);
      if (!val) {
        res.log.warn(visits_path + ": unparseable value '" + cell + "' for " +
                     name + " (subject " + v.subject_id +
                     "), treated as missing");
        continue;
      }
      v.labs[name] = *val;
    }
    res.cohort.visits.push_back(std::move(v));
  }
  res.log.visits_ingested = res.cohort.visits.size();

  res.cohort.subjects.reserve(subjects.size());
  for (auto& [id, s] : subjects) res.cohort.subjects.push_back(s);

  if (!endpoint_path.empty())
    res.endpoint_records = detail::read_endpoint(endpoint_path, res.log);
  if (!condition_path.empty()) {
    auto rows = detail::read_condition(condition_path, res.log);
    res.condition_records = approximate_diagnosis_dates(rows, res.log);
  }

  std::stable_sort(res.cohort.visits.begin(), res.cohort.visits.end(),
                   [](const VisitRecord& a, const VisitRecord& b) {
                     if (a.subject_id != b.subject_id)
                       return a.subject_id < b.subject_id;
                     return a.visit_date < b.visit_date;
                   });
  return res;
}

// Full curation: ingest, merge ascertainment sources, label temporally.
inline std::pair<Cohort, CurationLog> curate(
    const std::string& visits_path, const std::string& demographics_path,
    const std::string& endpoint_path, const std::string& condition_path) {
  IngestResult in =
      ingest_csv(visits_path, demographics_path, endpoint_path, condition_path);
  Cohort c = std::move(in.cohort);
  c.diagnoses = merge_cancer_sources(in.endpoint_records, in.condition_records);
  Cohort labeled = label_visits(c, in.log);
  return {std::move(labeled), std::move(in.log)};
}

// ---- serialization ----

inline std::vector<std::string> present_features(const Cohort& c) {
  std::set<std::string> present;
  for (const auto& v : c.visits)
    for (const auto& [k, _] : v.labs) present.insert(k);
  std::vector<std::string> out;
  for (const auto& f : lab_features())
    if (present.count(f)) out.push_back(f);
  return out;
}

inline void write_visits_csv(const Cohort& c, const std::string& path) {
  auto feats = present_features(c);
  CsvWriter w(path);
  std::vector<std::string> header = {"subject_id", "visit_date"};
  header.insert(header.end(), feats.begin(), feats.end());
  w.row(header);
  for (const auto& v : c.visits) {
    std::vector<std::string> row = {v.subject_id, v.visit_date.to_string()};
    for (const auto& f : feats) {
      auto it = v.labs.find(f);
      row.push_back(it == v.labs.end() ? "" : fmt_double(it->second));
    }
    w.row(row);
  }
}

inline void write_demographics_csv(const Cohort& c, const std::string& path) {
  CsvWriter w(path);
  w.row({"subject_id", "sex", "birth_date"});
  for (const auto& s : c.subjects)
    w.row({s.subject_id, to_string(s.sex), s.birth_date.to_string()});
}

inline void write_endpoint_csv(const std::vector<DiagnosisRecord>& recs,
                               const std::string& path) {
  CsvWriter w(path);
  w.row({"subject_id", "tumor_type", "diagnosis_date", "tier"});
  for (const auto& r : recs) {
    if (r.source != DiagnosisSource::endpoint) continue;
    w.row({r.subject_id, r.tumor_type_raw, r.diagnosis_date.to_string(),
           r.tier ? std::to_string(*r.tier) : ""});
  }
}

inline void write_condition_csv(const std::vector<DiagnosisRecord>& recs,
                                const std::string& path) {
  CsvWriter w(path);
  const auto& vocab = condition_indicator_columns();
  std::vector<std::string> header = {"subject_id", "record_date", "to_date"};
  header.insert(header.end(), vocab.begin(), vocab.end());
  w.row(header);
  for (const auto& r : recs) {
    if (r.source != DiagnosisSource::condition) continue;
    std::vector<std::string> row = {r.subject_id,
                                    r.diagnosis_date.to_string(), "0"};
    for (const auto& name : vocab)
      row.push_back(name == r.tumor_type_raw ? "1" : "0");
    w.row(row);
  }
}

inline void write_curated_csv(const Cohort& c, const std::string& path) {
  auto feats = present_features(c);
  CsvWriter w(path);
  std::vector<std::string> header = {"subject_id", "visit_date"};
  header.insert(header.end(), feats.begin(), feats.end());
  header.insert(header.end(), {"age_at_visit", "sex", "tumor_label"});
  w.row(header);
  for (const auto& v : c.visits) {
    std::vector<std::string> row = {v.subject_id, v.visit_date.to_string()};
    for (const auto& f : feats) {
      auto it = v.labs.find(f);
      row.push_back(it == v.labs.end() ? "" : fmt_double(it->second));
    }
    row.push_back(fmt_double(v.age_at_visit));
    row.push_back(to_string(v.sex));
    row.push_back(std::to_string(v.tumor_label));
    w.row(row);
  }
}

// Flatten visits into the modeling matrix: age, sex (male 0 / female 1),
// then the lab panel in canonical order.
inline FeatureMatrix cohort_to_matrix(const Cohort& c) {
  auto feats = present_features(c);
  std::vector<std::string> cols = {"age_at_visit", "sex"};
  cols.insert(cols.end(), feats.begin(), feats.end());
  FeatureMatrix m(cols, c.visits.size());
  m.subject_ids.reserve(c.visits.size());
  m.labels.reserve(c.visits.size());
  for (std::size_t r = 0; r < c.visits.size(); ++r) {
    const auto& v = c.visits[r];
    m.at(r, 0) = v.age_at_visit;
    m.at(r, 1) = v.sex == Sex::male ? 0.0 : 1.0;
    for (std::size_t j = 0; j < feats.size(); ++j) {
      auto it = v.labs.find(feats[j]);
      if (it != v.labs.end()) m.at(r, 2 + j) = it->second;
    }
    m.subject_ids.push_back(v.subject_id);
    m.labels.push_back(v.tumor_label);
  }
  return m;
}

}  // namespace labrisk::cohort
