// Acceptance suite: every release gate runs here, one PASS/FAIL line each.
// Exit status is nonzero when any gate fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "labrisk/cohort.hpp"
#include "labrisk/evaluate.hpp"
#include "labrisk/explain.hpp"
#include "labrisk/sweep.hpp"
#include "labrisk/synth.hpp"

using namespace labrisk;

namespace {

int g_failures = 0;
int g_index = 0;

void check(const std::string& name, const std::function<bool(std::string&)>& fn) {
  ++g_index;
  std::string detail;
  bool ok = false;
  const auto start = std::chrono::steady_clock::now();
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("[%s] %2d %-34s (%6.1fs) %s\n", ok ? "PASS" : "FAIL", g_index,
              name.c_str(), secs, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double mann_whitney_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0;
  long np = 0, nn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    ++np;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] == 1) continue;
      if (s[i] > s[j]) num += 1.0;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  for (int v : y) nn += v != 1;
  return num / (static_cast<double>(np) * nn);
}

char fmtbuf[256];
std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  std::vsnprintf(fmtbuf, sizeof fmtbuf, f, args);
  va_end(args);
  return fmtbuf;
}

// Desk-scale sweep configuration used by the signal-recovery gate.
sweep::SweepOptions desk_sweep_options(std::uint64_t seed) {
  sweep::SweepOptions opt;
  opt.preset = sweep::GridPreset::reduced;
  opt.seed = seed;
  opt.split.seed = seed;
  opt.models = {sweep::ModelRole::logreg, sweep::ModelRole::nb};
  opt.routes = {fsel::FeatureRoute::manual};
  opt.balancers = {"none", "randomunder"};
  return opt;
}

double best_pipeline_test_auc(const cohort::Cohort& c, std::uint64_t seed,
                              double* sweep_seconds) {
  const auto start = std::chrono::steady_clock::now();
  FeatureMatrix m = cohort::cohort_to_matrix(c);
  auto opt = desk_sweep_options(seed);
  auto res = sweep::run_benchmark(m, opt);
  const auto& best = res.rows.front();
  auto cell = sweep::cell_from_id(best.id);
  sweep::FinalEvalOptions fopt;
  fopt.threshold = eval::ThresholdObjective::fixed_half;
  fopt.n_boot = 100;
  auto fin = sweep::final_evaluate(m, res.split, cell->model, cell->route,
                                   cell->balancer_slot, best.best, opt, fopt);
  if (sweep_seconds)
    *sweep_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
  return fin.report.auc;
}

}  // namespace

int main() {
  // 1. Metrics suite reproduces a pinned confusion-table row from its
  //    implied integer counts.
  check("table-consistency-oracle", [](std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    eval::ConfusionCounts c{4679, 27268, 66822, 1231};
    const double m = eval::mcc(c);
    const auto r = eval::basic_rates(c);
    const double prevalence =
        static_cast<double>(c.tp + c.fn) / static_cast<double>(c.total());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    detail = fmt("mcc=%.4f acc=%.4f prev=%.4f", m, r.accuracy, prevalence);
    return std::abs(m - 0.2537) <= 0.002 && std::abs(r.accuracy - 0.7151) <= 0.002 &&
           std::abs(prevalence - 0.0591) < 0.0005 && secs < 1.0;
  });

  // 2. Trapezoid ROC area == tie-corrected Mann-Whitney concordance.
  check("auc-oracle-equivalence", [](std::string& detail) {
    Rng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      const int n = 5 + static_cast<int>(rng.uniform_index(196));
      std::vector<double> s(n);
      std::vector<int> y(n);
      bool pos = false, neg = false;
      const bool with_ties = rep % 2 == 0;
      for (int i = 0; i < n; ++i) {
        s[i] = with_ties ? std::floor(rng.uniform() * 6) / 6.0 : rng.uniform();
        y[i] = rng.uniform() < 0.35 ? 1 : 0;
        (y[i] ? pos : neg) = true;
      }
      if (!pos) y[0] = 1;
      if (!neg) y[1 % n] = 0;
      worst = std::max(worst, std::abs(eval::auc(s, y) - mann_whitney_auc(s, y)));
    }
    detail = fmt("max |trapezoid - mann-whitney| = %.2e", worst);
    return worst < 1e-12;
  });

  // 3. Average precision of random scores sits at the prevalence baseline.
  check("pr-baseline", [](std::string& detail) {
    Rng rng(103);
    const int n = 10000;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      y[i] = rng.uniform() < 0.063 ? 1 : 0;
    }
    const double ap = eval::average_precision(s, y);
    detail = fmt("ap=%.4f (prevalence 0.063)", ap);
    return std::abs(ap - 0.063) <= 0.02;
  });

  // 4. ROC is robust to a 10x majority subsample; PR is not.
  check("imbalance-robustness", [](std::string& detail) {
    Rng rng(107);
    std::vector<double> s_pos(600), s_neg(6000);
    for (auto& v : s_pos) v = 1.0 + rng.normal();
    for (auto& v : s_neg) v = rng.normal();
    std::vector<double> s_full(s_pos), s_sub(s_pos);
    std::vector<int> y_full(600, 1), y_sub(600, 1);
    for (double v : s_neg) {
      s_full.push_back(v);
      y_full.push_back(0);
    }
    for (int i = 0; i < 600; ++i) {
      s_sub.push_back(s_neg[i * 10]);
      y_sub.push_back(0);
    }
    const double d_auc =
        std::abs(eval::auc(s_full, y_full) - eval::auc(s_sub, y_sub));
    const double d_ap = std::abs(eval::average_precision(s_full, y_full) -
                                 eval::average_precision(s_sub, y_sub));
    detail = fmt("dAUC=%.4f dAP=%.4f", d_auc, d_ap);
    return d_auc < 0.02 && d_ap > 0.10;
  });

  // 5. Grouped splits and folds never share a subject; fitting on test rows
  //    aborts.
  check("leakage-audit", [](std::string& detail) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      cohort::SynthConfig cfg;
      cfg.n_subjects = 120;
      cfg.target_visits = 800;
      cfg.seed = seed;
      auto m = cohort::cohort_to_matrix(cohort::synthesize_cohort(cfg));
      sweep::SplitSpec spec;
      spec.seed = seed;
      auto split = sweep::group_shuffle_split(m.subject_ids, spec);
      std::set<std::string> tr, va, te;
      for (auto i : split.train_idx) tr.insert(m.subject_ids[i]);
      for (auto i : split.val_idx) va.insert(m.subject_ids[i]);
      for (auto i : split.test_idx) te.insert(m.subject_ids[i]);
      for (const auto& s : va)
        if (tr.count(s)) return false;
      for (const auto& s : te)
        if (tr.count(s) || va.count(s)) return false;
      std::vector<std::string> train_ids;
      for (auto i : split.train_idx) train_ids.push_back(m.subject_ids[i]);
      for (const auto& fold : sweep::grouped_kfold(train_ids, 5, seed)) {
        std::set<std::string> fit, score;
        for (auto i : fold.fit_idx) fit.insert(train_ids[i]);
        for (auto i : fold.score_idx) score.insert(train_ids[i]);
        for (const auto& s : score)
          if (fit.count(s)) return false;
      }
    }
    // fit-stage contact with a test row must abort
    cohort::SynthConfig cfg;
    cfg.n_subjects = 60;
    cfg.target_visits = 400;
    cfg.age_bracket_rates = {{0.0, 0.0, 0.2}};
    cfg.seed = 999;
    auto m = cohort::cohort_to_matrix(cohort::synthesize_cohort(cfg));
    m.tags.assign(m.n_rows, static_cast<int>(sweep::Partition::train));
    m.tags[3] = static_cast<int>(sweep::Partition::test);
    bool aborted = false;
    try {
      sweep::grid_search(sweep::ModelRole::nb, fsel::FeatureRoute::manual, 6,
                         m, desk_sweep_options(1));
    } catch (const std::exception& e) {
      aborted = std::string(e.what()).find("leakage") != std::string::npos;
    }
    detail = "20 seeds clean; poisoned fit aborted";
    return aborted;
  });

  // 6. Temporal labeling equals a brute-force reference on a randomized
  //    200-subject cohort covering both clauses.
  check("temporal-labeling-oracle", [](std::string& detail) {
    Rng rng(2024);
    cohort::Cohort c;
    std::map<std::string, Date> diag_of;
    for (int i = 0; i < 200; ++i) {
      const std::string id = "S" + std::to_string(1000 + i);
      Date birth{static_cast<std::int32_t>(Date::from_ymd(2011, 1, 1).days +
                                           rng.uniform_index(600))};
      c.subjects.push_back({id, cohort::Sex::male, birth});
      const int nv = 1 + static_cast<int>(rng.uniform_index(8));
      for (int k = 0; k < nv; ++k) {
        cohort::VisitRecord v;
        v.subject_id = id;
        v.visit_date = Date{birth.days + 200 + static_cast<std::int32_t>(
                                                   rng.uniform_index(3500))};
        v.age_at_visit = years_between(birth, v.visit_date);
        c.visits.push_back(v);
      }
      if (rng.uniform() < 0.5) {
        cohort::DiagnosisRecord d;
        d.subject_id = id;
        d.tumor_type_raw = "lymphoma";
        d.tumor_type_std = "lymphoma";
        d.diagnosis_date = Date{
            birth.days + 200 + static_cast<std::int32_t>(rng.uniform_index(4200))};
        c.diagnoses.push_back(d);
        diag_of[id] = d.diagnosis_date;
      }
    }
    auto labeled = cohort::label_visits(c);
    std::map<std::string, std::vector<const cohort::VisitRecord*>> by_subject;
    for (const auto& v : labeled.visits) by_subject[v.subject_id].push_back(&v);
    long clause1 = 0, clause2 = 0;
    for (auto& [id, visits] : by_subject) {
      std::vector<int> expect(visits.size(), 0);
      auto it = diag_of.find(id);
      if (it != diag_of.end()) {
        bool any = false;
        for (std::size_t k = 0; k < visits.size(); ++k)
          if (visits[k]->visit_date >= it->second) {
            expect[k] = 1;
            any = true;
            ++clause1;
          }
        if (!any && !expect.empty()) {
          expect.back() = 1;
          ++clause2;
        }
      }
      for (std::size_t k = 0; k < visits.size(); ++k)
        if (visits[k]->tumor_label != expect[k]) return false;
    }
    detail = fmt("on-or-after visits=%ld, last-pre-diagnosis subjects=%ld",
                 clause1, clause2);
    return clause1 > 0 && clause2 > 0;  // both clauses exercised
  });

  // 7. Resampler geometry: SMOTE segments and ADASYN apportionment.
  check("resampler-geometry", [](std::string& detail) {
    Rng rng(211);
    resample::Rows r;
    r.p = 3;
    for (int i = 0; i < 90; ++i) {
      const bool pos = i >= 70;
      for (std::size_t j = 0; j < r.p; ++j)
        r.x.push_back(rng.normal() + (pos ? 1.0 : 0.0));
      r.y.push_back(pos ? 1 : 0);
    }
    auto out = resample::smote(r, 5, 31);
    long n0 = 0, n1 = 0;
    for (int y : out.y) (y == 1 ? n1 : n0)++;
    if (n0 != n1) return false;
    std::vector<std::size_t> min_idx;
    for (std::size_t i = 0; i < r.n(); ++i)
      if (r.y[i] == 1) min_idx.push_back(i);
    double worst = 0.0;
    for (std::size_t s = r.n(); s < out.n(); ++s) {
      double best = 1e300;
      const double* q = out.row(s);
      for (std::size_t a : min_idx)
        for (std::size_t b : min_idx) {
          if (a == b) continue;
          const double* pa = r.row(a);
          const double* pb = r.row(b);
          double ab2 = 0, apab = 0;
          for (std::size_t j = 0; j < r.p; ++j) {
            ab2 += (pb[j] - pa[j]) * (pb[j] - pa[j]);
            apab += (q[j] - pa[j]) * (pb[j] - pa[j]);
          }
          const double t = ab2 > 0 ? std::min(1.0, std::max(0.0, apab / ab2)) : 0.0;
          double d2 = 0;
          for (std::size_t j = 0; j < r.p; ++j) {
            const double proj = pa[j] + t * (pb[j] - pa[j]);
            d2 += (q[j] - proj) * (q[j] - proj);
          }
          best = std::min(best, d2);
        }
      worst = std::max(worst, std::sqrt(best));
    }
    const auto alloc = resample::largest_remainder_allocation({0.2, 0.8}, 10);
    detail = fmt("max segment residual %.1e; alloc {%ld,%ld}", worst, alloc[0],
                 alloc[1]);
    return worst < 1e-9 && alloc == std::vector<long>{2, 8};
  });

  // 8. Model-fit oracles: logreg optimality + independent optimizer, MLP
  //    finite differences, GBDT hand trace.
  check("model-fit-oracles", [](std::string& detail) {
    using namespace labrisk::models;
    Rng rng(301);
    // logreg on a 200-row fixture
    std::vector<double> X;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
      const double a = rng.normal(), b = rng.normal();
      X.push_back(a);
      X.push_back(b);
      y.push_back(rng.uniform() < sigmoid(0.8 * a - 1.1 * b) ? 1 : 0);
    }
    DataView d(X, 2, y);
    const double C = 1.0;
    auto lr = fit_logreg(d, {.C = C, .tol = 1e-10});
    // gradient max-norm at the solution
    std::vector<double> grad(3, 0.0);
    for (int i = 0; i < 200; ++i) {
      double m = lr.intercept + lr.coef[0] * X[i * 2] + lr.coef[1] * X[i * 2 + 1];
      const double g = sigmoid(m) - y[i];
      grad[0] += g * X[i * 2];
      grad[1] += g * X[i * 2 + 1];
      grad[2] += g;
    }
    grad[0] += lr.coef[0] / C;
    grad[1] += lr.coef[1] / C;
    double gmax = 0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax >= 1e-6) {
      detail = fmt("logreg gradient %.2e", gmax);
      return false;
    }
    // independent pattern-search optimizer
    auto objective = [&](double b0, double b1, double b2) {
      double J = 0.0;
      for (int i = 0; i < 200; ++i) {
        const double m = b2 + b0 * X[i * 2] + b1 * X[i * 2 + 1];
        const double sp =
            m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
        J += sp - y[i] * m;
      }
      return J + (b0 * b0 + b1 * b1) / (2.0 * C);
    };
    double t0 = 0, t1 = 0, t2 = 0, step = 1.0;
    double best = objective(t0, t1, t2);
    while (step > 1e-9) {
      bool improved = false;
      const double candidates[6][3] = {{step, 0, 0}, {-step, 0, 0},
                                       {0, step, 0}, {0, -step, 0},
                                       {0, 0, step}, {0, 0, -step}};
      for (const auto& cdir : candidates) {
        const double v = objective(t0 + cdir[0], t1 + cdir[1], t2 + cdir[2]);
        if (v < best - 1e-15) {
          best = v;
          t0 += cdir[0];
          t1 += cdir[1];
          t2 += cdir[2];
          improved = true;
        }
      }
      if (!improved) step /= 2;
    }
    if (std::abs(lr.coef[0] - t0) > 1e-4 || std::abs(lr.coef[1] - t1) > 1e-4 ||
        std::abs(lr.intercept - t2) > 1e-4) {
      detail = "logreg disagrees with the independent optimizer";
      return false;
    }

    // MLP central finite differences
    std::vector<double> Xm;
    std::vector<int> ym;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) Xm.push_back(rng.normal());
      ym.push_back(i % 2);
    }
    DataView dm(Xm, 3, ym);
    auto net = fit_mlp(dm, {.hidden = {4}, .max_epochs = 2, .seed = 5});
    auto g = mlp_loss_and_grad(net, dm, 0.01);
    const double eps = 1e-6;
    double worst_rel = 0.0;
    for (std::size_t l = 0; l < net.weights.size(); ++l)
      for (std::size_t k = 0; k < net.weights[l].size(); ++k) {
        MlpModel plus = net, minus = net;
        plus.weights[l][k] += eps;
        minus.weights[l][k] -= eps;
        const double fd = (mlp_loss_and_grad(plus, dm, 0.01).loss -
                           mlp_loss_and_grad(minus, dm, 0.01).loss) /
                          (2 * eps);
        worst_rel = std::max(worst_rel, std::abs(g.weights[l][k] - fd) /
                                            std::max(1.0, std::abs(fd)));
      }
    if (worst_rel >= 1e-5) {
      detail = fmt("mlp fd mismatch %.2e", worst_rel);
      return false;
    }

    // GBDT two-round hand trace (depth-1, lr 0.5, full sample)
    const std::vector<double> xg = {1, 2, 3, 10, 11, 12};
    const std::vector<int> yg = {0, 0, 1, 1, 1, 1};
    std::vector<double> Xg = xg;
    DataView dg(Xg, 1, yg);
    auto gb = fit_gbdt(dg, {.n_estimators = 2,
                            .max_depth = 1,
                            .learning_rate = 0.5,
                            .subsample = 1.0});
    auto sigma = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<double> margin(6, std::log(2.0));  // log(4/2)
    for (int round = 0; round < 2; ++round) {
      std::vector<double> res(6), hess(6);
      for (int i = 0; i < 6; ++i) {
        const double p = sigma(margin[i]);
        res[i] = yg[i] - p;
        hess[i] = p * (1 - p);
      }
      auto sse = [&](int lo, int hi) {
        double s = 0, s2 = 0;
        for (int i = lo; i < hi; ++i) {
          s += res[i];
          s2 += res[i] * res[i];
        }
        return hi > lo ? s2 - s * s / (hi - lo) : 0.0;
      };
      double best_gain = -1, thr = 0;
      for (int cut = 1; cut < 6; ++cut) {
        const double gain = sse(0, 6) - sse(0, cut) - sse(cut, 6);
        if (gain > best_gain) {
          best_gain = gain;
          thr = (xg[cut - 1] + xg[cut]) / 2.0;
        }
      }
      double nl = 0, dl = 0, nr = 0, dr = 0;
      for (int i = 0; i < 6; ++i)
        (xg[i] <= thr ? nl : nr) += res[i], (xg[i] <= thr ? dl : dr) += hess[i];
      for (int i = 0; i < 6; ++i)
        margin[i] += 0.5 * (xg[i] <= thr ? nl / dl : nr / dr);
    }
    double worst_gb = 0;
    for (int i = 0; i < 6; ++i)
      worst_gb = std::max(worst_gb, std::abs(gb.margin(&xg[i]) - margin[i]));
    detail = fmt("logreg grad %.1e; mlp fd %.1e; gbdt trace %.1e", gmax,
                 worst_rel, worst_gb);
    return worst_gb < 1e-9;
  });

  // 9. SHAP local accuracy and cross-method agreement.
  check("shap-local-accuracy", [](std::string& detail) {
    Rng rng(401);
    models::LogRegModel lm;
    lm.coef = {0.9, -0.7, 0.3, 0.0};
    lm.intercept = 0.1;
    FeatureMatrix bg({"a", "b", "c", "d"}, 100);
    for (std::size_t r = 0; r < bg.n_rows; ++r)
      for (std::size_t c = 0; c < bg.n_cols; ++c) bg.at(r, c) = rng.normal();
    FeatureMatrix X({"a", "b", "c", "d"}, 12);
    for (std::size_t r = 0; r < X.n_rows; ++r)
      for (std::size_t c = 0; c < X.n_cols; ++c) X.at(r, c) = rng.normal();
    auto lin = shap::linear_shap(lm, X, bg);
    double worst_acc = 0.0;
    for (std::size_t r = 0; r < X.n_rows; ++r) {
      double total = lin.base_value;
      for (std::size_t c = 0; c < X.n_cols; ++c) total += lin.at(r, c);
      worst_acc = std::max(worst_acc, std::abs(total - lm.margin(X.row(r))));
    }
    if (worst_acc >= 1e-12) {
      detail = fmt("linear local accuracy %.2e", worst_acc);
      return false;
    }
    models::FittedModel fm{models::ModelFamily::logreg, lm};
    auto sam = shap::sampling_shap(fm, X, bg, 200, 77);
    double worst_gap = 0.0;
    for (std::size_t r = 0; r < X.n_rows; ++r)
      for (std::size_t c = 0; c < X.n_cols; ++c)
        worst_gap = std::max(worst_gap, std::abs(sam.at(r, c) - lin.at(r, c)));
    detail = fmt("linear acc %.1e; sampling gap %.4f", worst_acc, worst_gap);
    return worst_gap < 0.01;
  });

  // 10. The benchmark enumerates all 126 cells and the logistic grid is 6.
  check("benchmark-shape", [](std::string& detail) {
    cohort::SynthConfig cfg;
    cfg.n_subjects = 80;
    cfg.target_visits = 520;
    cfg.age_bracket_rates = {{0.0, 0.0, 0.18}};
    cfg.signal_effects = {{"hemoglobin", -1.0}};
    cfg.seed = 5;
    auto m = cohort::cohort_to_matrix(cohort::synthesize_cohort(cfg));
    sweep::SweepOptions opt;
    opt.preset = sweep::GridPreset::reduced;
    opt.seed = 5;
    opt.split.seed = 5;
    opt.mlp_max_epochs = 30;
    opt.rfe.n_estimators = 10;
    opt.rfecv.estimator.n_estimators = 10;
    opt.jobs = 4;
    auto res = sweep::run_benchmark(m, opt);
    long failed = 0;
    for (const auto& row : res.rows) failed += row.failed;
    auto lr = sweep::grid_search(sweep::ModelRole::logreg,
                                 fsel::FeatureRoute::manual, 6, m,
                                 [&] {
                                   auto o = opt;
                                   o.preset = sweep::GridPreset::full;
                                   return o;
                                 }());
    detail = fmt("cells=%zu failed=%ld logreg_combos=%zu", res.rows.size(),
                 failed, lr.evaluated);
    return res.rows.size() == 126 && lr.evaluated == 6;
  });

  // 11. End-to-end signal recovery: planted age + anemia/inflammation signal
  //     vs a zero-signal uniform-rate control, over 3 seeds.
  check("signal-recovery", [](std::string& detail) {
    std::string parts;
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
      cohort::SynthConfig signal;
      signal.n_subjects = 3044;
      signal.target_visits = 22460;
      signal.seed = seed;  // Table-shaped bracket rates by default
      signal.signal_effects = {{"hemoglobin", -0.8},
                               {"hematocrit", -0.6},
                               {"band_neutrophils", 0.8},
                               {"neutrophils", 0.5},
                               {"wbc", 0.5}};
      cohort::SynthConfig control = signal;
      control.age_bracket_rates = {{0.0, 0.0, 0.063}};
      control.signal_effects.clear();

      double sweep_secs = 0.0;
      const double auc_signal = best_pipeline_test_auc(
          cohort::synthesize_cohort(signal), seed, &sweep_secs);
      if (sweep_secs >= 1800.0) {
        detail = fmt("sweep took %.0fs (budget 1800s)", sweep_secs);
        return false;
      }
      const double auc_control = best_pipeline_test_auc(
          cohort::synthesize_cohort(control), seed, nullptr);
      parts += fmt("[seed %llu: %.3f vs %.3f] ",
                   static_cast<unsigned long long>(seed), auc_signal,
                   auc_control);
      if (auc_control < 0.45 || auc_control > 0.55 ||
          auc_signal < auc_control + 0.15) {
        detail = parts;
        return false;
      }
    }
    detail = parts;
    return true;
  });

  // 12. Determinism replay: same config and seed give byte-identical
  //     leaderboards and reports at any parallelism degree.
  check("determinism-replay", [](std::string& detail) {
    cohort::SynthConfig cfg;
    cfg.n_subjects = 150;
    cfg.target_visits = 1000;
    cfg.age_bracket_rates = {{0.0, 0.0, 0.15}};
    cfg.signal_effects = {{"hemoglobin", -1.0}};
    cfg.seed = 23;
    auto m = cohort::cohort_to_matrix(cohort::synthesize_cohort(cfg));
    auto opt1 = desk_sweep_options(23);
    auto opt4 = desk_sweep_options(23);
    opt4.jobs = 4;
    auto res1 = sweep::run_benchmark(m, opt1);
    auto res4 = sweep::run_benchmark(m, opt4);
    const std::string lb1 = sweep::leaderboard_to_json(res1).dump();
    const std::string lb4 = sweep::leaderboard_to_json(res4).dump();
    if (lb1 != lb4) {
      detail = "leaderboards differ across parallelism degrees";
      return false;
    }
    const auto& best = res1.rows.front();
    auto cell = sweep::cell_from_id(best.id);
    sweep::FinalEvalOptions fopt;
    fopt.n_boot = 200;
    auto fin1 = sweep::final_evaluate(m, res1.split, cell->model, cell->route,
                                      cell->balancer_slot, best.best, opt1, fopt);
    auto fin4 = sweep::final_evaluate(m, res4.split, cell->model, cell->route,
                                      cell->balancer_slot, best.best, opt4, fopt);
    const bool same = eval::to_json(fin1.report).dump() ==
                      eval::to_json(fin4.report).dump();
    detail = same ? "identical leaderboard and report bytes" : "reports differ";
    return same;
  });

  std::printf("%d/%d acceptance criteria passed\n", g_index - g_failures,
              g_index);
  return g_failures == 0 ? 0 : 1;
}
