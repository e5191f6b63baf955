#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "labrisk/preprocess.hpp"
#include "labrisk/rng.hpp"

using namespace labrisk;
using namespace labrisk::preprocess;

namespace {

FeatureMatrix make_matrix(std::vector<std::string> cols,
                          const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m(std::move(cols), rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
  return m;
}

constexpr double NA = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST_CASE("ratio engineering") {
  auto m = make_matrix({"neutrophils", "lymphocytes", "platelets"},
                       {{7.0, 2.0, 300.0},
                        {5.0, 0.0, 250.0},
                        {NA, 2.5, 300.0}});
  auto out = engineer_ratios(m);
  const std::size_t nlr = out.require_col("nlr"), plr = out.require_col("plr");
  REQUIRE(out.at(0, nlr) == 3.5);
  REQUIRE(out.at(0, plr) == 150.0);
  REQUIRE(FeatureMatrix::is_missing(out.at(1, nlr)));  // lymphocytes == 0
  REQUIRE(FeatureMatrix::is_missing(out.at(1, plr)));
  REQUIRE(FeatureMatrix::is_missing(out.at(2, nlr)));  // operand missing
  REQUIRE(out.at(2, plr) == 120.0);

  auto no_lymph = make_matrix({"neutrophils", "platelets"}, {{1.0, 2.0}});
  REQUIRE_THROWS_AS(engineer_ratios(no_lymph), UserError);
}

TEST_CASE("missingness filter thresholds strictly") {
  // 59.05%-style missingness survives the 70% rule; a fully missing column
  // does not.
  FeatureMatrix m({"a", "b", "c"}, 100);
  for (std::size_t r = 0; r < 100; ++r) {
    m.at(r, 0) = r < 41 ? 1.0 : NA;  // 59% missing
    m.at(r, 1) = NA;                 // 100% missing
    m.at(r, 2) = 2.0;
  }
  auto f = fit_missingness_filter(m, 0.70);
  REQUIRE(f.kept == std::vector<std::string>{"a", "c"});
  REQUIRE(f.dropped == std::vector<std::string>{"b"});

  // exactly at threshold: not dropped (strictly-exceeds rule)
  FeatureMatrix e({"x"}, 10);
  for (std::size_t r = 0; r < 10; ++r) e.at(r, 0) = r < 3 ? 1.0 : NA;
  REQUIRE(fit_missingness_filter(e, 0.70).dropped.empty());

  FeatureMatrix all_missing({"x"}, 5);
  REQUIRE_THROWS_AS(fit_missingness_filter(all_missing, 0.5), UserError);
}

TEST_CASE("missingness filter equals brute-force column counts") {
  Rng rng(3);
  FeatureMatrix m({"c0", "c1", "c2", "c3", "c4"}, 200);
  for (std::size_t r = 0; r < m.n_rows; ++r)
    for (std::size_t c = 0; c < m.n_cols; ++c)
      m.at(r, c) = rng.uniform() < 0.15 * c ? NA : rng.normal();
  auto f = fit_missingness_filter(m, 0.35);
  for (std::size_t c = 0; c < m.n_cols; ++c) {
    long miss = 0;
    for (std::size_t r = 0; r < m.n_rows; ++r)
      miss += FeatureMatrix::is_missing(m.at(r, c));
    const bool dropped = static_cast<double>(miss) / m.n_rows > 0.35;
    const bool in_drop_list =
        std::find(f.dropped.begin(), f.dropped.end(), m.columns[c]) !=
        f.dropped.end();
    REQUIRE(dropped == in_drop_list);
  }
}

TEST_CASE("mice: identity on complete data") {
  auto m = make_matrix({"a", "b"}, {{1, 2}, {3, 4}, {5, 6}});
  auto [state, out] = mice_fit_transform(m, 1);
  REQUIRE(out.values == m.values);
  REQUIRE(state.rounds.empty());
}

TEST_CASE("mice recovers an exact linear relation") {
  Rng rng(7);
  FeatureMatrix m({"f1", "f2"}, 200);
  std::size_t masked_row = 13;
  for (std::size_t r = 0; r < 200; ++r) {
    const double x = rng.uniform(-100.0, 100.0);
    m.at(r, 0) = x;
    m.at(r, 1) = r == masked_row ? NA : 2.0 * x;
  }
  auto [state, out] = mice_fit_transform(m, 1);
  REQUIRE(out.at(masked_row, 1) ==
          Catch::Approx(2.0 * m.at(masked_row, 0)).margin(1e-6));
}

TEST_CASE("mice never touches observed cells and replays exactly") {
  Rng rng(11);
  FeatureMatrix m({"a", "b", "c", "d"}, 120);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    const double base = rng.normal();
    for (std::size_t c = 0; c < m.n_cols; ++c)
      m.at(r, c) = rng.uniform() < 0.2 ? NA : base + 0.5 * rng.normal() + c;
  }
  for (std::size_t c = 0; c < m.n_cols; ++c)
    if (m.missing_count(c) == m.n_rows) m.at(0, c) = 0.0;
  auto [state, out] = mice_fit_transform(m, 5);
  for (std::size_t r = 0; r < m.n_rows; ++r)
    for (std::size_t c = 0; c < m.n_cols; ++c)
      if (!FeatureMatrix::is_missing(m.at(r, c)))
        REQUIRE(out.at(r, c) == m.at(r, c));  // bit-equal

  // frozen replay on the training matrix reproduces the fit output
  FeatureMatrix replayed = mice_apply(state, m);
  REQUIRE(replayed.values == out.values);

  // terminated within the round budget
  REQUIRE(state.rounds.size() <= 10);
}

TEST_CASE("mice convergence trace is mostly monotone after the first round") {
  Rng rng(13);
  int checked = 0, monotone = 0;
  for (int rep = 0; rep < 20; ++rep) {
    FeatureMatrix m({"a", "b", "c"}, 80);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      const double base = rng.normal();
      for (std::size_t c = 0; c < m.n_cols; ++c)
        m.at(r, c) = rng.uniform() < 0.25 ? NA : base + rng.normal() * 0.3;
    }
    bool ok = true;
    for (std::size_t c = 0; c < m.n_cols; ++c)
      if (m.missing_count(c) == m.n_rows) ok = false;
    if (!ok) continue;
    auto [state, out] = mice_fit_transform(m, rep);
    if (state.round_max_change.size() < 3) continue;
    ++checked;
    bool mono = true;
    for (std::size_t i = 2; i < state.round_max_change.size(); ++i)
      mono &= state.round_max_change[i] <= state.round_max_change[i - 1] + 1e-12;
    monotone += mono;
  }
  if (checked > 0)
    REQUIRE(static_cast<double>(monotone) / checked >= 0.9);
}

TEST_CASE("mice rejects unusable inputs") {
  FeatureMatrix one_col({"a"}, 5);
  REQUIRE_THROWS_AS(mice_fit_transform(one_col, 1), UserError);
  auto m = make_matrix({"a", "b"}, {{1, NA}, {2, NA}});
  REQUIRE_THROWS_AS(mice_fit_transform(m, 1), UserError);
}

TEST_CASE("robust scaling matches the hand-computed quartile example") {
  auto m = make_matrix({"x"}, {{1}, {2}, {3}, {4}, {5}});
  auto s = robust_scale_fit(m);
  REQUIRE(s.center[0] == 3.0);
  REQUIRE(s.scale[0] == 2.0);  // Q3=4, Q1=2
  auto out = robust_scale_apply(s, m);
  REQUIRE(out.at(4, 0) == 1.0);
  REQUIRE(out.at(0, 0) == -1.0);
}

TEST_CASE("robust scaling degenerate and definitional properties") {
  auto constant = make_matrix({"x"}, {{7}, {7}, {7}});
  auto s = robust_scale_fit(constant);
  auto out = robust_scale_apply(s, constant);
  for (std::size_t r = 0; r < 3; ++r) REQUIRE(out.at(r, 0) == 0.0);

  Rng rng(17);
  FeatureMatrix m({"a"}, 101);
  for (std::size_t r = 0; r < m.n_rows; ++r) m.at(r, 0) = rng.normal() * 10;
  auto st = robust_scale_fit(m);
  auto scaled = robust_scale_apply(st, m);
  std::vector<double> v;
  for (std::size_t r = 0; r < m.n_rows; ++r) v.push_back(scaled.at(r, 0));
  std::sort(v.begin(), v.end());
  REQUIRE(v[50] == Catch::Approx(0.0).margin(1e-12));  // median 0
  // scaled IQR is 1
  REQUIRE(v[75] - v[25] == Catch::Approx(1.0).margin(1e-12));
  // affine per feature: x'(a) - x'(b) == (a - b) / IQR
  const double iqr = st.scale[0];
  REQUIRE(scaled.at(3, 0) - scaled.at(9, 0) ==
          Catch::Approx((m.at(3, 0) - m.at(9, 0)) / iqr).epsilon(1e-12));
}

TEST_CASE("sex column passes through the scaler") {
  auto m = make_matrix({"sex", "glucose"}, {{0, 90}, {1, 110}, {0, 100}});
  auto s = robust_scale_fit(m);
  auto out = robust_scale_apply(s, m);
  REQUIRE(out.at(0, 0) == 0.0);
  REQUIRE(out.at(1, 0) == 1.0);
}

TEST_CASE("fitted preprocessing state is frozen across applies") {
  Rng rng(23);
  FeatureMatrix train({"neutrophils", "lymphocytes", "platelets", "glucose"},
                      150);
  for (std::size_t r = 0; r < train.n_rows; ++r) {
    train.at(r, 0) = rng.uniform() < 0.1 ? NA : rng.lognormal(1.7, 0.3);
    train.at(r, 1) = rng.uniform() < 0.1 ? NA : rng.lognormal(0.7, 0.3);
    train.at(r, 2) = rng.normal(300, 60);
    train.at(r, 3) = rng.uniform() < 0.3 ? NA : rng.normal(95, 10);
  }
  FeatureMatrix other = train;
  for (std::size_t r = 0; r < other.n_rows; ++r)
    other.at(r, 3) = rng.normal(95, 10);

  auto [state, trainX] = preprocess_fit_transform(train, {});
  const std::string before = to_json(state).dump();
  FeatureMatrix a = preprocess_apply(state, other);
  FeatureMatrix b = preprocess_apply(state, train);
  REQUIRE(to_json(state).dump() == before);  // apply never refits
  REQUIRE(b.values == trainX.values);        // train transform reproduced
  REQUIRE_FALSE(trainX.has_missing());
}
