#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eventimpact/panel.hpp"
#include "eventimpact/rng.hpp"

using namespace eventimpact;

namespace {

const PeriodSpec kWholeYear{"whole", {1, 1}, {12, 31}};

MobilityPoint mob(double resi, double wrk, double retl, double grcy) {
  return MobilityPoint{resi, wrk, retl, grcy};
}

/// Synthetic partial-adjustment panel with known dynamics; ln_* fields are
/// filled directly on the log scale.
std::vector<PanelObservation> make_panel(int n_areas, int n_days,
                                         std::uint64_t seed, double rho,
                                         bool break_lag2 = false) {
  Rng gen(seed);
  std::vector<PanelObservation> out;
  for (int a = 0; a < n_areas; ++a) {
    std::string id = "area" + std::to_string(a);
    double y1 = 0.0, y2 = 0.0;
    for (int t = 0; t < n_days + 2; ++t) {
      PanelObservation o;
      o.area_id = id;
      o.date = Date(2020, 4, 1).plus_days(t);
      o.ln_resi = 0.05 * gen.normal();
      o.ln_wrk = 0.05 * gen.normal();
      o.ln_retl = 0.05 * gen.normal();
      o.ln_grcy = 0.05 * gen.normal();
      double y = 0.01 - 0.2 * o.ln_resi + 0.3 * o.ln_wrk + 0.15 * o.ln_retl +
                 0.1 * o.ln_grcy + rho * y1 + 0.01 * gen.normal();
      o.ln_ele = y;
      o.ln_ele_lag1 = y1;
      o.ln_ele_lag2 = break_lag2 ? 0.05 * gen.normal() : y2;
      if (t >= 2) out.push_back(o);
      y2 = y1;
      y1 = y;
    }
  }
  return out;
}

Eigen::VectorXd closed_form_2sls(const std::vector<PanelObservation>& panel) {
  const long n = long(panel.size());
  Eigen::MatrixXd X(n, 6), Z(n, 6);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    const auto& o = panel[i];
    X.row(i) << 1.0, o.ln_resi, o.ln_wrk, o.ln_retl, o.ln_grcy, o.ln_ele_lag1;
    Z.row(i) << 1.0, o.ln_resi, o.ln_wrk, o.ln_retl, o.ln_grcy, o.ln_ele_lag2;
    y(i) = o.ln_ele;
  }
  return Eigen::FullPivLU<Eigen::MatrixXd>(Z.transpose() * X)
      .solve(Z.transpose() * y);
}

}  // namespace

// ---------------------------------------------------------------------------
// panel construction

TEST(BuildPanel, FormsLagsOverRetainedDatesAndConvertsPercentages) {
  std::map<std::string, std::vector<std::pair<Date, double>>> ele;
  std::map<std::string, std::map<Date, MobilityPoint>> mobility;
  Date d0(2020, 5, 4);
  for (int t = 0; t < 5; ++t) {
    Date d = d0.plus_days(t);
    ele["tokyo"].push_back({d, 0.01 * (t + 1)});
    mobility["tokyo"][d] = mob(10.0, -20.0, -30.0, 5.0);
  }
  PanelBuildInfo info;
  auto panel = build_panel(ele, mobility, kWholeYear, &info);
  ASSERT_EQ(panel.size(), 3u);  // first two retained dates warm the lags
  EXPECT_EQ(info.n_join_days, 5);
  EXPECT_EQ(info.n_gaps, 0);
  EXPECT_EQ(info.obs_per_area.at("tokyo"), 3);

  EXPECT_EQ(panel[0].date, d0.plus_days(2));
  EXPECT_DOUBLE_EQ(panel[0].ln_ele, 0.03);
  EXPECT_DOUBLE_EQ(panel[0].ln_ele_lag1, 0.02);
  EXPECT_DOUBLE_EQ(panel[0].ln_ele_lag2, 0.01);
  EXPECT_DOUBLE_EQ(panel[2].ln_ele, 0.05);
  EXPECT_DOUBLE_EQ(panel[2].ln_ele_lag1, 0.04);
  EXPECT_DOUBLE_EQ(panel[2].ln_ele_lag2, 0.03);

  // mobility percentages arrive as ln(1 + pct/100)
  EXPECT_DOUBLE_EQ(panel[0].ln_resi, std::log(1.10));
  EXPECT_DOUBLE_EQ(panel[0].ln_wrk, std::log(0.80));
  EXPECT_DOUBLE_EQ(panel[0].ln_retl, std::log(0.70));
  EXPECT_DOUBLE_EQ(panel[0].ln_grcy, std::log(1.05));
}

TEST(BuildPanel, InnerJoinSkipsDaysAndCountsWideGaps) {
  std::map<std::string, std::vector<std::pair<Date, double>>> ele;
  std::map<std::string, std::map<Date, MobilityPoint>> mobility;
  Date d0(2020, 5, 4);
  // demand on days 0,1,2,9,10; mobility missing on day 2
  for (int t : {0, 1, 2, 9, 10}) {
    ele["a"].push_back({d0.plus_days(t), double(t)});
  }
  for (int t : {0, 1, 9, 10}) {
    mobility["a"][d0.plus_days(t)] = mob(0, 0, 0, 0);
  }
  PanelBuildInfo info;
  auto panel = build_panel(ele, mobility, kWholeYear, &info);
  // retained dates: 0, 1, 9, 10 -> observations at 9 and 10
  ASSERT_EQ(panel.size(), 2u);
  EXPECT_EQ(info.n_join_days, 4);
  EXPECT_EQ(panel[0].date, d0.plus_days(9));
  EXPECT_DOUBLE_EQ(panel[0].ln_ele_lag1, 1.0);
  EXPECT_DOUBLE_EQ(panel[0].ln_ele_lag2, 0.0);
  EXPECT_EQ(panel[1].date, d0.plus_days(10));
  EXPECT_DOUBLE_EQ(panel[1].ln_ele_lag1, 9.0);
  EXPECT_DOUBLE_EQ(panel[1].ln_ele_lag2, 1.0);
  // 1 -> 9 spans more than a weekend and appears under both observations
  EXPECT_EQ(info.n_gaps, 2);
}

TEST(BuildPanel, PeriodFilterAndAreaSeparationApply) {
  std::map<std::string, std::vector<std::pair<Date, double>>> ele;
  std::map<std::string, std::map<Date, MobilityPoint>> mobility;
  for (int t = 0; t < 20; ++t) {
    Date d = Date(2020, 5, 25).plus_days(t);  // runs into June
    for (const char* a : {"east", "west"}) {
      ele[a].push_back({d, double(t)});
      mobility[a][d] = mob(1, 1, 1, 1);
    }
  }
  PeriodSpec may_only{"may", {5, 1}, {5, 31}};
  PanelBuildInfo info;
  auto panel = build_panel(ele, mobility, may_only, &info);
  // 7 May dates per area -> 5 lagged observations each
  ASSERT_EQ(panel.size(), 10u);
  EXPECT_EQ(info.obs_per_area.at("east"), 5);
  EXPECT_EQ(info.obs_per_area.at("west"), 5);
  for (const auto& o : panel) {
    EXPECT_EQ(o.date.month, 5);
    // lags never leak across areas: values are the area's own series
    EXPECT_DOUBLE_EQ(o.ln_ele_lag1, o.ln_ele - 1.0);
    EXPECT_DOUBLE_EQ(o.ln_ele_lag2, o.ln_ele - 2.0);
  }
  // an area absent from mobility contributes nothing
  ele["ghost"].push_back({Date(2020, 5, 25), 1.0});
  auto panel2 = build_panel(ele, mobility, may_only);
  EXPECT_EQ(panel2.size(), 10u);
}

TEST(BuildPanel, ErrorsOnEmptyJoinAndUndefinedLogs) {
  std::map<std::string, std::vector<std::pair<Date, double>>> ele;
  std::map<std::string, std::map<Date, MobilityPoint>> mobility;
  Date d0(2020, 5, 4);
  // only two joined days: not enough for one lagged observation
  for (int t = 0; t < 2; ++t) {
    ele["a"].push_back({d0.plus_days(t), 0.0});
    mobility["a"][d0.plus_days(t)] = mob(0, 0, 0, 0);
  }
  EXPECT_THROW(build_panel(ele, mobility, kWholeYear), DataError);

  // a -100% mobility change has no log
  for (int t = 2; t < 5; ++t) {
    ele["a"].push_back({d0.plus_days(t), 0.0});
    mobility["a"][d0.plus_days(t)] = mob(0, -100.0, 0, 0);
  }
  EXPECT_THROW(build_panel(ele, mobility, kWholeYear), DataError);
}

// ---------------------------------------------------------------------------
// GMM estimation

TEST(Gmm, JustIdentifiedFitEqualsTwoSlsClosedForm) {
  auto panel = make_panel(5, 100, 12345, 0.5);
  GmmFit fit = estimate(panel);
  Eigen::VectorXd b2sls = closed_form_2sls(panel);
  ASSERT_EQ(fit.coef.size(), 6);
  for (long j = 0; j < 6; ++j) {
    EXPECT_NEAR(fit.coef(j), b2sls(j), 1e-8) << fit.names[j];
  }
  EXPECT_EQ(fit.n_obs, 500);
  EXPECT_EQ(fit.n_clusters, 5);
  EXPECT_EQ(fit.names.front(), "intercept");
  EXPECT_EQ(fit.names.back(), "ln_ele_lag1");
  EXPECT_EQ(fit.instruments.back(), "ln_ele_lag2");
}

TEST(Gmm, RecoversKnownDynamicsWithStrongInstruments) {
  auto panel = make_panel(5, 200, 777, 0.5);
  GmmFit fit = estimate(panel);
  const double truth[6] = {0.01, -0.2, 0.3, 0.15, 0.1, 0.5};
  for (long j = 0; j < 6; ++j) {
    EXPECT_NEAR(fit.coef(j), truth[j], 0.06) << fit.names[j];
    EXPECT_GT(fit.se(j), 0.0);
  }
  // the AR(1) link makes lag2 a strong instrument for lag1
  EXPECT_GT(fit.first_stage_F, 10.0);
  EXPECT_FALSE(fit.weak_instruments);
  // the persistence term is overwhelmingly significant here
  EXPECT_TRUE(fit.significant[5]);
  EXPECT_GT(std::abs(fit.z(5)), 1.96);
}

TEST(Gmm, FlagsWeakInstruments) {
  auto panel = make_panel(5, 100, 2024, 0.5, /*break_lag2=*/true);
  GmmFit fit = estimate(panel);
  EXPECT_LT(fit.first_stage_F, 10.0);
  EXPECT_TRUE(fit.weak_instruments);
}

TEST(Gmm, InputOrderDoesNotChangeTheFit) {
  auto panel = make_panel(4, 60, 99, 0.4);
  GmmFit a = estimate(panel);
  auto shuffled = panel;
  std::mt19937 urbg(7);
  std::shuffle(shuffled.begin(), shuffled.end(), urbg);
  GmmFit b = estimate(shuffled);
  EXPECT_EQ(a.coef, b.coef);  // bitwise: the estimator sorts internally
  EXPECT_EQ(a.se, b.se);
  EXPECT_EQ(a.first_stage_F, b.first_stage_F);
}

TEST(Gmm, RegressorScalingIsExactlyUndoneInTheCoefficient) {
  auto panel = make_panel(5, 80, 31415, 0.5);
  GmmFit base = estimate(panel);
  const double c = 16.0;  // power of two: the rescale itself is exact
  auto scaled = panel;
  for (auto& o : scaled) o.ln_wrk *= c;
  GmmFit fit = estimate(scaled);
  // ln_wrk is names[2]
  EXPECT_NEAR(fit.coef(2), base.coef(2) / c, 1e-10 * std::abs(base.coef(2)));
  EXPECT_NEAR(fit.se(2), base.se(2) / c, 1e-10 * base.se(2));
  EXPECT_NEAR(fit.z(2), base.z(2), 1e-8 * std::abs(base.z(2)));
  // all other coordinates are untouched
  for (long j = 0; j < 6; ++j) {
    if (j == 2) continue;
    EXPECT_NEAR(fit.coef(j), base.coef(j),
                1e-10 * std::max(1.0, std::abs(base.coef(j))));
    EXPECT_NEAR(fit.z(j), base.z(j), 1e-8 * std::abs(base.z(j)));
  }
}

TEST(Gmm, ReportsCollinearColumnsByName) {
  auto panel = make_panel(3, 50, 5, 0.3);
  for (auto& o : panel) o.ln_retl = o.ln_wrk;  // exact collinearity
  try {
    estimate(panel);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("rank deficient"), std::string::npos) << msg;
    EXPECT_NE(msg.find("collinear"), std::string::npos) << msg;
  }
}

TEST(Gmm, RejectsDegenerateInputs) {
  EXPECT_THROW(estimate({}), DataError);
  auto tiny = make_panel(1, 6, 3, 0.5);
  ASSERT_LE(long(tiny.size()), 6);
  EXPECT_THROW(estimate(tiny), DataError);
  auto panel = make_panel(2, 20, 4, 0.5);
  panel[5].ln_grcy = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(estimate(panel), DataError);
}

TEST(WriteGmmCsv, TableHasPerCoefficientBlocksAndDiagnostics) {
  auto fitA = estimate(make_panel(4, 50, 21, 0.5));
  auto fitB = estimate(make_panel(4, 50, 22, 0.5));
  std::ostringstream out;
  write_gmm_csv({{"Apr01-Jul31", fitA}, {"Aug01-Sep15", fitB}}, out);
  std::istringstream in(out.str());
  std::string header;
  ASSERT_TRUE(std::getline(in, header));
  EXPECT_EQ(header,
            "period,"
            "intercept,intercept_se,intercept_z,intercept_sig,"
            "ln_resi,ln_resi_se,ln_resi_z,ln_resi_sig,"
            "ln_wrk,ln_wrk_se,ln_wrk_z,ln_wrk_sig,"
            "ln_retl,ln_retl_se,ln_retl_z,ln_retl_sig,"
            "ln_grcy,ln_grcy_se,ln_grcy_z,ln_grcy_sig,"
            "ln_ele_lag1,ln_ele_lag1_se,ln_ele_lag1_z,ln_ele_lag1_sig,"
            "n_obs,n_clusters,first_stage_F,weak_instruments");
  std::string row;
  int rows = 0;
  while (std::getline(in, row)) {
    ++rows;
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 28);
    EXPECT_TRUE(row.rfind(rows == 1 ? "Apr01-Jul31," : "Aug01-Sep15,", 0) ==
                0);
    // weak-instrument flag serializes as yes/no
    auto tail = row.substr(row.rfind(',') + 1);
    EXPECT_TRUE(tail == "yes" || tail == "no") << tail;
  }
  EXPECT_EQ(rows, 2);
}
