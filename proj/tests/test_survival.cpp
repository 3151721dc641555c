#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>

#include "nphsurv/dataset_io.hpp"
#include "nphsurv/error.hpp"
#include "nphsurv/survival.hpp"
#include "test_util.hpp"

using namespace nphsurv;
using nphsurv::testing::obs;

TEST(Dataset, RejectsBadTimes) {
  EXPECT_THROW(TwoArmDataset({obs(-1.0, true, 0)}), DataError);
  EXPECT_THROW(TwoArmDataset({obs(std::numeric_limits<double>::infinity(), true, 0)}), DataError);
  EXPECT_THROW(TwoArmDataset({obs(std::nan(""), false, 1)}), DataError);
  EXPECT_NO_THROW(TwoArmDataset({obs(0.0, true, 0)}));
}

TEST(Dataset, CountsAndArms) {
  TwoArmDataset d({obs(1, true, 0), obs(2, false, 1), obs(3, true, 1)});
  EXPECT_EQ(d.count(Arm::control), 1u);
  EXPECT_EQ(d.count(Arm::experimental), 2u);
  EXPECT_EQ(d.events(Arm::experimental), 1u);
  EXPECT_EQ(d.events(), 2u);
  EXPECT_EQ(d.arm(Arm::experimental).size(), 2u);
  auto s = d.swapped_arms();
  EXPECT_EQ(s.count(Arm::control), 2u);
  EXPECT_NO_THROW(d.require_both_arms());
  EXPECT_THROW(TwoArmDataset({obs(1, true, 0)}).require_both_arms(), DataError);
}

TEST(RiskTable, SingleEventRow) {
  auto t = build_risk_table(TwoArmDataset({obs(1, true, 0), obs(2, false, 1)}));
  ASSERT_EQ(t.size(), 1u);
  auto r = t.row(0);
  EXPECT_EQ(r.time, 1.0);
  EXPECT_EQ(r.at_risk0, 1.0);
  EXPECT_EQ(r.at_risk1, 1.0);
  EXPECT_EQ(r.events0, 1.0);
  EXPECT_EQ(r.events1, 0.0);
}

TEST(RiskTable, NoEventsAndEmpty) {
  try {
    build_risk_table(TwoArmDataset({obs(5, false, 0), obs(6, false, 1)}));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "no events");
  }
  try {
    build_risk_table(TwoArmDataset{});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "no observations");
  }
}

TEST(RiskTable, TiesMergeIntoOneRow) {
  auto t = build_risk_table(TwoArmDataset({obs(1, true, 0), obs(1, true, 1), obs(3, true, 1)}));
  ASSERT_EQ(t.size(), 2u);
  auto a = t.row(0), b = t.row(1);
  EXPECT_EQ(a.time, 1.0);
  EXPECT_EQ(a.at_risk0, 1.0);
  EXPECT_EQ(a.at_risk1, 2.0);
  EXPECT_EQ(a.events0, 1.0);
  EXPECT_EQ(a.events1, 1.0);
  EXPECT_EQ(b.time, 3.0);
  EXPECT_EQ(b.at_risk0, 0.0);
  EXPECT_EQ(b.at_risk1, 1.0);
  EXPECT_EQ(b.events1, 1.0);
}

TEST(RiskTable, CensoredAtEventTimeStaysAtRisk) {
  auto t = build_risk_table(TwoArmDataset({obs(2, true, 0), obs(2, false, 0), obs(4, true, 1)}));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.row(0).at_risk0, 2.0);
  EXPECT_EQ(t.row(1).at_risk0, 0.0);
}

// Risk-set definitions evaluated directly per row.
TEST(RiskTable, MatchesDirectCounting) {
  RngStream rng(7, 0);
  for (int rep = 0; rep < 200; ++rep) {
    auto d = nphsurv::testing::random_tied_dataset(rng, 15);
    if (d.events() == 0) continue;
    auto t = build_risk_table(d);
    std::vector<double> times;
    for (const auto& o : d.observations())
      if (o.event) times.push_back(o.time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    ASSERT_EQ(t.size(), times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
      double n[2] = {0, 0}, e[2] = {0, 0};
      for (const auto& o : d.observations()) {
        if (o.time >= times[j]) n[index(o.arm)] += 1;
        if (o.time == times[j] && o.event) e[index(o.arm)] += 1;
      }
      auto r = t.row(j);
      EXPECT_EQ(r.time, times[j]);
      EXPECT_EQ(r.at_risk0, n[0]);
      EXPECT_EQ(r.at_risk1, n[1]);
      EXPECT_EQ(r.events0, e[0]);
      EXPECT_EQ(r.events1, e[1]);
      EXPECT_GE(r.events(), 1.0);
      if (j > 0) {
        EXPECT_GT(r.time, t.row(j - 1).time);
        EXPECT_LE(r.at_risk0, t.row(j - 1).at_risk0);
        EXPECT_LE(r.at_risk1, t.row(j - 1).at_risk1);
      }
    }
  }
}

TEST(RiskTable, PermutationAndArmSwap) {
  RngStream rng(11, 0);
  std::mt19937 shuffler(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto d = nphsurv::testing::random_tied_dataset(rng, 10);
    if (d.events() == 0) continue;
    auto base = build_risk_table(d);
    std::vector<SurvivalObservation> v(d.observations().begin(), d.observations().end());
    std::shuffle(v.begin(), v.end(), shuffler);
    auto perm = build_risk_table(TwoArmDataset(v));
    auto swapped = build_risk_table(d.swapped_arms());
    ASSERT_EQ(perm.size(), base.size());
    ASSERT_EQ(swapped.size(), base.size());
    for (std::size_t j = 0; j < base.size(); ++j) {
      auto a = base.row(j), b = perm.row(j), c = swapped.row(j);
      EXPECT_EQ(a.time, b.time);
      EXPECT_EQ(a.at_risk0, b.at_risk0);
      EXPECT_EQ(a.events1, b.events1);
      EXPECT_EQ(a.at_risk0, c.at_risk1);
      EXPECT_EQ(a.at_risk1, c.at_risk0);
      EXPECT_EQ(a.events0, c.events1);
      EXPECT_EQ(a.events1, c.events0);
    }
  }
}

TEST(KaplanMeier, SingleEvent) {
  std::vector<SurvivalObservation> v{obs(2, true, 0)};
  auto c = kaplan_meier(v);
  EXPECT_EQ(c.value(1.999), 1.0);
  EXPECT_EQ(c.value(2.0), 0.0);
  EXPECT_EQ(c.left_value(2.0), 1.0);
}

TEST(KaplanMeier, AllCensored) {
  std::vector<SurvivalObservation> v{obs(1, false, 0), obs(4, false, 1)};
  auto c = kaplan_meier(v);
  EXPECT_TRUE(c.steps.empty());
  EXPECT_EQ(c.value(3.0), 1.0);
  EXPECT_EQ(c.support, 4.0);
}

TEST(KaplanMeier, HandExample) {
  std::vector<SurvivalObservation> v{obs(1, true, 0), obs(2, false, 0), obs(3, true, 0)};
  auto c = kaplan_meier(v);
  EXPECT_EQ(c.value(0.5), 1.0);
  EXPECT_DOUBLE_EQ(c.value(1.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.value(2.5), 2.0 / 3.0);
  EXPECT_EQ(c.value(3.0), 0.0);
  EXPECT_THROW(kaplan_meier(std::vector<SurvivalObservation>{}), DataError);
}

TEST(KaplanMeier, BoundedAndNonincreasing) {
  RngStream rng(5, 0);
  for (int rep = 0; rep < 200; ++rep) {
    auto d = nphsurv::testing::random_exponential_dataset(rng, 20, 0.1, 0.2, 15);
    auto c = kaplan_meier(d.observations());
    double prev = 1.0;
    for (const auto& s : c.steps) {
      EXPECT_GE(s.survival, 0.0);
      EXPECT_LE(s.survival, prev);
      prev = s.survival;
    }
  }
}

TEST(KaplanMeier, EmpiricalWithoutCensoring) {
  RngStream rng(9, 0);
  std::vector<SurvivalObservation> v;
  for (int i = 0; i < 300; ++i) v.push_back(obs(std::floor(rng.exponential() * 40) / 4, true, 0));
  auto c = kaplan_meier(v);
  for (double t = 0; t < 30; t += 0.37) {
    const double frac = static_cast<double>(std::count_if(
                            v.begin(), v.end(), [&](const auto& o) { return o.time > t; })) /
                        static_cast<double>(v.size());
    EXPECT_NEAR(c.value(t), frac, 1e-12) << t;
  }
}

TEST(PooledLeftSurvival, Examples) {
  auto t = build_risk_table(TwoArmDataset({obs(1, true, 0), obs(2, true, 0)}));
  auto s = pooled_left_survival(t);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 0.5);
}

TEST(PooledLeftSurvival, LastRowAllDie) {
  auto t = build_risk_table(
      TwoArmDataset({obs(1, true, 0), obs(2, true, 1), obs(3, true, 0), obs(3, true, 1)}));
  auto s = pooled_left_survival(t);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[2], 0.5);
}

TEST(PooledLeftSurvival, MatchesKaplanMeierLeftLimit) {
  RngStream rng(13, 0);
  for (int rep = 0; rep < 100; ++rep) {
    auto d = nphsurv::testing::random_tied_dataset(rng, 12);
    if (d.events() == 0) continue;
    auto t = build_risk_table(d);
    auto s = pooled_left_survival(t);
    auto c = kaplan_meier(d.observations());
    ASSERT_EQ(s.size(), t.size());
    EXPECT_EQ(s[0], 1.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
      // left limit taken just below the row time
      const double below = std::nextafter(t.row(j).time, 0.0);
      EXPECT_NEAR(s[j], c.value(below), 1e-14);
    }
  }
}

TEST(DatasetCsv, RoundTrip) {
  RngStream rng(17, 0);
  auto d = nphsurv::testing::random_exponential_dataset(rng, 40, 0.1, 0.07);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  auto back = parse_dataset_csv(ss);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_EQ(back.observations()[i], d.observations()[i]);
}

TEST(DatasetCsv, ErrorsNameTheLine) {
  const auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_dataset_csv(in);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("time,event,arm\n1,1,0\n2,2,1\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("time,event,arm\n-1,1,0\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("time,event,arm\n1,1\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("time,event,arm\nabc,1,0\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("").find("line 1"), std::string::npos);
  EXPECT_NE(message("t,e,a\n1,1,0\n").find("line 1"), std::string::npos);
}

TEST(DatasetCsv, FormatDoubleRoundTrips) {
  RngStream rng(1, 2);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.exponential() * 100;
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(2.5), "2.5");
}
