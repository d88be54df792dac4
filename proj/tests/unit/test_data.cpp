#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"

using namespace sthgcn;
using namespace sthgcn::data;
using sthgcn::testing::random_tensor;

namespace {

// Hourly grid starting Monday 2024-01-01 00:00.
TrafficSeries hourly(std::size_t stations, std::size_t len, double fill = 0.0) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < stations; ++i) ids.push_back("s" + std::to_string(i));
  return TrafficSeries(ids, parse_date("2024-01-01"), 60, ad::Tensor({stations, len}, fill));
}

SliceConfig figure_two() {
  SliceConfig c;
  c.segment_length = 12;
  c.recent = 4;
  c.daily = 3;
  c.weekly = 3;
  c.points_per_day = 96;
  return c;
}

}  // namespace

TEST(Time, ParseFormatAndCalendar) {
  const Minutes t = parse_timestamp("2024-01-06 08:15:00");
  EXPECT_EQ(format_timestamp(t), "2024-01-06 08:15:00");
  EXPECT_EQ(weekday(parse_date("2024-01-01")), 0);  // Monday
  EXPECT_TRUE(is_weekend(t));
  EXPECT_EQ(minute_of_week(parse_date("2024-01-08") + 61), 61);
  EXPECT_THROW(parse_timestamp("2024-13-01 00:00:00"), InputError);
  EXPECT_THROW(parse_date("yesterday"), InputError);
}

TEST(Impute, MeanOfSameTimeOnEarlierDays) {
  TrafficSeries s = hourly(1, 72);
  for (std::size_t t = 0; t < 72; ++t) s(0, t) = 1.0;
  s(0, 8) = 10.0;
  s(0, 32) = 20.0;
  s(0, 56) = kMissing;
  EXPECT_EQ(impute_missing(s)(0, 56), 15.0);
}

TEST(Impute, FirstPointWithoutHistoryIsZero) {
  TrafficSeries s = hourly(1, 4, 3.0);
  s(0, 0) = kMissing;
  EXPECT_EQ(impute_missing(s)(0, 0), 0.0);
}

TEST(Impute, FallsBackToRunningMean) {
  TrafficSeries s = hourly(1, 4);
  s(0, 0) = 2.0;
  s(0, 1) = 4.0;
  s(0, 2) = kMissing;
  EXPECT_EQ(impute_missing(s)(0, 2), 3.0);
}

TEST(Impute, RandomGapsAreFilledAndObservedCellsKept) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution gap(0.05);
  TrafficSeries s = hourly(5, 24 * 21);
  const ad::Tensor clean = random_tensor({5, 24 * 21}, rng, 0.0, 100.0);
  s.values() = clean;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t t = 0; t < s.length(); ++t)
      if (gap(rng)) s(i, t) = kMissing;
  ASSERT_GT(s.missing_count(), 0u);
  const TrafficSeries out = impute_missing(s);
  EXPECT_EQ(out.missing_count(), 0u);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t t = 0; t < s.length(); ++t)
      if (!is_missing(s(i, t))) {
        EXPECT_EQ(out(i, t), clean(i, t));
      }
}

TEST(Scaler, FitApplyInvert) {
  TrafficSeries s = hourly(1, 3);
  s(0, 0) = 1;
  s(0, 1) = 2;
  s(0, 2) = 3;
  const auto sc = ZScoreScaler::fit(s, 0, 3);
  EXPECT_DOUBLE_EQ(sc.mean()[0], 2.0);
  EXPECT_NEAR(sc.stddev()[0], std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_EQ(sc.apply(2.0), 0.0);
}

TEST(Scaler, ConstantSeriesFloorsStdToOne) {
  const auto sc = ZScoreScaler::fit(hourly(1, 3, 5.0), 0, 3);
  EXPECT_EQ(sc.stddev()[0], 1.0);
  EXPECT_EQ(sc.apply(5.0), 0.0);
}

TEST(Scaler, RoundTripAndEmptySlice) {
  std::mt19937_64 rng(2);
  TrafficSeries s = hourly(3, 50);
  s.values() = random_tensor({3, 50}, rng, -100.0, 300.0);
  for (ScalerMode mode : {ScalerMode::global, ScalerMode::per_node}) {
    const auto sc = ZScoreScaler::fit(s, 0, 30, mode);
    const TrafficSeries back = sc.invert(sc.apply(s));
    for (std::size_t i = 0; i < s.values().size(); ++i)
      EXPECT_NEAR(back.values()[i], s.values()[i], 1e-12 * std::max(1.0, std::abs(s.values()[i])));
  }
  EXPECT_THROW(ZScoreScaler::fit(s, 5, 5), InputError);
}

TEST(Scaler, FitUsesOnlyTheTrainingSlice) {
  TrafficSeries s = hourly(1, 4);
  s(0, 0) = 1;
  s(0, 1) = 3;
  s(0, 2) = 1000;
  s(0, 3) = -1000;
  EXPECT_EQ(ZScoreScaler::fit(s, 0, 2).mean()[0], 2.0);
}

TEST(Slicing, FigureTwoLayout) {
  const SliceConfig c = figure_two();
  const std::size_t t = 3000;
  const auto idx = slice_indices(t, c);
  ASSERT_EQ(idx.size(), c.steps());
  ASSERT_EQ(idx.size(), 120u);
  // Weekly segments come first, oldest first; the w = 1 segment is third.
  EXPECT_EQ(idx[24], t - 677);
  EXPECT_EQ(idx[35], t - 666);
  // Daily j = 1 is the last daily segment.
  EXPECT_EQ(idx[60], t - 101);
  EXPECT_EQ(idx[71], t - 90);
  // Recent component.
  EXPECT_EQ(idx[72], t - 47);
  EXPECT_EQ(idx[119], t);
}

TEST(Slicing, IdentitySlicing) {
  SliceConfig c;
  c.segment_length = 1;
  c.recent = 1;
  c.daily = 0;
  c.weekly = 0;
  EXPECT_EQ(slice_indices(7, c), std::vector<std::size_t>{7});
}

TEST(Slicing, ExperimentLayoutHasFortyEightSteps) {
  SliceConfig c;  // l = 12, T_r = T_w = 1, T_d = 2
  EXPECT_EQ(slice_indices(5000, c).size(), 48u);
  EXPECT_EQ(c.min_anchor(), 7u * 96 + 6 - 1);
}

TEST(Slicing, IndicesStrictlyIncreaseAndStayInHistory) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    SliceConfig c;
    c.segment_length = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    c.recent = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    c.daily = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    c.weekly = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
    c.points_per_day = 48;
    try {
      c.validate();
    } catch (const ConfigError&) {
      continue;
    }
    const std::size_t t = c.min_anchor() + std::uniform_int_distribution<std::size_t>(0, 500)(rng);
    const auto idx = slice_indices(t, c);
    ASSERT_EQ(idx.size(), c.steps());
    for (std::size_t k = 1; k < idx.size(); ++k) ASSERT_LT(idx[k - 1], idx[k]);
    EXPECT_EQ(idx.back(), t);
    if (c.weekly >= 1) {
      EXPECT_EQ(c.min_anchor(), 7 * 48 * c.weekly + c.segment_length / 2 - 1);
    }
  }
}

TEST(Slicing, InsufficientHistoryNamesEarliestIndex) {
  SliceConfig c;
  try {
    slice_indices(100, c);
    FAIL();
  } catch (const OutOfRangeError& e) {
    EXPECT_NE(std::string(e.what()).find("-577"), std::string::npos) << e.what();
  }
}

TEST(Samples, OneDayCannotFeedWeeklyHistory) {
  SliceConfig c;
  EXPECT_THROW(build_samples(96, c, {0, 96}), EmptyDatasetError);
}

TEST(Samples, CountMatchesEnumeration) {
  SliceConfig c;
  const std::size_t len = 8 * 7 * 96;
  const auto samples = build_samples(len, c, {0, len});
  std::size_t brute = 0;
  for (std::size_t t = 0; t + c.horizon < len; ++t) {
    try {
      slice_indices(t, c);
      ++brute;
    } catch (const OutOfRangeError&) {
    }
  }
  EXPECT_EQ(samples.size(), brute);
  EXPECT_EQ(samples.size(), len - c.min_anchor() - c.horizon);
  EXPECT_EQ(samples.front().anchor, c.min_anchor());
  EXPECT_EQ(samples.back().target, len - 1);
}

TEST(Samples, WeekendAndHolidayFlags) {
  SliceConfig c;
  c.points_per_day = 24;
  c.weekly = 0;
  c.daily = 1;
  c.segment_length = 2;
  TrafficSeries s = hourly(2, 24 * 14, 1.0);
  HolidayCalendar cal;
  cal.add(parse_date("2024-01-10"));
  Dataset ds(s, ZScoreScaler::fit(s, 0, 100), c, cal);
  const std::size_t saturday = 5 * 24 + 9;
  const ad::Tensor f = ds.features({saturday, saturday + 1});
  EXPECT_EQ(f(0, 0), 1.0);
  EXPECT_EQ(f(1, 0), 1.0);
  EXPECT_EQ(f(0, 1), 0.0);
  const ad::Tensor h = ds.features({9 * 24 + 3, 9 * 24 + 4});
  EXPECT_EQ(h(0, 0), 0.0);
  EXPECT_EQ(h(1, 1), 1.0);
}

TEST(Samples, InputsInvertToRawValues) {
  std::mt19937_64 rng(4);
  SliceConfig c;
  c.points_per_day = 24;
  TrafficSeries s = hourly(3, 24 * 10);
  s.values() = random_tensor({3, 24 * 10}, rng, 10.0, 500.0);
  const auto sc = ZScoreScaler::fit(s, 0, 24 * 7);
  Dataset ds(s, sc, c);
  for (const Sample& smp : ds.samples({0, s.length()})) {
    const ad::Tensor x = ds.inputs(smp);
    const auto idx = slice_indices(smp.anchor, c);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < idx.size(); ++k) ASSERT_NEAR(sc.invert(x(i, k)), s(i, idx[k]), 1e-10);
    EXPECT_EQ(ds.target_raw(smp)[2], s(2, smp.anchor + 1));
  }
}

TEST(Splits, ByDateKeepsTargetsInsideTheirSplit) {
  SliceConfig c;
  c.points_per_day = 24;
  c.horizon = 3;
  const TrafficSeries s = hourly(1, 24 * 28);
  const Splits sp = split_by_date(s, parse_date("2024-01-14"), parse_date("2024-01-21"));
  EXPECT_EQ(sp.train.end, 24u * 14);
  EXPECT_EQ(sp.validation.end, 24u * 21);
  EXPECT_EQ(sp.test.end, s.length());
  bool reaches_back = false;
  for (const auto* r : {&sp.train, &sp.validation, &sp.test})
    for (const Sample& smp : build_samples(s.length(), c, *r)) {
      EXPECT_TRUE(r->contains(smp.target));
      EXPECT_EQ(smp.target, smp.anchor + 3);
      if (r != &sp.train && slice_indices(smp.anchor, c).front() < r->begin) reaches_back = true;
    }
  EXPECT_TRUE(reaches_back);
}

TEST(Splits, MisorderedDatesAreConfigErrors) {
  const TrafficSeries s = hourly(1, 24 * 28);
  EXPECT_THROW(split_by_date(s, parse_date("2024-01-21"), parse_date("2024-01-14")), ConfigError);
  EXPECT_THROW(split_by_date(s, parse_date("2024-01-14"), parse_date("2024-03-01")), ConfigError);
}

TEST(Splits, FractionsOfAHundredPoints) {
  const Splits sp = split_by_fraction(100, 0.7, 0.15);
  EXPECT_EQ(sp.train.size(), 70u);
  EXPECT_EQ(sp.validation.size(), 15u);
  EXPECT_EQ(sp.test.size(), 15u);
}

TEST(Csv, TrafficRoundTripWithGaps) {
  std::istringstream in(
      "timestamp,A,B\n"
      "2024-01-01 00:00:00,1.5,2\n"
      "2024-01-01 00:15:00,,3\n"
      "2024-01-01 00:45:00,4,5\n");
  const TrafficSeries s = read_traffic_csv(in);
  EXPECT_EQ(s.granularity(), 15);
  EXPECT_EQ(s.length(), 4u);
  EXPECT_TRUE(is_missing(s(0, 1)));
  EXPECT_TRUE(is_missing(s(1, 2)));
  EXPECT_EQ(s(1, 3), 5.0);
  std::ostringstream out;
  write_traffic_csv(out, s);
  std::istringstream again(out.str());
  const TrafficSeries back = read_traffic_csv(again);
  EXPECT_EQ(back.station_ids(), s.station_ids());
  EXPECT_EQ(back(0, 0), 1.5);
  EXPECT_TRUE(is_missing(back(0, 1)));
}

TEST(Csv, MalformedFilesAreInputErrors) {
  std::istringstream bad_header("time,A\n2024-01-01 00:00:00,1\n");
  EXPECT_THROW(read_traffic_csv(bad_header), InputError);
  std::istringstream bad_value("timestamp,A\n2024-01-01 00:00:00,x\n2024-01-01 00:15:00,1\n");
  EXPECT_THROW(read_traffic_csv(bad_value), InputError);
  std::istringstream bad_station("station_id,latitude,longitude\nA,91,0\n");
  EXPECT_THROW(read_stations_csv(bad_station), InputError);
}

TEST(Csv, StationsAndHolidays) {
  std::istringstream st("station_id,latitude,longitude\nB,30.1,120.2\nA,30.0,120.0\n");
  const auto aligned = align_stations(read_stations_csv(st), {"A", "B"});
  EXPECT_EQ(aligned[0].id, "A");
  EXPECT_EQ(aligned[1].latitude, 30.1);
  std::istringstream hol("2024-01-10\n\n2024-02-01\n");
  const HolidayCalendar cal = read_holidays(hol);
  EXPECT_TRUE(cal.is_holiday(parse_timestamp("2024-01-10 13:00:00")));
  EXPECT_FALSE(cal.is_holiday(parse_timestamp("2024-01-11 00:00:00")));
}
