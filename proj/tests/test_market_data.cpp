#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "bounce/errors.hpp"
#include "bounce/market_data.hpp"
#include "bounce/rng.hpp"

using namespace bounce;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

Errc thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a bounce::Error");
  return Errc::io_error;
}

std::multiset<double> increment_multiset(const ResampledSeries& s) {
  std::multiset<double> out;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    out.insert(s.prices[i + 1] - s.prices[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("load_ticks parses a valid file") {
  const auto path = write_temp("BP_20020118.csv",
                               "timestamp,price\n"
                               "# a comment\n"
                               "0,100\n"
                               "1,101\n"
                               "3,100\n");
  const TickSeries t = load_ticks(path);
  CHECK(t.size() == 3);
  CHECK(t.symbol == "BP");
  CHECK(t.day_id == "20020118");
  CHECK(t.timestamps[1] == 1.0);
  CHECK(t.prices[2] == 100);
}

TEST_CASE("load_ticks accepts decimal timestamps and repeated times") {
  const auto path = write_temp("X_d1.csv", "timestamp,price\n0.5,10\n0.5,11\n2.25,9\n");
  const TickSeries t = load_ticks(path);
  CHECK(t.size() == 3);
  CHECK(t.timestamps[0] == doctest::Approx(0.5));
}

TEST_CASE("load_ticks rejects non-monotone timestamps with the row number") {
  const auto path = write_temp("X_d2.csv", "timestamp,price\n0,100\n2,101\n1,99\n");
  try {
    load_ticks(path);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_monotone_timestamps);
    CHECK(e.line() == 3);  // third data row
  }
}

TEST_CASE("load_ticks error cases") {
  CHECK(thrown_code([] { load_ticks("/nonexistent/file.csv"); }) ==
        Errc::file_not_found);
  CHECK(thrown_code([] {
          load_ticks(write_temp("X_d3.csv", ""));
        }) == Errc::too_short);
  CHECK(thrown_code([] {
          load_ticks(write_temp("X_d4.csv", "timestamp,price\n1,100\n"));
        }) == Errc::too_short);
  CHECK(thrown_code([] {
          load_ticks(write_temp("X_d5.csv", "timestamp,price\n1,abc\n2,3\n"));
        }) == Errc::parse_error);
  CHECK(thrown_code([] {
          load_ticks(write_temp("X_d6.csv", "timestamp,price\n1\n2,3\n"));
        }) == Errc::parse_error);
  CHECK(thrown_code([] {
          load_ticks(write_temp("X_d7.csv", "time,px\n1,2\n2,3\n"));
        }) == Errc::parse_error);
  CHECK(thrown_code([] {
          load_ticks(write_temp("X_d8.csv", "timestamp,price\n1,-5\n2,3\n"));
        }) == Errc::parse_error);
}

TEST_CASE("tick csv round trip") {
  TickSeries day;
  day.symbol = "RT";
  day.day_id = "d042";
  day.timestamps = {0.0, 1.5, 3.0, 3.0, 10.0};
  day.prices = {100, 101, 99, 99, 102};
  const fs::path path = fs::temp_directory_path() / "RT_d042.csv";
  write_ticks_csv(day, path);
  const TickSeries back = load_ticks(path);
  CHECK(back.symbol == day.symbol);
  CHECK(back.day_id == day.day_id);
  CHECK(back.timestamps == day.timestamps);
  CHECK(back.prices == day.prices);
}

namespace {

TickSeries make_ticks(std::vector<double> ts, std::vector<std::int64_t> px) {
  TickSeries t;
  t.symbol = "T";
  t.day_id = "d1";
  t.timestamps = std::move(ts);
  t.prices = std::move(px);
  return t;
}

}  // namespace

TEST_CASE("resample in event ticks picks every tau-th event") {
  TickSeries t = make_ticks({0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
                            {10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
  const ResampledSeries r = resample(t, 3, ResampleMode::EventTicks);
  REQUIRE(r.size() == 3);  // floor(10/3)
  CHECK(r.prices[0] == 12.0);  // 3rd event
  CHECK(r.prices[1] == 15.0);  // 6th event
  CHECK(r.prices[2] == 18.0);  // 9th event
}

TEST_CASE("resample at scale 1 in event ticks is the identity") {
  TickSeries t = make_ticks({0, 1, 2, 3}, {5, 7, 6, 8});
  const ResampledSeries r = resample(t, 1, ResampleMode::EventTicks);
  CHECK(r.prices == std::vector<double>{5, 7, 6, 8});
}

TEST_CASE("resample in physical seconds takes the last price at or before") {
  TickSeries t = make_ticks({0, 50, 130}, {5, 7, 6});
  const ResampledSeries r = resample(t, 60, ResampleMode::PhysicalSeconds);
  REQUIRE(r.size() == 2);
  CHECK(r.prices[0] == 7.0);  // t=60
  CHECK(r.prices[1] == 7.0);  // t=120
}

TEST_CASE("resample physical seconds uses first price before any trade") {
  TickSeries t = make_ticks({100, 150, 400}, {5, 7, 6});
  const ResampledSeries r = resample(t, 60, ResampleMode::PhysicalSeconds);
  REQUIRE(r.size() == 6);
  CHECK(r.prices[0] == 5.0);   // t=60: no trade yet, first price
  CHECK(r.prices[1] == 5.0);   // t=120: last trade at t=100
  CHECK(r.prices[2] == 7.0);   // t=180: last trade at t=150
  CHECK(r.prices[5] == 7.0);   // t=360: the t=400 trade is still ahead
}

TEST_CASE("resample boundary trade counts as at-or-before") {
  TickSeries t = make_ticks({0, 60, 130}, {5, 7, 6});
  const ResampledSeries r = resample(t, 60, ResampleMode::PhysicalSeconds);
  CHECK(r.prices[0] == 7.0);
}

TEST_CASE("resample rejects scales leaving fewer than 2 samples") {
  TickSeries t = make_ticks({0, 1, 2, 3}, {5, 7, 6, 8});
  // floor(4/2)=2 is fine, floor(4/3)=1 is not
  CHECK_NOTHROW(resample(t, 2, ResampleMode::EventTicks));
  try {
    resample(t, 3, ResampleMode::EventTicks);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::scale_too_large);
  }
  try {
    resample(t, 2, ResampleMode::PhysicalSeconds);  // duration 3 < 2*2
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::scale_too_large);
  }
}

TEST_CASE("shuffle_returns keeps endpoints and the increment multiset") {
  ResampledSeries s;
  s.prices = {10, 12, 11};
  const ResampledSeries out = shuffle_returns(s, 99);
  CHECK(out.prices.front() == 10.0);
  CHECK(out.prices.back() == 11.0);
  CHECK(increment_multiset(out) == std::multiset<double>{-1.0, 2.0});
}

TEST_CASE("shuffle_returns on a constant series is the identity") {
  ResampledSeries s;
  s.prices = {5, 5, 5, 5};
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL}) {
    CHECK(shuffle_returns(s, seed).prices == s.prices);
  }
}

TEST_CASE("shuffle_returns is deterministic in the seed") {
  ResampledSeries s;
  s.prices = {3, 9, 4, 4, 8, 1, 7};
  CHECK(shuffle_returns(s, 7).prices == shuffle_returns(s, 7).prices);
}

TEST_CASE("shuffle_returns properties on random integer series") {
  Rng rng(2024);
  for (int rep = 0; rep < 20; ++rep) {
    ResampledSeries s;
    double p = 50;
    const std::size_t len = 3 + rng.bounded(60);
    for (std::size_t i = 0; i < len; ++i) {
      p += static_cast<double>(rng.bounded(11)) - 5.0;
      s.prices.push_back(p);
    }
    const ResampledSeries out = shuffle_returns(s, rng.next_u64());
    CHECK(out.size() == s.size());
    CHECK(out.prices.front() == s.prices.front());
    CHECK(out.prices.back() == s.prices.back());
    CHECK(increment_multiset(out) == increment_multiset(s));
  }
}

TEST_CASE("shuffle_returns rejects short series") {
  ResampledSeries s;
  s.prices = {1, 2};
  CHECK_THROWS_AS(shuffle_returns(s, 0), Error);
}

TEST_CASE("fractional walk validates inputs") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::FractionalWalk;
  spec.length = 256;
  spec.hurst = 1.5;
  CHECK(thrown_code([&] { gen_fractional_walk(spec); }) == Errc::invalid_hurst);
  spec.hurst = 0.0;
  CHECK(thrown_code([&] { gen_fractional_walk(spec); }) == Errc::invalid_hurst);
  spec.hurst = 0.5;
  spec.length = 32;
  CHECK(thrown_code([&] { gen_fractional_walk(spec); }) == Errc::too_short);
}

TEST_CASE("fractional walk is seed-deterministic") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::FractionalWalk;
  spec.hurst = 0.45;
  spec.length = 512;
  spec.seed = 31337;
  CHECK(gen_fractional_walk(spec).prices == gen_fractional_walk(spec).prices);
  SurrogateSpec other = spec;
  other.seed = 31338;
  CHECK(gen_fractional_walk(other).prices != gen_fractional_walk(spec).prices);
}

TEST_CASE("fractional walk at H=0.5 has uncorrelated increments") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::FractionalWalk;
  spec.hurst = 0.5;
  spec.length = 1 << 14;
  spec.seed = 5;
  const ResampledSeries s = gen_fractional_walk(spec);
  const std::size_t m = s.size() - 1;
  std::vector<double> inc(m);
  for (std::size_t i = 0; i < m; ++i) inc[i] = s.prices[i + 1] - s.prices[i];
  double mean = 0;
  for (double x : inc) mean += x;
  mean /= static_cast<double>(m);
  double c0 = 0, c1 = 0;
  for (std::size_t i = 0; i < m; ++i) c0 += (inc[i] - mean) * (inc[i] - mean);
  for (std::size_t i = 0; i + 1 < m; ++i) c1 += (inc[i] - mean) * (inc[i + 1] - mean);
  const double rho1 = c1 / c0;
  CHECK(std::abs(rho1) < 3.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("fractional walk at H=0.8 has persistent increments") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::FractionalWalk;
  spec.hurst = 0.8;
  spec.length = 1 << 13;
  spec.seed = 11;
  const ResampledSeries s = gen_fractional_walk(spec);
  const std::size_t m = s.size() - 1;
  std::vector<double> inc(m);
  for (std::size_t i = 0; i < m; ++i) inc[i] = s.prices[i + 1] - s.prices[i];
  double c0 = 0, c1 = 0;
  for (std::size_t i = 0; i < m; ++i) c0 += inc[i] * inc[i];
  for (std::size_t i = 0; i + 1 < m; ++i) c1 += inc[i] * inc[i + 1];
  // theoretical lag-1 autocorrelation: 2^(2H-1) - 1 = 0.5157 at H=0.8
  CHECK(c1 / c0 > 0.4);
}

TEST_CASE("sticky walk validates inputs") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::StickyLevel;
  spec.length = 128;
  spec.sticky.bounce_bias = 0.4;
  CHECK(thrown_code([&] { gen_sticky_level(spec); }) == Errc::invalid_bias);
  spec.sticky.bounce_bias = 1.01;
  CHECK(thrown_code([&] { gen_sticky_level(spec); }) == Errc::invalid_bias);
}

TEST_CASE("sticky walk is a +/-1 walk and seed-deterministic") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::StickyLevel;
  spec.length = 4096;
  spec.seed = 77;
  spec.sticky.bounce_bias = 0.8;
  const ResampledSeries a = gen_sticky_level(spec);
  const ResampledSeries b = gen_sticky_level(spec);
  CHECK(a.prices == b.prices);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    CHECK(std::abs(a.prices[i + 1] - a.prices[i]) == 1.0);
  }
}

TEST_CASE("surrogate tick day applies interval and offset") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::StickyLevel;
  spec.length = 100;
  spec.seed = 3;
  spec.sticky.bounce_bias = 0.8;
  const TickSeries day = surrogate_tick_day(spec, "SYNTH", "d001", 45.0, 10000);
  CHECK(day.size() == 100);
  CHECK(day.timestamps[1] == 45.0);
  CHECK(day.timestamps[99] == doctest::Approx(99 * 45.0));
  for (auto px : day.prices) CHECK(px > 9000);
}

TEST_CASE("shuffled-returns surrogate kind produces an exchangeable walk") {
  SurrogateSpec spec;
  spec.kind = SurrogateKind::ShuffledReturns;
  spec.length = 256;
  spec.seed = 5;
  const ResampledSeries a = gen_surrogate(spec);
  const ResampledSeries b = gen_surrogate(spec);
  CHECK(a.prices == b.prices);
  CHECK(a.size() == 256);
}
