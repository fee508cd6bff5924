#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bounce/errors.hpp"
#include "bounce/features.hpp"
#include "bounce/inference.hpp"
#include "bounce/market_data.hpp"
#include "bounce/rng.hpp"

using namespace bounce;

TEST_CASE("bayes estimate matches the closed forms") {
  const BounceStats prior = bayes_estimate(0, 0);
  CHECK(prior.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(prior.variance == doctest::Approx(1.0 / 12.0).epsilon(1e-15));

  const BounceStats s = bayes_estimate(60, 100);
  CHECK(s.mean == doctest::Approx(61.0 / 102.0).epsilon(1e-15));
  CHECK(s.variance == doctest::Approx(2501.0 / 1071612.0).epsilon(1e-15));
  CHECK(s.variance == doctest::Approx(2.3337e-3).epsilon(1e-4));
}

TEST_CASE("bayes estimate limit and symmetry properties") {
  double prev_mean = 0.0;
  double prev_var = 1.0;
  for (std::uint64_t N : {10ULL, 100ULL, 1000ULL, 100000ULL}) {
    const BounceStats s = bayes_estimate(N, N);
    CHECK(s.mean > prev_mean);
    CHECK(s.mean < 1.0);
    CHECK(s.variance < prev_var);
    CHECK(s.variance > 0.0);
    prev_mean = s.mean;
    prev_var = s.variance;
  }

  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const std::uint64_t N = rng.bounded(1000);
    const std::uint64_t n = N == 0 ? 0 : rng.bounded(N + 1);
    const BounceStats a = bayes_estimate(n, N);
    const BounceStats b = bayes_estimate(N - n, N);
    CHECK(a.mean + b.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-14));
    CHECK(a.mean > 0.0);
    CHECK(a.mean < 1.0);
  }
}

TEST_CASE("bayes estimate rejects n > N") {
  CHECK_THROWS_AS(bayes_estimate(5, 3), Error);
}

namespace {

TrialRecord trial(LevelKind kind, std::uint32_t b_prev, TrialOutcome outcome,
                  std::int64_t scale = 1) {
  TrialRecord t;
  t.kind = kind;
  t.b_prev = b_prev;
  t.outcome = outcome;
  t.scale = scale;
  return t;
}

}  // namespace

TEST_CASE("aggregate_trials pools by class and falls back to the prior") {
  const auto empty = aggregate_trials({}, LevelKind::Support, 4);
  REQUIRE(empty.size() == 4);
  for (const auto& s : empty) {
    CHECK(s.mean == 0.5);
    CHECK(s.variance == doctest::Approx(1.0 / 12.0));
    CHECK(s.N == 0);
  }

  std::vector<TrialRecord> trials;
  for (int i = 0; i < 7; ++i) {
    trials.push_back(trial(LevelKind::Support, 1, TrialOutcome::Bounce));
  }
  for (int i = 0; i < 3; ++i) {
    trials.push_back(trial(LevelKind::Support, 1, TrialOutcome::Cross));
  }
  trials.push_back(trial(LevelKind::Resistance, 1, TrialOutcome::Bounce));  // other kind
  trials.push_back(trial(LevelKind::Support, 0, TrialOutcome::Bounce));     // b_prev 0
  trials.push_back(trial(LevelKind::Support, 9, TrialOutcome::Bounce));     // above max

  AggregateDiagnostics diag;
  const auto stats = aggregate_trials(trials, LevelKind::Support, 4, &diag);
  REQUIRE(stats.size() == 4);
  CHECK(stats[0].b_prev == 1);
  CHECK(stats[0].n == 7);
  CHECK(stats[0].N == 10);
  CHECK(stats[0].mean == doctest::Approx(8.0 / 12.0));
  CHECK(diag.pooled == 10);
  CHECK(diag.excluded_b0 == 1);
  CHECK(diag.excluded_high == 1);

  std::uint64_t total = 0;
  for (const auto& s : stats) total += s.N;
  CHECK(total == diag.pooled);
}

TEST_CASE("chi2_pvalue closed forms and monotonicity") {
  CHECK(chi2_pvalue(0.0, 2) == 1.0);
  CHECK(chi2_pvalue(5.991464547107979, 2) == doctest::Approx(0.05).epsilon(1e-9));
  // Table consistency point: statistic 2.292 with 2 dof
  CHECK(chi2_pvalue(2.292, 2) == doctest::Approx(0.318).epsilon(0.001 / 0.318));

  for (double x = 0.0; x <= 50.0; x += 0.173) {
    CHECK(std::abs(chi2_pvalue(x, 2) - std::exp(-x / 2.0)) < 1e-12);
  }

  for (int dof : {1, 2, 3, 7}) {
    double prev = 1.1;
    for (double x = 0.0; x < 30.0; x += 0.37) {
      const double p = chi2_pvalue(x, dof);
      CHECK(p < prev);
      prev = p;
    }
  }

  // dof 4 closed form: exp(-x/2) * (1 + x/2)
  for (double x : {0.5, 2.0, 4.0, 10.0, 25.0}) {
    CHECK(std::abs(chi2_pvalue(x, 4) - std::exp(-x / 2.0) * (1.0 + x / 2.0)) < 1e-12);
  }
  // dof 1 closed form: erfc(sqrt(x/2))
  for (double x : {0.25, 1.0, 3.0, 9.0}) {
    CHECK(std::abs(chi2_pvalue(x, 1) - std::erfc(std::sqrt(x / 2.0))) < 1e-12);
  }

  CHECK_THROWS_AS(chi2_pvalue(1.0, 0), Error);
  CHECK_THROWS_AS(chi2_pvalue(-0.5, 2), Error);
}

namespace {

BounceStats stats_of(std::uint32_t b, double mean, double variance) {
  BounceStats s;
  s.b_prev = b;
  s.mean = mean;
  s.variance = variance;
  return s;
}

}  // namespace

TEST_CASE("chi2_independence accepts an exactly flat table") {
  std::vector<BounceStats> flat;
  for (std::uint32_t b = 1; b <= 4; ++b) flat.push_back(stats_of(b, 0.57, 1e-4));
  const ChiSquareResult r = chi2_independence(flat);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(r.c_hat == doctest::Approx(0.57));
  CHECK(r.decision == Chi2Decision::IndependenceAccepted);
}

TEST_CASE("chi2_independence matches a hand-computed two-class case") {
  std::vector<BounceStats> stats{stats_of(1, 0.4, 0.01), stats_of(2, 0.6, 0.02)};
  const ChiSquareResult r = chi2_independence(stats);
  // weighted c: (0.4/0.01 + 0.6/0.02) / (1/0.01 + 1/0.02) = 7/15
  CHECK(r.c_hat == doctest::Approx(7.0 / 15.0).epsilon(1e-12));
  const double d1 = 0.4 - 7.0 / 15.0, d2 = 0.6 - 7.0 / 15.0;
  CHECK(r.statistic == doctest::Approx((d1 * d1 + d2 * d2) / 0.03).epsilon(1e-12));
  CHECK(r.statistic_per_term ==
        doctest::Approx(d1 * d1 / 0.01 + d2 * d2 / 0.02).epsilon(1e-12));
}

TEST_CASE("chi2_independence is invariant under class relabeling") {
  std::vector<BounceStats> stats{stats_of(1, 0.52, 2e-4), stats_of(2, 0.55, 3e-4),
                                 stats_of(3, 0.61, 5e-4), stats_of(4, 0.66, 9e-4)};
  const ChiSquareResult base = chi2_independence(stats);
  std::reverse(stats.begin(), stats.end());
  const ChiSquareResult rev = chi2_independence(stats);
  CHECK(base.statistic == doctest::Approx(rev.statistic).epsilon(1e-14));
  CHECK(base.p_value == doctest::Approx(rev.p_value).epsilon(1e-14));
}

TEST_CASE("chi2_independence rejects degenerate inputs") {
  std::vector<BounceStats> one{stats_of(1, 0.5, 1e-4)};
  CHECK_THROWS_AS(chi2_independence(one), Error);
  std::vector<BounceStats> degen{stats_of(1, 0.5, 1e-4), stats_of(2, 0.5, 0.0)};
  try {
    chi2_independence(degen);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_variance);
  }
}

TEST_CASE("chi2 decision follows alpha") {
  std::vector<BounceStats> stats{stats_of(1, 0.50, 1e-5), stats_of(2, 0.53, 1e-5),
                                 stats_of(3, 0.56, 1e-5), stats_of(4, 0.60, 1e-5)};
  const ChiSquareResult r = chi2_independence(stats);
  CHECK(r.p_value < 0.05);
  CHECK(r.decision == Chi2Decision::IndependenceRejected);
}

TEST_CASE("dfa recovers H=0.5 for white noise") {
  Rng rng(17);
  std::vector<double> increments(1 << 14);
  for (double& x : increments) x = rng.gaussian();
  const HurstEstimate est = dfa_hurst(increments);
  CHECK(est.hurst == doctest::Approx(0.5).epsilon(0.1));  // +/- 0.05 absolute
  CHECK(std::abs(est.hurst - 0.5) < 0.05);
  CHECK(est.window_sizes.front() == 8);
  CHECK(std::is_sorted(est.window_sizes.begin(), est.window_sizes.end()));
}

TEST_CASE("dfa saturates for deterministic alternating increments") {
  std::vector<double> increments(4096);
  for (std::size_t i = 0; i < increments.size(); ++i) {
    increments[i] = (i % 2 == 0) ? 1.0 : -1.0;
  }
  const HurstEstimate est = dfa_hurst(increments);
  CHECK(est.hurst < 0.1);
}

TEST_CASE("dfa is insensitive to a constant drift in the increments") {
  Rng rng(23);
  std::vector<double> clean(1 << 13);
  for (double& x : clean) x = rng.gaussian();
  std::vector<double> drifted = clean;
  for (double& x : drifted) x += 0.05;
  const double h0 = dfa_hurst(clean).hurst;
  const double h1 = dfa_hurst(drifted).hurst;
  CHECK(std::abs(h0 - h1) < 0.02);
}

TEST_CASE("dfa validates window configuration") {
  std::vector<double> increments(4096, 0.0);
  Rng rng(2);
  for (double& x : increments) x = rng.gaussian();

  DfaOptions bad;
  bad.window_min = 2;
  CHECK_THROWS_AS(dfa_hurst(increments, bad), Error);

  DfaOptions too_big;
  too_big.window_max = 2048;  // length must be >= 4 * window_max
  CHECK_THROWS_AS(dfa_hurst(increments, too_big), Error);

  std::vector<double> tiny(16, 1.0);
  CHECK_THROWS_AS(dfa_hurst(tiny), Error);
}

TEST_CASE("dfa round-trips the fractional walk generator at H=0.44") {
  // seed-ensemble mean, mirroring the estimator use on daily series
  const std::size_t n_seeds = 20;
  double sum = 0.0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    SurrogateSpec spec;
    spec.kind = SurrogateKind::FractionalWalk;
    spec.hurst = 0.44;
    spec.length = 1 << 14;
    spec.seed = 1000 + s;
    sum += dfa_hurst(gen_fractional_walk(spec)).hurst;
  }
  CHECK(sum / n_seeds == doctest::Approx(0.44).epsilon(0.03 / 0.44));
}

TEST_CASE("powerlaw fit recovers the exponent of exact samples") {
  // inverse-CDF samples of density ~ x^(-1.5) on [1, 100]
  Rng rng(55);
  const double a = 1.5;
  const double xmin = 1.0, xmax = 100.0;
  const double c = 1.0 - std::pow(xmax / xmin, 1.0 - a);
  std::vector<double> samples(100000);
  for (double& x : samples) {
    const double u = rng.u01();
    x = xmin * std::pow(1.0 - u * c, 1.0 / (1.0 - a));
  }
  const Histogram h = build_histogram(samples, Histogram::Binning::Logarithmic, 24);
  const PowerLawFit fit = powerlaw_fit(h);
  CHECK(std::abs(fit.exponent - (-1.5)) < 0.1);
  CHECK(fit.amplitude > 0.0);
  CHECK(fit.r_squared > 0.98);
}

TEST_CASE("powerlaw fit of a flat density is zero") {
  Histogram h;
  h.binning = Histogram::Binning::Linear;
  h.bin_edges = {1.0, 2.0, 3.0, 4.0, 5.0};
  h.counts = {10, 10, 10, 10};
  h.density = {0.25, 0.25, 0.25, 0.25};
  const PowerLawFit fit = powerlaw_fit(h);
  CHECK(std::abs(fit.exponent) < 1e-9);
}

TEST_CASE("powerlaw fit needs at least three positive bins") {
  Histogram h;
  h.binning = Histogram::Binning::Linear;
  h.bin_edges = {1.0, 2.0, 3.0};
  h.counts = {4, 0};
  h.density = {2.0, 0.0};
  try {
    powerlaw_fit(h);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::too_few_bins);
  }
}

TEST_CASE("powerlaw fit honors the fit range") {
  Histogram h;
  h.binning = Histogram::Binning::Linear;
  h.bin_edges = {1, 2, 3, 4, 5, 6, 7};
  h.counts = {100, 50, 33, 25, 20, 1000};  // last bin is an outlier
  h.density.resize(6);
  for (int i = 0; i < 6; ++i) h.density[i] = h.counts[i] / 1228.0;
  PowerLawOptions opts;
  opts.fit_max = 5.8;  // exclude the outlier bin
  const PowerLawFit narrow = powerlaw_fit(h, opts);
  const PowerLawFit full = powerlaw_fit(h);
  CHECK(narrow.exponent < full.exponent);  // outlier drags the slope up
  CHECK(narrow.fit_max < 5.8);
}
