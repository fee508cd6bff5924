#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bounce/level_engine.hpp"

namespace bounce {

/// Posterior mean and variance of the bounce probability for one prior-bounce
/// class, under a uniform prior on a Bernoulli rate.
struct BounceStats {
  std::uint32_t b_prev = 0;
  std::uint64_t n = 0;  // bounces
  std::uint64_t N = 0;  // trials
  double mean = 0.5;
  double variance = 1.0 / 12.0;
};

enum class Chi2Decision { IndependenceAccepted, IndependenceRejected };

struct ChiSquareResult {
  double statistic = 0.0;           // sum of squared deviations / sum of variances
  double statistic_per_term = 0.0;  // conventional sum of dev^2/var, diagnostic
  int dof = 2;
  double p_value = 1.0;
  double c_hat = 0.5;
  Chi2Decision decision = Chi2Decision::IndependenceAccepted;
  double alpha = 0.05;
};

struct HurstEstimate {
  double hurst = 0.5;
  std::vector<std::size_t> window_sizes;
  std::vector<double> fluctuations;  // sigma(n) per window size
  double fit_slope = 0.0;
  double fit_intercept = 0.0;
  double fit_stderr = 0.0;
};

struct PowerLawFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double fit_min = 0.0;
  double fit_max = 0.0;
  double r_squared = 0.0;
};

/// mean = (n+1)/(N+2), variance = (n+1)(N-n+1)/((N+3)(N+2)^2).
BounceStats bayes_estimate(std::uint64_t n, std::uint64_t N);

struct AggregateDiagnostics {
  std::uint64_t pooled = 0;         // trials with 1 <= b_prev <= max_b
  std::uint64_t excluded_b0 = 0;    // first trials (no prior bounce)
  std::uint64_t excluded_high = 0;  // b_prev > max_b
};

/// Pools trials of one kind into per-b_prev classes 1..max_b. Empty classes
/// carry the prior (mean 1/2, variance 1/12).
std::vector<BounceStats> aggregate_trials(std::span<const TrialRecord> trials,
                                          LevelKind kind, std::uint32_t max_b,
                                          AggregateDiagnostics* diag = nullptr);

struct Chi2Options {
  double alpha = 0.05;
  int dof = 2;
  bool weighted_c = true;  // inverse-variance weighted c_hat; plain mean otherwise
};

/// Flatness test of the class means against a fitted constant c. The
/// statistic is the ratio of the summed squared deviations to the summed
/// variances (not the per-term sum, which is reported as a diagnostic).
ChiSquareResult chi2_independence(std::span<const BounceStats> stats,
                                  const Chi2Options& opts = {});

/// Upper-tail probability of a chi-square variate; exp(-x/2) for dof 2.
double chi2_pvalue(double statistic, int dof);

struct DfaOptions {
  std::size_t window_min = 8;
  std::size_t window_max = 0;  // 0 -> length/4
  std::size_t n_windows = 16;
};

/// DFA-1: profile of mean-subtracted increments, per-window linear detrend,
/// RMS residual sigma(n), Hurst = slope of ln sigma vs ln n.
HurstEstimate dfa_hurst(std::span<const double> increments, const DfaOptions& opts = {});
HurstEstimate dfa_hurst(const ResampledSeries& series, const DfaOptions& opts = {});

struct Histogram;  // features.hpp

struct PowerLawOptions {
  double fit_min = 0.0;  // 0 -> full positive range
  double fit_max = 0.0;
};

/// Least-squares line on (ln bin_center, ln density) over strictly positive
/// bins; exponent = slope, amplitude = exp(intercept).
PowerLawFit powerlaw_fit(const Histogram& histogram, const PowerLawOptions& opts = {});

}  // namespace bounce
