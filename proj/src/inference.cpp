#include "bounce/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bounce/errors.hpp"
#include "bounce/features.hpp"

namespace bounce {

BounceStats bayes_estimate(std::uint64_t n, std::uint64_t N) {
  if (n > N) {
    throw Error(Errc::invalid_counts,
                "bounce count exceeds trial count: " + std::to_string(n) + " > " +
                    std::to_string(N));
  }
  const double nd = static_cast<double>(n);
  const double Nd = static_cast<double>(N);
  BounceStats s;
  s.n = n;
  s.N = N;
  s.mean = (nd + 1.0) / (Nd + 2.0);
  s.variance = (nd + 1.0) * (Nd - nd + 1.0) / ((Nd + 3.0) * (Nd + 2.0) * (Nd + 2.0));
  return s;
}

std::vector<BounceStats> aggregate_trials(std::span<const TrialRecord> trials,
                                          LevelKind kind, std::uint32_t max_b,
                                          AggregateDiagnostics* diag) {
  if (max_b < 1) {
    throw Error(Errc::bad_config, "max_b must be >= 1");
  }
  std::vector<std::uint64_t> bounces(max_b, 0), totals(max_b, 0);
  AggregateDiagnostics local;
  for (const auto& t : trials) {
    if (t.kind != kind) continue;
    if (t.b_prev == 0) {
      ++local.excluded_b0;
    } else if (t.b_prev > max_b) {
      ++local.excluded_high;
    } else {
      ++local.pooled;
      ++totals[t.b_prev - 1];
      if (t.outcome == TrialOutcome::Bounce) ++bounces[t.b_prev - 1];
    }
  }
  std::vector<BounceStats> out;
  out.reserve(max_b);
  for (std::uint32_t b = 1; b <= max_b; ++b) {
    BounceStats s = bayes_estimate(bounces[b - 1], totals[b - 1]);
    s.b_prev = b;
    out.push_back(s);
  }
  if (diag) *diag = local;
  return out;
}

namespace {

/// Regularized upper incomplete gamma Q(a, x), series/continued-fraction.
double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    // lower series
    double term = 1.0 / a;
    double sum = term;
    double denom = a;
    for (int k = 0; k < 500; ++k) {
      denom += 1.0;
      term *= x / denom;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return 1.0 - std::exp(log_prefix) * sum;
  }
  // modified Lentz continued fraction for Q
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k <= 500; ++k) {
    const double an = -static_cast<double>(k) * (static_cast<double>(k) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

}  // namespace

double chi2_pvalue(double statistic, int dof) {
  if (dof < 1) {
    throw Error(Errc::invalid_dof, "dof must be >= 1, got " + std::to_string(dof));
  }
  if (!(statistic >= 0.0) || !std::isfinite(statistic)) {
    throw Error(Errc::bad_config, "chi-square statistic must be finite and >= 0");
  }
  if (dof == 2) {
    return std::exp(-statistic / 2.0);  // closed form
  }
  return gamma_q(static_cast<double>(dof) / 2.0, statistic / 2.0);
}

ChiSquareResult chi2_independence(std::span<const BounceStats> stats,
                                  const Chi2Options& opts) {
  if (stats.size() < 2) {
    throw Error(Errc::bad_config, "chi2_independence needs at least 2 classes");
  }
  for (const auto& s : stats) {
    if (!(s.variance > 0.0)) {
      throw Error(Errc::degenerate_variance,
                  "class b_prev=" + std::to_string(s.b_prev) + " has zero variance");
    }
  }

  double wsum = 0.0, wmean = 0.0;
  for (const auto& s : stats) {
    const double w = opts.weighted_c ? 1.0 / s.variance : 1.0;
    wsum += w;
    wmean += w * s.mean;
  }
  const double c_hat = wmean / wsum;

  double dev2 = 0.0, var_sum = 0.0, per_term = 0.0;
  for (const auto& s : stats) {
    const double d = s.mean - c_hat;
    dev2 += d * d;
    var_sum += s.variance;
    per_term += d * d / s.variance;
  }

  ChiSquareResult out;
  out.statistic = dev2 / var_sum;
  out.statistic_per_term = per_term;
  out.dof = opts.dof;
  out.c_hat = c_hat;
  out.alpha = opts.alpha;
  out.p_value = chi2_pvalue(out.statistic, opts.dof);
  out.decision = out.p_value < opts.alpha ? Chi2Decision::IndependenceRejected
                                          : Chi2Decision::IndependenceAccepted;
  return out;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 1.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  if (x.size() > 2) {
    fit.slope_stderr = std::sqrt(ss_res / (n - 2.0) / sxx);
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace

HurstEstimate dfa_hurst(std::span<const double> increments, const DfaOptions& opts) {
  const std::size_t len = increments.size();
  const std::size_t wmax = opts.window_max != 0 ? opts.window_max : len / 4;
  if (opts.window_min < 4 || wmax <= opts.window_min || opts.n_windows < 2) {
    throw Error(Errc::window_range_invalid, "bad DFA window configuration");
  }
  if (len < 4 * wmax) {
    throw Error(Errc::series_too_short,
                "DFA needs length >= 4 * window_max, got " + std::to_string(len));
  }

  double mean = 0.0;
  for (double x : increments) mean += x;
  mean /= static_cast<double>(len);

  std::vector<double> profile(len);
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    acc += increments[i] - mean;
    profile[i] = acc;
  }

  // log-spaced window sizes, deduplicated
  std::vector<std::size_t> sizes;
  const double lmin = std::log(static_cast<double>(opts.window_min));
  const double lmax = std::log(static_cast<double>(wmax));
  for (std::size_t j = 0; j < opts.n_windows; ++j) {
    const double f = static_cast<double>(j) / static_cast<double>(opts.n_windows - 1);
    const auto n = static_cast<std::size_t>(std::llround(std::exp(lmin + f * (lmax - lmin))));
    if (sizes.empty() || n > sizes.back()) sizes.push_back(n);
  }

  HurstEstimate est;
  est.window_sizes = sizes;
  est.fluctuations.reserve(sizes.size());
  for (const std::size_t n : sizes) {
    const std::size_t k_windows = len / n;
    const double nd = static_cast<double>(n);
    // linear detrend per window against t = 0..n-1
    const double st = nd * (nd - 1.0) / 2.0;
    const double stt = nd * (nd - 1.0) * (2.0 * nd - 1.0) / 6.0;
    const double det = nd * stt - st * st;
    double ss_total = 0.0;
    for (std::size_t w = 0; w < k_windows; ++w) {
      const double* y = profile.data() + w * n;
      double sy = 0.0, sty = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        sy += y[t];
        sty += static_cast<double>(t) * y[t];
      }
      const double slope = (nd * sty - st * sy) / det;
      const double icept = (sy - slope * st) / nd;
      for (std::size_t t = 0; t < n; ++t) {
        const double r = y[t] - (icept + slope * static_cast<double>(t));
        ss_total += r * r;
      }
    }
    est.fluctuations.push_back(
        std::sqrt(ss_total / (static_cast<double>(k_windows) * nd)));
  }

  std::vector<double> log_n, log_sigma;
  log_n.reserve(sizes.size());
  log_sigma.reserve(sizes.size());
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (!(est.fluctuations[j] > 0.0)) {
      throw Error(Errc::bad_config, "degenerate fluctuations: constant profile");
    }
    log_n.push_back(std::log(static_cast<double>(sizes[j])));
    log_sigma.push_back(std::log(est.fluctuations[j]));
  }
  const LineFit fit = least_squares(log_n, log_sigma);
  est.fit_slope = fit.slope;
  est.fit_intercept = fit.intercept;
  est.fit_stderr = fit.slope_stderr;
  est.hurst = fit.slope;
  return est;
}

HurstEstimate dfa_hurst(const ResampledSeries& series, const DfaOptions& opts) {
  if (series.size() < 2) {
    throw Error(Errc::series_too_short, "need at least 2 prices");
  }
  std::vector<double> increments(series.size() - 1);
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    increments[i] = series.prices[i + 1] - series.prices[i];
  }
  return dfa_hurst(increments, opts);
}

PowerLawFit powerlaw_fit(const Histogram& histogram, const PowerLawOptions& opts) {
  std::vector<double> log_c, log_d;
  double used_min = std::numeric_limits<double>::infinity();
  double used_max = 0.0;
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    const double lo = histogram.bin_edges[b];
    const double hi = histogram.bin_edges[b + 1];
    if (lo <= 0.0) continue;
    const double center = histogram.binning == Histogram::Binning::Logarithmic
                              ? std::sqrt(lo * hi)
                              : 0.5 * (lo + hi);
    if (opts.fit_min > 0.0 && center < opts.fit_min) continue;
    if (opts.fit_max > 0.0 && center > opts.fit_max) continue;
    const double d = histogram.density[b];
    if (!(d > 0.0)) continue;
    log_c.push_back(std::log(center));
    log_d.push_back(std::log(d));
    used_min = std::min(used_min, center);
    used_max = std::max(used_max, center);
  }
  if (log_c.size() < 3) {
    throw Error(Errc::too_few_bins,
                "power-law fit needs >= 3 positive bins, got " +
                    std::to_string(log_c.size()));
  }
  const LineFit fit = least_squares(log_c, log_d);
  PowerLawFit out;
  out.exponent = fit.slope;
  out.amplitude = std::exp(fit.intercept);
  out.fit_min = used_min;
  out.fit_max = used_max;
  out.r_squared = fit.r_squared;
  return out;
}

}  // namespace bounce
