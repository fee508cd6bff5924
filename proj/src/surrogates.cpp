#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "bounce/errors.hpp"
#include "bounce/market_data.hpp"
#include "bounce/rng.hpp"

namespace bounce {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();  // power of two
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -kTwoPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag k.
double fgn_autocov(double k, double hurst) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) +
                std::pow(std::abs(k - 1.0), h2));
}

/// Exact fGn sample of length m via circulant embedding. Returns false when
/// the embedding has a materially negative eigenvalue.
bool fgn_davies_harte(std::size_t m, double hurst, Rng& rng, std::vector<double>& out) {
  std::size_t big = 1;
  while (big < 2 * m) big <<= 1;
  const std::size_t half = big / 2;

  std::vector<std::complex<double>> eig(big);
  for (std::size_t j = 0; j <= half; ++j) {
    eig[j] = fgn_autocov(static_cast<double>(j), hurst);
  }
  for (std::size_t j = 1; j < half; ++j) {
    eig[big - j] = eig[j];
  }
  fft_inplace(eig);

  double max_eig = 0.0;
  for (const auto& e : eig) max_eig = std::max(max_eig, e.real());
  for (auto& e : eig) {
    double lambda = e.real();
    if (lambda < -1e-9 * max_eig) return false;
    e = std::max(lambda, 0.0);
  }

  std::vector<std::complex<double>> spectrum(big);
  spectrum[0] = std::sqrt(eig[0].real()) * rng.gaussian();
  spectrum[half] = std::sqrt(eig[half].real()) * rng.gaussian();
  for (std::size_t j = 1; j < half; ++j) {
    const double amp = std::sqrt(eig[j].real() / 2.0);
    const double re = rng.gaussian();
    const double im = rng.gaussian();
    spectrum[j] = std::complex<double>(amp * re, amp * im);
    spectrum[big - j] = std::conj(spectrum[j]);
  }
  fft_inplace(spectrum);

  const double norm = 1.0 / std::sqrt(static_cast<double>(big));
  out.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    out[k] = spectrum[k].real() * norm;
  }
  return true;
}

/// Durbin-Levinson generation, O(m^2); fallback path only.
std::vector<double> fgn_hosking(std::size_t m, double hurst, Rng& rng) {
  std::vector<double> cov(m);
  for (std::size_t k = 0; k < m; ++k) {
    cov[k] = fgn_autocov(static_cast<double>(k), hurst);
  }
  std::vector<double> out(m);
  std::vector<double> phi(m, 0.0), phi_prev(m, 0.0);
  double v = cov[0];
  out[0] = std::sqrt(v) * rng.gaussian();
  for (std::size_t n = 1; n < m; ++n) {
    double kappa = cov[n];
    for (std::size_t j = 1; j < n; ++j) kappa -= phi_prev[j] * cov[n - j];
    kappa /= v;
    phi[n] = kappa;
    for (std::size_t j = 1; j < n; ++j) {
      phi[j] = phi_prev[j] - kappa * phi_prev[n - j];
    }
    v *= (1.0 - kappa * kappa);
    double mu = 0.0;
    for (std::size_t j = 1; j <= n; ++j) mu += phi[j] * out[n - j];
    out[n] = mu + std::sqrt(std::max(v, 0.0)) * rng.gaussian();
    std::copy(phi.begin() + 1, phi.begin() + static_cast<std::ptrdiff_t>(n) + 1,
              phi_prev.begin() + 1);
  }
  return out;
}

}  // namespace

ResampledSeries gen_fractional_walk(const SurrogateSpec& spec) {
  if (!(spec.hurst > 0.0 && spec.hurst < 1.0)) {
    throw Error(Errc::invalid_hurst,
                "hurst must be in (0,1), got " + std::to_string(spec.hurst));
  }
  if (spec.length < 64) {
    throw Error(Errc::too_short, "fractional walk needs length >= 64");
  }

  const std::size_t m = spec.length - 1;
  Rng rng(spec.seed);
  std::vector<double> noise;
  if (!fgn_davies_harte(m, spec.hurst, rng, noise)) {
    noise = fgn_hosking(m, spec.hurst, rng);
  }

  ResampledSeries out;
  out.scale = 1;
  out.mode = ResampleMode::EventTicks;
  out.prices.resize(spec.length);
  out.prices[0] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    out.prices[i + 1] = out.prices[i] + noise[i];
  }
  return out;
}

namespace {

/// Sticky-walk level record: one per price value, mirroring the lifecycle the
/// classifier applies at stripe width 1 (the stripe holds only the level
/// value itself for a +/-1 walk).
struct StickyLevel {
  std::uint32_t bounces = 0;
  bool in_trial = false;
  int entry_side = 0;  // +1 entered from above, -1 from below
};

double ramped_bias(double bounce_bias, std::uint32_t bounces) {
  return 0.5 + (bounce_bias - 0.5) * (1.0 - std::exp2(-static_cast<double>(bounces)));
}

}  // namespace

ResampledSeries gen_sticky_level(const SurrogateSpec& spec) {
  const double bias = spec.sticky.bounce_bias;
  if (!(bias >= 0.5 && bias <= 1.0)) {
    throw Error(Errc::invalid_bias,
                "bounce_bias must be in [0.5, 1], got " + std::to_string(bias));
  }
  if (spec.sticky.level_spacing < 1) {
    throw Error(Errc::bad_config, "level_spacing must be >= 1");
  }
  if (spec.length < 2) {
    throw Error(Errc::too_short, "sticky walk needs length >= 2");
  }

  const std::int64_t spacing = spec.sticky.level_spacing;
  Rng rng(spec.seed);
  std::vector<std::int64_t> path(spec.length);
  path[0] = 0;
  std::unordered_map<std::int64_t, StickyLevel> levels;

  auto is_sticky_value = [spacing](std::int64_t v) {
    return ((v % spacing) + spacing) % spacing == 0;
  };

  for (std::size_t i = 1; i < spec.length; ++i) {
    const std::int64_t pos = path[i - 1];
    int step;

    auto it = levels.find(pos);
    if (it != levels.end() && it->second.in_trial) {
      StickyLevel& lvl = it->second;
      const double p_bounce = ramped_bias(bias, lvl.bounces);
      if (rng.bernoulli(p_bounce)) {
        step = lvl.entry_side;  // bounce: exit the way the price came in
        lvl.bounces += 1;
        lvl.in_trial = false;
      } else {
        step = -lvl.entry_side;  // cross: the level is broken
        levels.erase(it);
      }
    } else {
      step = rng.bernoulli(0.5) ? 1 : -1;
    }
    path[i] = pos + step;

    // a completed step makes index i-1 checkable as a strict extremum
    if (i >= 2 && path[i - 2] == path[i] && is_sticky_value(path[i - 1])) {
      levels.try_emplace(path[i - 1]);  // keep an existing level's history
    }
    // arriving at a tracked level value opens a trial on it
    auto arrived = levels.find(path[i]);
    if (arrived != levels.end() && !arrived->second.in_trial) {
      arrived->second.in_trial = true;
      arrived->second.entry_side = (path[i - 1] > path[i]) ? 1 : -1;
    }
  }

  ResampledSeries out;
  out.scale = 1;
  out.mode = ResampleMode::EventTicks;
  out.prices.assign(path.begin(), path.end());
  return out;
}

}  // namespace bounce
