#include "bounce/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "bounce/errors.hpp"

namespace bounce {

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<BounceFeature> extract_features(const ResampledSeries& series,
                                            std::span<const TrialRecord> trials,
                                            const FeatureOptions& opts) {
  // trials grouped per level, kept in enter order
  std::map<std::size_t, std::vector<const TrialRecord*>> by_level;
  for (const auto& t : trials) {
    if (t.enter_index >= series.size() || t.exit_index >= series.size()) {
      throw Error(Errc::path_mismatch, "trial indices fall outside the series");
    }
    by_level[t.level_id].push_back(&t);
  }

  std::vector<BounceFeature> out;
  for (auto& [level_id, recs] : by_level) {
    std::sort(recs.begin(), recs.end(),
              [](const TrialRecord* a, const TrialRecord* b) {
                return a->enter_index < b->enter_index;
              });
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
      const TrialRecord& first = *recs[k];
      const TrialRecord& second = *recs[k + 1];
      if (opts.pair_rule == PairRule::BounceBounceOnly &&
          second.outcome != TrialOutcome::Bounce) {
        continue;
      }
      if (second.enter_index <= first.exit_index) {
        throw Error(Errc::path_mismatch, "overlapping trials on one level");
      }
      BounceFeature f;
      f.recurrence_time = second.enter_index - first.exit_index;
      double excursion = 0.0;
      for (std::size_t i = first.exit_index; i < second.enter_index; ++i) {
        excursion = std::max(excursion, std::abs(series.prices[i] - first.level_value));
      }
      f.max_excursion = excursion;
      f.symbol = first.symbol;
      f.day_id = first.day_id;
      f.scale = first.scale;
      f.level_value = first.level_value;
      f.kind = first.kind;
      out.push_back(std::move(f));
    }
  }
  return out;
}

Histogram build_histogram(std::span<const double> samples,
                          Histogram::Binning binning, std::size_t n_bins) {
  if (samples.empty()) {
    throw Error(Errc::empty_samples, "histogram needs at least one sample");
  }
  if (n_bins < 2) {
    throw Error(Errc::bad_config, "histogram needs at least 2 bins");
  }

  double lo = samples[0], hi = samples[0];
  for (double s : samples) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (binning == Histogram::Binning::Logarithmic && lo <= 0.0) {
    throw Error(Errc::bad_config, "logarithmic binning needs positive samples");
  }
  if (lo == hi) {
    // degenerate range: widen so every sample lands in one interior bin
    if (binning == Histogram::Binning::Logarithmic) {
      lo /= 2.0;
      hi *= 2.0;
    } else {
      lo -= 0.5;
      hi += 0.5;
    }
  }

  Histogram h;
  h.binning = binning;
  h.bin_edges.resize(n_bins + 1);
  if (binning == Histogram::Binning::Logarithmic) {
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t b = 0; b <= n_bins; ++b) {
      const double f = static_cast<double>(b) / static_cast<double>(n_bins);
      h.bin_edges[b] = std::exp(llo + f * (lhi - llo));
    }
    h.bin_edges.front() = lo;
    h.bin_edges.back() = hi;
  } else {
    for (std::size_t b = 0; b <= n_bins; ++b) {
      const double f = static_cast<double>(b) / static_cast<double>(n_bins);
      h.bin_edges[b] = lo + f * (hi - lo);
    }
  }

  h.counts.assign(n_bins, 0);
  for (double s : samples) {
    // upper_bound - 1: bins are [edge_b, edge_{b+1}), last bin closed
    auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), s);
    std::size_t idx = it == h.bin_edges.begin()
                          ? 0
                          : static_cast<std::size_t>(it - h.bin_edges.begin()) - 1;
    idx = std::min(idx, n_bins - 1);
    ++h.counts[idx];
  }

  const double total = static_cast<double>(samples.size());
  h.density.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double width = h.bin_edges[b + 1] - h.bin_edges[b];
    h.density[b] = static_cast<double>(h.counts[b]) / (total * width);
  }
  return h;
}

namespace {

void append_double(std::string& out, double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, r.ptr);
}

}  // namespace

void write_features_csv_header(std::ostream& out) {
  out << "symbol,day,scale,kind,level_value,recurrence_time,max_excursion\n";
}

void write_features_csv(std::ostream& out, const std::vector<BounceFeature>& features) {
  std::string line;
  for (const auto& f : features) {
    line.clear();
    line += f.symbol;
    line += ',';
    line += f.day_id;
    line += ',';
    line += std::to_string(f.scale);
    line += ',';
    line += to_string(f.kind);
    line += ',';
    append_double(line, f.level_value);
    line += ',';
    line += std::to_string(f.recurrence_time);
    line += ',';
    append_double(line, f.max_excursion);
    line += '\n';
    out << line;
  }
}

}  // namespace bounce
