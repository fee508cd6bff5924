#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bounce/level_engine.hpp"

namespace bounce {

/// Recurrence time and maximum excursion between two consecutive trials on
/// the same level. Time is counted in resampled steps, excursion in ticks
/// from the level value.
struct BounceFeature {
  std::uint64_t recurrence_time = 0;
  double max_excursion = 0.0;
  std::string symbol;
  std::string day_id;
  std::int64_t scale = 1;
  double level_value = 0.0;
  LevelKind kind = LevelKind::Support;
};

struct Histogram {
  enum class Binning { Linear, Logarithmic };
  std::vector<double> bin_edges;       // size counts.size() + 1
  std::vector<std::uint64_t> counts;
  std::vector<double> density;         // counts / (total * width)
  Binning binning = Binning::Linear;

  std::uint64_t total() const;
};

enum class PairRule { ConsecutiveTrials, BounceBounceOnly };

struct FeatureOptions {
  PairRule pair_rule = PairRule::ConsecutiveTrials;
};

/// Emits one feature per consecutive pair of trials on the same level:
/// recurrence_time = later enter - earlier exit, max_excursion = max
/// |price - level| over samples from the earlier exit up to (not including)
/// the later entry. Supports and resistances are not distinguished.
std::vector<BounceFeature> extract_features(const ResampledSeries& series,
                                            std::span<const TrialRecord> trials,
                                            const FeatureOptions& opts = {});

Histogram build_histogram(std::span<const double> samples,
                          Histogram::Binning binning, std::size_t n_bins);

void write_features_csv_header(std::ostream& out);
void write_features_csv(std::ostream& out, const std::vector<BounceFeature>& features);

}  // namespace bounce
