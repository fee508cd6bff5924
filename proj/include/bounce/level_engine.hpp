#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bounce/market_data.hpp"

namespace bounce {

enum class LevelKind { Support, Resistance };
enum class TrialOutcome { Bounce, Cross };

enum class LevelState { Active, Broken };

/// A candidate support or resistance: born at a local extremum, bounced on
/// zero or more times, broken at most once.
struct Level {
  double value = 0.0;
  LevelKind kind = LevelKind::Support;
  double half_width = 0.0;
  std::size_t created_at = 0;
  std::uint32_t bounces = 0;
  LevelState state = LevelState::Active;
};

/// One stripe-entry event and its resolution. For a sample that jumps clear
/// across the stripe the trial opens and closes on that sample, so
/// enter_index == exit_index; otherwise enter_index < exit_index.
struct TrialRecord {
  double level_value = 0.0;
  LevelKind kind = LevelKind::Support;
  std::uint32_t b_prev = 0;
  TrialOutcome outcome = TrialOutcome::Bounce;
  std::size_t enter_index = 0;
  std::size_t exit_index = 0;
  std::size_t level_id = 0;  // creation sample index; distinguishes co-located levels
  std::string symbol;
  std::string day_id;
  std::int64_t scale = 1;
};

struct Extremum {
  std::size_t index;
  double value;
  LevelKind kind;
};

/// Mean absolute increment of the series (the stripe width delta for the
/// scale the series was resampled at).
double stripe_width(const ResampledSeries& series);

/// Strict interior local extrema; a plateau bounded by strictly lower
/// (higher) neighbours collapses to one extremum at its first sample.
std::vector<Extremum> detect_extrema(const ResampledSeries& series);

/// Exit side of a resolved trial; Bounce and EntrySide coincide by definition.
enum class ExitSide { EntrySide, FarSide };

inline ExitSide exit_side(const TrialRecord& trial) {
  return trial.outcome == TrialOutcome::Bounce ? ExitSide::EntrySide
                                               : ExitSide::FarSide;
}

/// Runs the level lifecycle state machine and returns every resolved trial,
/// ordered by enter_index. Trials still open at the end of the series are
/// dropped. When `levels_out` is given it receives the final state of every
/// level the series spawned, in creation order.
std::vector<TrialRecord> classify_events(const ResampledSeries& series, double delta,
                                         std::vector<Level>* levels_out = nullptr);

struct RunDayOptions {
  double stripe_multiplier = 1.0;
  bool shuffle = false;           // permute resampled increments first
  std::uint64_t shuffle_seed = 0;
};

/// resample -> stripe_width -> classify_events, with provenance filled in.
std::vector<TrialRecord> run_day(const TickSeries& ticks, std::int64_t scale,
                                 ResampleMode mode, const RunDayOptions& opts = {});

void write_trials_csv_header(std::ostream& out);
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& trials);

const char* to_string(LevelKind kind);
const char* to_string(TrialOutcome outcome);

}  // namespace bounce
