#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bounce {

/// Raw intraday record for one symbol-day: event times in seconds since
/// session open plus prices in integer ticks.
struct TickSeries {
  std::string symbol;
  std::string day_id;
  std::vector<double> timestamps;
  std::vector<std::int64_t> prices;

  std::size_t size() const noexcept { return prices.size(); }
  double session_duration() const { return timestamps.back(); }
};

enum class ResampleMode { EventTicks, PhysicalSeconds };

/// Price path inspected at one time scale; all level logic runs on this.
struct ResampledSeries {
  std::int64_t scale = 1;
  ResampleMode mode = ResampleMode::EventTicks;
  std::vector<double> prices;
  std::string source_symbol;
  std::string source_day;

  std::size_t size() const noexcept { return prices.size(); }
};

enum class SurrogateKind { ShuffledReturns, FractionalWalk, StickyLevel };

struct StickyParams {
  std::int64_t level_spacing = 1;  // only extrema at multiples stick
  double bounce_bias = 0.8;        // asymptotic reflection probability
};

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::FractionalWalk;
  double hurst = 0.5;
  StickyParams sticky;
  std::uint64_t seed = 0;
  std::size_t length = 4096;
};

/// Parses the tick CSV format (`timestamp,price` header, `#` comments).
/// Symbol and day come from the filename stem `SYMBOL_DAY.csv`.
TickSeries load_ticks(const std::filesystem::path& path);

void write_ticks_csv(const TickSeries& series, const std::filesystem::path& path);

ResampledSeries resample(const TickSeries& series, std::int64_t scale,
                         ResampleMode mode);

/// Rebuilds the path from a Fisher-Yates permutation of its increments;
/// first and last price and the increment multiset are preserved.
ResampledSeries shuffle_returns(const ResampledSeries& series, std::uint64_t seed);

/// Cumulative sum of exact fractional Gaussian noise (Davies-Harte circulant
/// embedding, Hosking recursion when the embedding is not nonnegative).
ResampledSeries gen_fractional_walk(const SurrogateSpec& spec);

/// Positive control: +/-1 walk that reflects off its own previously formed
/// extremum levels. The reflection probability ramps from 1/2 toward
/// `bounce_bias` as a level accumulates bounces, so the conditional bounce
/// probability rises with the prior bounce count; at bias 1/2 the walk is
/// a plain random walk.
ResampledSeries gen_sticky_level(const SurrogateSpec& spec);

ResampledSeries gen_surrogate(const SurrogateSpec& spec);

/// How a real-valued surrogate path becomes integer tick prices. Round keeps
/// the level geometry of the path; Sign keeps only move directions, giving a
/// one-tick-per-trade walk free of quantization chatter.
enum class TickRule { Round, Sign };

/// Materializes a surrogate path as a tick day: trades every
/// `trade_interval` seconds, prices scaled by `amplitude`, offset, and
/// quantized to integer ticks per `rule`.
TickSeries surrogate_tick_day(const SurrogateSpec& spec, const std::string& symbol,
                              const std::string& day_id, double trade_interval,
                              std::int64_t price_offset = 10000,
                              double amplitude = 1.0, TickRule rule = TickRule::Round);

}  // namespace bounce
