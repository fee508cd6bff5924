#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bounce/features.hpp"
#include "bounce/inference.hpp"
#include "bounce/level_engine.hpp"
#include "bounce/market_data.hpp"

namespace bounce {

/// Full run configuration; defaults follow the measurement protocol
/// (scales 45/60/90/180 s in physical time, classes up to b_prev = 4,
/// significance 0.05, chi-square with 2 dof).
struct RunConfig {
  std::filesystem::path input;  // directory of tick CSVs; empty -> surrogate
  std::filesystem::path output_dir = ".";
  std::vector<std::int64_t> scales = {45, 60, 90, 180};
  ResampleMode mode = ResampleMode::PhysicalSeconds;
  std::uint32_t max_b = 4;
  double alpha = 0.05;
  int dof = 2;
  double stripe_multiplier = 1.0;
  bool shuffle = false;  // permute each day's resampled increments
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all available, capped by BOUNCE_LAB_THREADS
  PairRule pair_rule = PairRule::ConsecutiveTrials;
  DfaOptions dfa;

  // surrogate input (used when `input` is empty or by the surrogate command)
  std::optional<SurrogateSpec> surrogate;
  std::size_t surrogate_days = 1;
  double trade_interval = 1.0;
  std::int64_t price_offset = 10000;
  double surrogate_amplitude = 1.0;
  TickRule tick_rule = TickRule::Round;
  std::string surrogate_symbol = "SYNTH";
};

/// Parses the flat key = value config format; unknown keys are an error.
RunConfig parse_config_file(const std::filesystem::path& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

int effective_threads(int requested);

/// Deterministic surrogate day: the day index and root seed fix the stream.
TickSeries gen_surrogate_day(const RunConfig& cfg, std::size_t day_index);
std::vector<TickSeries> gen_surrogate_days(const RunConfig& cfg);

/// Per-day trial extraction over all configured scales. `run_days` fans the
/// days out to an OpenMP worker pool; `run_days_serial` is the plain-loop
/// reference the tests compare against. Results are indexed by day, so the
/// merge order never depends on thread scheduling.
std::vector<TrialRecord> run_one_day(const TickSeries& day, const RunConfig& cfg);
std::vector<std::vector<TrialRecord>> run_days(std::span<const TickSeries> days,
                                               const RunConfig& cfg);
std::vector<std::vector<TrialRecord>> run_days_serial(std::span<const TickSeries> days,
                                                      const RunConfig& cfg);

std::vector<HurstEstimate> hurst_days(std::span<const TickSeries> days,
                                      const RunConfig& cfg);
std::vector<HurstEstimate> hurst_days_serial(std::span<const TickSeries> days,
                                             const RunConfig& cfg);

std::vector<BounceFeature> features_one_day(const TickSeries& day, const RunConfig& cfg);
std::vector<std::vector<BounceFeature>> features_days(std::span<const TickSeries> days,
                                                      const RunConfig& cfg);
std::vector<std::vector<BounceFeature>> features_days_serial(
    std::span<const TickSeries> days, const RunConfig& cfg);

struct KindTable {
  LevelKind kind = LevelKind::Support;
  std::vector<BounceStats> classes;
  ChiSquareResult chi2;
  AggregateDiagnostics diag;
};

struct ScaleBlock {
  std::int64_t scale = 0;
  std::array<KindTable, 2> kinds;  // [Support, Resistance]
};

struct AnalyzeReport {
  std::vector<ScaleBlock> scales;
  std::uint64_t n_trials_total = 0;
};

AnalyzeReport analyze_trials(std::span<const TrialRecord> trials, const RunConfig& cfg);

/// Deterministic renderings of the report files (same bytes for same input).
std::string analyze_report_json(const AnalyzeReport& report, const RunConfig& cfg);
std::string analyze_stats_csv(const AnalyzeReport& report);

struct HurstReport {
  std::vector<std::string> day_labels;
  std::vector<double> estimates;
  double mean = 0.0;
  double stderr_mean = 0.0;
  Histogram histogram;
};

HurstReport build_hurst_report(std::span<const TickSeries> days,
                               std::span<const HurstEstimate> estimates,
                               std::size_t hist_bins = 16);
std::string hurst_report_json(const HurstReport& report, const RunConfig& cfg);
std::string hurst_csv(const HurstReport& report);

struct FeatureReport {
  std::int64_t scale = 0;
  std::vector<BounceFeature> features;
  Histogram tau_hist;
  PowerLawFit tau_fit;
  Histogram delta_hist;
  PowerLawFit delta_fit;
};

FeatureReport build_feature_report(std::int64_t scale,
                                   std::vector<BounceFeature> features,
                                   std::size_t n_bins = 24);
std::string feature_report_json(std::span<const FeatureReport> reports,
                                const RunConfig& cfg);

}  // namespace bounce
