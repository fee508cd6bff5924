#include "bounce/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "bounce/errors.hpp"
#include "bounce/rng.hpp"

namespace bounce {

using ordered_json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

int effective_threads(int requested) {
  int n = requested;
  if (n <= 0) {
#ifdef _OPENMP
    n = omp_get_max_threads();
#else
    n = 1;
#endif
  }
  if (const char* cap_str = std::getenv("BOUNCE_LAB_THREADS")) {
    int cap = 0;
    auto res = std::from_chars(cap_str, cap_str + std::string_view(cap_str).size(), cap);
    if (res.ec == std::errc{} && cap > 0) {
      n = std::min(n, cap);
    }
  }
  return std::max(n, 1);
}

TickSeries gen_surrogate_day(const RunConfig& cfg, std::size_t day_index) {
  if (!cfg.surrogate) {
    throw Error(Errc::bad_config, "no surrogate spec configured");
  }
  SurrogateSpec spec = *cfg.surrogate;
  spec.seed = derive_seed(cfg.seed, day_index + 1);
  char label[16];
  std::snprintf(label, sizeof(label), "d%03zu", day_index + 1);
  return surrogate_tick_day(spec, cfg.surrogate_symbol, label, cfg.trade_interval,
                            cfg.price_offset, cfg.surrogate_amplitude, cfg.tick_rule);
}

std::vector<TickSeries> gen_surrogate_days(const RunConfig& cfg) {
  std::vector<TickSeries> days;
  days.reserve(cfg.surrogate_days);
  for (std::size_t i = 0; i < cfg.surrogate_days; ++i) {
    days.push_back(gen_surrogate_day(cfg, i));
  }
  return days;
}

std::vector<TrialRecord> run_one_day(const TickSeries& day, const RunConfig& cfg) {
  std::vector<TrialRecord> all;
  for (const std::int64_t scale : cfg.scales) {
    RunDayOptions opts;
    opts.stripe_multiplier = cfg.stripe_multiplier;
    opts.shuffle = cfg.shuffle;
    opts.shuffle_seed = derive_seed(cfg.seed, fnv1a(day.symbol + "/" + day.day_id),
                                    static_cast<std::uint64_t>(scale));
    auto trials = run_day(day, scale, cfg.mode, opts);
    all.insert(all.end(), std::make_move_iterator(trials.begin()),
               std::make_move_iterator(trials.end()));
  }
  return all;
}

std::vector<std::vector<TrialRecord>> run_days_serial(std::span<const TickSeries> days,
                                                      const RunConfig& cfg) {
  std::vector<std::vector<TrialRecord>> out(days.size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    out[i] = run_one_day(days[i], cfg);
  }
  return out;
}

std::vector<std::vector<TrialRecord>> run_days(std::span<const TickSeries> days,
                                               const RunConfig& cfg) {
  std::vector<std::vector<TrialRecord>> out(days.size());
  std::exception_ptr error;
  const int n_threads = effective_threads(cfg.threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(days.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          run_one_day(days[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

namespace {

HurstEstimate hurst_one_day(const TickSeries& day, const RunConfig& cfg) {
  std::vector<double> increments(day.size() - 1);
  for (std::size_t i = 0; i + 1 < day.size(); ++i) {
    increments[i] = static_cast<double>(day.prices[i + 1] - day.prices[i]);
  }
  return dfa_hurst(increments, cfg.dfa);
}

}  // namespace

std::vector<HurstEstimate> hurst_days_serial(std::span<const TickSeries> days,
                                             const RunConfig& cfg) {
  std::vector<HurstEstimate> out(days.size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    out[i] = hurst_one_day(days[i], cfg);
  }
  return out;
}

std::vector<HurstEstimate> hurst_days(std::span<const TickSeries> days,
                                      const RunConfig& cfg) {
  std::vector<HurstEstimate> out(days.size());
  std::exception_ptr error;
  const int n_threads = effective_threads(cfg.threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(days.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          hurst_one_day(days[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<BounceFeature> features_one_day(const TickSeries& day, const RunConfig& cfg) {
  std::vector<BounceFeature> all;
  for (const std::int64_t scale : cfg.scales) {
    ResampledSeries series = resample(day, scale, cfg.mode);
    if (cfg.shuffle) {
      series = shuffle_returns(series,
                               derive_seed(cfg.seed, fnv1a(day.symbol + "/" + day.day_id),
                                           static_cast<std::uint64_t>(scale)));
    }
    const double delta = stripe_width(series) * cfg.stripe_multiplier;
    const auto trials = classify_events(series, delta);
    auto feats = extract_features(series, trials, FeatureOptions{cfg.pair_rule});
    all.insert(all.end(), std::make_move_iterator(feats.begin()),
               std::make_move_iterator(feats.end()));
  }
  return all;
}

std::vector<std::vector<BounceFeature>> features_days_serial(
    std::span<const TickSeries> days, const RunConfig& cfg) {
  std::vector<std::vector<BounceFeature>> out(days.size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    out[i] = features_one_day(days[i], cfg);
  }
  return out;
}

std::vector<std::vector<BounceFeature>> features_days(std::span<const TickSeries> days,
                                                      const RunConfig& cfg) {
  std::vector<std::vector<BounceFeature>> out(days.size());
  std::exception_ptr error;
  const int n_threads = effective_threads(cfg.threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(days.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          features_one_day(days[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

AnalyzeReport analyze_trials(std::span<const TrialRecord> trials, const RunConfig& cfg) {
  AnalyzeReport report;
  report.n_trials_total = trials.size();
  for (const std::int64_t scale : cfg.scales) {
    ScaleBlock block;
    block.scale = scale;
    for (int k = 0; k < 2; ++k) {
      const LevelKind kind = k == 0 ? LevelKind::Support : LevelKind::Resistance;
      std::vector<std::uint64_t> n_bounce(cfg.max_b, 0), n_total(cfg.max_b, 0);
      AggregateDiagnostics diag;
      for (const auto& t : trials) {
        if (t.scale != scale || t.kind != kind) continue;
        if (t.b_prev == 0) {
          ++diag.excluded_b0;
        } else if (t.b_prev > cfg.max_b) {
          ++diag.excluded_high;
        } else {
          ++diag.pooled;
          ++n_total[t.b_prev - 1];
          if (t.outcome == TrialOutcome::Bounce) ++n_bounce[t.b_prev - 1];
        }
      }
      KindTable table;
      table.kind = kind;
      table.diag = diag;
      for (std::uint32_t b = 1; b <= cfg.max_b; ++b) {
        BounceStats s = bayes_estimate(n_bounce[b - 1], n_total[b - 1]);
        s.b_prev = b;
        table.classes.push_back(s);
      }
      table.chi2 = chi2_independence(table.classes, Chi2Options{cfg.alpha, cfg.dof, true});
      block.kinds[static_cast<std::size_t>(k)] = std::move(table);
    }
    report.scales.push_back(std::move(block));
  }
  return report;
}

namespace {

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j;
  j["scales"] = cfg.scales;
  j["mode"] = cfg.mode == ResampleMode::PhysicalSeconds ? "seconds" : "ticks";
  j["max_b"] = cfg.max_b;
  j["alpha"] = cfg.alpha;
  j["dof"] = cfg.dof;
  j["stripe_multiplier"] = cfg.stripe_multiplier;
  j["shuffle"] = cfg.shuffle;
  j["seed"] = cfg.seed;
  return j;
}

ordered_json chi2_json(const ChiSquareResult& r) {
  ordered_json j;
  j["statistic"] = r.statistic;
  j["statistic_per_term"] = r.statistic_per_term;
  j["dof"] = r.dof;
  j["p_value"] = r.p_value;
  j["c_hat"] = r.c_hat;
  j["alpha"] = r.alpha;
  j["decision"] = r.decision == Chi2Decision::IndependenceAccepted
                      ? "independence_accepted"
                      : "independence_rejected";
  return j;
}

ordered_json histogram_json(const Histogram& h) {
  ordered_json j;
  j["binning"] = h.binning == Histogram::Binning::Logarithmic ? "logarithmic" : "linear";
  j["edges"] = h.bin_edges;
  j["counts"] = h.counts;
  j["density"] = h.density;
  return j;
}

ordered_json powerlaw_json(const PowerLawFit& f) {
  ordered_json j;
  j["exponent"] = f.exponent;
  j["amplitude"] = f.amplitude;
  j["fit_min"] = f.fit_min;
  j["fit_max"] = f.fit_max;
  j["r_squared"] = f.r_squared;
  return j;
}

void append_double(std::string& out, double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, r.ptr);
}

}  // namespace

std::string analyze_report_json(const AnalyzeReport& report, const RunConfig& cfg) {
  ordered_json j;
  j["config"] = config_json(cfg);
  j["n_trials_total"] = report.n_trials_total;
  j["scales"] = ordered_json::array();
  for (const auto& block : report.scales) {
    ordered_json bj;
    bj["scale"] = block.scale;
    bj["kinds"] = ordered_json::array();
    for (const auto& table : block.kinds) {
      ordered_json kj;
      kj["kind"] = to_string(table.kind);
      kj["classes"] = ordered_json::array();
      for (const auto& c : table.classes) {
        ordered_json cj;
        cj["b_prev"] = c.b_prev;
        cj["n"] = c.n;
        cj["N"] = c.N;
        cj["mean"] = c.mean;
        cj["variance"] = c.variance;
        kj["classes"].push_back(std::move(cj));
      }
      kj["chi2"] = chi2_json(table.chi2);
      kj["excluded"] = {{"b_prev0", table.diag.excluded_b0},
                        {"above_max_b", table.diag.excluded_high}};
      bj["kinds"].push_back(std::move(kj));
    }
    j["scales"].push_back(std::move(bj));
  }
  return j.dump(2) + "\n";
}

std::string analyze_stats_csv(const AnalyzeReport& report) {
  std::string out = "scale,kind,b_prev,n,N,mean,yerr\n";
  for (const auto& block : report.scales) {
    for (const auto& table : block.kinds) {
      for (const auto& c : table.classes) {
        out += std::to_string(block.scale);
        out += ',';
        out += to_string(table.kind);
        out += ',';
        out += std::to_string(c.b_prev);
        out += ',';
        out += std::to_string(c.n);
        out += ',';
        out += std::to_string(c.N);
        out += ',';
        append_double(out, c.mean);
        out += ',';
        append_double(out, std::sqrt(c.variance));
        out += '\n';
      }
    }
  }
  return out;
}

HurstReport build_hurst_report(std::span<const TickSeries> days,
                               std::span<const HurstEstimate> estimates,
                               std::size_t hist_bins) {
  HurstReport report;
  for (std::size_t i = 0; i < days.size(); ++i) {
    report.day_labels.push_back(days[i].symbol + "_" + days[i].day_id);
    report.estimates.push_back(estimates[i].hurst);
  }
  const auto n = static_cast<double>(report.estimates.size());
  double mean = 0.0;
  for (double h : report.estimates) mean += h;
  mean /= n;
  double var = 0.0;
  for (double h : report.estimates) var += (h - mean) * (h - mean);
  report.mean = mean;
  report.stderr_mean = n > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  if (report.estimates.size() >= 2) {
    report.histogram = build_histogram(report.estimates, Histogram::Binning::Linear,
                                       hist_bins);
  }
  return report;
}

std::string hurst_report_json(const HurstReport& report, const RunConfig& cfg) {
  ordered_json j;
  j["config"] = config_json(cfg);
  j["n_days"] = report.estimates.size();
  j["mean_hurst"] = report.mean;
  j["stderr"] = report.stderr_mean;
  j["per_day"] = ordered_json::array();
  for (std::size_t i = 0; i < report.estimates.size(); ++i) {
    j["per_day"].push_back({{"day", report.day_labels[i]},
                            {"hurst", report.estimates[i]}});
  }
  if (!report.histogram.counts.empty()) {
    j["histogram"] = histogram_json(report.histogram);
  }
  return j.dump(2) + "\n";
}

std::string hurst_csv(const HurstReport& report) {
  std::string out = "day,hurst\n";
  for (std::size_t i = 0; i < report.estimates.size(); ++i) {
    out += report.day_labels[i];
    out += ',';
    append_double(out, report.estimates[i]);
    out += '\n';
  }
  return out;
}

FeatureReport build_feature_report(std::int64_t scale,
                                   std::vector<BounceFeature> features,
                                   std::size_t n_bins) {
  FeatureReport report;
  report.scale = scale;
  report.features = std::move(features);
  if (report.features.empty()) return report;

  std::vector<double> tau, delta;
  tau.reserve(report.features.size());
  delta.reserve(report.features.size());
  for (const auto& f : report.features) {
    tau.push_back(static_cast<double>(f.recurrence_time));
    if (f.max_excursion > 0.0) delta.push_back(f.max_excursion);
  }
  report.tau_hist = build_histogram(tau, Histogram::Binning::Logarithmic, n_bins);
  try {
    report.tau_fit = powerlaw_fit(report.tau_hist);
  } catch (const Error&) {
    report.tau_fit.exponent = std::nan("");
  }
  if (!delta.empty()) {
    report.delta_hist = build_histogram(delta, Histogram::Binning::Logarithmic, n_bins);
    try {
      report.delta_fit = powerlaw_fit(report.delta_hist);
    } catch (const Error&) {
      report.delta_fit.exponent = std::nan("");
    }
  }
  return report;
}

std::string feature_report_json(std::span<const FeatureReport> reports,
                                const RunConfig& cfg) {
  ordered_json j;
  j["config"] = config_json(cfg);
  j["scales"] = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json rj;
    rj["scale"] = r.scale;
    rj["n_features"] = r.features.size();
    if (!r.tau_hist.counts.empty()) {
      rj["recurrence_time"] = histogram_json(r.tau_hist);
      if (std::isfinite(r.tau_fit.exponent)) {
        rj["recurrence_time"]["fit"] = powerlaw_json(r.tau_fit);
      }
    }
    if (!r.delta_hist.counts.empty()) {
      rj["max_excursion"] = histogram_json(r.delta_hist);
      if (std::isfinite(r.delta_fit.exponent)) {
        rj["max_excursion"]["fit"] = powerlaw_json(r.delta_fit);
      }
    }
    j["scales"].push_back(std::move(rj));
  }
  return j.dump(2) + "\n";
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::file_not_found, "cannot open config: " + path.string());
  }
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::bad_config,
                  path.string() + ":" + std::to_string(line_no) +
                      ": expected key = value",
                  line_no);
    }
    apply_config_line(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw Error(Errc::bad_config, "bad value for " + key + ": '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(Errc::bad_config, "bad boolean for " + key + ": '" + value + "'");
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto ensure_surrogate = [&]() -> SurrogateSpec& {
    if (!cfg.surrogate) cfg.surrogate.emplace();
    return *cfg.surrogate;
  };

  if (key == "input") {
    cfg.input = value;
  } else if (key == "out" || key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "scales") {
    cfg.scales.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto s = parse_number<std::int64_t>(key, trim(item));
      if (s < 1) throw Error(Errc::bad_config, "scales must be positive");
      cfg.scales.push_back(s);
    }
    if (cfg.scales.empty()) throw Error(Errc::bad_config, "scales must be non-empty");
  } else if (key == "mode") {
    if (value == "seconds") {
      cfg.mode = ResampleMode::PhysicalSeconds;
    } else if (value == "ticks") {
      cfg.mode = ResampleMode::EventTicks;
    } else {
      throw Error(Errc::bad_config, "mode must be 'seconds' or 'ticks'");
    }
  } else if (key == "max_b") {
    cfg.max_b = parse_number<std::uint32_t>(key, value);
    if (cfg.max_b < 1) throw Error(Errc::bad_config, "max_b must be >= 1");
  } else if (key == "alpha") {
    cfg.alpha = parse_number<double>(key, value);
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
      throw Error(Errc::bad_config, "alpha must be in (0,1)");
    }
  } else if (key == "dof") {
    cfg.dof = parse_number<int>(key, value);
  } else if (key == "stripe_multiplier") {
    cfg.stripe_multiplier = parse_number<double>(key, value);
  } else if (key == "shuffle") {
    cfg.shuffle = parse_bool(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "threads") {
    cfg.threads = parse_number<int>(key, value);
  } else if (key == "pair_rule") {
    if (value == "consecutive") {
      cfg.pair_rule = PairRule::ConsecutiveTrials;
    } else if (value == "bounce-bounce") {
      cfg.pair_rule = PairRule::BounceBounceOnly;
    } else {
      throw Error(Errc::bad_config, "pair_rule must be 'consecutive' or 'bounce-bounce'");
    }
  } else if (key == "dfa_window_min") {
    cfg.dfa.window_min = parse_number<std::size_t>(key, value);
  } else if (key == "dfa_window_max") {
    cfg.dfa.window_max = parse_number<std::size_t>(key, value);
  } else if (key == "dfa_n_windows") {
    cfg.dfa.n_windows = parse_number<std::size_t>(key, value);
  } else if (key == "surrogate") {
    if (value == "none") {
      cfg.surrogate.reset();
    } else if (value == "sticky") {
      ensure_surrogate().kind = SurrogateKind::StickyLevel;
    } else if (value == "fractional") {
      ensure_surrogate().kind = SurrogateKind::FractionalWalk;
    } else if (value == "shuffled") {
      ensure_surrogate().kind = SurrogateKind::ShuffledReturns;
    } else {
      throw Error(Errc::bad_config, "surrogate must be none|sticky|fractional|shuffled");
    }
  } else if (key == "days") {
    cfg.surrogate_days = parse_number<std::size_t>(key, value);
  } else if (key == "length") {
    ensure_surrogate().length = parse_number<std::size_t>(key, value);
  } else if (key == "trade_interval") {
    cfg.trade_interval = parse_number<double>(key, value);
    if (!(cfg.trade_interval > 0.0)) {
      throw Error(Errc::bad_config, "trade_interval must be positive");
    }
  } else if (key == "hurst") {
    ensure_surrogate().hurst = parse_number<double>(key, value);
  } else if (key == "bounce_bias") {
    ensure_surrogate().sticky.bounce_bias = parse_number<double>(key, value);
  } else if (key == "level_spacing") {
    ensure_surrogate().sticky.level_spacing = parse_number<std::int64_t>(key, value);
  } else if (key == "price_offset") {
    cfg.price_offset = parse_number<std::int64_t>(key, value);
  } else if (key == "amplitude") {
    cfg.surrogate_amplitude = parse_number<double>(key, value);
    if (!(cfg.surrogate_amplitude > 0.0)) {
      throw Error(Errc::bad_config, "amplitude must be positive");
    }
  } else if (key == "tick_rule") {
    if (value == "round") {
      cfg.tick_rule = TickRule::Round;
    } else if (value == "sign") {
      cfg.tick_rule = TickRule::Sign;
    } else {
      throw Error(Errc::bad_config, "tick_rule must be 'round' or 'sign'");
    }
  } else if (key == "symbol") {
    cfg.surrogate_symbol = value;
  } else {
    throw Error(Errc::bad_config, "unknown config key: '" + key + "'");
  }
}

}  // namespace bounce
