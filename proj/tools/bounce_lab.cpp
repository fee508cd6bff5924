#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bounce/errors.hpp"
#include "bounce/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bounce;

namespace {

/// Tracks files created by one command so a failure leaves no partial output.
class OutputTracker {
 public:
  void write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(Errc::io_error, "write failed: " + path.string());
    written_.push_back(path);
  }

  std::ofstream open(const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    written_.push_back(path);
    return out;
  }

  void discard_all() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

 private:
  std::vector<fs::path> written_;
};

std::vector<TickSeries> load_input_days(const RunConfig& cfg) {
  if (cfg.input.empty()) {
    if (!cfg.surrogate) {
      throw Error(Errc::bad_config, "no input: set input=<dir> or a surrogate spec");
    }
    return gen_surrogate_days(cfg);
  }
  if (!fs::exists(cfg.input)) {
    throw Error(Errc::file_not_found, "input not found: " + cfg.input.string());
  }
  std::vector<fs::path> files;
  if (fs::is_directory(cfg.input)) {
    for (const auto& entry : fs::directory_iterator(cfg.input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(cfg.input);
  }
  if (files.empty()) {
    throw Error(Errc::bad_config, "no input days in " + cfg.input.string());
  }
  std::vector<TickSeries> days;
  days.reserve(files.size());
  for (const auto& f : files) days.push_back(load_ticks(f));
  return days;
}

int cmd_analyze(const RunConfig& cfg) {
  OutputTracker out;
  try {
    const auto days = load_input_days(cfg);
    const auto per_day = run_days(days, cfg);

    auto trials_file = out.open(cfg.output_dir / "trials.csv");
    write_trials_csv_header(trials_file);
    std::vector<TrialRecord> pooled;
    for (const auto& day_trials : per_day) {
      write_trials_csv(trials_file, day_trials);
      pooled.insert(pooled.end(), day_trials.begin(), day_trials.end());
    }
    trials_file.close();

    const AnalyzeReport report = analyze_trials(pooled, cfg);
    out.write(cfg.output_dir / "report.json", analyze_report_json(report, cfg));
    out.write(cfg.output_dir / "bounce_stats.csv", analyze_stats_csv(report));

    for (const auto& block : report.scales) {
      for (const auto& table : block.kinds) {
        std::cout << "scale " << block.scale << "s " << to_string(table.kind)
                  << ": chi2=" << table.chi2.statistic
                  << " p=" << table.chi2.p_value << " ("
                  << (table.chi2.decision == Chi2Decision::IndependenceAccepted
                          ? "independence accepted"
                          : "independence rejected")
                  << ")\n";
      }
    }
    return 0;
  } catch (...) {
    out.discard_all();
    throw;
  }
}

int cmd_hurst(const RunConfig& cfg) {
  OutputTracker out;
  try {
    const auto days = load_input_days(cfg);
    const auto estimates = hurst_days(days, cfg);
    const HurstReport report = build_hurst_report(days, estimates);
    out.write(cfg.output_dir / "hurst.json", hurst_report_json(report, cfg));
    out.write(cfg.output_dir / "hurst.csv", hurst_csv(report));
    std::cout << "days: " << report.estimates.size() << "  mean H: " << report.mean
              << " +/- " << report.stderr_mean << "\n";
    return 0;
  } catch (...) {
    out.discard_all();
    throw;
  }
}

int cmd_features(const RunConfig& cfg) {
  OutputTracker out;
  try {
    const auto days = load_input_days(cfg);
    const auto per_day = features_days(days, cfg);

    std::vector<FeatureReport> reports;
    std::size_t total = 0;
    for (const std::int64_t scale : cfg.scales) {
      std::vector<BounceFeature> pooled;
      for (const auto& feats : per_day) {
        for (const auto& f : feats) {
          if (f.scale == scale) pooled.push_back(f);
        }
      }
      total += pooled.size();
      reports.push_back(build_feature_report(scale, std::move(pooled)));
    }

    auto csv = out.open(cfg.output_dir / "features.csv");
    write_features_csv_header(csv);
    for (const auto& r : reports) write_features_csv(csv, r.features);
    csv.close();
    out.write(cfg.output_dir / "features.json", feature_report_json(reports, cfg));

    if (total == 0) {
      std::cerr << "warning: no repeated trials, feature file is empty\n";
    }
    std::cout << "features: " << total << " across " << cfg.scales.size()
              << " scale(s)\n";
    return 0;
  } catch (...) {
    out.discard_all();
    throw;
  }
}

int cmd_surrogate(const RunConfig& cfg) {
  if (!cfg.surrogate) {
    throw Error(Errc::bad_config, "surrogate command needs a surrogate spec");
  }
  std::vector<fs::path> written;
  try {
    fs::create_directories(cfg.output_dir);
    for (std::size_t i = 0; i < cfg.surrogate_days; ++i) {
      const TickSeries day = gen_surrogate_day(cfg, i);
      const fs::path path = cfg.output_dir / (day.symbol + "_" + day.day_id + ".csv");
      write_ticks_csv(day, path);
      written.push_back(path);
    }
    std::cout << "wrote " << cfg.surrogate_days << " day(s) to "
              << cfg.output_dir.string() << "\n";
    return 0;
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounce-lab: support/resistance bounce statistics"};
  app.require_subcommand(1);

  std::string config_path, input, output, mode, scales_csv;
  std::uint64_t seed = 0;
  int threads = -1;
  bool have_seed = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (key = value lines)");
    sub->add_option("--input", input, "tick CSV directory or file");
    sub->add_option("--scales", scales_csv, "comma-separated scales, e.g. 45,60,90,180");
    sub->add_option("--mode", mode, "seconds|ticks");
    sub->add_option("--seed", seed, "root seed")->each([&](const std::string&) {
      have_seed = true;
    });
    sub->add_option("--out", output, "output directory");
    sub->add_option("--threads", threads, "worker cap (also BOUNCE_LAB_THREADS)");
  };

  auto* analyze = app.add_subcommand("analyze", "bounce probability tables + chi2 tests");
  auto* hurst = app.add_subcommand("hurst", "per-day DFA Hurst estimates");
  auto* features = app.add_subcommand("features", "recurrence times and excursions");
  auto* surrogate = app.add_subcommand("surrogate", "write surrogate tick days");
  for (auto* sub : {analyze, hurst, features, surrogate}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    if (!input.empty()) cfg.input = input;
    if (!output.empty()) cfg.output_dir = output;
    if (!scales_csv.empty()) apply_config_line(cfg, "scales", scales_csv);
    if (!mode.empty()) apply_config_line(cfg, "mode", mode);
    if (have_seed) cfg.seed = seed;
    if (threads >= 0) cfg.threads = threads;

    if (app.got_subcommand(analyze)) return cmd_analyze(cfg);
    if (app.got_subcommand(hurst)) return cmd_hurst(cfg);
    if (app.got_subcommand(features)) return cmd_features(cfg);
    if (app.got_subcommand(surrogate)) return cmd_surrogate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
