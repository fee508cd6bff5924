#include "bounce/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bounce/errors.hpp"
#include "bounce/rng.hpp"

namespace bounce {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void split_stem(const std::string& stem, std::string& symbol, std::string& day) {
  auto pos = stem.rfind('_');
  if (pos == std::string::npos || pos == 0 || pos + 1 == stem.size()) {
    symbol = stem;
    day = "day0";
  } else {
    symbol = stem.substr(0, pos);
    day = stem.substr(pos + 1);
  }
}

}  // namespace

TickSeries load_ticks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::file_not_found, "cannot open tick file: " + path.string());
  }

  TickSeries out;
  split_stem(path.stem().string(), out.symbol, out.day_id);

  std::string line;
  std::size_t row_no = 0;  // 1-based index among data rows
  bool header_seen = false;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      // the first non-comment line must be the header
      std::string lowered = t;
      std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      lowered.erase(std::remove_if(lowered.begin(), lowered.end(),
                                   [](unsigned char c) { return std::isspace(c); }),
                    lowered.end());
      if (lowered != "timestamp,price") {
        throw Error(Errc::parse_error,
                    path.string() + ": expected header 'timestamp,price'", 0);
      }
      header_seen = true;
      continue;
    }
    ++row_no;

    auto comma = t.find(',');
    if (comma == std::string::npos) {
      throw Error(Errc::parse_error,
                  path.string() + ": missing comma at row " + std::to_string(row_no),
                  row_no);
    }
    const std::string ts_str = trim(t.substr(0, comma));
    const std::string px_str = trim(t.substr(comma + 1));

    double ts = 0.0;
    auto ts_res = std::from_chars(ts_str.data(), ts_str.data() + ts_str.size(), ts);
    if (ts_res.ec != std::errc{} || ts_res.ptr != ts_str.data() + ts_str.size() ||
        !std::isfinite(ts) || ts < 0.0) {
      throw Error(Errc::parse_error,
                  path.string() + ": bad timestamp at row " + std::to_string(row_no),
                  row_no);
    }
    std::int64_t px = 0;
    auto px_res = std::from_chars(px_str.data(), px_str.data() + px_str.size(), px);
    if (px_res.ec != std::errc{} || px_res.ptr != px_str.data() + px_str.size() ||
        px <= 0) {
      throw Error(Errc::parse_error,
                  path.string() + ": bad price at row " + std::to_string(row_no),
                  row_no);
    }
    if (!out.timestamps.empty() && ts < out.timestamps.back()) {
      throw Error(Errc::non_monotone_timestamps,
                  path.string() + ": timestamp decreases at row " +
                      std::to_string(row_no),
                  row_no);
    }
    out.timestamps.push_back(ts);
    out.prices.push_back(px);
  }

  if (out.size() < 2) {
    throw Error(Errc::too_short,
                path.string() + ": need at least 2 ticks, got " +
                    std::to_string(out.size()));
  }
  return out;
}

void write_ticks_csv(const TickSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::io_error, "cannot write tick file: " + path.string());
  }
  out << "timestamp,price\n";
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    auto r = std::to_chars(buf, buf + sizeof(buf), series.timestamps[i]);
    out.write(buf, r.ptr - buf);
    out.put(',');
    r = std::to_chars(buf, buf + sizeof(buf), series.prices[i]);
    out.write(buf, r.ptr - buf);
    out.put('\n');
  }
  if (!out) {
    throw Error(Errc::io_error, "write failed: " + path.string());
  }
}

ResampledSeries resample(const TickSeries& series, std::int64_t scale,
                         ResampleMode mode) {
  if (scale < 1) {
    throw Error(Errc::scale_too_large, "scale must be >= 1");
  }
  ResampledSeries out;
  out.scale = scale;
  out.mode = mode;
  out.source_symbol = series.symbol;
  out.source_day = series.day_id;

  if (mode == ResampleMode::EventTicks) {
    const std::size_t n = series.size() / static_cast<std::size_t>(scale);
    if (n < 2) {
      throw Error(Errc::scale_too_large,
                  "scale " + std::to_string(scale) + " leaves fewer than 2 samples");
    }
    out.prices.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) {
      out.prices.push_back(
          static_cast<double>(series.prices[k * static_cast<std::size_t>(scale) - 1]));
    }
  } else {
    const double duration = series.session_duration();
    const auto n = static_cast<std::size_t>(duration / static_cast<double>(scale));
    if (n < 2) {
      throw Error(Errc::scale_too_large,
                  "scale " + std::to_string(scale) + " leaves fewer than 2 samples");
    }
    out.prices.reserve(n);
    std::size_t j = 0;  // index of last trade at or before the sample time
    for (std::size_t k = 1; k <= n; ++k) {
      const double t = static_cast<double>(scale) * static_cast<double>(k);
      while (j + 1 < series.size() && series.timestamps[j + 1] <= t) ++j;
      // when no trade has happened by t, j is still 0: the first trade's price
      out.prices.push_back(static_cast<double>(series.prices[j]));
    }
  }
  return out;
}

ResampledSeries shuffle_returns(const ResampledSeries& series, std::uint64_t seed) {
  if (series.size() < 3) {
    throw Error(Errc::too_short, "shuffle_returns needs at least 3 samples");
  }
  std::vector<double> increments(series.size() - 1);
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    increments[i] = series.prices[i + 1] - series.prices[i];
  }

  Rng rng(seed);
  for (std::size_t i = increments.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.bounded(i + 1));
    std::swap(increments[i], increments[j]);
  }

  ResampledSeries out = series;
  double price = series.prices.front();
  for (std::size_t i = 0; i < increments.size(); ++i) {
    price += increments[i];
    out.prices[i + 1] = price;
  }
  return out;
}

ResampledSeries gen_surrogate(const SurrogateSpec& spec) {
  switch (spec.kind) {
    case SurrogateKind::FractionalWalk:
      return gen_fractional_walk(spec);
    case SurrogateKind::StickyLevel:
      return gen_sticky_level(spec);
    case SurrogateKind::ShuffledReturns: {
      // a walk with exchangeable increments: generate a plain Gaussian walk
      // and permute its increments
      SurrogateSpec base = spec;
      base.kind = SurrogateKind::FractionalWalk;
      base.hurst = 0.5;
      return shuffle_returns(gen_fractional_walk(base), splitmix64(spec.seed ^ 0x5u));
    }
  }
  throw Error(Errc::bad_config, "unknown surrogate kind");
}

TickSeries surrogate_tick_day(const SurrogateSpec& spec, const std::string& symbol,
                              const std::string& day_id, double trade_interval,
                              std::int64_t price_offset, double amplitude,
                              TickRule rule) {
  if (trade_interval <= 0.0 || amplitude <= 0.0) {
    throw Error(Errc::bad_config, "trade_interval and amplitude must be positive");
  }
  const ResampledSeries path = gen_surrogate(spec);
  TickSeries day;
  day.symbol = symbol;
  day.day_id = day_id;
  day.timestamps.reserve(path.size());
  day.prices.reserve(path.size());
  std::int64_t sign_walk = 0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    day.timestamps.push_back(static_cast<double>(i) * trade_interval);
    std::int64_t px;
    if (rule == TickRule::Sign) {
      if (i > 0) sign_walk += path.prices[i] >= path.prices[i - 1] ? 1 : -1;
      px = price_offset + sign_walk;
    } else {
      px = price_offset +
           static_cast<std::int64_t>(std::llround(amplitude * path.prices[i]));
    }
    day.prices.push_back(std::max<std::int64_t>(px, 1));
  }
  return day;
}

}  // namespace bounce
