#include "bounce/level_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include "bounce/errors.hpp"
#include "bounce/market_data.hpp"

namespace bounce {

double stripe_width(const ResampledSeries& series) {
  const std::size_t m = series.size();
  if (m < 2) {
    throw Error(Errc::too_short, "stripe_width needs at least 2 samples");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    acc += std::abs(series.prices[k + 1] - series.prices[k]);
  }
  return acc / static_cast<double>(m - 1);
}

std::vector<Extremum> detect_extrema(const ResampledSeries& series) {
  const std::size_t m = series.size();
  if (m < 3) {
    throw Error(Errc::too_short, "detect_extrema needs at least 3 samples");
  }
  const auto& p = series.prices;
  std::vector<Extremum> out;
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && p[j + 1] == p[i]) ++j;  // maximal plateau [i, j]
    if (i > 0 && j + 1 < m) {
      const double left = p[i - 1];
      const double right = p[j + 1];
      if (left < p[i] && right < p[i]) {
        out.push_back({i, p[i], LevelKind::Resistance});
      } else if (left > p[i] && right > p[i]) {
        out.push_back({i, p[i], LevelKind::Support});
      }
    }
    i = j + 1;
  }
  return out;
}

namespace {

enum class TrackState { Waiting, Outside, InTrial };

struct TrackedLevel {
  Level level;
  TrackState state = TrackState::Waiting;
  std::size_t enter_index = 0;
  std::uint32_t b_at_open = 0;
  int entry_side = 0;  // +1 above, -1 below
};

}  // namespace

std::vector<TrialRecord> classify_events(const ResampledSeries& series, double delta,
                                         std::vector<Level>* levels_out) {
  const std::size_t m = series.size();
  if (m < 3) {
    throw Error(Errc::too_short, "classify_events needs at least 3 samples");
  }
  if (delta < 0.0 || !std::isfinite(delta)) {
    throw Error(Errc::bad_config, "stripe width must be finite and >= 0");
  }

  const double half = delta / 2.0;
  const auto& prices = series.prices;
  const std::vector<Extremum> extrema = detect_extrema(series);

  std::vector<TrackedLevel> pool;
  pool.reserve(extrema.size());
  std::multimap<double, std::size_t> active;  // level value -> pool index
  std::vector<TrialRecord> trials;

  const auto inside = [half](double price, double value) {
    return price >= value - half && price <= value + half;
  };

  auto emit = [&](const TrackedLevel& lvl, std::uint32_t b_prev, TrialOutcome outcome,
                  std::size_t enter, std::size_t exit) {
    TrialRecord rec;
    rec.level_value = lvl.level.value;
    rec.kind = lvl.level.kind;
    rec.b_prev = b_prev;
    rec.outcome = outcome;
    rec.enter_index = enter;
    rec.exit_index = exit;
    rec.level_id = lvl.level.created_at;
    rec.symbol = series.source_symbol;
    rec.day_id = series.source_day;
    rec.scale = series.scale;
    trials.push_back(std::move(rec));
  };

  std::size_t next_extremum = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = prices[i];
    if (i > 0 && !active.empty()) {
      const double prev = prices[i - 1];
      const double lo = std::min(p, prev);
      const double hi = std::max(p, prev);
      // conservative key window; exact predicates decide per level
      const double margin =
          (std::abs(lo) + std::abs(hi) + half + 1.0) * 1e-12 + half;
      auto it = active.lower_bound(lo - margin);
      while (it != active.end() && it->first <= hi + margin) {
        TrackedLevel& lvl = pool[it->second];
        const double v = lvl.level.value;
        const bool inside_now = inside(p, v);
        bool broke = false;

        if (lvl.state == TrackState::InTrial) {
          if (!inside_now) {
            const int side = (p > v) ? 1 : -1;
            const bool bounced = side == lvl.entry_side;
            emit(lvl, lvl.b_at_open,
                 bounced ? TrialOutcome::Bounce : TrialOutcome::Cross,
                 lvl.enter_index, i);
            if (bounced) {
              lvl.level.bounces += 1;
              lvl.state = TrackState::Outside;
            } else {
              broke = true;
            }
          }
        } else if (inside_now) {
          const bool prev_outside = !inside(prev, v);
          if (lvl.state == TrackState::Outside || prev_outside) {
            lvl.state = TrackState::InTrial;
            lvl.enter_index = i;
            lvl.b_at_open = lvl.level.bounces;
            lvl.entry_side = (prev > v) ? 1 : -1;
          }
          // Waiting with prev inside: the price has never left the stripe
        } else if (!inside(prev, v) && ((prev > v) != (p > v))) {
          // jumped clear across the stripe: an instant cross
          emit(lvl, lvl.level.bounces, TrialOutcome::Cross, i, i);
          broke = true;
        }

        if (broke) {
          lvl.level.state = LevelState::Broken;
          it = active.erase(it);
        } else {
          ++it;
        }
      }
    }

    while (next_extremum < extrema.size() && extrema[next_extremum].index == i) {
      const Extremum& ex = extrema[next_extremum];
      TrackedLevel lvl;
      lvl.level.value = ex.value;
      lvl.level.kind = ex.kind;
      lvl.level.half_width = half;
      lvl.level.created_at = ex.index;
      pool.push_back(lvl);
      active.emplace(ex.value, pool.size() - 1);
      ++next_extremum;
    }
  }

  if (levels_out) {
    levels_out->clear();
    levels_out->reserve(pool.size());
    for (const auto& t : pool) levels_out->push_back(t.level);
  }

  std::stable_sort(trials.begin(), trials.end(),
                   [](const TrialRecord& a, const TrialRecord& b) {
                     return std::tie(a.enter_index, a.exit_index, a.level_value) <
                            std::tie(b.enter_index, b.exit_index, b.level_value);
                   });
  return trials;
}

std::vector<TrialRecord> run_day(const TickSeries& ticks, std::int64_t scale,
                                 ResampleMode mode, const RunDayOptions& opts) {
  ResampledSeries series = resample(ticks, scale, mode);
  if (opts.shuffle) {
    series = shuffle_returns(series, opts.shuffle_seed);
  }
  const double delta = stripe_width(series) * opts.stripe_multiplier;
  return classify_events(series, delta);
}

namespace {

void append_double(std::string& out, double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, r.ptr);
}

}  // namespace

const char* to_string(LevelKind kind) {
  return kind == LevelKind::Support ? "support" : "resistance";
}

const char* to_string(TrialOutcome outcome) {
  return outcome == TrialOutcome::Bounce ? "bounce" : "cross";
}

void write_trials_csv_header(std::ostream& out) {
  out << "symbol,day,scale,kind,level_value,b_prev,outcome,enter_index,exit_index\n";
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& trials) {
  std::string line;
  for (const auto& t : trials) {
    line.clear();
    line += t.symbol;
    line += ',';
    line += t.day_id;
    line += ',';
    line += std::to_string(t.scale);
    line += ',';
    line += to_string(t.kind);
    line += ',';
    append_double(line, t.level_value);
    line += ',';
    line += std::to_string(t.b_prev);
    line += ',';
    line += to_string(t.outcome);
    line += ',';
    line += std::to_string(t.enter_index);
    line += ',';
    line += std::to_string(t.exit_index);
    line += '\n';
    out << line;
  }
}

}  // namespace bounce
