#include <algorithm>
#include <random>

#include "hopcrack/error.h"
#include "hopcrack/sniffer.h"

namespace hopcrack::sniff {
namespace {

// Stage-one poll step; short enough that detection reacts within a few ms.
constexpr Micros kPollStep{10'000};

Micros latest_with_offset(Micros offset, Micros period, Micros not_after) {
  const auto k = (not_after - offset) / period;
  return offset + period * k;
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kInterval: return "interval";
    case Stage::kIncrement: return "increment";
    case Stage::kMap: return "map";
    case Stage::kFollowing: return "following";
  }
  return "?";
}

std::string format_estimate(const SnifferEstimate& e) {
  std::string out(to_string(e.stage));
  out += ',';
  out += e.interval ? std::to_string(e.interval->count()) : "-";
  out += ',';
  out += e.hop_increment ? std::to_string(*e.hop_increment) : "-";
  out += ',';
  out += e.channel_map ? e.channel_map->to_hex() : "-";
  out += ',';
  out += std::to_string(e.hops_consumed);
  return out;
}

Cracker::Cracker(sim::RadioPort& radio, SnifferConfig config)
    : radio_(radio), config_(config), silent_(afh::kNumDataChannels, false) {
  if (!afh::is_data_channel(config_.start_channel)) {
    throw Error(ErrorCode::kConfig, "start channel must be a data channel");
  }
  if (config_.n_repeats < 2) throw Error(ErrorCode::kConfig, "n_repeats must be at least 2");
  MissWindow(config_.window, config_.threshold);  // validates
}

void Cracker::note(TimelineKind kind) {
  if (estimate_.interval) {
    const auto elapsed = radio_.now() - started_;
    estimate_.hops_consumed = static_cast<std::uint64_t>(elapsed / *estimate_.interval);
  }
  timeline_.push_back({radio_.now(), kind, estimate_});
}

void Cracker::transition(Stage stage, TimelineKind kind) {
  estimate_.stage = stage;
  note(kind);
}

MapScanConfig Cracker::scan_config() const {
  return {config_.lead_margin, config_.hop_tolerance, config_.confirm_miss_tolerance,
          1, config_.target_access_address};
}

std::vector<Micros> Cracker::accept(const std::vector<sim::PacketObservation>& observations) {
  std::vector<Micros> times;
  for (const auto& obs : observations) {
    if (!config_.target_access_address) config_.target_access_address = obs.access_address;
    if (obs.access_address != *config_.target_access_address) continue;
    times.push_back(obs.role == sim::Role::kSlave ? obs.time - afh::kInterFrameSpace : obs.time);
  }
  return times;
}

bool Cracker::acquire(Micros stage_budget) {
  started_ = radio_.now();
  estimate_ = {};
  note(TimelineKind::kTransition);
  if (!run_interval_stage(radio_.now() + stage_budget)) return false;
  if (!run_increment_stage(radio_.now() + stage_budget)) return false;
  return run_map_stage(radio_.now() + stage_budget);
}

bool Cracker::run_interval_stage(Micros deadline) {
  // Fixed pseudo-random visiting order; a linear sweep can alias with the
  // victim's own linear hop progression and miss every channel.
  std::vector<int> order;
  for (int c = 0; c < afh::kNumDataChannels; ++c) {
    if (c != config_.start_channel) order.push_back(c);
  }
  std::shuffle(order.begin(), order.end(), std::mt19937(0x5eedu));
  order.insert(order.begin(), config_.start_channel);

  std::size_t position = 0;
  Micros dwell = config_.survey_dwell;
  Micros timeout = config_.silence_timeout;
  int silent_in_a_row = 0;
  radio_.tune(order[position]);
  Micros tuned_at = radio_.now();
  std::vector<Micros> times;
  const auto keep = static_cast<std::size_t>(config_.n_repeats * kPeriodHops + 1);

  auto move_on = [&] {
    position = (position + 1) % order.size();
    radio_.tune(order[position]);
    tuned_at = radio_.now();
    times.clear();
  };

  while (radio_.now() < deadline) {
    const int channel = order[position];
    const auto heard = accept(radio_.observe(kPollStep));
    times.insert(times.end(), heard.begin(), heard.end());

    if (times.empty()) {
      if (radio_.now() - tuned_at >= dwell) {
        if (++silent_in_a_row % afh::kNumDataChannels == 0) dwell *= 2;
        move_on();
      }
      continue;
    }
    silent_in_a_row = 0;

    Micros longest{0};
    for (std::size_t i = 1; i < times.size(); ++i) longest = std::max(longest, times[i] - times[i - 1]);
    if (radio_.now() - times.back() > std::max(timeout, 2 * longest)) {
      timeout *= 2;
      move_on();
      continue;
    }
    if (heard.empty() || times.size() < static_cast<std::size_t>(config_.n_repeats) + 1) continue;

    const auto series = make_delta_series(static_cast<afh::Channel>(channel), times);
    if (const auto period = detect_recent_period(series, config_.n_repeats)) {
      estimate_.period = *period;
      estimate_.interval = derive_connection_interval(*period);
      std::vector<Micros> last_period;
      for (Micros t : times) {
        if (t > times.back() - *period) last_period.push_back(t);
      }
      first_set_ = make_appearance_set(static_cast<afh::Channel>(channel), *period, last_period);
      transition(Stage::kIncrement);
      return true;
    }
    if (times.size() > keep) times.erase(times.begin(), times.end() - static_cast<std::ptrdiff_t>(keep));
  }
  return false;
}

int Cracker::next_probe_channel() {
  auto in_recent_sets = [&](int c) {
    const std::size_t n = sets_.size();
    for (std::size_t i = n >= 2 ? n - 2 : 0; i < n; ++i) {
      if (sets_[i].channel == c) return true;
    }
    return false;
  };
  for (int pass = 0; pass < 2; ++pass) {
    for (int step = 0; step < afh::kNumDataChannels; ++step) {
      const int c = (sets_.front().channel + 1 + probe_cursor_++) % afh::kNumDataChannels;
      if (in_recent_sets(c) || silent_[static_cast<std::size_t>(c)]) continue;
      return c;
    }
    // Every candidate was silent once; the map may have changed since.
    std::fill(silent_.begin(), silent_.end(), false);
  }
  throw Error(ErrorCode::kConfig, "no probe channel available");
}

std::optional<AppearanceSet> Cracker::collect_set(int channel, Micros deadline) {
  const Micros period = *estimate_.period;
  if (radio_.now() + period > deadline) return std::nullopt;
  radio_.tune(channel);
  const auto times = accept(radio_.observe(period));
  if (times.empty()) {
    silent_[static_cast<std::size_t>(channel)] = true;
    return AppearanceSet{static_cast<afh::Channel>(channel), period, {}};
  }
  silent_[static_cast<std::size_t>(channel)] = false;
  return make_appearance_set(static_cast<afh::Channel>(channel), period, times);
}

bool Cracker::run_increment_stage(Micros deadline) {
  sets_.clear();
  sets_.push_back(*first_set_);
  probe_cursor_ = 0;
  std::fill(silent_.begin(), silent_.end(), false);
  for (;;) {
    while (sets_.size() < 3) {
      const auto set = collect_set(next_probe_channel(), deadline);
      if (!set) return false;
      if (!set->offsets.empty()) sets_.push_back(*set);
    }
    const std::size_t n = sets_.size();
    try {
      increment_ = derive_hop_increment(sets_[n - 3], sets_[n - 2], sets_[n - 1], *estimate_.interval);
      estimate_.hop_increment = increment_->hop_increment;
      estimate_.true_channels.assign(increment_->true_channels.begin(), increment_->true_channels.end());
      transition(Stage::kMap);
      return true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAmbiguous) throw;
      // Slide to the next channel triple.
      sets_.erase(sets_.begin());
    }
  }
}

bool Cracker::run_map_stage(Micros deadline) {
  const Micros interval = *estimate_.interval;
  const Micros period = *estimate_.period;
  const MapScanConfig scan = scan_config();
  const Micros scan_cost = 2 * period + 2 * interval;

  for (;;) {
    std::vector<TrueChannels> anchors{increment_->true_channels};
    anchors.insert(anchors.end(), increment_->alternatives.begin(), increment_->alternatives.end());
    for (const auto& triple : anchors) {
      const Appearance& ref = triple[2];
      for (int attempt = 0; attempt < 2; ++attempt) {
        if (radio_.now() + scan_cost > deadline) return false;
        const HopClock start{latest_with_offset(ref.offset, period, radio_.now()),
                             afh::HopState{ref.channel, 0}};
        try {
          const MapScanResult result =
              derive_channel_map(start, *estimate_.hop_increment, interval, radio_, scan);
          estimate_.channel_map = result.map;
          estimate_.true_channels.assign(triple.begin(), triple.end());
          clock_ = result.clock;
          transition(Stage::kFollowing);
          return true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDesyncSuspected) throw;
        }
      }
    }
    // No phase reference survived; gather a fresh channel triple.
    note(TimelineKind::kReanchor);
    sets_.erase(sets_.begin());
    for (;;) {
      while (sets_.size() < 3) {
        const auto set = collect_set(next_probe_channel(), deadline);
        if (!set) return false;
        if (!set->offsets.empty()) sets_.push_back(*set);
      }
      const std::size_t n = sets_.size();
      try {
        increment_ = derive_hop_increment(sets_[n - 3], sets_[n - 2], sets_[n - 1], interval);
        estimate_.hop_increment = increment_->hop_increment;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kAmbiguous) throw;
        sets_.erase(sets_.begin());
      }
    }
  }
}

FollowSummary Cracker::follow(Micros until) {
  if (estimate_.stage != Stage::kFollowing) {
    throw Error(ErrorCode::kConfig, "follow requires a completed acquire()");
  }
  MissWindow miss(config_.window, config_.threshold);
  FollowSummary total;
  while (radio_.now() < until) {
    const FollowSummary part = sniff::follow(estimate_, clock_, radio_, miss, until, config_,
                                             [this](TimelineKind kind) { note(kind); });
    total.expected += part.expected;
    total.hits += part.hits;
    total.resyncs += part.resyncs;
    total.failed_rescans += part.failed_rescans;
    if (!part.lost_lock) break;
    total.lost_lock = true;
    estimate_.stage = Stage::kMap;
    note(TimelineKind::kReanchor);
    if (!run_map_stage(until + 10 * *estimate_.period)) break;
    miss.reset();
  }
  return total;
}

}  // namespace hopcrack::sniff
