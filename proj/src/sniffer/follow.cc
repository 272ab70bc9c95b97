#include <algorithm>

#include "hopcrack/error.h"
#include "hopcrack/sniffer.h"

namespace hopcrack::sniff {
namespace {

Micros detection_time(const sim::PacketObservation& obs) {
  return obs.role == sim::Role::kSlave ? obs.time - afh::kInterFrameSpace : obs.time;
}

bool heard_at(const std::vector<sim::PacketObservation>& observations, afh::Channel channel,
              Micros anchor, Micros tolerance, const std::optional<std::uint32_t>& aa) {
  return std::any_of(observations.begin(), observations.end(), [&](const auto& obs) {
    if (obs.channel != channel) return false;
    if (aa && obs.access_address != *aa) return false;
    const auto delta = detection_time(obs) - anchor;
    return delta <= tolerance && -delta <= tolerance;
  });
}

// Tunes `lead` ahead of the predicted anchor and listens for one full interval.
bool listen_for_event(sim::RadioPort& radio, afh::Channel channel, Micros anchor, Micros interval,
                      Micros lead, Micros tolerance, const std::optional<std::uint32_t>& aa) {
  radio.skip_to(anchor - lead);
  radio.tune(channel);
  return heard_at(radio.observe(interval), channel, anchor, tolerance, aa);
}

}  // namespace

HopClock HopClock::at_or_before(Micros t, int hop_increment, Micros interval) const {
  auto span = (t - anchor).count();
  const auto step = interval.count();
  auto hops = span / step;
  if (span < 0 && span % step != 0) --hops;
  HopClock out = *this;
  out.anchor = anchor + interval * hops;
  out.state.last_unmapped = afh::mod37(state.last_unmapped + hops * hop_increment);
  if (hops > 0) out.state.event_counter += static_cast<std::uint64_t>(hops);
  return out;
}

MapScanResult derive_channel_map(const HopClock& start, int hop_increment, Micros interval,
                                 sim::RadioPort& radio, const MapScanConfig& config) {
  if (!afh::is_valid_hop_increment(hop_increment)) {
    throw Error(ErrorCode::kOutOfRange, "hop increment " + std::to_string(hop_increment));
  }
  const Micros lead = config.lead_margin.value_or(interval / 2);
  const Micros tolerance = config.hit_tolerance.value_or(interval / 4);
  if (lead.count() < 0 || lead >= interval) {
    throw Error(ErrorCode::kConfig, "lead margin must lie in [0, c_int)");
  }

  MapScanResult result;
  HopClock clock = start.at_or_before(radio.now() + lead, hop_increment, interval);

  // Discovery: with the optimistic full map the prediction is the raw
  // unmapped channel, which carries the event iff that channel is used.
  afh::ChannelMap discovered;
  for (int round = 1;; ++round) {
    for (int i = 0; i < kPeriodHops; ++i) {
      const afh::Hop hop = afh::select_next_channel(clock.state, hop_increment, afh::ChannelMap::full());
      const Micros anchor = clock.anchor + interval;
      const bool hit =
          listen_for_event(radio, hop.channel, anchor, interval, lead, tolerance, config.access_address);
      if (hit) discovered.set(hop.channel, true);
      result.discovery_hits += hit ? 1 : 0;
      clock = {anchor, hop.next};
    }
    if (!discovered.valid()) {
      throw Error(ErrorCode::kDesyncSuspected,
                  "discovery pass found " + std::to_string(discovered.popcount()) + " used channels");
    }

    result.confirm_misses = 0;
    for (int i = 0; i < kPeriodHops; ++i) {
      const afh::Hop hop = afh::select_next_channel(clock.state, hop_increment, discovered);
      const Micros anchor = clock.anchor + interval;
      const bool hit =
          listen_for_event(radio, hop.channel, anchor, interval, lead, tolerance, config.access_address);
      result.confirm_misses += hit ? 0 : 1;
      clock = {anchor, hop.next};
    }
    if (result.confirm_misses <= config.confirm_miss_tolerance) break;
    if (round >= config.discovery_rounds) {
      throw Error(ErrorCode::kDesyncSuspected, "confirming pass missed " +
                                                   std::to_string(result.confirm_misses) + " of 37 events");
    }
  }
  result.map = discovered;
  result.clock = clock;
  return result;
}

MissWindow::MissWindow(int window_size, int threshold) : window_size_(window_size), threshold_(threshold) {
  if (window_size_ <= 0 || threshold_ <= 0 || threshold_ > window_size_) {
    throw Error(ErrorCode::kConfig, "miss window needs 0 < threshold <= window_size");
  }
}

bool MissWindow::record(bool missed) {
  ring_.push_back(missed);
  misses_ += missed ? 1 : 0;
  if (static_cast<int>(ring_.size()) > window_size_) {
    misses_ -= ring_.front() ? 1 : 0;
    ring_.pop_front();
  }
  return misses_ >= threshold_;
}

void MissWindow::reset() {
  ring_.clear();
  misses_ = 0;
}

FollowSummary follow(SnifferEstimate& estimate, HopClock& clock, sim::RadioPort& radio,
                     MissWindow& miss, Micros until, const SnifferConfig& config,
                     const std::function<void(TimelineKind)>& notify) {
  if (!estimate.interval || !estimate.hop_increment || !estimate.channel_map) {
    throw Error(ErrorCode::kConfig, "follow needs c_int, h_inc and c_map");
  }
  const Micros interval = *estimate.interval;
  const int hop_increment = *estimate.hop_increment;
  const Micros lead = config.lead_margin.value_or(interval / 2);
  const Micros tolerance = config.hop_tolerance.value_or(interval / 4);
  const MapScanConfig scan{lead, tolerance, config.rescan_miss_tolerance, config.rescan_rounds,
                           config.target_access_address};
  auto emit = [&](TimelineKind kind) {
    if (notify) notify(kind);
  };

  FollowSummary summary;
  int consecutive_failures = 0;
  while (clock.anchor + interval < until) {
    const afh::Hop hop = afh::select_next_channel(clock.state, hop_increment, *estimate.channel_map);
    const Micros anchor = clock.anchor + interval;
    const bool hit = listen_for_event(radio, hop.channel, anchor, interval, lead, tolerance,
                                      config.target_access_address);
    clock = {anchor, hop.next};
    ++summary.expected;
    summary.hits += hit ? 1 : 0;
    if (!miss.record(!hit)) continue;

    ++summary.resyncs;
    estimate.stage = Stage::kMap;
    emit(TimelineKind::kResync);
    for (;;) {
      try {
        const MapScanResult result = derive_channel_map(clock, hop_increment, interval, radio, scan);
        estimate.channel_map = result.map;
        clock = result.clock;
        consecutive_failures = 0;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDesyncSuspected) throw;
        clock = clock.at_or_before(radio.now(), hop_increment, interval);
        ++summary.failed_rescans;
        emit(TimelineKind::kResyncFailed);
        if (++consecutive_failures >= config.max_failed_rescans) {
          summary.lost_lock = true;
          return summary;
        }
      }
    }
    miss.reset();
    estimate.stage = Stage::kFollowing;
    emit(TimelineKind::kTransition);
  }
  return summary;
}

}  // namespace hopcrack::sniff
