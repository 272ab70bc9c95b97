#ifndef HOPCRACK_SNIFFER_H
#define HOPCRACK_SNIFFER_H

// Single-radio recovery of the hopping parameters of an established
// connection: connection interval from on-channel periodicity, hop increment
// from three appearance sets, channel map from a predicted 37-hop scan, then
// lockstep following with miss-window desync detection.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hopcrack/afh.h"
#include "hopcrack/sim.h"

namespace hopcrack::sniff {

inline constexpr int kPeriodHops = afh::kNumDataChannels;

enum class Stage : std::uint8_t { kInterval, kIncrement, kMap, kFollowing };
std::string_view to_string(Stage stage);

// ---- connection interval ---------------------------------------------------

struct DeltaSeries {
  afh::Channel channel = 0;
  std::vector<Micros> deltas;
};

DeltaSeries make_delta_series(afh::Channel channel, std::span<const Micros> arrival_times);

// Smallest T such that some run of n_repeats consecutive copies of a delta
// pattern sums to T per copy, with T/37 a legal connection interval. Throws
// Error(kNoPeriodFound).
Micros detect_period(const DeltaSeries& series, int n_repeats = 3);
// Streaming form: only runs ending at the newest delta are considered.
std::optional<Micros> detect_recent_period(const DeltaSeries& series, int n_repeats = 3);

// T / 37; throws Error(kRangeError) if that is not a legal connection interval.
Micros derive_connection_interval(Micros period);

// Nearest whole number of connection events between t1 and t2. Throws
// Error(kNotOnGrid) when the residual exceeds `tolerance` (default c_int/4).
std::int64_t hops_between(Micros t1, Micros t2, Micros interval,
                          std::optional<Micros> tolerance = std::nullopt);

// ---- hop increment ---------------------------------------------------------

struct Appearance {
  afh::Channel channel = 0;
  Micros offset{0};

  friend bool operator==(const Appearance&, const Appearance&) = default;
};

// Appearances of one channel folded into a single period. Offsets are taken
// modulo `period` from the shared simulation epoch, so sets gathered in
// different periods can be combined directly.
struct AppearanceSet {
  afh::Channel channel = 0;
  Micros period{0};
  std::vector<Micros> offsets;
};

AppearanceSet make_appearance_set(afh::Channel channel, Micros period,
                                  std::span<const Micros> arrival_times);

struct IncrementCandidate {
  int hop_increment = 0;
  Appearance from;
  Appearance to;
};

// For every offset pair, h = hops from a to b (mod 37) and the candidate
// (b.channel - a.channel) * h^-1 mod 37, kept when it lies in [5, 16].
std::vector<IncrementCandidate> candidate_increments(const AppearanceSet& a, const AppearanceSet& b,
                                                     Micros interval);

using TrueChannels = std::array<Appearance, 3>;

struct IncrementResult {
  int hop_increment = 0;
  TrueChannels true_channels;
  // Other offset triples that agreed on the winning increment.
  std::vector<TrueChannels> alternatives;
};

// Intersects the candidates of (P, Q) and (Q, R); the winner must hold a
// strict majority of the surviving triples. Throws Error(kAmbiguous).
IncrementResult derive_hop_increment(const AppearanceSet& p, const AppearanceSet& q,
                                     const AppearanceSet& r, Micros interval);

// ---- channel map and following --------------------------------------------

// Phase reference: the event anchored at `anchor` had unmapped channel
// state.last_unmapped. Valid for the whole connection because c_int and h_inc
// never change.
struct HopClock {
  Micros anchor{0};
  afh::HopState state;

  // Latest event anchored at or before t.
  HopClock at_or_before(Micros t, int hop_increment, Micros interval) const;
};

struct MapScanConfig {
  std::optional<Micros> lead_margin;    // default c_int / 2
  std::optional<Micros> hit_tolerance;  // default c_int / 4
  int confirm_miss_tolerance = 2;
  // Discovery passes allowed when the confirming pass misses too often; hits
  // accumulate across passes.
  int discovery_rounds = 1;
  std::optional<std::uint32_t> access_address;
};

struct MapScanResult {
  afh::ChannelMap map;
  HopClock clock;  // last event of the confirming pass
  int discovery_hits = 0;
  int confirm_misses = 0;
};

// 37-hop passes from the phase reference. The discovery pass listens on each
// raw unmapped channel and marks it used iff the target is heard; the
// confirming pass follows the discovered map through remapping. A confirming
// pass that misses more than confirm_miss_tolerance events triggers another
// discovery pass, up to discovery_rounds. Throws
// Error(kDesyncSuspected) if fewer than two channels are found or the last
// confirming pass still misses too often.
MapScanResult derive_channel_map(const HopClock& start, int hop_increment, Micros interval,
                                 sim::RadioPort& radio, const MapScanConfig& config = {});

class MissWindow {
 public:
  MissWindow(int window_size = 10, int threshold = 5);

  // Records one expected event; true when the miss count reaches the threshold.
  bool record(bool missed);
  void reset();
  int misses() const { return misses_; }
  int window_size() const { return window_size_; }
  int threshold() const { return threshold_; }

 private:
  int window_size_;
  int threshold_;
  std::deque<bool> ring_;
  int misses_ = 0;
};

struct SnifferEstimate {
  Stage stage = Stage::kInterval;
  std::optional<Micros> interval;
  std::optional<Micros> period;
  std::optional<int> hop_increment;
  std::optional<afh::ChannelMap> channel_map;
  std::vector<Appearance> true_channels;
  std::uint64_t hops_consumed = 0;
};

// `stage,c_int_us,h_inc,map_hex,hops_consumed`; unknown fields print as `-`.
std::string format_estimate(const SnifferEstimate& estimate);

enum class TimelineKind : std::uint8_t { kTransition, kResync, kResyncFailed, kReanchor };

struct TimelineEntry {
  Micros time{0};
  TimelineKind kind = TimelineKind::kTransition;
  SnifferEstimate estimate;
};

struct SnifferConfig {
  int n_repeats = 3;
  int window = 10;
  int threshold = 5;
  std::optional<Micros> lead_margin;
  std::optional<Micros> hop_tolerance;
  int confirm_miss_tolerance = 2;
  // Rescans in follow mode start from a known-good phase, so only loss can
  // spoil them.
  int rescan_miss_tolerance = 5;
  int rescan_rounds = 3;
  int start_channel = 0;
  // Initial dwell per channel while searching for any traffic; doubles after
  // every silent sweep of all 37 channels.
  Micros survey_dwell{2000000};
  // Minimum silence tolerated on a channel that has carried traffic before it
  // is abandoned; doubles whenever it expires.
  Micros silence_timeout{8'000'000};
  // Consecutive failed map rescans in follow mode before the phase reference
  // is re-established from fresh appearance sets.
  int max_failed_rescans = 3;
  std::optional<std::uint32_t> target_access_address;
};

struct FollowSummary {
  std::uint64_t expected = 0;
  std::uint64_t hits = 0;
  int resyncs = 0;
  int failed_rescans = 0;
  bool lost_lock = false;
};

// Hops in lockstep with the predicted sequence until the next event would be
// anchored at or after `until`. A tripped miss window re-enters the map stage
// (c_int and h_inc are kept) and rescans from the current phase. Gives up with
// lost_lock after config.max_failed_rescans consecutive failed rescans.
FollowSummary follow(SnifferEstimate& estimate, HopClock& clock, sim::RadioPort& radio,
                     MissWindow& miss, Micros until, const SnifferConfig& config,
                     const std::function<void(TimelineKind)>& notify = {});

// The attack pipeline. Talks to the air only through the RadioPort.
class Cracker {
 public:
  explicit Cracker(sim::RadioPort& radio, SnifferConfig config = {});

  // Runs Interval -> Increment -> Map. Each stage gets `stage_budget` of air
  // time; returns false if one of them does not converge in time.
  bool acquire(Micros stage_budget);

  // Lockstep following until `until`, re-running the map scan whenever the
  // miss window trips. Requires a successful acquire().
  FollowSummary follow(Micros until);

  const SnifferEstimate& estimate() const { return estimate_; }
  const HopClock& clock() const { return clock_; }
  const std::vector<TimelineEntry>& timeline() const { return timeline_; }
  Micros started_at() const { return started_; }

 private:
  bool run_interval_stage(Micros deadline);
  bool run_increment_stage(Micros deadline);
  bool run_map_stage(Micros deadline);
  std::optional<AppearanceSet> collect_set(int channel, Micros deadline);
  int next_probe_channel();
  std::vector<Micros> accept(const std::vector<sim::PacketObservation>& observations);
  MapScanConfig scan_config() const;
  void transition(Stage stage, TimelineKind kind = TimelineKind::kTransition);
  void note(TimelineKind kind);

  sim::RadioPort& radio_;
  SnifferConfig config_;
  SnifferEstimate estimate_;
  HopClock clock_;
  Micros started_ = Micros{0};
  std::vector<TimelineEntry> timeline_;

  // Interval stage output reused as the first appearance set.
  std::optional<AppearanceSet> first_set_;
  std::vector<AppearanceSet> sets_;
  std::vector<bool> silent_;
  int probe_cursor_ = 0;
  std::optional<IncrementResult> increment_;
};

}  // namespace hopcrack::sniff

#endif  // HOPCRACK_SNIFFER_H
