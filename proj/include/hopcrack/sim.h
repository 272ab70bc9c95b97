#ifndef HOPCRACK_SIM_H
#define HOPCRACK_SIM_H

// Deterministic discrete-event model of one established BLE connection and a
// single-radio receiver that can listen on one data channel at a time.
//
// Time is an integer microsecond clock shared by victim and receiver (no
// drift). Connection event k is anchored at first_anchor + k * c_int. The map
// update schedule is keyed on absolute time: event k uses the map of epoch
// floor(anchor_k / period), so an update takes effect at the first event
// boundary at or after each multiple of the period.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hopcrack/afh.h"

namespace hopcrack::sim {

enum class Role : std::uint8_t { kMaster, kSlave };

struct ConnectionEventRecord {
  std::uint64_t index = 0;
  Micros anchor{0};
  afh::Channel channel = 0;
  int unmapped = 0;
  std::size_t map_epoch = 0;
  bool master_lost = false;
  bool slave_lost = false;
  // The master PDU of this event announces the map taking effect at the next event.
  bool carries_map_update = false;
  bool control_lost = false;
};

struct PacketObservation {
  Micros time{0};
  afh::Channel channel = 0;
  std::uint32_t access_address = 0;
  Role role = Role::kMaster;
  // Filled only by receivers configured to decode link-layer control PDUs.
  std::optional<afh::ChannelMap> announced_map;
  std::optional<Micros> announced_instant;
};

// Independent per-packet Bernoulli loss at the receiver, by channel.
class LossModel {
 public:
  LossModel() { probability_.fill(0.0); }
  static LossModel uniform(double p);

  LossModel& set(int channel, double p);
  double probability(int channel) const { return probability_.at(static_cast<std::size_t>(channel)); }

  // Loss probability for map-update control PDUs; unset means the control PDU
  // shares the fate of the master packet carrying it.
  LossModel& set_control_loss(double p);
  const std::optional<double>& control_loss() const { return control_loss_; }

  // Update indices (1-based epoch numbers) whose announcement is always lost.
  LossModel& force_control_miss(std::size_t epoch);
  bool control_forced_lost(std::size_t epoch) const;

 private:
  std::array<double, afh::kNumDataChannels> probability_{};
  std::optional<double> control_loss_;
  std::vector<std::size_t> forced_control_misses_;
};

class MapUpdateSchedule {
 public:
  // Produces the map of epoch `epoch` (>= 1) from the map of epoch - 1.
  using Generator = std::function<afh::ChannelMap(std::size_t epoch, const afh::ChannelMap& previous)>;

  static MapUpdateSchedule none();
  // Epoch i uses maps[i - 1]; once the list is exhausted the last map stays.
  static MapUpdateSchedule fixed(Micros period, std::vector<afh::ChannelMap> maps);
  // Each update restores every channel removed earlier and removes k fresh
  // used channels of `base` (k seeded in [1, max_removed]), never dropping
  // below min_used used channels.
  static MapUpdateSchedule churn(Micros period, afh::ChannelMap base, std::uint64_t seed,
                                 int max_removed = 5, int min_used = 10);

  MapUpdateSchedule(Micros period, Generator generator);

  Micros period() const { return period_; }
  bool active() const { return period_.count() > 0; }
  std::size_t epoch_at(Micros t) const;
  afh::ChannelMap next(std::size_t epoch, const afh::ChannelMap& previous) const;

 private:
  MapUpdateSchedule() = default;

  Micros period_{0};
  Generator generator_;
  std::vector<afh::ChannelMap> fixed_;
};

class VictimConnection {
 public:
  VictimConnection(const afh::ConnectionParams& params, MapUpdateSchedule schedule, LossModel loss,
                   std::uint64_t seed, Micros first_anchor = Micros{0});

  const afh::ConnectionParams& params() const { return params_; }
  const LossModel& loss() const { return loss_; }
  Micros first_anchor() const { return first_anchor_; }
  Micros anchor_of(std::uint64_t index) const { return first_anchor_ + params_.interval * index; }
  // Index of the first event anchored at or after t.
  std::uint64_t first_event_at_or_after(Micros t) const;

  const ConnectionEventRecord& event(std::uint64_t index);
  const afh::ChannelMap& map(std::size_t epoch);
  // Map used by the latest event anchored at or before t (the initial map
  // before the first event).
  const afh::ChannelMap& map_in_force(Micros t);

  const std::vector<ConnectionEventRecord>& log() const { return log_; }

 private:
  void materialize_through(std::uint64_t index);

  afh::ConnectionParams params_;
  MapUpdateSchedule schedule_;
  LossModel loss_;
  std::uint64_t seed_;
  Micros first_anchor_;
  afh::HopState hop_;
  std::vector<afh::ChannelMap> maps_;
  std::vector<ConnectionEventRecord> log_;
};

// The receiver interface the sniffer drives. Observation windows are
// half-open: [now, now + window).
class RadioPort {
 public:
  virtual ~RadioPort() = default;
  virtual Micros now() const = 0;
  virtual void tune(int channel) = 0;
  virtual std::vector<PacketObservation> observe(Micros window) = 0;
  // Moves the clock forward to t; anything heard meanwhile is dropped.
  virtual void skip_to(Micros t) = 0;
};

struct RadioConfig {
  Micros retune_latency{0};
  bool decode_control = false;
};

class Simulation final : public RadioPort {
 public:
  explicit Simulation(VictimConnection connection, RadioConfig radio = {});

  Micros now() const override { return now_; }
  // Events anchored in [now, until); the clock moves to `until`.
  std::vector<ConnectionEventRecord> advance(Micros until);
  // Rejects advertising channels. The new channel is heard from
  // now + retune_latency; nothing is heard while retuning.
  void tune(int channel) override;
  std::optional<afh::Channel> tuned() const { return tuned_; }
  std::vector<PacketObservation> observe(Micros window) override;
  void skip_to(Micros t) override;

  VictimConnection& connection() { return connection_; }
  const VictimConnection& connection() const { return connection_; }
  const std::vector<PacketObservation>& observation_log() const { return observations_; }

 private:
  VictimConnection connection_;
  RadioConfig radio_;
  Micros now_{0};
  std::optional<afh::Channel> tuned_;
  Micros tuned_from_{0};
  std::optional<std::uint64_t> last_reported_;
  std::vector<PacketObservation> observations_;
};

// `anchor_us,channel,master_lost,slave_lost`
void write_event_log(std::ostream& os, std::span<const ConnectionEventRecord> events);
// `time_us,channel,aa_hex,role`
void write_observation_log(std::ostream& os, std::span<const PacketObservation> observations);

}  // namespace hopcrack::sim

#endif  // HOPCRACK_SIM_H
