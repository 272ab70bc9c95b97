#include <cstdio>
#include <ostream>
#include <random>

#include "hopcrack/error.h"
#include "hopcrack/sim.h"

namespace hopcrack::sim {
namespace {

// Loss draws are keyed on (seed, event index) so that any two simulations
// built from the same inputs see the same draws regardless of query order.
std::mt19937_64 event_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

VictimConnection::VictimConnection(const afh::ConnectionParams& params, MapUpdateSchedule schedule,
                                   LossModel loss, std::uint64_t seed, Micros first_anchor)
    : params_(params),
      schedule_(std::move(schedule)),
      loss_(std::move(loss)),
      seed_(seed),
      first_anchor_(first_anchor),
      hop_{params.last_unmapped, 0} {
  afh::require_valid(params_);
  if (first_anchor_.count() < 0) throw Error(ErrorCode::kConfig, "negative first anchor");
  maps_.push_back(params_.channel_map);
}

std::uint64_t VictimConnection::first_event_at_or_after(Micros t) const {
  if (t <= first_anchor_) return 0;
  const auto span = (t - first_anchor_).count();
  const auto step = params_.interval.count();
  return static_cast<std::uint64_t>((span + step - 1) / step);
}

const afh::ChannelMap& VictimConnection::map(std::size_t epoch) {
  while (maps_.size() <= epoch) {
    maps_.push_back(schedule_.next(maps_.size(), maps_.back()));
  }
  return maps_[epoch];
}

const afh::ChannelMap& VictimConnection::map_in_force(Micros t) {
  if (t < first_anchor_) return maps_.front();
  const auto index = static_cast<std::uint64_t>((t - first_anchor_) / params_.interval);
  return map(event(index).map_epoch);
}

const ConnectionEventRecord& VictimConnection::event(std::uint64_t index) {
  materialize_through(index);
  return log_[index];
}

void VictimConnection::materialize_through(std::uint64_t index) {
  while (log_.size() <= index) {
    const std::uint64_t k = log_.size();
    ConnectionEventRecord rec;
    rec.index = k;
    rec.anchor = anchor_of(k);
    rec.map_epoch = schedule_.epoch_at(rec.anchor);
    const afh::Hop hop = afh::select_next_channel(hop_, params_.hop_increment, map(rec.map_epoch));
    rec.channel = hop.channel;
    rec.unmapped = hop.next.last_unmapped;
    hop_ = hop.next;

    auto rng = event_rng(seed_, k);
    const double p = loss_.probability(rec.channel);
    rec.master_lost = std::bernoulli_distribution(p)(rng);
    rec.slave_lost = std::bernoulli_distribution(p)(rng);
    const bool control_draw = std::bernoulli_distribution(loss_.control_loss().value_or(0.0))(rng);

    const std::size_t next_epoch = schedule_.epoch_at(anchor_of(k + 1));
    rec.carries_map_update = next_epoch != rec.map_epoch;
    if (rec.carries_map_update) {
      rec.control_lost = loss_.control_loss() ? control_draw : rec.master_lost;
      if (loss_.control_forced_lost(next_epoch)) rec.control_lost = true;
    }
    log_.push_back(rec);
  }
}

Simulation::Simulation(VictimConnection connection, RadioConfig radio)
    : connection_(std::move(connection)), radio_(radio) {
  const auto max_latency = connection_.params().interval / 2;
  if (radio_.retune_latency.count() < 0 || radio_.retune_latency > max_latency) {
    throw Error(ErrorCode::kConfig, "retune latency must lie in [0, c_int/2]");
  }
}

std::vector<ConnectionEventRecord> Simulation::advance(Micros until) {
  std::vector<ConnectionEventRecord> out;
  if (until <= now_) return out;
  for (auto k = connection_.first_event_at_or_after(now_); connection_.anchor_of(k) < until; ++k) {
    out.push_back(connection_.event(k));
  }
  now_ = until;
  return out;
}

void Simulation::tune(int channel) {
  if (!afh::is_data_channel(channel)) {
    throw Error(ErrorCode::kOutOfRange, "cannot tune to non-data channel " + std::to_string(channel));
  }
  tuned_ = static_cast<afh::Channel>(channel);
  tuned_from_ = now_ + radio_.retune_latency;
}

std::vector<PacketObservation> Simulation::observe(Micros window) {
  if (!tuned_) throw Error(ErrorCode::kNotTuned, "observe called before tune");
  std::vector<PacketObservation> out;
  if (window.count() <= 0) return out;
  const Micros start = now_;
  const Micros end = now_ + window;
  const auto& params = connection_.params();
  // The slave reply of an event anchored just before `start` may still land inside the window.
  const Micros scan_from = start - afh::kInterFrameSpace;
  for (auto k = connection_.first_event_at_or_after(scan_from < Micros{0} ? Micros{0} : scan_from);
       connection_.anchor_of(k) < end; ++k) {
    const ConnectionEventRecord& ev = connection_.event(k);
    if (ev.channel != *tuned_) continue;
    if (last_reported_ && *last_reported_ >= ev.index) continue;
    const bool master_heard = !ev.master_lost && ev.anchor >= start && ev.anchor >= tuned_from_;
    const Micros slave_time = ev.anchor + afh::kInterFrameSpace;
    const bool slave_heard =
        !ev.slave_lost && slave_time >= start && slave_time < end && slave_time >= tuned_from_;
    PacketObservation obs;
    obs.channel = ev.channel;
    obs.access_address = params.access_address;
    if (master_heard) {
      obs.time = ev.anchor;
      obs.role = Role::kMaster;
      if (radio_.decode_control && ev.carries_map_update && !ev.control_lost) {
        obs.announced_map = connection_.map(ev.map_epoch + 1);
        obs.announced_instant = connection_.anchor_of(k + 1);
      }
    } else if (slave_heard) {
      // One detection per event: the slave reply stands in for a lost anchor packet.
      obs.time = slave_time;
      obs.role = Role::kSlave;
    } else {
      continue;
    }
    last_reported_ = ev.index;
    out.push_back(obs);
    observations_.push_back(obs);
  }
  now_ = end;
  return out;
}

void Simulation::skip_to(Micros t) {
  if (t <= now_) return;
  if (tuned_) {
    observe(t - now_);
  } else {
    now_ = t;
  }
}

void write_event_log(std::ostream& os, std::span<const ConnectionEventRecord> events) {
  for (const auto& e : events) {
    os << e.anchor.count() << ',' << static_cast<int>(e.channel) << ',' << (e.master_lost ? 1 : 0)
       << ',' << (e.slave_lost ? 1 : 0) << '\n';
  }
}

void write_observation_log(std::ostream& os, std::span<const PacketObservation> observations) {
  char aa[16];
  for (const auto& o : observations) {
    std::snprintf(aa, sizeof aa, "%08x", static_cast<unsigned>(o.access_address));
    os << o.time.count() << ',' << static_cast<int>(o.channel) << ',' << aa << ','
       << (o.role == Role::kMaster ? "master" : "slave") << '\n';
  }
}

}  // namespace hopcrack::sim
