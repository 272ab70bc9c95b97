#include <algorithm>
#include <random>

#include "hopcrack/error.h"
#include "hopcrack/sim.h"

namespace hopcrack::sim {

LossModel LossModel::uniform(double p) {
  LossModel model;
  for (int c = 0; c < afh::kNumDataChannels; ++c) model.set(c, p);
  return model;
}

LossModel& LossModel::set(int channel, double p) {
  if (!afh::is_data_channel(channel)) {
    throw Error(ErrorCode::kOutOfRange, "loss set on non-data channel " + std::to_string(channel));
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kConfig, "loss probability " + std::to_string(p) + " outside [0, 1]");
  }
  probability_[static_cast<std::size_t>(channel)] = p;
  return *this;
}

LossModel& LossModel::set_control_loss(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kConfig, "control loss probability " + std::to_string(p) + " outside [0, 1]");
  }
  control_loss_ = p;
  return *this;
}

LossModel& LossModel::force_control_miss(std::size_t epoch) {
  forced_control_misses_.push_back(epoch);
  return *this;
}

bool LossModel::control_forced_lost(std::size_t epoch) const {
  return std::find(forced_control_misses_.begin(), forced_control_misses_.end(), epoch) !=
         forced_control_misses_.end();
}

MapUpdateSchedule MapUpdateSchedule::none() { return MapUpdateSchedule(); }

MapUpdateSchedule MapUpdateSchedule::fixed(Micros period, std::vector<afh::ChannelMap> maps) {
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!maps[i].valid()) {
      throw Error(ErrorCode::kInvalidMap, "scheduled map " + std::to_string(i) + " (" +
                                              maps[i].to_hex() + ") uses fewer than 2 channels");
    }
  }
  MapUpdateSchedule schedule;
  schedule.period_ = maps.empty() ? Micros{0} : period;
  schedule.fixed_ = std::move(maps);
  return schedule;
}

MapUpdateSchedule MapUpdateSchedule::churn(Micros period, afh::ChannelMap base, std::uint64_t seed,
                                           int max_removed, int min_used) {
  if (!base.valid()) throw Error(ErrorCode::kInvalidMap, "churn base map " + base.to_hex());
  const auto used = base.used_list();
  const int pop = static_cast<int>(used.size());
  const int floor = std::max(afh::kMinUsedChannels, std::min(min_used, pop - 1));
  const int max_k = std::min(max_removed, pop - floor);
  auto generator = [=](std::size_t epoch, const afh::ChannelMap& previous) {
    if (max_k < 1) return base;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x6d617073u};
    std::mt19937_64 rng(seq);
    afh::ChannelMap next = base;
    // Redraw a few times so that an update actually changes the map.
    for (int attempt = 0; attempt < 16; ++attempt) {
      std::uniform_int_distribution<int> count(1, max_k);
      auto pool = used;
      std::shuffle(pool.begin(), pool.end(), rng);
      next = base;
      const int k = count(rng);
      for (int i = 0; i < k; ++i) next.set(pool[static_cast<std::size_t>(i)], false);
      if (next != previous) break;
    }
    return next;
  };
  return MapUpdateSchedule(period, std::move(generator));
}

MapUpdateSchedule::MapUpdateSchedule(Micros period, Generator generator)
    : period_(period), generator_(std::move(generator)) {
  if (period_.count() < 0) throw Error(ErrorCode::kConfig, "negative map update period");
}

std::size_t MapUpdateSchedule::epoch_at(Micros t) const {
  if (!active() || t.count() < 0) return 0;
  return static_cast<std::size_t>(t / period_);
}

afh::ChannelMap MapUpdateSchedule::next(std::size_t epoch, const afh::ChannelMap& previous) const {
  afh::ChannelMap out = previous;
  if (!fixed_.empty()) {
    out = fixed_[std::min(epoch, fixed_.size()) - 1];
  } else if (generator_) {
    out = generator_(epoch, previous);
  }
  if (!out.valid()) {
    throw Error(ErrorCode::kInvalidMap, "update " + std::to_string(epoch) + " produced map " +
                                            out.to_hex() + " with fewer than 2 channels");
  }
  return out;
}

}  // namespace hopcrack::sim
