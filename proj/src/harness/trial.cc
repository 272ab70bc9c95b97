#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "hopcrack/error.h"
#include "hopcrack/harness.h"

namespace hopcrack::harness {
namespace {

Micros data_end(const Scenario& s, Micros data_start) {
  return data_start + s.send_period * (s.packet_count - 1);
}

std::optional<Micros> transition_into(const std::vector<sniff::TimelineEntry>& timeline, sniff::Stage stage) {
  for (const auto& e : timeline) {
    if (e.kind == sniff::TimelineKind::kTransition && e.estimate.stage == stage) return e.time;
  }
  return std::nullopt;
}

std::optional<std::uint64_t> hops_until(std::optional<Micros> t, Micros started, Micros interval) {
  if (!t) return std::nullopt;
  return static_cast<std::uint64_t>((*t - started) / interval);
}

}  // namespace

double TrialResult::capture_pct() const {
  if (packets_expected == 0) return 0.0;
  return 100.0 * static_cast<double>(packets_captured) / static_cast<double>(packets_expected);
}

std::uint64_t count_captured(const Scenario& s, sim::VictimConnection& connection,
                             std::span<const sim::PacketObservation> heard, Micros data_start) {
  std::unordered_set<long long> master_times;
  for (const auto& obs : heard) {
    if (obs.role == sim::Role::kMaster && obs.access_address == connection.params().access_address) {
      master_times.insert(obs.time.count());
    }
  }
  std::uint64_t captured = 0;
  for (int i = 0; i < s.packet_count; ++i) {
    const Micros sent = data_start + s.send_period * i;
    const Micros anchor = connection.anchor_of(connection.first_event_at_or_after(sent));
    captured += master_times.contains(anchor.count()) ? 1 : 0;
  }
  return captured;
}

TrialResult run_trial(const Scenario& s, int trial_index) {
  const TrialSetup setup = make_trial_setup(s, trial_index);
  sim::Simulation sim = make_simulation(s, setup, make_loss_model(s));
  const Micros interval = setup.params.interval;

  TrialResult r;
  r.trial = trial_index;
  r.truth = setup.params;
  r.packets_expected = static_cast<std::uint64_t>(s.packet_count);

  sniff::Cracker cracker(sim, s.sniffer);
  const bool acquired = cracker.acquire(interval * s.hop_budget);
  const auto& est = cracker.estimate();
  r.derived_interval = est.interval;
  r.derived_hop_increment = est.hop_increment;
  r.derived_map = est.channel_map;

  const auto t_interval = transition_into(cracker.timeline(), sniff::Stage::kIncrement);
  const auto t_increment = transition_into(cracker.timeline(), sniff::Stage::kMap);
  const auto t_map = transition_into(cracker.timeline(), sniff::Stage::kFollowing);
  r.hops_interval = hops_until(t_interval, cracker.started_at(), interval);
  r.hops_increment = hops_until(t_increment, cracker.started_at(), interval);
  r.hops_map = hops_until(t_map, cracker.started_at(), interval);
  r.interval_correct = est.interval == setup.params.interval;
  r.hop_increment_correct = est.hop_increment == setup.params.hop_increment;
  if (t_map) {
    r.map_at_derivation = sim.connection().map_in_force(*t_map);
    r.map_correct = est.channel_map == r.map_at_derivation;
  }

  r.data_start = s.data_start.value_or(sim.now() + s.data_delay);
  if (!acquired) {
    r.failed = true;
    r.failure = std::string(sniff::to_string(est.stage)) + " stage exceeded its hop budget";
  } else {
    const sniff::FollowSummary summary = cracker.follow(data_end(s, r.data_start) + 2 * interval);
    r.resync_count = summary.resyncs;
  }
  r.packets_captured = count_captured(s, sim.connection(), sim.observation_log(), r.data_start);
  r.timeline = cracker.timeline();
  return r;
}

TrialResult run_benchmark(const Scenario& s, int trial_index) {
  const TrialSetup setup = make_trial_setup(s, trial_index);
  const Micros interval = setup.params.interval;
  const int h = setup.params.hop_increment;

  TrialResult r;
  r.trial = trial_index;
  r.truth = setup.params;
  r.packets_expected = static_cast<std::uint64_t>(s.packet_count);
  r.derived_interval = interval;
  r.derived_hop_increment = h;
  r.derived_map = setup.params.channel_map;
  r.map_at_derivation = setup.params.channel_map;
  r.interval_correct = r.hop_increment_correct = r.map_correct = true;
  // Both receivers start collecting data at the same instant.
  r.data_start = s.data_start.value_or(run_trial(s, trial_index).data_start);

  sim::LossModel loss = make_loss_model(s);
  if (s.update_period.count() > 0 && s.force_miss_updates > 0) {
    const auto latest = static_cast<long long>(r.data_start / s.update_period);
    for (long long e = latest; e > latest - s.force_miss_updates && e >= 1; --e) {
      loss.force_control_miss(static_cast<std::size_t>(e));
    }
  }
  sim::Simulation sim = make_simulation(s, setup, loss, /*decode_control=*/true);

  const Micros lead = interval / 2;
  const Micros until = data_end(s, r.data_start) + 2 * interval;
  afh::HopState state{setup.params.last_unmapped, 0};
  afh::ChannelMap known = setup.params.channel_map;
  std::optional<std::pair<Micros, afh::ChannelMap>> pending;
  for (std::uint64_t k = 0; sim.connection().anchor_of(k) < until; ++k) {
    const Micros anchor = sim.connection().anchor_of(k);
    if (pending && anchor >= pending->first) {
      known = pending->second;
      pending.reset();
      ++r.resync_count;
    }
    const afh::Hop hop = afh::select_next_channel(state, h, known);
    state = hop.next;
    sim.skip_to(anchor - lead);
    sim.tune(hop.channel);
    for (const auto& obs : sim.observe(anchor + interval - lead - sim.now())) {
      if (obs.announced_map && obs.announced_instant) pending.emplace(*obs.announced_instant, *obs.announced_map);
    }
  }
  r.packets_captured = count_captured(s, sim.connection(), sim.observation_log(), r.data_start);
  return r;
}

std::vector<TrialResult> run_trials(const Scenario& s, bool benchmark, unsigned jobs) {
  std::vector<TrialResult> results(static_cast<std::size_t>(s.trials));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < s.trials; i = next++) {
      try {
        results[static_cast<std::size_t>(i)] = benchmark ? run_benchmark(s, i) : run_trial(s, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::clamp(jobs, 1u, static_cast<unsigned>(s.trials));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace hopcrack::harness
