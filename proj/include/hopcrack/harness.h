#ifndef HOPCRACK_HARNESS_H
#define HOPCRACK_HARNESS_H

// Seeded experiment runner: scenario files, per-trial execution of the
// cracker and of an idealised follow-mode comparator, aggregation and report
// emission.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hopcrack/afh.h"
#include "hopcrack/sim.h"
#include "hopcrack/sniffer.h"

namespace hopcrack::harness {

struct Scenario {
  std::string name = "scenario";
  Micros interval{50'000};
  std::optional<int> hop_increment;  // unset: drawn per trial from [5, 16]
  std::string map = "random:20";     // "full", a hex mask, or "random:N"
  std::optional<int> last_unmapped;  // unset: drawn per trial
  std::optional<std::uint32_t> access_address;
  Micros update_period{0};  // 0 disables map updates
  int max_removed = 5;
  int min_used = 10;
  double p_loss = 0.0;
  std::optional<double> update_pkt_loss;
  // The comparator loses the announcements of this many of the most recent
  // map updates taking effect before the data schedule starts.
  int force_miss_updates = 0;
  Micros send_period{100'000};
  int packet_count = 100;
  std::optional<Micros> data_start;  // unset: when the cracker starts following
  Micros data_delay{0};              // added to the unset data_start
  std::uint64_t seed = 1;
  int trials = 25;
  Micros retune_latency{0};
  int hop_budget = 50 * 37;  // connection events per stage
  sniff::SnifferConfig sniffer;
};

// Flat `key=value` text; `#` starts a comment. Throws Error(kConfig) naming
// the offending key.
Scenario parse_scenario(std::istream& in, const std::string& default_name = "scenario");
Scenario load_scenario(const std::string& path);
// Rejects scenarios whose parameters violate connection invariants.
void validate_scenario(const Scenario& scenario);
// HOPCRACK_SEED, when set, replaces the scenario seed.
void apply_environment(Scenario& scenario);

struct TrialSetup {
  afh::ConnectionParams params;
  Micros first_anchor{0};
  std::uint64_t sim_seed = 0;
  std::uint64_t schedule_seed = 0;
};

TrialSetup make_trial_setup(const Scenario& scenario, int trial_index);
sim::Simulation make_simulation(const Scenario& scenario, const TrialSetup& setup,
                                const sim::LossModel& loss, bool decode_control = false);
sim::LossModel make_loss_model(const Scenario& scenario);

struct TrialResult {
  int trial = 0;
  bool failed = false;
  std::string failure;
  afh::ConnectionParams truth;
  std::optional<Micros> derived_interval;
  std::optional<int> derived_hop_increment;
  std::optional<afh::ChannelMap> derived_map;
  std::optional<afh::ChannelMap> map_at_derivation;
  bool interval_correct = false;
  bool hop_increment_correct = false;
  bool map_correct = false;
  std::optional<std::uint64_t> hops_interval;
  std::optional<std::uint64_t> hops_increment;
  std::optional<std::uint64_t> hops_map;
  std::uint64_t packets_expected = 0;
  std::uint64_t packets_captured = 0;
  int resync_count = 0;
  Micros data_start{0};
  std::vector<sniff::TimelineEntry> timeline;

  double capture_pct() const;
};

TrialResult run_trial(const Scenario& scenario, int trial_index);
TrialResult run_benchmark(const Scenario& scenario, int trial_index);
// Runs trials [0, scenario.trials) on up to `jobs` threads; results are
// ordered by trial index.
std::vector<TrialResult> run_trials(const Scenario& scenario, bool benchmark, unsigned jobs = 1);

// Data packet i is sent at data_start + i * send_period and rides the first
// connection event anchored at or after that instant; it counts as captured
// when the receiver heard that event's master packet.
std::uint64_t count_captured(const Scenario& scenario, sim::VictimConnection& connection,
                             std::span<const sim::PacketObservation> heard, Micros data_start);

struct Stats {
  std::size_t count = 0;
  double mean = 0.0;
  double stdev = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

Stats describe_sample(std::vector<double> values);

struct ScenarioReport {
  std::string scenario;
  std::size_t trials = 0;
  std::size_t failed_trials = 0;
  double interval_accuracy_pct = 0.0;
  double hop_increment_accuracy_pct = 0.0;
  double map_accuracy_pct = 0.0;
  Stats hops_interval;
  Stats hops_increment;
  Stats hops_map;
  Stats capture_pct;
  bool capture_flagged = false;  // nothing captured in any trial
  double mean_resyncs = 0.0;
};

ScenarioReport aggregate(const std::string& scenario, std::span<const TrialResult> results);

// `scenario,param,accuracy_pct`
void write_accuracy_csv(std::ostream& os, std::span<const ScenarioReport> reports, bool header = true);
// `scenario,trial,hops_cint,hops_hinc,hops_cmap,capture_pct`
void write_trials_csv(std::ostream& os, const std::string& scenario,
                      std::span<const TrialResult> results, bool header = true);
void write_summary(std::ostream& os, const ScenarioReport& report);
// One `stage,c_int_us,h_inc,map_hex,hops_consumed` line per timeline entry.
void write_estimate_dump(std::ostream& os, std::span<const sniff::TimelineEntry> timeline);

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hopcrack::harness

#endif  // HOPCRACK_HARNESS_H
