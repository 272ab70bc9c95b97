#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "hopcrack/error.h"
#include "hopcrack/harness.h"

namespace hopcrack::harness {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::kConfig, key + ": " + why + " (got '" + value + "')");
}

long long to_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const int base = value.starts_with("0x") ? 16 : 10;
  const char* first = value.data() + (base == 16 ? 2 : 0);
  const auto [end, ec] = std::from_chars(first, value.data() + value.size(), out, base);
  if (ec != std::errc{} || end != value.data() + value.size()) bad(key, value, "expected an integer");
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(out)) {
    bad(key, value, "expected a number");
  }
  return out;
}

Micros seconds(const std::string& key, const std::string& value) {
  const double s = to_double(key, value);
  if (s < 0) bad(key, value, "must not be negative");
  return Micros{std::llround(s * 1e6)};
}

Micros millis(const std::string& key, const std::string& value) {
  const double ms = to_double(key, value);
  if (ms < 0) bad(key, value, "must not be negative");
  return Micros{std::llround(ms * 1e3)};
}

double probability(const std::string& key, const std::string& value) {
  const double p = to_double(key, value);
  if (p < 0.0 || p > 1.0) bad(key, value, "must lie in [0, 1]");
  return p;
}

int positive(const std::string& key, const std::string& value) {
  const long long v = to_int(key, value);
  if (v < 1 || v > 1'000'000) bad(key, value, "must be a positive count");
  return static_cast<int>(v);
}

using Setter = std::function<void(Scenario&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](Scenario& s, auto&, auto& v) { s.name = v; }},
      {"c_int_us", [](Scenario& s, auto& k, auto& v) { s.interval = Micros{to_int(k, v)}; }},
      {"h_inc",
       [](Scenario& s, auto& k, auto& v) {
         if (v == "random") {
           s.hop_increment.reset();
         } else {
           s.hop_increment = static_cast<int>(to_int(k, v));
         }
       }},
      {"map", [](Scenario& s, auto&, auto& v) { s.map = v; }},
      {"luc",
       [](Scenario& s, auto& k, auto& v) {
         if (v == "random") {
           s.last_unmapped.reset();
         } else {
           s.last_unmapped = static_cast<int>(to_int(k, v));
         }
       }},
      {"aa", [](Scenario& s, auto& k, auto& v) { s.access_address = static_cast<std::uint32_t>(to_int(k, v)); }},
      {"update_period_s", [](Scenario& s, auto& k, auto& v) { s.update_period = seconds(k, v); }},
      {"max_removed", [](Scenario& s, auto& k, auto& v) { s.max_removed = positive(k, v); }},
      {"min_used", [](Scenario& s, auto& k, auto& v) { s.min_used = positive(k, v); }},
      {"p_loss", [](Scenario& s, auto& k, auto& v) { s.p_loss = probability(k, v); }},
      {"update_pkt_loss", [](Scenario& s, auto& k, auto& v) { s.update_pkt_loss = probability(k, v); }},
      {"force_miss_updates",
       [](Scenario& s, auto& k, auto& v) {
         const auto n = to_int(k, v);
         if (n < 0) bad(k, v, "must not be negative");
         s.force_miss_updates = static_cast<int>(n);
       }},
      {"send_period_ms", [](Scenario& s, auto& k, auto& v) { s.send_period = millis(k, v); }},
      {"packet_count", [](Scenario& s, auto& k, auto& v) { s.packet_count = positive(k, v); }},
      {"data_start_s",
       [](Scenario& s, auto& k, auto& v) {
         if (v == "auto") {
           s.data_start.reset();
         } else {
           s.data_start = seconds(k, v);
         }
       }},
      {"data_delay_s", [](Scenario& s, auto& k, auto& v) { s.data_delay = seconds(k, v); }},
      {"seed", [](Scenario& s, auto& k, auto& v) { s.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"trials", [](Scenario& s, auto& k, auto& v) { s.trials = positive(k, v); }},
      {"retune_latency_us", [](Scenario& s, auto& k, auto& v) { s.retune_latency = Micros{to_int(k, v)}; }},
      {"hop_budget", [](Scenario& s, auto& k, auto& v) { s.hop_budget = positive(k, v); }},
      {"n_repeats", [](Scenario& s, auto& k, auto& v) { s.sniffer.n_repeats = positive(k, v); }},
      {"window", [](Scenario& s, auto& k, auto& v) { s.sniffer.window = positive(k, v); }},
      {"threshold", [](Scenario& s, auto& k, auto& v) { s.sniffer.threshold = positive(k, v); }},
      {"lead_margin_us", [](Scenario& s, auto& k, auto& v) { s.sniffer.lead_margin = Micros{to_int(k, v)}; }},
      {"confirm_miss_tolerance",
       [](Scenario& s, auto& k, auto& v) {
         const auto n = to_int(k, v);
         if (n < 0 || n > 37) bad(k, v, "must lie in [0, 37]");
         s.sniffer.confirm_miss_tolerance = static_cast<int>(n);
       }},
      {"rescan_miss_tolerance",
       [](Scenario& s, auto& k, auto& v) {
         const auto n = to_int(k, v);
         if (n < 0 || n > 37) bad(k, v, "must lie in [0, 37]");
         s.sniffer.rescan_miss_tolerance = static_cast<int>(n);
       }},
      {"rescan_rounds", [](Scenario& s, auto& k, auto& v) { s.sniffer.rescan_rounds = positive(k, v); }},
      {"start_channel", [](Scenario& s, auto& k, auto& v) { s.sniffer.start_channel = static_cast<int>(to_int(k, v)); }},
  };
  return table;
}

// "random:N" → N; nullopt for other spellings.
std::optional<int> random_map_size(const std::string& text) {
  if (!text.starts_with("random:")) return std::nullopt;
  int n = 0;
  const auto* first = text.data() + 7;
  const auto* last = text.data() + text.size();
  const auto [end, ec] = std::from_chars(first, last, n);
  if (ec != std::errc{} || end != last) return std::nullopt;
  return n;
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& default_name) {
  Scenario s;
  s.name = default_name;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::kConfig, key + ": unknown key");
    it->second(s, key, value);
  }
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario file " + path);
  auto stem = path.substr(path.find_last_of('/') + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem.erase(dot);
  return parse_scenario(in, stem);
}

void validate_scenario(const Scenario& s) {
  afh::ConnectionParams probe;
  probe.interval = s.interval;
  probe.hop_increment = s.hop_increment.value_or(afh::kMinHopIncrement);
  probe.last_unmapped = s.last_unmapped.value_or(0);
  if (const auto n = random_map_size(s.map)) {
    if (*n < afh::kMinUsedChannels || *n > afh::kNumDataChannels) {
      throw Error(ErrorCode::kConfig, "map: random map size must lie in [2, 37] (got '" + s.map + "')");
    }
  } else if (const auto parsed = afh::ChannelMap::parse(s.map)) {
    probe.channel_map = *parsed;
  } else {
    throw Error(ErrorCode::kConfig, "map: expected full, a hex mask or random:N (got '" + s.map + "')");
  }
  const auto violations = afh::validate_params(probe);
  if (!violations.empty()) throw Error(ErrorCode::kConfig, afh::describe(violations));
  if (s.retune_latency.count() < 0 || s.retune_latency > s.interval / 2) {
    throw Error(ErrorCode::kConfig, "retune_latency_us: must lie in [0, c_int/2]");
  }
  if (s.sniffer.lead_margin &&
      (s.sniffer.lead_margin->count() < 0 || *s.sniffer.lead_margin >= s.interval)) {
    throw Error(ErrorCode::kConfig, "lead_margin_us: must lie in [0, c_int)");
  }
  if (s.sniffer.threshold > s.sniffer.window) {
    throw Error(ErrorCode::kConfig, "threshold: must not exceed window");
  }
  if (s.sniffer.n_repeats < 2) throw Error(ErrorCode::kConfig, "n_repeats: must be at least 2");
  if (!afh::is_data_channel(s.sniffer.start_channel)) {
    throw Error(ErrorCode::kConfig, "start_channel: must be a data channel");
  }
  if (s.send_period.count() <= 0) throw Error(ErrorCode::kConfig, "send_period_ms: must be positive");
}

void apply_environment(Scenario& s) {
  if (const char* env = std::getenv("HOPCRACK_SEED"); env != nullptr && *env != '\0') {
    s.seed = static_cast<std::uint64_t>(to_int("HOPCRACK_SEED", env));
  }
}

TrialSetup make_trial_setup(const Scenario& s, int trial_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                    static_cast<std::uint32_t>(trial_index), 0x74726961u};
  std::mt19937_64 rng(seq);
  TrialSetup setup;
  auto& p = setup.params;
  p.interval = s.interval;
  p.hop_increment = s.hop_increment.value_or(std::uniform_int_distribution<int>(5, 16)(rng));
  p.last_unmapped = s.last_unmapped.value_or(std::uniform_int_distribution<int>(0, 36)(rng));
  p.access_address = s.access_address.value_or(static_cast<std::uint32_t>(rng()));
  if (const auto n = random_map_size(s.map)) {
    std::vector<int> channels(afh::kNumDataChannels);
    for (int c = 0; c < afh::kNumDataChannels; ++c) channels[static_cast<std::size_t>(c)] = c;
    std::shuffle(channels.begin(), channels.end(), rng);
    channels.resize(static_cast<std::size_t>(*n));
    p.channel_map = afh::ChannelMap::from_channels(channels);
  } else {
    p.channel_map = *afh::ChannelMap::parse(s.map);
  }
  setup.first_anchor = Micros{std::uniform_int_distribution<long long>(0, s.interval.count() - 1)(rng)};
  setup.sim_seed = rng();
  setup.schedule_seed = rng();
  afh::require_valid(p);
  return setup;
}

sim::LossModel make_loss_model(const Scenario& s) {
  auto loss = sim::LossModel::uniform(s.p_loss);
  if (s.update_pkt_loss) loss.set_control_loss(*s.update_pkt_loss);
  return loss;
}

sim::Simulation make_simulation(const Scenario& s, const TrialSetup& setup, const sim::LossModel& loss,
                                bool decode_control) {
  auto schedule = s.update_period.count() > 0
                      ? sim::MapUpdateSchedule::churn(s.update_period, setup.params.channel_map,
                                                      setup.schedule_seed, s.max_removed, s.min_used)
                      : sim::MapUpdateSchedule::none();
  sim::VictimConnection connection(setup.params, std::move(schedule), loss, setup.sim_seed,
                                   setup.first_anchor);
  return sim::Simulation(std::move(connection), sim::RadioConfig{s.retune_latency, decode_control});
}

}  // namespace hopcrack::harness
