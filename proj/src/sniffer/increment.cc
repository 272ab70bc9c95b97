#include <algorithm>
#include <map>

#include "hopcrack/error.h"
#include "hopcrack/sniffer.h"

namespace hopcrack::sniff {
namespace {

Micros fold(Micros t, Micros period) {
  auto r = t % period;
  if (r.count() < 0) r += period;
  return r;
}

// Hops (mod 37) from offset a to offset b within one period; nullopt when the
// pair is degenerate or off the event grid.
std::optional<int> hops_mod37(Micros from, Micros to, Micros interval) {
  const Micros period = interval * kPeriodHops;
  const Micros diff = fold(to - from, period);
  if (diff.count() == 0) return std::nullopt;
  try {
    return afh::mod37(hops_between(Micros{0}, diff, interval));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNotOnGrid) return std::nullopt;
    throw;
  }
}

// Solves hops * h_inc ≡ (to - from) (mod 37).
std::optional<int> solve_increment(int from_channel, int to_channel, int hops) {
  if (hops == 0) return std::nullopt;
  return afh::mod37(static_cast<long long>(to_channel - from_channel) * afh::mod_inverse(hops));
}

}  // namespace

AppearanceSet make_appearance_set(afh::Channel channel, Micros period,
                                  std::span<const Micros> arrival_times) {
  if (period.count() <= 0) throw Error(ErrorCode::kOutOfRange, "period must be positive");
  AppearanceSet set{channel, period, {}};
  for (Micros t : arrival_times) set.offsets.push_back(fold(t, period));
  std::sort(set.offsets.begin(), set.offsets.end());
  set.offsets.erase(std::unique(set.offsets.begin(), set.offsets.end()), set.offsets.end());
  return set;
}

std::vector<IncrementCandidate> candidate_increments(const AppearanceSet& a, const AppearanceSet& b,
                                                     Micros interval) {
  std::vector<IncrementCandidate> out;
  if (a.channel == b.channel) return out;
  for (Micros oa : a.offsets) {
    for (Micros ob : b.offsets) {
      const auto hops = hops_mod37(oa, ob, interval);
      if (!hops) continue;
      const auto h_inc = solve_increment(a.channel, b.channel, *hops);
      if (h_inc && afh::is_valid_hop_increment(*h_inc)) {
        out.push_back({*h_inc, {a.channel, oa}, {b.channel, ob}});
      }
    }
  }
  return out;
}

IncrementResult derive_hop_increment(const AppearanceSet& p, const AppearanceSet& q,
                                     const AppearanceSet& r, Micros interval) {
  struct Survivor {
    int hop_increment;
    TrueChannels triple;
  };
  std::vector<Survivor> survivors;
  for (const auto& pq : candidate_increments(p, q, interval)) {
    for (Micros ol : r.offsets) {
      const auto hops = hops_mod37(pq.to.offset, ol, interval);
      if (!hops) continue;
      const auto h_ml = solve_increment(q.channel, r.channel, *hops);
      if (h_ml && *h_ml == pq.hop_increment) {
        survivors.push_back({pq.hop_increment, {pq.from, pq.to, Appearance{r.channel, ol}}});
      }
    }
  }
  if (survivors.empty()) {
    throw Error(ErrorCode::kAmbiguous, "no hop increment common to both channel pairs");
  }
  std::map<int, std::size_t> votes;
  for (const auto& s : survivors) ++votes[s.hop_increment];
  const auto winner = std::max_element(votes.begin(), votes.end(),
                                       [](const auto& x, const auto& y) { return x.second < y.second; });
  if (2 * winner->second <= survivors.size()) {
    throw Error(ErrorCode::kAmbiguous, "no hop increment holds a majority of " +
                                           std::to_string(survivors.size()) + " candidates");
  }
  IncrementResult result;
  result.hop_increment = winner->first;
  bool first = true;
  for (const auto& s : survivors) {
    if (s.hop_increment != winner->first) continue;
    if (first) {
      result.true_channels = s.triple;
      first = false;
    } else {
      result.alternatives.push_back(s.triple);
    }
  }
  return result;
}

}  // namespace hopcrack::sniff
