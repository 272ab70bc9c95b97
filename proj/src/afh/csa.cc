#include <istream>
#include <ostream>
#include <sstream>

#include "hopcrack/afh.h"
#include "hopcrack/error.h"

namespace hopcrack::afh {

std::vector<Violation> validate_params(const ConnectionParams& params) {
  std::vector<Violation> out;
  const auto us = params.interval.count();
  if (params.interval < kMinInterval || params.interval > kMaxInterval) {
    out.push_back({"c_int", "interval " + std::to_string(us) + "us outside [7500us, 4000000us]"});
  }
  if (us % kIntervalStep.count() != 0) {
    out.push_back({"c_int", "interval " + std::to_string(us) + "us is not a multiple of 1250us"});
  }
  if (params.hop_increment < kMinHopIncrement) {
    out.push_back({"h_inc", "hop increment " + std::to_string(params.hop_increment) + " below 5"});
  } else if (params.hop_increment > kMaxHopIncrement) {
    out.push_back({"h_inc", "hop increment " + std::to_string(params.hop_increment) + " above 16"});
  }
  if (!params.channel_map.valid()) {
    out.push_back({"c_map", "channel map uses " + std::to_string(params.channel_map.popcount()) +
                                " channels, at least 2 required"});
  }
  if (!is_data_channel(params.last_unmapped)) {
    out.push_back({"luc", "last unmapped channel " + std::to_string(params.last_unmapped) +
                              " outside [0, 36]"});
  }
  return out;
}

std::string describe(std::span<const Violation> violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.field + ": " + v.message;
  }
  return out;
}

void require_valid(const ConnectionParams& params) {
  const auto violations = validate_params(params);
  if (!violations.empty()) throw Error(ErrorCode::kInvalidParams, describe(violations));
}

int unmapped_next(const HopState& state, int hop_increment) {
  if (!is_valid_hop_increment(hop_increment)) {
    throw Error(ErrorCode::kOutOfRange, "hop increment " + std::to_string(hop_increment) +
                                            " outside [5, 16]");
  }
  if (!is_data_channel(state.last_unmapped)) {
    throw Error(ErrorCode::kOutOfRange, "last unmapped channel " +
                                            std::to_string(state.last_unmapped) + " outside [0, 36]");
  }
  return (state.last_unmapped + hop_increment) % kNumDataChannels;
}

Channel remap(int unmapped, const ChannelMap& map) {
  if (!is_data_channel(unmapped)) {
    throw Error(ErrorCode::kOutOfRange, "unmapped channel " + std::to_string(unmapped));
  }
  if (!map.valid()) {
    throw Error(ErrorCode::kInvalidMap, "channel map " + map.to_hex() + " uses fewer than 2 channels");
  }
  if (map.used(unmapped)) return static_cast<Channel>(unmapped);
  // Walk to the (unmapped % popcount)-th used channel without allocating.
  int remaining = unmapped % map.popcount();
  for (int c = 0; c < kNumDataChannels; ++c) {
    if (map.used(c) && remaining-- == 0) return static_cast<Channel>(c);
  }
  throw Error(ErrorCode::kInvalidMap, "remapping index past used list");
}

Hop select_next_channel(const HopState& state, int hop_increment, const ChannelMap& map) {
  const int unmapped = unmapped_next(state, hop_increment);
  return {remap(unmapped, map), HopState{unmapped, state.event_counter + 1}};
}

std::vector<SequenceEntry> hop_sequence(const ConnectionParams& params, std::size_t count) {
  require_valid(params);
  std::vector<SequenceEntry> out;
  out.reserve(count);
  HopState state{params.last_unmapped, 0};
  for (std::size_t i = 0; i < count; ++i) {
    const Hop hop = select_next_channel(state, params.hop_increment, params.channel_map);
    out.push_back({state.event_counter, hop.channel});
    state = hop.next;
  }
  return out;
}

int mod_inverse(long long x) {
  const int a = mod37(x);
  if (a == 0) throw Error(ErrorCode::kNoInverse, std::to_string(x) + " is 0 modulo 37");
  // Extended Euclid on (a, 37).
  int old_r = a, r = kNumDataChannels;
  int old_s = 1, s = 0;
  while (r != 0) {
    const int q = old_r / r;
    int tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  return mod37(old_s);
}

void write_fixture(std::ostream& os, std::span<const SequenceEntry> sequence) {
  for (const auto& e : sequence) os << e.event << ',' << static_cast<int>(e.channel) << '\n';
}

std::vector<SequenceEntry> read_fixture(std::istream& is) {
  std::vector<SequenceEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    unsigned long long event = 0;
    int channel = -1;
    char comma = 0;
    if (!(fields >> event >> comma >> channel) || comma != ',' || !is_data_channel(channel)) {
      throw Error(ErrorCode::kIo, "malformed fixture line " + std::to_string(line_no) + ": " + line);
    }
    out.push_back({event, static_cast<Channel>(channel)});
  }
  return out;
}

}  // namespace hopcrack::afh
