#ifndef HOPCRACK_AFH_H
#define HOPCRACK_AFH_H

// BLE data-channel arithmetic: channel maps, channel selection algorithm #1
// with remapping, parameter validation and hop-sequence generation.

#include <chrono>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hopcrack {

using Micros = std::chrono::microseconds;

namespace afh {

using Channel = std::uint8_t;

inline constexpr int kNumDataChannels = 37;
inline constexpr int kNumChannels = 40;
inline constexpr int kMinUsedChannels = 2;
inline constexpr int kMinHopIncrement = 5;
inline constexpr int kMaxHopIncrement = 16;
inline constexpr Micros kIntervalStep{1250};
inline constexpr Micros kMinInterval{7500};
inline constexpr Micros kMaxInterval{4'000'000};
inline constexpr Micros kInterFrameSpace{150};

constexpr bool is_data_channel(int channel) {
  return channel >= 0 && channel < kNumDataChannels;
}

constexpr bool is_valid_hop_increment(int hop_increment) {
  return hop_increment >= kMinHopIncrement && hop_increment <= kMaxHopIncrement;
}

// 37-bit used/unused classification of the data channels. A map may hold
// fewer than two used channels (the sniffer builds maps incrementally), but
// every operation that selects channels requires valid().
class ChannelMap {
 public:
  static constexpr std::uint64_t kAllMask = (std::uint64_t{1} << kNumDataChannels) - 1;

  constexpr ChannelMap() = default;

  static constexpr ChannelMap full() { return ChannelMap(kAllMask); }
  static ChannelMap from_bits(std::uint64_t bits);
  static ChannelMap from_channels(std::span<const int> channels);
  static ChannelMap from_channels(std::initializer_list<int> channels) {
    return from_channels(std::span<const int>(channels.begin(), channels.size()));
  }
  // "full", or a hex mask with bit i = data channel i ("0x1ffffffff" style,
  // prefix optional).
  static std::optional<ChannelMap> parse(std::string_view text);

  bool used(int channel) const;
  void set(int channel, bool used);
  int popcount() const;
  bool valid() const { return popcount() >= kMinUsedChannels; }
  std::vector<Channel> used_list() const;
  constexpr std::uint64_t bits() const { return bits_; }
  // Ten lowercase hex digits, no prefix.
  std::string to_hex() const;

  friend constexpr bool operator==(ChannelMap, ChannelMap) = default;

 private:
  constexpr explicit ChannelMap(std::uint64_t bits) : bits_(bits) {}

  std::uint64_t bits_ = 0;
};

std::ostream& operator<<(std::ostream& os, ChannelMap map);

struct ConnectionParams {
  std::uint32_t access_address = 0x50654c45;
  Micros interval{100'000};
  int hop_increment = 7;
  ChannelMap channel_map = ChannelMap::full();
  int last_unmapped = 0;
};

struct Violation {
  std::string field;
  std::string message;
};

// Every violated invariant of `params`; empty means valid.
std::vector<Violation> validate_params(const ConnectionParams& params);
std::string describe(std::span<const Violation> violations);

// Throws Error(kInvalidParams) listing all violations.
void require_valid(const ConnectionParams& params);

struct HopState {
  int last_unmapped = 0;
  // Diagnostics only; CSA#1 does not use the counter.
  std::uint64_t event_counter = 0;
};

int unmapped_next(const HopState& state, int hop_increment);

// Used channels pass through; unused ones go to used_list[unmapped % popcount].
Channel remap(int unmapped, const ChannelMap& map);

struct Hop {
  Channel channel;
  HopState next;
};

// The new state's last_unmapped is the pre-remap value.
Hop select_next_channel(const HopState& state, int hop_increment, const ChannelMap& map);

struct SequenceEntry {
  std::uint64_t event;
  Channel channel;

  friend bool operator==(const SequenceEntry&, const SequenceEntry&) = default;
};

std::vector<SequenceEntry> hop_sequence(const ConnectionParams& params, std::size_t count);

// Inverse of x modulo 37, in [1, 36]. Throws Error(kNoInverse) if x ≡ 0.
int mod_inverse(long long x);

// Non-negative residue of x modulo 37.
constexpr int mod37(long long x) {
  const long long r = x % kNumDataChannels;
  return static_cast<int>(r < 0 ? r + kNumDataChannels : r);
}

// Golden hop-sequence fixtures: one `event_index,channel` line per entry.
void write_fixture(std::ostream& os, std::span<const SequenceEntry> sequence);
std::vector<SequenceEntry> read_fixture(std::istream& is);

}  // namespace afh
}  // namespace hopcrack

#endif  // HOPCRACK_AFH_H
