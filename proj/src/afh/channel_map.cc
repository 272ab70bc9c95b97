#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <ostream>

#include "hopcrack/afh.h"
#include "hopcrack/error.h"

namespace hopcrack::afh {

ChannelMap ChannelMap::from_bits(std::uint64_t bits) {
  if ((bits & ~kAllMask) != 0) {
    throw Error(ErrorCode::kInvalidMap, "channel map sets bits above data channel 36");
  }
  return ChannelMap(bits);
}

ChannelMap ChannelMap::from_channels(std::span<const int> channels) {
  ChannelMap map;
  for (int c : channels) map.set(c, true);
  return map;
}

std::optional<ChannelMap> ChannelMap::parse(std::string_view text) {
  if (text == "full") return full();
  if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
  if (text.empty() || text.size() > 10) return std::nullopt;
  std::uint64_t bits = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), bits, 16);
  if (ec != std::errc{} || end != text.data() + text.size()) return std::nullopt;
  if ((bits & ~kAllMask) != 0) return std::nullopt;
  return ChannelMap(bits);
}

bool ChannelMap::used(int channel) const {
  if (!is_data_channel(channel)) {
    throw Error(ErrorCode::kOutOfRange, "not a data channel: " + std::to_string(channel));
  }
  return (bits_ >> channel) & 1U;
}

void ChannelMap::set(int channel, bool used) {
  if (!is_data_channel(channel)) {
    throw Error(ErrorCode::kOutOfRange, "not a data channel: " + std::to_string(channel));
  }
  const std::uint64_t bit = std::uint64_t{1} << channel;
  bits_ = used ? (bits_ | bit) : (bits_ & ~bit);
}

int ChannelMap::popcount() const { return std::popcount(bits_); }

std::vector<Channel> ChannelMap::used_list() const {
  std::vector<Channel> out;
  out.reserve(static_cast<std::size_t>(popcount()));
  for (int c = 0; c < kNumDataChannels; ++c) {
    if ((bits_ >> c) & 1U) out.push_back(static_cast<Channel>(c));
  }
  return out;
}

std::string ChannelMap::to_hex() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%010llx", static_cast<unsigned long long>(bits_));
  return buf;
}

std::ostream& operator<<(std::ostream& os, ChannelMap map) { return os << "0x" << map.to_hex(); }

}  // namespace hopcrack::afh
