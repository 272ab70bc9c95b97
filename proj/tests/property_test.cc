#include <doctest.h>

#include <algorithm>
#include <random>

#include "hopcrack/afh.h"
#include "hopcrack/error.h"
#include "hopcrack/sniffer.h"
#include "oracle/csa_oracle.h"

using namespace hopcrack;
using namespace hopcrack::afh;

namespace {

ChannelMap random_map(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 37);
  std::vector<int> all(37);
  for (int c = 0; c < 37; ++c) all[static_cast<std::size_t>(c)] = c;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(size(rng)));
  return ChannelMap::from_channels(all);
}

bool matches_oracle(const ConnectionParams& p, int n) {
  const auto seq = hop_sequence(p, static_cast<std::size_t>(n));
  const auto ref = oracle::channels(p.last_unmapped, p.hop_increment,
                                    oracle::flags_from_bits(p.channel_map.bits()), n);
  for (int i = 0; i < n; ++i) {
    if (seq[static_cast<std::size_t>(i)].channel != ref[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("hop_sequence agrees with the naive reference on random parameters") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 1000; ++trial) {
    ConnectionParams p;
    p.hop_increment = std::uniform_int_distribution<int>(5, 16)(rng);
    p.last_unmapped = std::uniform_int_distribution<int>(0, 36)(rng);
    p.channel_map = random_map(rng);
    REQUIRE_MESSAGE(matches_oracle(p, 111), "map " << p.channel_map << " h " << p.hop_increment);
  }
}

TEST_CASE("hop_sequence agrees with the naive reference on every two-channel map") {
  for (int a = 0; a < 37; ++a) {
    for (int b = a + 1; b < 37; ++b) {
      for (int h = 5; h <= 16; ++h) {
        ConnectionParams p;
        p.hop_increment = h;
        p.last_unmapped = (a * 7 + b) % 37;
        p.channel_map = ChannelMap::from_channels({a, b});
        REQUIRE(matches_oracle(p, 37));
      }
    }
  }
}

TEST_CASE("unmapped sequence has period exactly 37 for every increment and start") {
  for (int h = 5; h <= 16; ++h) {
    for (int luc = 0; luc < 37; ++luc) {
      HopState s{luc, 0};
      int first_return = 0;
      for (int k = 1; k <= 37; ++k) {
        s = select_next_channel(s, h, ChannelMap::full()).next;
        if (s.last_unmapped == luc) {
          first_return = k;
          break;
        }
      }
      REQUIRE(first_return == 37);
    }
  }
}

TEST_CASE("remap always lands on a used channel") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const ChannelMap m = random_map(rng);
    for (int u = 0; u < 37; ++u) REQUIRE(m.used(remap(u, m)));
  }
  for (int a = 0; a < 37; ++a) {
    for (int b = a + 1; b < 37; ++b) {
      const ChannelMap m = ChannelMap::from_channels({a, b});
      for (int u = 0; u < 37; ++u) {
        const int c = remap(u, m);
        REQUIRE((c == a || c == b));
        REQUIRE(c == oracle::mapped_channel(u, oracle::flags_from_bits(m.bits())));
      }
    }
  }
}

TEST_CASE("mod_inverse is an inverse for every nonzero residue") {
  for (int x = 1; x < 37; ++x) {
    const int y = mod_inverse(x);
    CHECK(y >= 1);
    CHECK(y <= 36);
    CHECK((x * y) % 37 == 1);
    CHECK(y == oracle::inverse(x));
  }
  CHECK_THROWS_AS(mod_inverse(0), Error);
}

TEST_CASE("the true increment is always among the pairwise candidates") {
  // Two truly mapped appearances: channel equals its unmapped value.
  const Micros interval{10'000};
  std::mt19937_64 rng(99);
  for (int popcount : {2, 9, 20, 37}) {
    for (int h = 5; h <= 16; ++h) {
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> all(37);
        for (int c = 0; c < 37; ++c) all[static_cast<std::size_t>(c)] = c;
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(static_cast<std::size_t>(popcount));
        const ChannelMap map = ChannelMap::from_channels(all);
        const int luc = std::uniform_int_distribution<int>(0, 36)(rng);

        // Find the first event of each used channel where it is truly mapped.
        HopState s{luc, 0};
        std::vector<std::pair<int, int>> truly;  // (event, channel)
        for (int k = 0; k < 37; ++k) {
          const Hop hop = select_next_channel(s, h, map);
          if (hop.channel == hop.next.last_unmapped) truly.emplace_back(k, hop.channel);
          s = hop.next;
        }
        REQUIRE(truly.size() == static_cast<std::size_t>(popcount));
        std::uniform_int_distribution<std::size_t> pick(0, truly.size() - 1);
        const auto x = truly[pick(rng)];
        auto y = truly[pick(rng)];
        if (x.second == y.second) continue;
        const Micros period = interval * 37;
        const sniff::AppearanceSet a{static_cast<Channel>(x.second), period, {interval * x.first}};
        const sniff::AppearanceSet b{static_cast<Channel>(y.second), period, {interval * y.first}};
        bool found = false;
        for (const auto& cand : sniff::candidate_increments(a, b, interval)) found |= cand.hop_increment == h;
        REQUIRE_MESSAGE(found, "popcount " << popcount << " h " << h);
      }
    }
  }
}

TEST_CASE("hop_sequence is a pure function") {
  ConnectionParams p;
  p.hop_increment = 11;
  p.last_unmapped = 19;
  p.channel_map = ChannelMap::from_channels({1, 4, 9, 16, 25, 36});
  CHECK(hop_sequence(p, 500) == hop_sequence(p, 500));
}
