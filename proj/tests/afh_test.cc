#include <doctest.h>

#include <sstream>

#include "hopcrack/afh.h"
#include "hopcrack/error.h"

using namespace hopcrack;
using namespace hopcrack::afh;

namespace {

ChannelMap first_n(int n) {
  ChannelMap m;
  for (int c = 0; c < n; ++c) m.set(c, true);
  return m;
}

ConnectionParams params(Micros interval, int h, ChannelMap map = ChannelMap::full(), int luc = 0) {
  ConnectionParams p;
  p.interval = interval;
  p.hop_increment = h;
  p.channel_map = map;
  p.last_unmapped = luc;
  return p;
}

bool has_field(const std::vector<Violation>& v, const std::string& field) {
  for (const auto& x : v) {
    if (x.field == field) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("validate_params accepts the lower bounds") {
  CHECK(validate_params(params(Micros{7500}, 5)).empty());
}

TEST_CASE("validate_params flags a hop increment below 5") {
  const auto v = validate_params(params(Micros{100'000}, 4));
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "h_inc");
}

TEST_CASE("validate_params flags an interval off the 1250us grid") {
  const auto v = validate_params(params(Micros{100'001}, 7));
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "c_int");
  CHECK(v[0].message.find("1250") != std::string::npos);
}

TEST_CASE("validate_params reports every violation at once") {
  ConnectionParams p = params(Micros{1000}, 17, ChannelMap::from_channels({3}), 40);
  const auto v = validate_params(p);
  CHECK(has_field(v, "c_int"));
  CHECK(has_field(v, "h_inc"));
  CHECK(has_field(v, "c_map"));
  CHECK(has_field(v, "luc"));
  CHECK_THROWS_AS(require_valid(p), Error);
  try {
    require_valid(p);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidParams);
  }
}

TEST_CASE("validate_params bounds on interval") {
  CHECK(validate_params(params(Micros{4'000'000}, 16)).empty());
  CHECK(has_field(validate_params(params(Micros{4'001'250}, 16)), "c_int"));
  CHECK(has_field(validate_params(params(Micros{6250}, 16)), "c_int"));
}

TEST_CASE("unmapped_next") {
  CHECK(unmapped_next({0, 0}, 7) == 7);
  CHECK(unmapped_next({30, 0}, 7) == 0);
  CHECK(unmapped_next({36, 0}, 16) == 15);
  CHECK_THROWS_AS(unmapped_next({0, 0}, 4), Error);
  CHECK_THROWS_AS(unmapped_next({0, 0}, 17), Error);
  const HopState s{12, 3};
  (void)unmapped_next(s, 9);
  CHECK(s.last_unmapped == 12);
}

TEST_CASE("remap") {
  CHECK(remap(7, ChannelMap::full()) == 7);
  CHECK(remap(16, first_n(9)) == 7);
  CHECK(remap(3, ChannelMap::from_channels({2, 3})) == 3);
  CHECK_THROWS_AS(remap(3, ChannelMap::from_channels({2})), Error);
  CHECK_THROWS_AS(remap(37, ChannelMap::full()), Error);
}

TEST_CASE("select_next_channel") {
  const Hop a = select_next_channel({0, 0}, 7, ChannelMap::full());
  CHECK(a.channel == 7);
  CHECK(a.next.last_unmapped == 7);
  CHECK(a.next.event_counter == 1);

  const Hop b = select_next_channel({0, 0}, 16, first_n(9));
  CHECK(b.channel == 7);
  CHECK(b.next.last_unmapped == 16);

  HopState s{21, 0};
  for (int i = 0; i < 37; ++i) s = select_next_channel(s, 11, first_n(20)).next;
  CHECK(s.last_unmapped == 21);
  CHECK(s.event_counter == 37);
}

TEST_CASE("hop_sequence") {
  const auto seq = hop_sequence(params(Micros{100'000}, 7), 5);
  REQUIRE(seq.size() == 5);
  const int expected[] = {7, 14, 21, 28, 35};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(seq[i].event == i);
    CHECK(seq[i].channel == expected[i]);
  }

  // Over one full period with a full map every unmapped value shows up once.
  const auto period = hop_sequence(params(Micros{100'000}, 13, ChannelMap::full(), 4), 37);
  std::vector<int> seen(37, 0);
  for (const auto& e : period) ++seen[e.channel];
  for (int c = 0; c < 37; ++c) CHECK(seen[static_cast<std::size_t>(c)] == 1);

  ConnectionParams bad = params(Micros{100'000}, 7);
  bad.channel_map = ChannelMap::from_channels({4});
  CHECK_THROWS_AS(hop_sequence(bad, 5), Error);
}

TEST_CASE("mod_inverse") {
  CHECK(mod_inverse(1) == 1);
  CHECK(mod_inverse(2) == 19);
  CHECK(mod_inverse(36) == 36);
  CHECK(mod_inverse(-1) == 36);
  CHECK(mod_inverse(39) == 19);
  try {
    mod_inverse(74);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoInverse);
  }
}

TEST_CASE("ChannelMap basics") {
  CHECK(ChannelMap::full().popcount() == 37);
  CHECK(ChannelMap{}.popcount() == 0);
  CHECK_FALSE(ChannelMap::from_channels({5}).valid());
  CHECK(ChannelMap::from_channels({5, 9}).valid());
  CHECK(first_n(9).used_list() == std::vector<Channel>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  CHECK_THROWS_AS(ChannelMap::from_bits(std::uint64_t{1} << 37), Error);
  CHECK_THROWS_AS(ChannelMap::from_channels({37}), Error);
  CHECK_THROWS_AS((void)ChannelMap::full().used(-1), Error);

  CHECK(ChannelMap::full().to_hex() == "1fffffffff");
  CHECK(ChannelMap::parse("full") == ChannelMap::full());
  CHECK(ChannelMap::parse("0x1ff") == first_n(9));
  CHECK(ChannelMap::parse("1FF") == first_n(9));
  CHECK_FALSE(ChannelMap::parse("zz").has_value());
  CHECK_FALSE(ChannelMap::parse("3fffffffff").has_value());
  CHECK_FALSE(ChannelMap::parse("").has_value());
  const ChannelMap m = ChannelMap::from_channels({1, 8, 30});
  CHECK(ChannelMap::parse(m.to_hex()) == m);
}

TEST_CASE("fixture round trip") {
  const auto seq = hop_sequence(params(Micros{7500}, 9, first_n(11), 30), 50);
  std::stringstream ss;
  write_fixture(ss, seq);
  CHECK(ss.str().substr(0, 4) == "0,2\n");
  CHECK(read_fixture(ss) == seq);

  std::stringstream bad("0,7\nnot a line\n");
  CHECK_THROWS_AS(read_fixture(bad), Error);
}
