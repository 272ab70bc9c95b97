#include <doctest.h>

#include <sstream>

#include "hopcrack/afh.h"
#include "hopcrack/error.h"
#include "hopcrack/sim.h"

using namespace hopcrack;
using namespace hopcrack::sim;
using afh::ChannelMap;

namespace {

constexpr Micros kInterval{100'000};

afh::ConnectionParams make_params(int h = 7, ChannelMap map = ChannelMap::full(), int luc = 0) {
  afh::ConnectionParams p;
  p.interval = kInterval;
  p.hop_increment = h;
  p.channel_map = map;
  p.last_unmapped = luc;
  return p;
}

ChannelMap first_n(int n) {
  ChannelMap m;
  for (int c = 0; c < n; ++c) m.set(c, true);
  return m;
}

Simulation make_sim(const afh::ConnectionParams& p, LossModel loss = {},
                    MapUpdateSchedule schedule = MapUpdateSchedule::none(), std::uint64_t seed = 1,
                    RadioConfig radio = {}) {
  return Simulation(VictimConnection(p, std::move(schedule), std::move(loss), seed), radio);
}

}  // namespace

TEST_CASE("first period of events follows the reference hop sequence") {
  const auto p = make_params(11, first_n(20), 30);
  auto sim = make_sim(p);
  const auto events = sim.advance(kInterval * 37);
  const auto ref = afh::hop_sequence(p, 37);
  REQUIRE(events.size() == 37);
  for (std::size_t k = 0; k < 37; ++k) {
    CHECK(events[k].channel == ref[k].channel);
    CHECK(events[k].anchor == kInterval * static_cast<long long>(k));
  }
}

TEST_CASE("a 15 s update period at 100 ms changes the map at event 150") {
  auto sim = make_sim(make_params(), {}, MapUpdateSchedule::fixed(Micros{15'000'000}, {first_n(9)}));
  auto& conn = sim.connection();
  CHECK(conn.event(149).map_epoch == 0);
  CHECK(conn.event(150).map_epoch == 1);
  CHECK(conn.event(149).carries_map_update);
  CHECK_FALSE(conn.event(148).carries_map_update);
  CHECK(conn.map_in_force(Micros{14'999'999}) == ChannelMap::full());
  CHECK(conn.map_in_force(Micros{15'000'000}) == first_n(9));
  CHECK(first_n(9).used(conn.event(150).channel));
}

TEST_CASE("a one-channel map in the schedule is rejected at construction") {
  CHECK_THROWS_AS(MapUpdateSchedule::fixed(Micros{1'000'000}, {ChannelMap::from_channels({3})}), Error);
  CHECK_THROWS_AS(VictimConnection(make_params(7, ChannelMap::from_channels({3})), MapUpdateSchedule::none(),
                                   {}, 1),
                  Error);
}

TEST_CASE("advance materialises exactly the events in the span") {
  auto sim = make_sim(make_params());
  CHECK(sim.advance(kInterval * 10).size() == 10);
  CHECK(sim.now() == kInterval * 10);
  CHECK(sim.advance(sim.now()).empty());
  const auto next = sim.advance(kInterval * 20);
  REQUIRE(next.size() == 10);
  CHECK(next.front().index == 10);
}

TEST_CASE("anchors are exactly one interval apart") {
  auto sim = make_sim(make_params(9, first_n(13)));
  const auto events = sim.advance(kInterval * 500);
  for (std::size_t k = 1; k < events.size(); ++k) CHECK(events[k].anchor - events[k - 1].anchor == kInterval);
}

TEST_CASE("certain loss on one channel drops every master packet there") {
  LossModel loss;
  loss.set(5, 1.0);
  auto sim = make_sim(make_params(), loss);
  int on_five = 0;
  for (const auto& ev : sim.advance(kInterval * 370)) {
    if (ev.channel == 5) {
      ++on_five;
      CHECK(ev.master_lost);
    } else {
      CHECK_FALSE(ev.master_lost);
    }
  }
  CHECK(on_five == 10);
}

TEST_CASE("loss model validation") {
  LossModel loss;
  CHECK_THROWS_AS(loss.set(0, 1.5), Error);
  CHECK_THROWS_AS(loss.set(37, 0.5), Error);
  CHECK_THROWS_AS(LossModel::uniform(-0.1), Error);
  CHECK(LossModel::uniform(0.25).probability(36) == doctest::Approx(0.25));
}

TEST_CASE("tune and observe") {
  SUBCASE("events on the tuned channel are heard") {
    auto sim = make_sim(make_params());  // first event on channel 7, then 14, ..., event 36 on 0
    sim.tune(0);
    const auto obs = sim.observe(kInterval * 37);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].channel == 0);
    CHECK(obs[0].time == kInterval * 36);
    CHECK(obs[0].role == Role::kMaster);
    CHECK(obs[0].access_address == make_params().access_address);
  }
  SUBCASE("events on other channels are not") {
    auto sim = make_sim(make_params());
    sim.tune(0);
    CHECK(sim.observe(kInterval).empty());  // event 0 is on channel 7
  }
  SUBCASE("advertising channels are rejected") {
    auto sim = make_sim(make_params());
    CHECK_THROWS_AS(sim.tune(38), Error);
    CHECK_THROWS_AS(sim.tune(-1), Error);
  }
  SUBCASE("observing untuned fails") {
    auto sim = make_sim(make_params());
    CHECK_THROWS_AS(sim.observe(kInterval), Error);
  }
}

TEST_CASE("full map: any used channel is heard once per period") {
  for (int c : {0, 7, 19, 36}) {
    auto sim = make_sim(make_params(7));
    sim.skip_to(Micros{1234});
    sim.tune(c);
    CHECK(sim.observe(kInterval * 37).size() == 1);
  }
}

TEST_CASE("nine-channel map: a channel with five appearances yields five observations") {
  const auto p = make_params(7, first_n(9), 3);
  int expected = 0;
  for (const auto& e : afh::hop_sequence(p, 37)) expected += e.channel == 0 ? 1 : 0;
  REQUIRE(expected == 5);
  auto sim = make_sim(p);
  sim.tune(0);
  CHECK(sim.observe(kInterval * 37).size() == 5);
}

TEST_CASE("certain loss everywhere hears nothing") {
  auto sim = make_sim(make_params(), LossModel::uniform(1.0));
  sim.tune(7);
  CHECK(sim.observe(kInterval * 100).empty());
}

TEST_CASE("a lost master packet is reported through the slave reply") {
  // Find a seed where event 0 loses the master but keeps the slave packet.
  for (std::uint64_t seed = 1; seed < 200; ++seed) {
    auto sim = make_sim(make_params(), LossModel::uniform(0.5), MapUpdateSchedule::none(), seed);
    const auto ev = sim.connection().event(0);
    if (!ev.master_lost || ev.slave_lost) continue;
    sim.tune(ev.channel);
    const auto obs = sim.observe(kInterval);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].role == Role::kSlave);
    CHECK(obs[0].time == ev.anchor + afh::kInterFrameSpace);
    return;
  }
  FAIL("no suitable seed");
}

TEST_CASE("each event is reported at most once across window boundaries") {
  auto sim = make_sim(make_params(), LossModel::uniform(0.5), MapUpdateSchedule::none(), 3);
  sim.tune(7);
  std::size_t total = 0;
  for (int i = 0; i < 37 * 40; ++i) total += sim.observe(Micros{2500}).size();
  std::size_t audible = 0;
  for (const auto& ev : sim.connection().log()) {
    if (ev.channel == 7 && ev.anchor + afh::kInterFrameSpace < sim.now() && (!ev.master_lost || !ev.slave_lost)) {
      ++audible;
    }
  }
  CHECK(total == audible);
}

TEST_CASE("retune latency blinds the radio briefly") {
  const auto p = make_params();
  auto sim = make_sim(p, {}, MapUpdateSchedule::none(), 1, RadioConfig{Micros{20'000}, false});
  sim.skip_to(kInterval * 36 - Micros{10'000});
  sim.tune(0);
  CHECK(sim.observe(kInterval).empty());
  CHECK_THROWS_AS(make_sim(p, {}, MapUpdateSchedule::none(), 1, RadioConfig{Micros{50'001}, false}), Error);
}

TEST_CASE("identical inputs give identical logs") {
  auto run = [] {
    auto sim = make_sim(make_params(13, first_n(22), 5), LossModel::uniform(0.3),
                        MapUpdateSchedule::churn(Micros{2'000'000}, first_n(22), 77), 42);
    for (int c = 0; c < 37; ++c) {
      sim.tune(c);
      (void)sim.observe(Micros{730'000});
    }
    std::ostringstream events, obs;
    write_event_log(events, sim.connection().log());
    write_observation_log(obs, sim.observation_log());
    return events.str() + "|" + obs.str();
  };
  CHECK(run() == run());
}

TEST_CASE("every observation matches a live event on the tuned channel") {
  auto sim = make_sim(make_params(6, first_n(15), 2), LossModel::uniform(0.2),
                      MapUpdateSchedule::churn(Micros{1'500'000}, first_n(15), 5), 9);
  for (int round = 0; round < 200; ++round) {
    sim.tune((round * 5) % 37);
    (void)sim.observe(Micros{230'000});
  }
  auto& conn = sim.connection();
  REQUIRE_FALSE(sim.observation_log().empty());
  for (const auto& o : sim.observation_log()) {
    const Micros anchor = o.role == Role::kMaster ? o.time : o.time - afh::kInterFrameSpace;
    const auto& ev = conn.event(static_cast<std::uint64_t>((anchor - conn.first_anchor()) / kInterval));
    CHECK(ev.anchor == anchor);
    CHECK(ev.channel == o.channel);
    CHECK((o.role == Role::kMaster ? !ev.master_lost : !ev.slave_lost));
  }
}

TEST_CASE("event channels follow the map in force") {
  const ChannelMap base = first_n(25);
  auto sim = make_sim(make_params(9, base, 17), {}, MapUpdateSchedule::churn(Micros{1'000'000}, base, 3));
  auto& conn = sim.connection();
  afh::HopState state{17, 0};
  for (std::uint64_t k = 0; k < 2000; ++k) {
    const auto& ev = conn.event(k);
    const afh::Hop hop = afh::select_next_channel(state, 9, conn.map(ev.map_epoch));
    CHECK(ev.channel == hop.channel);
    state = hop.next;
  }
}

TEST_CASE("churn updates stay above the floor and always change the map") {
  const ChannelMap base = first_n(20);
  auto sim = make_sim(make_params(7, base), {}, MapUpdateSchedule::churn(Micros{1'000'000}, base, 11, 5, 10));
  auto& conn = sim.connection();
  for (std::size_t e = 1; e < 100; ++e) {
    const ChannelMap m = conn.map(e);
    CHECK(m.popcount() >= 15);
    CHECK(m.popcount() <= 19);
    CHECK((m.bits() & ~base.bits()) == 0);
    CHECK(m != conn.map(e - 1));
  }
}

TEST_CASE("control PDUs are decoded only by a decoding radio") {
  const auto p = make_params();
  const auto schedule = [] { return MapUpdateSchedule::fixed(Micros{3'700'000}, {first_n(9)}); };
  auto plain = make_sim(p, {}, schedule());
  auto decoding = make_sim(p, {}, schedule(), 1, RadioConfig{Micros{0}, true});
  const auto& carrier = decoding.connection().event(36);
  REQUIRE(carrier.carries_map_update);
  for (Simulation* s : {&plain, &decoding}) {
    s->tune(carrier.channel);
    (void)s->observe(kInterval * 37);
  }
  REQUIRE(plain.observation_log().size() == 1);
  CHECK_FALSE(plain.observation_log()[0].announced_map.has_value());
  REQUIRE(decoding.observation_log().size() == 1);
  CHECK(decoding.observation_log()[0].announced_map == first_n(9));
  CHECK(decoding.observation_log()[0].announced_instant == Micros{3'700'000});

  LossModel forced;
  forced.force_control_miss(1);
  auto missed = make_sim(p, forced, schedule(), 1, RadioConfig{Micros{0}, true});
  CHECK(missed.connection().event(36).control_lost);
  CHECK_FALSE(missed.connection().event(36).master_lost);
}

TEST_CASE("log exporters") {
  auto sim = make_sim(make_params(), LossModel::uniform(1.0));
  const auto events = sim.advance(kInterval * 2);
  std::ostringstream os;
  write_event_log(os, events);
  CHECK(os.str() == "0,7,1,1\n100000,14,1,1\n");

  std::ostringstream obs;
  const PacketObservation o{Micros{150}, 3, 0xabc, Role::kSlave, std::nullopt, std::nullopt};
  write_observation_log(obs, std::span(&o, 1));
  CHECK(obs.str() == "150,3,00000abc,slave\n");
}
