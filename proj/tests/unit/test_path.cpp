#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "torsel/common/error.hpp"
#include "torsel/path/select.hpp"
#include "torsel/sim/engine.hpp"

using namespace torsel;
using path::Algo;
using sim::Circuit;

namespace {

path::WeightTable table(std::vector<net::RelayId> ids, std::vector<double> w) {
  path::WeightTable t;
  t.position = path::Position::guard;
  t.ids = std::move(ids);
  t.weights = std::move(w);
  return t;
}

sim::ProbeFn idle_probe(const net::NetworkModel& n) {
  return [&n](const Circuit& c, Rng& r) {
    return sim::probe_rtt(n, n.clients()[0].id, c, sim::LoadState::idle(n.relays().size()), r);
  };
}

std::vector<std::vector<net::EndpointId>> random_destination_sets(const net::NetworkModel& n, Rng& rng) {
  std::vector<std::vector<net::EndpointId>> out;
  for (std::size_t i = 0; i < n.clients().size(); ++i) {
    std::vector<net::EndpointId> d;
    for (int k = 0; k < 5; ++k) d.push_back(n.destinations()[rng.below(n.destinations().size())].id);
    out.push_back(d);
  }
  return out;
}

}  // namespace

TEST_CASE("guard assignment follows weights") {
  Rng rng(7);
  const auto t = table({10, 20}, {1.0, 3.0});
  int a = 0, b = 0;
  for (int i = 0; i < 10000; ++i) (path::guard_assignment(t, rng) == 10 ? a : b)++;
  CHECK(static_cast<double>(b) / a == doctest::Approx(3.0).epsilon(0.05));

  const auto one = table({4}, {2.5});
  for (int i = 0; i < 100; ++i) REQUIRE(path::guard_assignment(one, rng) == 4);
  CHECK_THROWS_AS(path::guard_assignment(path::WeightTable{}, rng), SelectionError);
}

TEST_CASE("sticky guards are reproducible") {
  const auto n = net::generate_network(fx::desk(42));
  path::Consensus c(n);
  for (const auto& cl : n.clients()) {
    const auto g = path::sticky_guard(c, {}, cl.id, 9);
    REQUIRE(g == path::sticky_guard(c, {}, cl.id, 9));
    REQUIRE(n.relay(g).is_guard);
  }
}

TEST_CASE("vanilla selection") {
  const auto trio = fx::flat_world({1000, 1000, 1000}, {true, false, false}, {false, false, true});
  path::Consensus ct(trio);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) REQUIRE(path::vanilla_select(ct, 0, rng) == Circuit{0, 1, 2});

  // Relay 0 is the guard, relays 1..4 exits weighted 1:2:3:4.
  const auto n = fx::flat_world({500, 100, 200, 300, 400}, {true, false, false, false, false},
                                {false, true, true, true, true});
  path::Consensus c(n);
  std::map<net::RelayId, int> exits;
  for (int i = 0; i < 10000; ++i) {
    const auto circ = path::vanilla_select(c, 0, rng);
    REQUIRE(circ.guard == 0);
    REQUIRE(sim::is_valid(circ, n));
    ++exits[circ.exit];
  }
  for (int id = 1; id <= 4; ++id) CHECK(exits[id] / 10000.0 == doctest::Approx(id / 10.0).epsilon(0.05));

  const auto two = fx::flat_world({1, 1}, {true, true}, {true, true});
  path::Consensus c2(two);
  CHECK_THROWS_AS(path::vanilla_select(c2, 0, rng), SelectionError);
}

TEST_CASE("predictor selection") {
  const auto n = net::generate_network(fx::desk(42));
  path::Consensus c(n);
  const auto guard = c.guard.ids[0];

  SUBCASE("accept-all is vanilla") {
    Rng a(3), b(3);
    for (int i = 0; i < 200; ++i) {
      const auto o = path::predictor_select(c, guard, [](const Circuit&) { return 1.0; }, a);
      REQUIRE(o.circuit == path::vanilla_select(c, guard, b));
      REQUIRE(o.tries == 1);
      REQUIRE_FALSE(o.failed_open);
    }
  }
  SUBCASE("coin-flip acceptance takes two tries on average") {
    Rng coin(5), rng(6);
    const path::CircuitScorer half = [&coin](const Circuit&) { return coin.uniform() < 0.5 ? 1.0 : 0.0; };
    double tries = 0;
    for (int i = 0; i < 10000; ++i) tries += path::predictor_select(c, guard, half, rng).tries;
    CHECK(tries / 10000.0 == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("reject-all fails open with the first best proposal") {
    Rng a(8), b(8);
    const auto o = path::predictor_select(c, guard, [](const Circuit&) { return 0.1; }, a, 7);
    CHECK(o.tries == 7);
    CHECK(o.failed_open);
    CHECK(o.circuit == path::vanilla_select(c, guard, b));
  }
  SUBCASE("argument errors") {
    Rng r(1);
    CHECK_THROWS_AS(path::predictor_select(c, guard, {}, r), SelectionError);
    CHECK_THROWS_AS(path::predictor_select(c, guard, [](const Circuit&) { return 1.0; }, r, 0), SelectionError);
  }
}

TEST_CASE("congestion-aware routing arithmetic") {
  path::CarState s;
  for (double rtt : {0.8, 0.5, 0.9}) s.observe(rtt);
  CHECK(s.min_rtt == 0.5);
  CHECK(s.latest == doctest::Approx(0.4));
  CHECK(path::car_congestion(0.7, s) == doctest::Approx(0.2));
  CHECK(path::car_congestion(0.3, s) == 0.0);

  path::CarState hot, cool;
  hot.observe(0.1);
  cool.observe(0.1);
  for (int i = 0; i < 4; ++i) {
    hot.observe(0.7);
    cool.observe(0.5);
  }
  CHECK_FALSE(path::car_should_switch(hot));  // the first sample still sits in the window
  hot.observe(0.7);
  cool.observe(0.5);
  CHECK(hot.mean_congestion() == doctest::Approx(0.6));
  CHECK(path::car_should_switch(hot));
  CHECK(cool.mean_congestion() == doctest::Approx(0.4));
  CHECK_FALSE(path::car_should_switch(cool));

  std::vector<path::CarState> same(3);
  for (auto& x : same) x.observe(0.3);
  CHECK(path::car_pick(same) == 0);
  same[2].observe(0.1);
  same[2].observe(0.2);
  CHECK(path::car_pick(same) == 0);
  same[0].observe(0.9);
  CHECK(path::car_pick(same) == 1);
  CHECK_THROWS_AS(path::car_pick(std::span(same.data(), 2)), SelectionError);
}

TEST_CASE("snader-borisov index family") {
  CHECK(path::sb_index(100, 15.0, 0.5) == 0);
  CHECK(path::sb_index(100, 15.0, 0.0) == 0);
  CHECK(path::sb_index(100, 15.0, 1.0) == 99);
  CHECK(path::sb_index(100, 1.0, 0.5) == 41);  // floor(100 (1 - sqrt 2) / (1 - 2))
  CHECK_THROWS_AS(path::sb_index(10, 0.0, 0.5), SelectionError);
  CHECK_THROWS_AS(path::sb_index(0, 1.0, 0.5), SelectionError);

  std::vector<net::RelayId> ids(10);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(11);
  std::vector<int> hist(10, 0);
  for (int i = 0; i < 10000; ++i) ++hist[path::sb_select(ids, 1e-9, rng)];
  double chi2 = 0.0;
  for (int h : hist) chi2 += (h - 1000.0) * (h - 1000.0) / 1000.0;
  CHECK(chi2 < 27.88);  // 0.999 quantile, nine degrees of freedom

  const auto n = net::generate_network(fx::desk(42));
  const auto sorted = path::by_bandwidth_desc(n);
  REQUIRE(sorted.size() == n.relays().size());
  for (std::size_t i = 1; i < sorted.size(); ++i) REQUIRE(n.relay(sorted[i - 1]).bandwidth >= n.relay(sorted[i]).bandwidth);
  auto mean_bw = [&](double s) {
    Rng r(12);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += static_cast<double>(n.relay(path::sb_select(sorted, s, r)).bandwidth);
    return sum / 10000.0;
  };
  CHECK(mean_bw(15.0) > mean_bw(9.0));
}

TEST_CASE("exit filter") {
  const auto n = net::generate_network(fx::desk(42));
  path::Consensus c(n);
  Rng rng(21);
  const auto sets = random_destination_sets(n, rng);

  for (const auto& d : sets) {
    const auto all = path::e_select_survivors(n, c.exit, d, 1.0);
    REQUIRE(all == c.exit.ids);
    auto prev = all;
    for (double tau : {0.3, 0.2, 0.1}) {
      const auto cur = path::e_select_survivors(n, c.exit, d, tau);
      REQUIRE_FALSE(cur.empty());
      REQUIRE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end(),
                            [&](auto a, auto b) { return n.relay_index(a) < n.relay_index(b); }));
      prev = cur;
    }
  }

  // With the filter off the draw matches the plain weighted exit draw.
  const auto guard = c.guard.ids[0];
  Rng a(4), b(4);
  for (int i = 0; i < 200; ++i)
    REQUIRE(path::denasa_e_select(n, c.exit, sets[0], 1.0, a, {guard}) == path::draw_excluding(c.exit, b, {guard}));

  // The fallback never returns a relay the circuit already holds.
  for (const auto& d : sets)
    for (auto g : c.guard.ids)
      if (n.relay(g).is_exit) REQUIRE(path::denasa_e_select(n, c.exit, d, 0.01, rng, {g}) != g);
}

TEST_CASE("guard filter") {
  const auto n = net::generate_network(fx::desk(42));
  path::Consensus c(n);
  for (const auto& cl : n.clients()) {
    auto prev = path::denasa_g_select(n, c.guard, cl.id, 0);
    REQUIRE(prev == c.guard.ids);
    for (int k = 1; k <= 2; ++k) {
      const auto cur = path::denasa_g_select(n, c.guard, cl.id, k);
      REQUIRE(std::all_of(cur.begin(), cur.end(), [&](auto id) {
        return std::find(prev.begin(), prev.end(), id) != prev.end();
      }));
      prev = cur;
    }
  }

  // Client and relays only reach each other through AS 3356.
  const auto trapped = fx::flat_world({1, 1, 1}, {true, true, true}, {true, true, true});
  path::Consensus ct(trapped);
  CHECK(path::denasa_g_select(trapped, ct.guard, 3, 0).size() == 3);
  try {
    path::denasa_g_select(trapped, ct.guard, 3, 1);
    FAIL("expected starvation");
  } catch (const SelectionError& e) {
    CHECK(std::string(e.what()).find("g-select starvation") != std::string::npos);
  }
  CHECK_THROWS_AS(path::denasa_g_select(trapped, ct.guard, 3, 9), SelectionError);
}

TEST_CASE("predictor with congestion-aware routing reduces to its parts") {
  const auto n = net::generate_network(fx::desk(42));
  const auto probe = idle_probe(n);
  const path::CircuitBuilder car(n, {Algo::car});
  const path::CircuitBuilder accept(n, {Algo::predictor_car}, [](const Circuit&) { return 0.9; });
  const path::CircuitBuilder reject(n, {Algo::predictor_car, 9.0, 4}, [](const Circuit&) { return 0.0; });
  const auto guard = path::Consensus(n).guard.ids[1];
  for (int i = 0; i < 50; ++i) {
    Rng a(100 + i), b(100 + i);
    path::CarState sa, sb;
    REQUIRE(accept.build(guard, {}, a, probe, &sa) == car.build(guard, {}, b, probe, &sb));
    REQUIRE(sa.latest == sb.latest);

    Rng r(200 + i);
    int tries = 0;
    const auto circ = reject.build(guard, {}, r, probe, nullptr, &tries);
    REQUIRE(tries == 3 * 4);
    REQUIRE(sim::is_valid(circ, n));
  }
  CHECK_THROWS_AS(path::CircuitBuilder(n, {Algo::predictor}), SelectionError);
  Rng r(1);
  CHECK_THROWS_AS(car.build(guard, {}, r, {}), SelectionError);
}

TEST_CASE("every algorithm builds valid circuits") {
  const auto n = net::generate_network(fx::desk(42));
  Rng rng(31);
  const auto sets = random_destination_sets(n, rng);
  const path::CircuitScorer scorer = [](const Circuit& c) { return (c.exit % 3 == 0) ? 0.8 : 0.2; };
  sim::Workload w;
  w.epochs = 2;
  w.streams_per_epoch = 3;
  for (const auto& spec : std::vector<path::AlgoSpec>{{Algo::vanilla},
                                                     {Algo::predictor},
                                                     {Algo::car},
                                                     {Algo::sb, 15.0},
                                                     {Algo::denasa, 9.0, 50, 0.2, 2},
                                                     {Algo::predictor_car}}) {
    CAPTURE(path::to_string(spec.algo));
    path::PolicyInputs in{n, spec, spec.needs_model() ? scorer : path::CircuitScorer{}, 5, &sets};
    const auto r = sim::run_epochs(n, path::make_policies(in), w, 5, {}, sets);
    REQUIRE(r.size() == n.clients().size() * 6);
    std::map<net::EndpointId, net::RelayId> guard_of;
    for (const auto& x : r) {
      REQUIRE(sim::is_valid(x.circuit, n));
      const auto [it, fresh] = guard_of.emplace(x.client, x.circuit.guard);
      REQUIRE(it->second == x.circuit.guard);
    }
  }
}

TEST_CASE("algorithm names and parameters") {
  for (auto a : {Algo::vanilla, Algo::predictor, Algo::car, Algo::sb, Algo::denasa, Algo::predictor_car})
    CHECK(path::algo_from(path::to_string(a)) == a);
  CHECK_THROWS_AS(path::algo_from("tor"), ConfigError);
  CHECK_THROWS_AS((path::AlgoSpec{Algo::sb, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((path::AlgoSpec{Algo::predictor, 9.0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((path::AlgoSpec{Algo::denasa, 9.0, 50, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((path::AlgoSpec{Algo::denasa, 9.0, 50, 0.5, 9}.validate()), ConfigError);
}
