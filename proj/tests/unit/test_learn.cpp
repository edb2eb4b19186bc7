#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/stats.hpp"
#include "torsel/learn/evaluate.hpp"
#include "torsel/learn/features.hpp"
#include "torsel/learn/forest.hpp"
#include "torsel/learn/knn.hpp"
#include "torsel/path/select.hpp"

using namespace torsel;

namespace {

// Circuits over a fixed 12-relay table, so each hop contributes a real
// (ASN, country, bandwidth) triple; fast exactly when the guard bandwidth
// exceeds 1000.
learn::Dataset separable(std::size_t n, std::uint64_t seed) {
  Rng table_rng(99);
  const double codes[] = {8583, 6869, 7082};
  std::vector<std::array<double, 3>> relays;
  for (int i = 0; i < 12; ++i)
    relays.push_back({static_cast<double>(65001 + table_rng.below(5)), codes[table_rng.below(3)],
                      std::round(100.0 + table_rng.uniform() * 1900.0)});
  Rng rng(seed);
  learn::Dataset d;
  d.n_features = learn::kCircuitFeatures;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x;
    for (int hop = 0; hop < 3; ++hop) {
      const auto& r = relays[rng.below(relays.size())];
      x.insert(x.end(), r.begin(), r.end());
    }
    d.add(x, x[2] > 1000.0 ? 1 : 0);
  }
  return d;
}

learn::ForestParams small_forest() {
  learn::ForestParams p;
  p.n_trees = 25;
  p.threads = 1;
  return p;
}

std::vector<sim::StreamRecord> desk_records() {
  const auto n = net::generate_network(fx::desk(42));
  sim::Workload w;
  w.epochs = 4;
  path::PolicyInputs in{n, {}, {}, 42, nullptr};
  return sim::run_epochs(n, path::make_policies(in), w, 42);
}

}  // namespace

TEST_CASE("country encoding") {
  CHECK(learn::encode_country("US") == 8583);
  CHECK(learn::encode_country("AA") == 6565);
  CHECK(learn::encode_country("ZZ") == 9090);
  for (const char* bad : {"A1", "us", "USA", "", "U"}) CHECK_THROWS_AS(learn::encode_country(bad), ValidationError);
}

TEST_CASE("feature extraction") {
  std::vector<net::Relay> rs = {fx::relay(0, 1500, 65010, true, false, 0, 0, "DE"),
                                fx::relay(1, 700, 65011, false, false, 0, 0, "FR"),
                                fx::relay(2, 2200, 65012, false, true, 0, 0, "NL")};
  const net::NetworkModel n(rs, {fx::endpoint(3, net::EndpointKind::client, 65020)},
                            {fx::endpoint(4, net::EndpointKind::destination, 65030, 0, 0, "JP")},
                            fx::topology({{65010, {3356}}, {65011, {3356}}, {65012, {3356}}, {65020, {1299}},
                                          {65030, {1299}}}));
  const sim::Circuit c{0, 1, 2};
  const std::vector<double> nine = {65010, 6869, 1500, 65011, 7082, 700, 65012, 7876, 2200};
  CHECK(learn::extract_features(c, n) == nine);
  auto eleven = nine;
  eleven.push_back(65030);
  eleven.push_back(7480);
  CHECK(learn::extract_features(c, n, 4) == eleven);
  CHECK(learn::extract_features({0, 2, 1}, n) != nine);
  CHECK_THROWS_AS(learn::extract_features({0, 1, 7}, n), LookupError);
}

TEST_CASE("labelling") {
  const auto n = net::generate_network(fx::desk(42));
  const auto r = desk_records();
  std::vector<double> t;
  for (const auto& x : r) t.push_back(x.ttlb_s);
  const double med = stats::median(t);

  const auto set = learn::label_samples(r, n, med);
  REQUIRE(set.samples.size() == r.size());
  const double share = static_cast<double>(set.positives()) / set.samples.size();
  CHECK(share >= 0.45);
  CHECK(share <= 0.55);
  for (const auto& s : set.samples) REQUIRE(s.label == (s.ttlb_s < med));

  CHECK(learn::label_samples(r, n, 0.0).positives() == 0);
  CHECK(learn::label_samples(r, n, std::numeric_limits<double>::infinity()).positives() == r.size());
  CHECK(learn::label_samples(r, n, r[0].ttlb_s).samples[0].label == false);  // the boundary is slow
  CHECK(learn::label_samples(r, n, med, true).samples[0].features.size() == learn::kPathFeatures);

  // Positives are monotone in tau and always partition the set.
  const auto grid = learn::tau_grid(set, 20);
  REQUIRE(grid.size() == 20);
  std::size_t prev = 0;
  for (double tau : grid) {
    const auto re = learn::relabel(set, tau);
    std::size_t neg = 0;
    for (const auto& s : re.samples) neg += s.label ? 0 : 1;
    REQUIRE(re.positives() + neg == re.samples.size());
    REQUIRE(re.positives() >= prev);
    prev = re.positives();
  }

  std::ostringstream out;
  learn::write_samples(out, learn::label_samples(std::span(r.data(), 1), n, med));
  CHECK(out.str().rfind("g_asn,g_cc,g_bw,m_asn,m_cc,m_bw,e_asn,e_cc,e_bw,ttlb_s,label\n", 0) == 0);
}

TEST_CASE("forest on a separable set") {
  const auto train = separable(2000, 1);
  const auto f = learn::Forest::train(train, small_forest(), 7);
  CHECK(f.trees().size() == 25);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < train.size(); ++i) ok += f.predict(train.row(i)) == train.y[i];
  CHECK(static_cast<double>(ok) / train.size() >= 0.99);

  const auto probe = separable(500, 2);
  ok = 0;
  for (std::size_t i = 0; i < probe.size(); ++i) ok += f.predict(probe.row(i)) == probe.y[i];
  CHECK(static_cast<double>(ok) / probe.size() >= 0.97);

  for (const auto& t : f.trees())
    for (const auto& node : t.nodes)
      if (node.feature < 0) REQUIRE(node.samples >= 5);

  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double s = f.score(probe.row(i));
    REQUIRE(s >= 0.0);
    REQUIRE(s <= 1.0);
    REQUIRE((f.predict(probe.row(i)) == 1) == (s >= 0.5));
  }
}

TEST_CASE("forest determinism and threading") {
  const auto train = separable(800, 3);
  const auto probe = separable(200, 4);
  auto p = small_forest();
  const auto a = learn::Forest::train(train, p, 11);
  const auto b = learn::Forest::train(train, p, 11);
  p.threads = 4;
  const auto c = learn::Forest::train(train, p, 11);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    REQUIRE(a.score(probe.row(i)) == b.score(probe.row(i)));
    REQUIRE(a.score(probe.row(i)) == c.score(probe.row(i)));
  }
}

TEST_CASE("single tree follows its leaf") {
  const auto train = separable(300, 5);
  auto p = small_forest();
  p.n_trees = 1;
  const auto f = learn::Forest::train(train, p, 1);
  const auto probe = separable(100, 6);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const auto& leaf = f.trees()[0].leaf_for(probe.row(i));
    REQUIRE(f.predict(probe.row(i)) == f.classes()[leaf.majority]);
    const double s = f.score(probe.row(i));
    REQUIRE((s == 0.0 || s == 1.0));
  }
}

TEST_CASE("forest input errors") {
  auto one_class = separable(50, 7);
  for (auto& y : one_class.y) y = 1;
  CHECK_THROWS_AS(learn::Forest::train(one_class, small_forest(), 1), DegenerateDataError);
  CHECK_THROWS_AS(learn::Forest::train(separable(9, 1), small_forest(), 1), ValidationError);
  auto bad = small_forest();
  bad.n_trees = 0;
  CHECK_THROWS_AS(learn::Forest::train(separable(50, 1), bad, 1), ConfigError);

  const auto f = learn::Forest::train(separable(100, 8), small_forest(), 1);
  const std::vector<double> short_row(4, 0.0);
  CHECK_THROWS_AS(f.predict(short_row), ValidationError);
  CHECK_THROWS_AS(learn::Forest{}.predict(separable(1, 1).row(0)), ValidationError);
}

TEST_CASE("forest save and load") {
  const auto train = separable(400, 9);
  auto f = learn::Forest::train(train, small_forest(), 3);
  f.tau = 2.5;
  std::stringstream s;
  f.save(s);
  const auto text = s.str();
  const auto g = learn::Forest::load(s);
  CHECK(g.tau == 2.5);
  CHECK(g.trees().size() == f.trees().size());
  const auto probe = separable(200, 10);
  for (std::size_t i = 0; i < probe.size(); ++i) REQUIRE(g.score(probe.row(i)) == f.score(probe.row(i)));
  std::ostringstream again;
  g.save(again);
  CHECK(again.str() == text);

  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(learn::Forest::load(truncated), ParseError);
  std::istringstream junk("hello\n");
  CHECK_THROWS_AS(learn::Forest::load(junk), ParseError);
}

TEST_CASE("multiclass forest") {
  Rng rng(12);
  learn::Dataset d;
  d.n_features = 2;
  for (int i = 0; i < 600; ++i) {
    const std::int64_t label = 100 + i % 3;
    d.add(std::vector<double>{label * 10.0 + rng.uniform(), rng.uniform()}, label);
  }
  const auto f = learn::Forest::train(d, small_forest(), 2, learn::Task::multiclass);
  CHECK(f.classes() == std::vector<std::int64_t>{100, 101, 102});
  for (std::int64_t c : {100, 101, 102}) CHECK(f.predict(std::vector<double>{c * 10.0 + 0.5, 0.5}) == c);
  CHECK_THROWS_AS(f.score(d.row(0)), ValidationError);
}

TEST_CASE("k nearest neighbours") {
  const auto train = separable(1000, 13);
  const learn::Knn knn(train);
  for (std::size_t i = 0; i < 50; ++i) REQUIRE(knn.predict(train.row(i)) == train.y[i]);

  const auto probe = separable(300, 14);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < probe.size(); ++i) ok += knn.predict(probe.row(i)) == probe.y[i];
  CHECK(static_cast<double>(ok) / probe.size() >= 0.95);

  // k = 1 is plain nearest neighbour on the standardised features.
  for (std::size_t q = 0; q < 30; ++q) {
    const auto x = probe.row(q);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < train.size(); ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double z = (x[j] - train.row(i)[j]) / knn.scales()[j];
        d += z * z;
      }
      if (d < best_d) best_d = d, best = i;
    }
    REQUIRE(knn.predict(x, 1) == train.y[best]);
  }

  // Duplicating every training point doubles each neighbour's multiplicity,
  // so k must double too for the same neighbourhood.
  learn::Dataset twice = train;
  twice.x.insert(twice.x.end(), train.x.begin(), train.x.end());
  twice.y.insert(twice.y.end(), train.y.begin(), train.y.end());
  const learn::Knn knn2(twice);
  for (std::size_t i = 0; i < probe.size(); ++i) REQUIRE(knn2.predict(probe.row(i), 18) == knn.predict(probe.row(i), 9));

  CHECK_THROWS_AS(knn.predict(probe.row(0), 0), ValidationError);
  CHECK_THROWS_AS(learn::Knn(learn::Dataset{}), ValidationError);
}

TEST_CASE("evaluation") {
  learn::LabeledSet test;
  for (int i = 0; i < 10; ++i) test.samples.push_back({{static_cast<double>(i)}, 0.0, i < 4});
  const auto perfect = learn::evaluate([](std::span<const double> x) { return x[0] < 4; }, test);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.fpr == 0.0);
  CHECK(perfect.fnr == 0.0);
  CHECK(perfect.total() == 10);

  const auto yes = learn::evaluate([](std::span<const double>) { return true; }, test);
  CHECK(yes.fpr == 1.0);
  CHECK(yes.fnr == 0.0);
  CHECK(yes.accuracy == doctest::Approx(0.4));
  CHECK(learn::majority_baseline(test) == doctest::Approx(0.6));

  const auto c = learn::confusion({true, true, false, false}, {true, false, true, false});
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 1);
  CHECK_THROWS_AS(learn::evaluate([](std::span<const double>) { return true; }, learn::LabeledSet{}), ValidationError);
  CHECK_THROWS_AS(learn::confusion({true}, {}), ValidationError);
}

TEST_CASE("tau sweep") {
  const auto n = net::generate_network(fx::desk(42));
  const auto r = desk_records();
  const auto half = r.size() / 2;
  const auto train = learn::label_samples(std::span(r.data(), half), n, 1.0);
  const auto test = learn::label_samples(std::span(r.data() + half, r.size() - half), n, 1.0);
  const auto grid = learn::tau_grid(train, 5);
  auto p = small_forest();
  p.n_trees = 10;
  const auto pts = learn::sweep_tau(train, test, grid, p, 1);
  REQUIRE(pts.size() == 5);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].tau == grid[i]);
    CHECK(pts[i].report.total() == test.samples.size());
  }
  std::ostringstream out;
  learn::write_sweep(out, pts);
  CHECK(out.str().rfind("tau,accuracy,fpr,fnr\n", 0) == 0);
}
