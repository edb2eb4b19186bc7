#include "torsel/path/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "torsel/common/error.hpp"

namespace torsel::path {

RelayId WeightTable::draw(Rng& rng) const {
  const auto i = rng.weighted_index(weights);
  if (i >= ids.size()) throw SelectionError("empty weight table");
  return ids[i];
}

void WeightTable::validate() const {
  if (ids.empty()) throw SelectionError("weight table has no entries");
  if (ids.size() != weights.size()) throw SelectionError("weight table size mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw SelectionError("weights must be positive");
}

WeightTable position_weights(const net::NetworkModel& net, Position pos) {
  WeightTable t;
  t.position = pos;
  for (const auto& r : net.relays()) {
    const bool ok = pos == Position::middle || (pos == Position::guard ? r.is_guard : r.is_exit);
    if (!ok) continue;
    t.ids.push_back(r.id);
    t.weights.push_back(static_cast<double>(r.bandwidth));
  }
  return t;
}

Consensus::Consensus(const net::NetworkModel& n)
    : net(n),
      guard(position_weights(n, Position::guard)),
      middle(position_weights(n, Position::middle)),
      exit(position_weights(n, Position::exit)) {}

RelayId guard_assignment(const WeightTable& guards, Rng& rng) {
  if (guards.empty()) throw SelectionError("no guard-flagged relays");
  return guards.draw(rng);
}

RelayId draw_excluding(const WeightTable& table, Rng& rng, std::initializer_list<RelayId> taken) {
  auto is_taken = [&](RelayId id) { return std::find(taken.begin(), taken.end(), id) != taken.end(); };
  double free_weight = 0.0;
  for (std::size_t i = 0; i < table.ids.size(); ++i)
    if (!is_taken(table.ids[i])) free_weight += table.weights[i];
  if (!(free_weight > 0.0)) throw SelectionError("no eligible relay left for this position");
  // Redraw on collision. Terminates with probability one since some free
  // weight exists; the bound only guards against pathological weights.
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const RelayId id = table.draw(rng);
    if (!is_taken(id)) return id;
  }
  std::vector<double> w = table.weights;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (is_taken(table.ids[i])) w[i] = 0.0;
  return table.ids[rng.weighted_index(w)];
}

Circuit vanilla_select(const Consensus& c, RelayId guard, Rng& rng) {
  if (c.net.relays().size() < 3) throw SelectionError("fewer than three relays");
  Circuit out;
  out.guard = guard;
  out.exit = draw_excluding(c.exit, rng, {guard});
  out.middle = draw_excluding(c.middle, rng, {guard, out.exit});
  return out;
}

PredictorOutcome predictor_select(const Consensus& c, RelayId guard, const CircuitScorer& scorer,
                                  Rng& rng, int max_tries) {
  if (!scorer) throw SelectionError("PredicTor needs a trained model");
  if (max_tries < 1) throw SelectionError("max_tries must be >= 1");
  PredictorOutcome best;
  best.score = -1.0;
  for (int t = 1; t <= max_tries; ++t) {
    const Circuit proposal = vanilla_select(c, guard, rng);
    const double score = scorer(proposal);
    if (score >= 0.5) return {proposal, t, false, score};
    if (score > best.score) {
      best.circuit = proposal;
      best.score = score;
    }
  }
  best.tries = max_tries;
  best.failed_open = true;
  return best;
}

void CarState::observe(double rtt) {
  min_rtt = std::min(min_rtt, rtt);
  latest = rtt - min_rtt;
  ring[head] = latest;
  head = (head + 1) % kCarHistory;
  count = std::min(count + 1, kCarHistory);
}

double CarState::mean_congestion() const {
  if (count == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) s += ring[i];
  return s / static_cast<double>(count);
}

double car_congestion(double rtt_now, const CarState& state) {
  return rtt_now - std::min(state.min_rtt, rtt_now);
}

std::size_t car_pick(std::span<const CarState> candidates) {
  if (candidates.size() < kCarCandidates)
    throw SelectionError("CAR needs " + std::to_string(kCarCandidates) + " candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].latest < candidates[best].latest) best = i;
  return best;
}

bool car_should_switch(const CarState& state) {
  return state.count == kCarHistory && state.mean_congestion() > kCarSwitchThresholdS;
}

std::size_t sb_index(std::size_t n, double s, double x) {
  if (s == 0.0) throw SelectionError("SB parameter s must be non-zero");
  if (n == 0) throw SelectionError("SB over an empty relay list");
  const double frac = (1.0 - std::exp2(s * x)) / (1.0 - std::exp2(s));
  const auto idx = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * frac));
  return static_cast<std::size_t>(std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(n) - 1));
}

RelayId sb_select(std::span<const RelayId> by_bandwidth_desc, double s, Rng& rng) {
  return by_bandwidth_desc[sb_index(by_bandwidth_desc.size(), s, rng.uniform())];
}

std::vector<RelayId> by_bandwidth_desc(const net::NetworkModel& net,
                                       const std::function<bool(const net::Relay&)>& keep) {
  std::vector<const net::Relay*> rs;
  for (const auto& r : net.relays())
    if (!keep || keep(r)) rs.push_back(&r);
  std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) {
    return a->bandwidth != b->bandwidth ? a->bandwidth > b->bandwidth : a->id < b->id;
  });
  std::vector<RelayId> ids;
  for (auto* r : rs) ids.push_back(r->id);
  return ids;
}

double exit_suspect_fraction(const net::NetworkModel& net, RelayId exit,
                             std::span<const net::EndpointId> destinations) {
  if (destinations.empty()) return 0.0;
  const auto& suspects = net.topology().tier1;
  const auto exit_asn = net.relay(exit).asn;
  std::size_t hits = 0;
  for (auto d : destinations)
    if (net.paths().path_hits(exit_asn, net.destination(d).asn, suspects)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(destinations.size());
}

namespace {

// Relays in `taken` are ignored altogether, so the minimal-f fallback never
// lands on a relay the circuit already uses.
std::vector<RelayId> survivors_from(const WeightTable& exits, const std::vector<double>& f, double tau_d,
                                    std::initializer_list<RelayId> taken = {}) {
  auto usable = [&](std::size_t i) { return std::find(taken.begin(), taken.end(), exits.ids[i]) == taken.end(); };
  std::vector<RelayId> keep;
  for (std::size_t i = 0; i < exits.ids.size(); ++i)
    if (usable(i) && f[i] <= tau_d) keep.push_back(exits.ids[i]);
  if (keep.empty()) {
    std::size_t best = exits.ids.size();
    for (std::size_t i = 0; i < f.size(); ++i)
      if (usable(i) && (best == exits.ids.size() || f[i] < f[best] ||
                        (f[i] == f[best] && exits.ids[i] < exits.ids[best])))
        best = i;
    if (best < exits.ids.size()) keep.push_back(exits.ids[best]);
  }
  return keep;
}

}  // namespace

std::vector<RelayId> e_select_survivors(const net::NetworkModel& net, const WeightTable& exits,
                                        std::span<const net::EndpointId> destinations,
                                        double tau_d) {
  std::vector<double> f;
  for (auto id : exits.ids) f.push_back(exit_suspect_fraction(net, id, destinations));
  return survivors_from(exits, f, tau_d);
}

WeightTable restrict_to(const WeightTable& table, std::span<const RelayId> keep) {
  WeightTable t;
  t.position = table.position;
  for (std::size_t i = 0; i < table.ids.size(); ++i)
    if (std::find(keep.begin(), keep.end(), table.ids[i]) != keep.end()) {
      t.ids.push_back(table.ids[i]);
      t.weights.push_back(table.weights[i]);
    }
  return t;
}

RelayId denasa_e_select(const net::NetworkModel& net, const WeightTable& exits,
                        std::span<const net::EndpointId> destinations, double tau_d, Rng& rng,
                        std::initializer_list<RelayId> taken) {
  std::vector<double> f;
  for (auto id : exits.ids) f.push_back(exit_suspect_fraction(net, id, destinations));
  // Taken relays stay in the table and are redrawn over, exactly like the
  // vanilla exit draw, so a vacuous filter consumes the same randomness.
  auto keep = survivors_from(exits, f, tau_d, taken);
  keep.insert(keep.end(), taken.begin(), taken.end());
  return draw_excluding(restrict_to(exits, keep), rng, taken);
}

std::vector<RelayId> denasa_g_select(const net::NetworkModel& net, const WeightTable& guards,
                                     net::EndpointId client, int avoid_count) {
  const auto& tier1 = net.topology().tier1;
  if (avoid_count < 0 || static_cast<std::size_t>(avoid_count) > tier1.size())
    throw SelectionError("avoid_count must lie in [0, " + std::to_string(tier1.size()) + "]");
  const std::span<const net::Asn> avoid(tier1.data(), static_cast<std::size_t>(avoid_count));
  const auto client_asn = net.client(client).asn;
  std::vector<RelayId> keep;
  for (auto id : guards.ids)
    if (avoid.empty() || !net.paths().path_hits(client_asn, net.relay(id).asn, avoid)) keep.push_back(id);
  if (keep.empty())
    throw SelectionError("g-select starvation: no guard avoids the first " +
                         std::to_string(avoid_count) + " suspect ASes for client " +
                         std::to_string(client));
  return keep;
}

std::string_view to_string(Algo a) noexcept {
  switch (a) {
    case Algo::vanilla: return "vanilla";
    case Algo::predictor: return "predictor";
    case Algo::car: return "car";
    case Algo::sb: return "sb";
    case Algo::denasa: return "denasa";
    case Algo::predictor_car: return "predictor_car";
  }
  return "?";
}

Algo algo_from(std::string_view s) {
  for (auto a : {Algo::vanilla, Algo::predictor, Algo::car, Algo::sb, Algo::denasa, Algo::predictor_car})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

void AlgoSpec::validate() const {
  if (sb_s == 0.0) throw ConfigError("s must be non-zero");
  if (max_tries < 1) throw ConfigError("max_tries must be >= 1");
  if (!(tau_d > 0.0 && tau_d <= 1.0)) throw ConfigError("tau_d must lie in (0, 1]");
  if (avoid_count < 0 || avoid_count > 8) throw ConfigError("avoid_count must lie in [0, 8]");
}

RelayId sticky_guard(const Consensus& c, const AlgoSpec& spec, net::EndpointId client,
                     std::uint64_t seed) {
  Rng rng(derive_seed({seed, 0x6a4d, static_cast<std::uint64_t>(client)}));
  if (spec.algo == Algo::denasa && spec.avoid_count > 0) {
    const auto keep = denasa_g_select(c.net, c.guard, client, spec.avoid_count);
    return guard_assignment(restrict_to(c.guard, keep), rng);
  }
  if (spec.algo == Algo::sb) {
    // The bias applies to the whole path, the guard included.
    const auto guards = by_bandwidth_desc(c.net, [](const net::Relay& r) { return r.is_guard; });
    if (guards.empty()) throw SelectionError("no guard-flagged relays");
    return sb_select(guards, spec.sb_s, rng);
  }
  return guard_assignment(c.guard, rng);
}

// ---------------------------------------------------------------------------

CircuitBuilder::CircuitBuilder(const net::NetworkModel& net, AlgoSpec spec, CircuitScorer scorer)
    : net_(net), spec_(spec), scorer_(std::move(scorer)), consensus_(net) {
  spec_.validate();
  if (spec_.needs_model() && !scorer_) throw SelectionError("model required for " + std::string(to_string(spec_.algo)));
  if (spec_.algo == Algo::sb) {
    sb_middles_ = by_bandwidth_desc(net);
    sb_exits_ = by_bandwidth_desc(net, [](const net::Relay& r) { return r.is_exit; });
  }
  if (spec_.algo == Algo::denasa && spec_.tau_d < 1.0) {
    const auto& suspects = net.topology().tier1;
    for (auto id : consensus_.exit.ids) {
      std::vector<char> row;
      const auto asn = net.relay(id).asn;
      for (const auto& d : net.destinations()) row.push_back(net.paths().path_hits(asn, d.asn, suspects));
      exit_hits_.push_back(std::move(row));
    }
  }
}

Circuit CircuitBuilder::propose(RelayId guard, std::span<const net::EndpointId> destinations, Rng& rng,
                                int* tries) const {
  if (tries) *tries = 1;
  switch (spec_.algo) {
    case Algo::vanilla:
    case Algo::car:
      return vanilla_select(consensus_, guard, rng);
    case Algo::predictor:
    case Algo::predictor_car: {
      const auto o = predictor_select(consensus_, guard, scorer_, rng, spec_.max_tries);
      if (tries) *tries = o.tries;
      return o.circuit;
    }
    case Algo::sb: {
      if (net_.relays().size() < 3) throw SelectionError("fewer than three relays");
      Circuit c;
      c.guard = guard;
      bool found = false;
      for (int a = 0; a < 10000 && !found; ++a) {
        c.exit = sb_select(sb_exits_, spec_.sb_s, rng);
        found = c.exit != guard;
      }
      if (!found) throw SelectionError("SB could not find an exit distinct from the guard");
      found = false;
      for (int a = 0; a < 10000 && !found; ++a) {
        c.middle = sb_select(sb_middles_, spec_.sb_s, rng);
        found = c.middle != guard && c.middle != c.exit;
      }
      if (!found) throw SelectionError("SB could not find a distinct middle");
      return c;
    }
    case Algo::denasa: {
      if (net_.relays().size() < 3) throw SelectionError("fewer than three relays");
      Circuit c;
      c.guard = guard;
      if (spec_.tau_d >= 1.0 || destinations.empty()) {
        c.exit = draw_excluding(consensus_.exit, rng, {guard});
      } else {
        std::vector<double> f;
        for (const auto& row : exit_hits_) {
          std::size_t hits = 0;
          for (auto d : destinations) hits += row[net_.destination_index(d)] ? 1 : 0;
          f.push_back(static_cast<double>(hits) / static_cast<double>(destinations.size()));
        }
        auto keep = survivors_from(consensus_.exit, f, spec_.tau_d, {guard});
        keep.push_back(guard);
        c.exit = draw_excluding(restrict_to(consensus_.exit, keep), rng, {guard});
      }
      c.middle = draw_excluding(consensus_.middle, rng, {guard, c.exit});
      return c;
    }
  }
  throw SelectionError("unknown algorithm");
}

Circuit CircuitBuilder::build(RelayId guard, std::span<const net::EndpointId> destinations, Rng& rng,
                              const sim::ProbeFn& probe, CarState* car_state, int* tries) const {
  if (!uses_car()) return propose(guard, destinations, rng, tries);
  if (!probe) throw SelectionError("CAR needs an RTT probe");
  std::array<Circuit, kCarCandidates> cands;
  std::array<CarState, kCarCandidates> states;
  int total = 0;
  for (std::size_t i = 0; i < kCarCandidates; ++i) {
    int t = 0;
    cands[i] = propose(guard, destinations, rng, &t);
    total += t;
    for (std::size_t k = 0; k < kCarHistory; ++k) states[i].observe(probe(cands[i], rng));
  }
  const auto pick = car_pick(states);
  if (car_state) *car_state = states[pick];
  if (tries) *tries = total;
  return cands[pick];
}

namespace {

class EpochPolicy final : public sim::CircuitPolicy {
 public:
  EpochPolicy(std::shared_ptr<const CircuitBuilder> builder, RelayId guard,
              std::vector<net::EndpointId> destinations)
      : builder_(std::move(builder)), guard_(guard), destinations_(std::move(destinations)) {}

  std::vector<Circuit> plan_epoch(std::size_t streams, Rng& rng, const sim::ProbeFn& probe) override {
    std::vector<Circuit> out;
    out.reserve(streams);
    CarState state;
    Circuit current = builder_->build(guard_, destinations_, rng, probe, &state);
    for (std::size_t s = 0; s < streams; ++s) {
      out.push_back(current);
      if (!builder_->uses_car() || s + 1 == streams) continue;
      // Application traffic doubles as an RTT sample.
      state.observe(probe(current, rng));
      if (car_should_switch(state)) current = builder_->build(guard_, destinations_, rng, probe, &state);
    }
    return out;
  }

 private:
  std::shared_ptr<const CircuitBuilder> builder_;
  RelayId guard_;
  std::vector<net::EndpointId> destinations_;
};

}  // namespace

std::vector<std::unique_ptr<sim::CircuitPolicy>> make_policies(const PolicyInputs& in) {
  in.spec.validate();
  if (in.destinations && !in.destinations->empty() && in.destinations->size() != in.net.clients().size())
    throw SelectionError("destination sets must cover every client");
  auto builder = std::make_shared<const CircuitBuilder>(in.net, in.spec, in.scorer);
  std::vector<net::EndpointId> all;
  for (const auto& d : in.net.destinations()) all.push_back(d.id);
  std::vector<std::unique_ptr<sim::CircuitPolicy>> out;
  const auto& clients = in.net.clients();
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const RelayId guard = sticky_guard(builder->consensus(), in.spec, clients[i].id, in.seed);
    std::vector<net::EndpointId> dests =
        in.destinations && !in.destinations->empty() && !(*in.destinations)[i].empty() ? (*in.destinations)[i] : all;
    out.push_back(std::make_unique<EpochPolicy>(builder, guard, std::move(dests)));
  }
  return out;
}

}  // namespace torsel::path
