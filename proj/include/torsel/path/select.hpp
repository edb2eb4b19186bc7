#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "torsel/common/rng.hpp"
#include "torsel/net/network.hpp"
#include "torsel/sim/circuit.hpp"
#include "torsel/sim/engine.hpp"

namespace torsel::path {

using net::RelayId;
using sim::Circuit;

enum class Position { guard, middle, exit };

/// Consensus weights for one position. Selection probability is
/// proportional to weight.
struct WeightTable {
  Position position = Position::middle;
  std::vector<RelayId> ids;
  std::vector<double> weights;

  bool empty() const noexcept { return ids.empty(); }
  RelayId draw(Rng& rng) const;
  void validate() const;
};

/// Guards: bandwidth of guard-flagged relays. Exits: bandwidth of
/// exit-flagged relays. Middles: bandwidth of every relay.
WeightTable position_weights(const net::NetworkModel& net, Position pos);

/// The three weight tables plus the network they describe.
struct Consensus {
  explicit Consensus(const net::NetworkModel& net);

  const net::NetworkModel& net;
  WeightTable guard;
  WeightTable middle;
  WeightTable exit;
};

/// Weighted guard draw. Throws SelectionError when the table is empty.
RelayId guard_assignment(const WeightTable& guards, Rng& rng);

/// Draws from `table`, redrawing while the result is in `taken`.
/// Throws SelectionError when every weighted entry is taken.
RelayId draw_excluding(const WeightTable& table, Rng& rng, std::initializer_list<RelayId> taken);

/// Exit then middle by position weight around a fixed guard.
Circuit vanilla_select(const Consensus& c, RelayId guard, Rng& rng);

/// Fast/slow scorer: returns the positive-class score in [0, 1]; a proposal
/// is accepted when the score is at least 0.5.
using CircuitScorer = std::function<double(const Circuit&)>;

struct PredictorOutcome {
  Circuit circuit;
  int tries = 0;
  bool failed_open = false;
  double score = 0.0;
};

/// Vanilla proposals until the scorer accepts one. After `max_tries`
/// rejections the best-scoring proposal is returned (earliest on ties).
PredictorOutcome predictor_select(const Consensus& c, RelayId guard, const CircuitScorer& scorer,
                                  Rng& rng, int max_tries = 50);

// --- congestion-aware routing ---------------------------------------------

inline constexpr std::size_t kCarHistory = 5;
inline constexpr std::size_t kCarCandidates = 3;
inline constexpr double kCarSwitchThresholdS = 0.5;

/// Per-circuit RTT memory.
struct CarState {
  double min_rtt = std::numeric_limits<double>::infinity();
  std::array<double, kCarHistory> ring{};
  std::size_t count = 0;  ///< valid entries, at most kCarHistory
  std::size_t head = 0;   ///< next write position
  double latest = 0.0;    ///< most recent congestion time

  /// Records one RTT sample: lowers min_rtt if needed, then appends the
  /// resulting congestion time.
  void observe(double rtt);
  double mean_congestion() const;
};

/// rtt_now minus the shortest RTT known (including rtt_now itself).
double car_congestion(double rtt_now, const CarState& state);

/// Index of the least congested candidate by latest congestion time; ties
/// go to the lowest index. Throws SelectionError for fewer than three.
std::size_t car_pick(std::span<const CarState> candidates);

/// History full and its mean above the threshold.
bool car_should_switch(const CarState& state);

// --- Snader-Borisov ------------------------------------------------------

/// floor(n (1 - 2^{s x}) / (1 - 2^s)), clamped to [0, n). s must be non-zero.
std::size_t sb_index(std::size_t n, double s, double x);

/// Draw from relays already sorted by bandwidth, largest first.
RelayId sb_select(std::span<const RelayId> by_bandwidth_desc, double s, Rng& rng);

/// All relays (or only those passing `keep`) ordered by bandwidth, largest
/// first; ties by id.
std::vector<RelayId> by_bandwidth_desc(const net::NetworkModel& net,
                                       const std::function<bool(const net::Relay&)>& keep = {});

// --- location-aware filters ----------------------------------------------

/// Fraction of `destinations` whose AS path from the exit crosses a suspect
/// (tier-1) AS.
double exit_suspect_fraction(const net::NetworkModel& net, RelayId exit,
                             std::span<const net::EndpointId> destinations);

/// Exits with suspect fraction <= tau_d; if none, the single exit with the
/// smallest fraction (lowest id on ties). Order follows the exit table.
std::vector<RelayId> e_select_survivors(const net::NetworkModel& net, const WeightTable& exits,
                                        std::span<const net::EndpointId> destinations,
                                        double tau_d);

/// Weighted draw among the survivors, excluding `taken`.
RelayId denasa_e_select(const net::NetworkModel& net, const WeightTable& exits,
                        std::span<const net::EndpointId> destinations, double tau_d, Rng& rng,
                        std::initializer_list<RelayId> taken = {});

/// Guards whose client-to-guard AS path avoids the first `avoid_count`
/// suspects. Throws SelectionError("g-select starvation ...") when empty.
std::vector<RelayId> denasa_g_select(const net::NetworkModel& net, const WeightTable& guards,
                                     net::EndpointId client, int avoid_count);

/// Restricts a weight table to the listed ids (keeping table order).
WeightTable restrict_to(const WeightTable& table, std::span<const RelayId> keep);

// --- algorithm catalogue -------------------------------------------------

enum class Algo { vanilla, predictor, car, sb, denasa, predictor_car };

std::string_view to_string(Algo a) noexcept;
Algo algo_from(std::string_view s);

struct AlgoSpec {
  Algo algo = Algo::vanilla;
  double sb_s = 9.0;
  int max_tries = 50;
  double tau_d = 1.0;
  int avoid_count = 0;

  void validate() const;
  bool needs_model() const noexcept { return algo == Algo::predictor || algo == Algo::predictor_car; }
};

struct PolicyInputs {
  const net::NetworkModel& net;
  AlgoSpec spec;
  CircuitScorer scorer;                   ///< required for the PredicTor variants
  std::uint64_t seed = 0;                 ///< drives the sticky guard draws
  const sim::DestinationSets* destinations = nullptr;  ///< e-select destination sets
};

/// Guard a client keeps for the whole run under `spec` (g-select filtering
/// applied for the location-aware algorithm).
RelayId sticky_guard(const Consensus& c, const AlgoSpec& spec, net::EndpointId client,
                     std::uint64_t seed);

/// One policy per client, index-aligned with net.clients().
std::vector<std::unique_ptr<sim::CircuitPolicy>> make_policies(const PolicyInputs& in);

/// Shared selection machinery for a given guard, used by both the epoch
/// simulator policies and the path generator.
class CircuitBuilder {
 public:
  CircuitBuilder(const net::NetworkModel& net, AlgoSpec spec, CircuitScorer scorer = {});

  const Consensus& consensus() const noexcept { return consensus_; }
  const AlgoSpec& spec() const noexcept { return spec_; }

  /// One circuit through `guard` for a client with the given destination
  /// set. CAR variants probe candidates through `probe` and return the
  /// chosen candidate together with its RTT state.
  Circuit build(RelayId guard, std::span<const net::EndpointId> destinations, Rng& rng,
                const sim::ProbeFn& probe, CarState* car_state = nullptr,
                int* tries = nullptr) const;

  /// One non-CAR proposal (vanilla/predictor/sb/denasa exit step).
  Circuit propose(RelayId guard, std::span<const net::EndpointId> destinations, Rng& rng,
                  int* tries = nullptr) const;

  bool uses_car() const noexcept { return spec_.algo == Algo::car || spec_.algo == Algo::predictor_car; }

 private:
  const net::NetworkModel& net_;
  AlgoSpec spec_;
  CircuitScorer scorer_;
  Consensus consensus_;
  std::vector<RelayId> sb_middles_;
  std::vector<RelayId> sb_exits_;
  // exit_hits_[i][d]: path from exit table entry i to destination index d
  // crosses a suspect AS.
  std::vector<std::vector<char>> exit_hits_;
};

}  // namespace torsel::path
