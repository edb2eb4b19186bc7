#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "torsel/anon/paths.hpp"

namespace torsel::anon {

/// Gini coefficient of non-negative counts: sort ascending, then
/// sum_i (2i - n - 1) x_i / (n sum x), i = 1..n. Throws on negative or
/// all-zero input.
double gini(std::span<const double> counts);

/// Normalised Shannon entropy H(p) / log2(n); 1 for a single entry.
double uniformity_degree(std::span<const double> counts);

enum class CountBasis {
  pooled,      ///< every relay, all positions together
  guard,
  middle,
  exit,
  guard_exit,  ///< one bin per (guard, exit) pair over all possible pairs
};

/// Selection counts over the given circuits. Relay bases return one bin per
/// relay in table order (unused relays count zero). The pair basis returns
/// one bin per (guard-flagged, exit-flagged) pair of distinct relays.
std::vector<double> selection_counts(std::span<const sim::Circuit> circuits, const net::NetworkModel& net,
                                     CountBasis basis = CountBasis::pooled);

/// Watched ASes whose presence on both sides makes a stream vulnerable.
inline const std::vector<net::Asn> kDefaultWatch = {3356, 1299};

/// Some watched AS on the client->guard path and some watched AS on the
/// exit->destination path.
bool is_vulnerable(const ClasiPath& p, const net::NetworkModel& net, std::span<const net::Asn> watch);

struct VulnerableReport {
  std::vector<EndpointId> clients;  ///< ascending
  std::vector<double> rate;         ///< vulnerable fraction per client
  double median = 0.0;
  double overall = 0.0;             ///< vulnerable streams / all streams
};

/// Per-client vulnerable-stream fraction. Throws LookupError for ids or
/// ASNs the world does not know.
VulnerableReport vulnerable_rate(std::span<const ClasiPath> paths, const net::NetworkModel& net,
                                 std::span<const net::Asn> watch = kDefaultWatch);

struct TtfcReport {
  std::vector<EndpointId> clients;  ///< ascending
  std::vector<double> days;         ///< first compromise per client; infinity if never
  std::vector<std::pair<double, double>> cdf;  ///< (day, fraction compromised by that day), steps only
  double censored = 0.0;            ///< fraction never compromised
  /// Median over compromised clients only; the censored mass is reported
  /// apart. Infinite when no client is ever compromised.
  double median = std::numeric_limits<double>::infinity();
};

/// Epoch e is reported at day (e + 1) * days_per_epoch, the end of the
/// epoch in which the stream ran. Timeline entries must be sorted by epoch.
TtfcReport time_to_first_compromise(std::span<const TimedPath> timeline, double days_per_epoch,
                                    const std::function<bool(const ClasiPath&)>& vulnerable);

/// metric,value rows.
void write_metrics(std::ostream& out, std::span<const std::pair<std::string, double>> rows);

}  // namespace torsel::anon
