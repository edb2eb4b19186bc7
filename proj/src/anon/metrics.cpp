#include "torsel/anon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/stats.hpp"

namespace torsel::anon {

namespace {
double checked_total(std::span<const double> counts) {
  if (counts.empty()) throw ValidationError("selection counts are empty");
  double total = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("selection counts must be finite and non-negative");
    total += c;
  }
  if (!(total > 0.0)) throw ValidationError("selection counts are all zero");
  return total;
}
}  // namespace

double gini(std::span<const double> counts) {
  const double total = checked_total(counts);
  std::vector<double> x(counts.begin(), counts.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  return acc / (n * total);
}

double uniformity_degree(std::span<const double> counts) {
  const double total = checked_total(counts);
  if (counts.size() == 1) return 1.0;
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  return std::clamp(h / std::log2(static_cast<double>(counts.size())), 0.0, 1.0);
}

std::vector<double> selection_counts(std::span<const sim::Circuit> circuits, const net::NetworkModel& net,
                                     CountBasis basis) {
  if (basis == CountBasis::guard_exit) {
    std::vector<net::RelayId> guards, exits;
    for (const auto& r : net.relays()) {
      if (r.is_guard) guards.push_back(r.id);
      if (r.is_exit) exits.push_back(r.id);
    }
    std::map<std::pair<net::RelayId, net::RelayId>, std::size_t> bin;
    for (auto g : guards)
      for (auto e : exits)
        if (g != e) bin.emplace(std::pair{g, e}, bin.size());
    std::vector<double> counts(bin.size(), 0.0);
    for (const auto& c : circuits) {
      const auto it = bin.find({c.guard, c.exit});
      if (it == bin.end()) throw ValidationError("circuit uses a guard/exit pair outside the flagged relays");
      counts[it->second] += 1.0;
    }
    return counts;
  }
  std::vector<double> counts(net.relays().size(), 0.0);
  for (const auto& c : circuits) {
    if (basis == CountBasis::pooled || basis == CountBasis::guard) counts[net.relay_index(c.guard)] += 1.0;
    if (basis == CountBasis::pooled || basis == CountBasis::middle) counts[net.relay_index(c.middle)] += 1.0;
    if (basis == CountBasis::pooled || basis == CountBasis::exit) counts[net.relay_index(c.exit)] += 1.0;
  }
  return counts;
}

bool is_vulnerable(const ClasiPath& p, const net::NetworkModel& net, std::span<const net::Asn> watch) {
  const auto& paths = net.paths();
  return paths.path_hits(net.client(p.client).asn, net.relay(p.circuit.guard).asn, watch) &&
         paths.path_hits(net.relay(p.circuit.exit).asn, net.destination(p.destination).asn, watch);
}

VulnerableReport vulnerable_rate(std::span<const ClasiPath> paths, const net::NetworkModel& net,
                                 std::span<const net::Asn> watch) {
  if (paths.empty()) throw ValidationError("no paths to score");
  std::map<EndpointId, std::pair<std::size_t, std::size_t>> per;  // vulnerable, total
  std::size_t vulnerable = 0;
  for (const auto& p : paths) {
    const bool v = is_vulnerable(p, net, watch);
    auto& [hits, total] = per[p.client];
    hits += v ? 1 : 0;
    ++total;
    vulnerable += v ? 1 : 0;
  }
  VulnerableReport r;
  for (const auto& [client, ht] : per) {
    r.clients.push_back(client);
    r.rate.push_back(static_cast<double>(ht.first) / static_cast<double>(ht.second));
  }
  r.median = stats::median(r.rate);
  r.overall = static_cast<double>(vulnerable) / static_cast<double>(paths.size());
  return r;
}

TtfcReport time_to_first_compromise(std::span<const TimedPath> timeline, double days_per_epoch,
                                    const std::function<bool(const ClasiPath&)>& vulnerable) {
  if (!(days_per_epoch > 0.0)) throw ValidationError("days per epoch must be positive");
  constexpr double kNever = std::numeric_limits<double>::infinity();
  std::map<EndpointId, double> first;
  int last_epoch = std::numeric_limits<int>::min();
  for (const auto& t : timeline) {
    if (t.epoch < last_epoch) throw ValidationError("timeline must be sorted by epoch");
    last_epoch = t.epoch;
    auto [it, fresh] = first.emplace(t.path.client, kNever);
    if (it->second == kNever && vulnerable(t.path)) it->second = (t.epoch + 1) * days_per_epoch;
  }
  TtfcReport r;
  if (first.empty()) {
    r.censored = 1.0;
    return r;
  }
  std::vector<double> finite;
  for (const auto& [client, day] : first) {
    r.clients.push_back(client);
    r.days.push_back(day);
    if (day != kNever) finite.push_back(day);
  }
  std::sort(finite.begin(), finite.end());
  const auto n = static_cast<double>(first.size());
  for (std::size_t i = 0; i < finite.size(); ++i)
    if (i + 1 == finite.size() || finite[i + 1] != finite[i])
      r.cdf.emplace_back(finite[i], static_cast<double>(i + 1) / n);
  r.censored = 1.0 - static_cast<double>(finite.size()) / n;
  if (!finite.empty()) {
    const std::size_t mid = (finite.size() - 1) / 2;
    r.median = finite.size() % 2 ? finite[mid] : (finite[mid] + finite[mid + 1]) / 2.0;
  }
  return r;
}

void write_metrics(std::ostream& out, std::span<const std::pair<std::string, double>> rows) {
  out << "metric,value\n";
  for (const auto& [name, value] : rows) out << name << ',' << csv::fmt(value) << '\n';
}

}  // namespace torsel::anon
