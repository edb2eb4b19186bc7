#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "torsel/net/network.hpp"
#include "torsel/sim/engine.hpp"

namespace torsel::learn {

inline constexpr std::size_t kCircuitFeatures = 9;
inline constexpr std::size_t kPathFeatures = 11;

/// Two uppercase ASCII letters as decimal concatenation of their codes:
/// "US" -> 85 * 100 + 83 = 8583. Throws ValidationError otherwise.
std::int64_t encode_country(std::string_view cc);

/// (asn, country code, bandwidth) for guard, middle, exit and, when a
/// destination id >= 0 is given, (asn, country code) of the destination.
std::vector<double> extract_features(const sim::Circuit& c, const net::NetworkModel& net,
                                     net::EndpointId destination = -1);

/// Dense row-major feature matrix with integer class labels.
struct Dataset {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<std::int64_t> y;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * n_features, n_features}; }
  void add(std::span<const double> features, std::int64_t label);
};

struct LabeledSample {
  std::vector<double> features;
  double ttlb_s = 0.0;
  bool label = false;  ///< fast: ttlb_s < tau
};

struct LabeledSet {
  double tau = 0.0;
  std::vector<LabeledSample> samples;

  std::size_t positives() const;
  Dataset dataset() const;
};

/// Labels every record fast when its TTLB is strictly below tau.
LabeledSet label_samples(std::span<const sim::StreamRecord> records, const net::NetworkModel& net,
                         double tau, bool with_destination = false);

/// Relabels an existing set at a new threshold.
LabeledSet relabel(const LabeledSet& set, double tau);

// samples.csv: g_asn,g_cc,g_bw,m_asn,m_cc,m_bw,e_asn,e_cc,e_bw[,d_asn,d_cc],ttlb_s,label
void write_samples(std::ostream& out, const LabeledSet& set);

}  // namespace torsel::learn
