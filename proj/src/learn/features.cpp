#include "torsel/learn/features.hpp"

#include <ostream>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"

namespace torsel::learn {

std::int64_t encode_country(std::string_view cc) {
  if (!net::valid_country(cc)) throw ValidationError("country code must be two uppercase letters, got '" + std::string(cc) + "'");
  return static_cast<std::int64_t>(cc[0]) * 100 + static_cast<std::int64_t>(cc[1]);
}

std::vector<double> extract_features(const sim::Circuit& c, const net::NetworkModel& net,
                                     net::EndpointId destination) {
  std::vector<double> f;
  f.reserve(kPathFeatures);
  for (auto id : {c.guard, c.middle, c.exit}) {
    const auto& r = net.relay(id);
    f.push_back(static_cast<double>(r.asn));
    f.push_back(static_cast<double>(encode_country(r.country)));
    f.push_back(static_cast<double>(r.bandwidth));
  }
  if (destination >= 0) {
    const auto& d = net.destination(destination);
    f.push_back(static_cast<double>(d.asn));
    f.push_back(static_cast<double>(encode_country(d.country)));
  }
  return f;
}

void Dataset::add(std::span<const double> features, std::int64_t label) {
  if (n_features == 0) n_features = features.size();
  if (features.size() != n_features) throw ValidationError("feature arity mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

std::size_t LabeledSet::positives() const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.label ? 1 : 0;
  return n;
}

Dataset LabeledSet::dataset() const {
  Dataset d;
  for (const auto& s : samples) d.add(s.features, s.label ? 1 : 0);
  return d;
}

LabeledSet label_samples(std::span<const sim::StreamRecord> records, const net::NetworkModel& net,
                         double tau, bool with_destination) {
  LabeledSet set;
  set.tau = tau;
  set.samples.reserve(records.size());
  for (const auto& r : records) {
    LabeledSample s;
    s.features = extract_features(r.circuit, net, with_destination ? r.destination : -1);
    s.ttlb_s = r.ttlb_s;
    s.label = r.ttlb_s < tau;
    set.samples.push_back(std::move(s));
  }
  return set;
}

LabeledSet relabel(const LabeledSet& set, double tau) {
  LabeledSet out = set;
  out.tau = tau;
  for (auto& s : out.samples) s.label = s.ttlb_s < tau;
  return out;
}

void write_samples(std::ostream& out, const LabeledSet& set) {
  const bool dest = !set.samples.empty() && set.samples.front().features.size() == kPathFeatures;
  out << "g_asn,g_cc,g_bw,m_asn,m_cc,m_bw,e_asn,e_cc,e_bw" << (dest ? ",d_asn,d_cc" : "") << ",ttlb_s,label\n";
  for (const auto& s : set.samples) {
    for (double v : s.features) out << csv::fmt(v) << ',';
    out << csv::fmt(s.ttlb_s) << ',' << (s.label ? 1 : 0) << '\n';
  }
}

}  // namespace torsel::learn
