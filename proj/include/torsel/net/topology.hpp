#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "torsel/net/types.hpp"

namespace torsel::net {

/// Customer-provider AS graph. `edges` maps every non-tier-1 AS to its
/// upstream providers, which are tier-1 ASes or intermediate transit ASes.
/// Tier-1 ASes form a full peering clique.
struct AsTopology {
  std::vector<Asn> tier1;
  std::map<Asn, std::vector<Asn>> edges;
  std::uint64_t seed = 0;

  bool contains(Asn asn) const;
  bool is_tier1(Asn asn) const;

  /// Checks: tier1 deduplicated, every non-tier-1 AS has an uplink, every
  /// uplink is known, and the provider graph is acyclic.
  void validate() const;

  friend bool operator==(const AsTopology&, const AsTopology&) = default;
};

/// Deterministic valley-free path oracle over an AsTopology.
///
/// A path climbs the source's provider chain, crosses at most one tier-1
/// peering link, and descends to the destination. Among candidate paths the
/// shortest wins; ties go to the lexicographically smallest sequence when
/// written from the numerically smaller endpoint, which makes
/// path(a, b) == reverse(path(b, a)).
class AsPathOracle {
 public:
  explicit AsPathOracle(AsTopology topo);

  std::vector<Asn> path(Asn src, Asn dst) const;

  /// True when any AS in `watch` lies on path(src, dst).
  bool path_hits(Asn src, Asn dst, std::span<const Asn> watch) const;

  const AsTopology& topology() const noexcept { return topo_; }

 private:
  const std::vector<std::vector<Asn>>& up_paths(Asn asn) const;

  AsTopology topo_;
  std::map<Asn, std::vector<std::vector<Asn>>> up_;
};

/// Convenience wrapper: builds a throwaway oracle.
std::vector<Asn> as_path(const AsTopology& topo, Asn src, Asn dst);

}  // namespace torsel::net
