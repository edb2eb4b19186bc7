#include "torsel/net/topology.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <utility>

#include "torsel/common/error.hpp"

namespace torsel::net {

bool AsTopology::contains(Asn asn) const { return is_tier1(asn) || edges.count(asn) > 0; }

bool AsTopology::is_tier1(Asn asn) const {
  return std::find(tier1.begin(), tier1.end(), asn) != tier1.end();
}

void AsTopology::validate() const {
  std::set<Asn> seen;
  for (Asn t : tier1)
    if (!seen.insert(t).second) throw ValidationError("duplicate tier1 AS " + std::to_string(t));
  for (const auto& [asn, ups] : edges) {
    if (is_tier1(asn)) throw ValidationError("tier1 AS " + std::to_string(asn) + " has uplinks");
    if (ups.empty()) throw ValidationError("AS " + std::to_string(asn) + " has no uplink");
    for (Asn u : ups)
      if (!contains(u))
        throw ValidationError("AS " + std::to_string(asn) + " uplinks to unknown AS " +
                              std::to_string(u));
  }
  // Acyclicity: iterative DFS colouring over the provider relation.
  std::map<Asn, int> colour;
  for (const auto& [root, _] : edges) {
    if (colour[root] == 2) continue;
    std::vector<std::pair<Asn, std::size_t>> stack{{root, 0}};
    colour[root] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto it = edges.find(node);
      if (it == edges.end() || next >= it->second.size()) {
        colour[node] = 2;
        stack.pop_back();
        continue;
      }
      const Asn up = it->second[next++];
      if (colour[up] == 1) throw ValidationError("provider cycle through AS " + std::to_string(up));
      if (colour[up] == 0) {
        colour[up] = 1;
        stack.emplace_back(up, 0);
      }
    }
  }
}

AsPathOracle::AsPathOracle(AsTopology topo) : topo_(std::move(topo)) {
  const AsTopology& t = topo_;
  // Memoised in dependency order: providers before customers.
  for (Asn tier1 : t.tier1) up_[tier1] = {{tier1}};
  std::vector<Asn> pending;
  for (const auto& [asn, _] : t.edges) pending.push_back(asn);
  while (!pending.empty()) {
    std::vector<Asn> later;
    for (Asn asn : pending) {
      const auto& ups = t.edges.at(asn);
      bool ready = std::all_of(ups.begin(), ups.end(), [&](Asn u) { return up_.count(u) > 0; });
      if (!ready) {
        later.push_back(asn);
        continue;
      }
      std::vector<std::vector<Asn>> chains{{asn}};
      for (Asn u : ups) {
        for (const auto& c : up_.at(u)) {
          std::vector<Asn> chain{asn};
          chain.insert(chain.end(), c.begin(), c.end());
          chains.push_back(std::move(chain));
        }
      }
      up_[asn] = std::move(chains);
    }
    if (later.size() == pending.size())
      throw ValidationError("topology has unresolved uplinks or a provider cycle");
    pending = std::move(later);
  }
}

const std::vector<std::vector<Asn>>& AsPathOracle::up_paths(Asn asn) const {
  const auto it = up_.find(asn);
  if (it == up_.end()) throw LookupError("unknown AS " + std::to_string(asn));
  return it->second;
}

std::vector<Asn> AsPathOracle::path(Asn src, Asn dst) const {
  const auto& up_src = up_paths(src);
  const auto& up_dst = up_paths(dst);
  if (src == dst) return {src};

  const bool flip = src > dst;
  const auto& lo = flip ? up_dst : up_src;
  const auto& hi = flip ? up_src : up_dst;

  std::vector<Asn> best;
  std::vector<Asn> cand;
  for (const auto& a : lo) {
    for (const auto& b : hi) {
      const Asn x = a.back();
      const Asn y = b.back();
      cand.assign(a.begin(), a.end());
      if (x == y) {
        cand.insert(cand.end(), b.rbegin() + 1, b.rend());
      } else if (topo_.is_tier1(x) && topo_.is_tier1(y)) {
        cand.insert(cand.end(), b.rbegin(), b.rend());
      } else {
        continue;
      }
      std::vector<Asn> sorted = cand;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
      if (best.empty() || cand.size() < best.size() ||
          (cand.size() == best.size() && cand < best))
        best = cand;
    }
  }
  if (best.empty())
    throw LookupError("no valley-free path between AS " + std::to_string(src) + " and AS " +
                      std::to_string(dst));
  if (flip) std::reverse(best.begin(), best.end());
  return best;
}

bool AsPathOracle::path_hits(Asn src, Asn dst, std::span<const Asn> watch) const {
  for (Asn a : path(src, dst))
    if (std::find(watch.begin(), watch.end(), a) != watch.end()) return true;
  return false;
}

std::vector<Asn> as_path(const AsTopology& topo, Asn src, Asn dst) {
  return AsPathOracle(topo).path(src, dst);
}

}  // namespace torsel::net
