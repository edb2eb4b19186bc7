#pragma once

#include "torsel/net/network.hpp"

namespace torsel::sim {

using net::EndpointId;
using net::RelayId;

struct Circuit {
  RelayId guard = 0;
  RelayId middle = 0;
  RelayId exit = 0;

  friend bool operator==(const Circuit&, const Circuit&) = default;
  friend auto operator<=>(const Circuit&, const Circuit&) = default;
};

/// Distinct relays, guard flagged guard, exit flagged exit. Throws ValidationError.
void validate(const Circuit& c, const net::NetworkModel& net);
bool is_valid(const Circuit& c, const net::NetworkModel& net) noexcept;

}  // namespace torsel::sim
