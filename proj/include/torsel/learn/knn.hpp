#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "torsel/learn/features.hpp"

namespace torsel::learn {

/// Distance-weighted k nearest neighbours on z-scored features.
class Knn {
 public:
  explicit Knn(Dataset train);

  /// Weighted vote with weights 1/d^2. Training points at distance zero
  /// decide alone (plurality among them). Ties go to the smaller label.
  std::int64_t predict(std::span<const double> x, int k = 9) const;

  const std::vector<double>& means() const noexcept { return mean_; }
  const std::vector<double>& scales() const noexcept { return scale_; }

 private:
  Dataset train_;
  std::vector<double> mean_, scale_;
  std::vector<double> z_;  // standardised training rows
};

}  // namespace torsel::learn
