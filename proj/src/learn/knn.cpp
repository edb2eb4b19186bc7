#include "torsel/learn/knn.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "torsel/common/error.hpp"

namespace torsel::learn {

Knn::Knn(Dataset train) : train_(std::move(train)) {
  if (train_.size() == 0) throw ValidationError("k-NN needs a non-empty training set");
  const auto n = train_.size();
  const auto d = train_.n_features;
  mean_.assign(d, 0.0);
  scale_.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) mean_[f] += train_.x[i * d + f];
  for (auto& m : mean_) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) {
      const double dv = train_.x[i * d + f] - mean_[f];
      scale_[f] += dv * dv;
    }
  for (auto& s : scale_) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;  // constant column: leave unscaled
  }
  z_.resize(train_.x.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) z_[i * d + f] = (train_.x[i * d + f] - mean_[f]) / scale_[f];
}

std::int64_t Knn::predict(std::span<const double> x, int k) const {
  if (k <= 0) throw ValidationError("k must be positive");
  const auto d = train_.n_features;
  if (x.size() != d) throw ValidationError("feature arity mismatch");
  const auto n = train_.size();
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  std::vector<double> q(d);
  for (std::size_t f = 0; f < d; ++f) q[f] = (x[f] - mean_[f]) / scale_[f];

  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
      const double dv = z_[i * d + f] - q[f];
      s += dv * dv;
    }
    dist[i] = {s, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());

  std::map<std::int64_t, double> votes;
  if (dist[0].first == 0.0) {
    for (std::size_t j = 0; j < kk && dist[j].first == 0.0; ++j) votes[train_.y[dist[j].second]] += 1.0;
  } else {
    for (std::size_t j = 0; j < kk; ++j) votes[train_.y[dist[j].second]] += 1.0 / dist[j].first;
  }
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

}  // namespace torsel::learn
