#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "torsel/anon/paths.hpp"
#include "torsel/learn/forest.hpp"

namespace torsel::anon {

struct ClasiParams {
  std::size_t n_train = 50000;
  std::size_t n_test = 3000;
  int repeats = 10;
  bool shuffle_labels = false;  ///< control: destroy the label signal in training data
  learn::ForestParams forest;

  void validate() const;
};

/// Leakage estimate of the sender-location game. accuracy is the mean
/// per-repeat challenge accuracy; epsilon_s = accuracy - baseline.
struct LeakageReport {
  double epsilon_s = 0.0;
  double baseline = 0.0;  ///< 1 / number of distinct sender ASes
  double accuracy = 0.0;
  int repeats = 0;
  bool has_ci = false;    ///< false with a single repeat
  double ci_lo = 0.0, ci_hi = 0.0;  ///< 95% Student-t interval for epsilon_s
  std::vector<double> repeat_accuracy;
  std::string config_hash;
};

/// Trains a multiclass forest on (path features, client AS) pairs and
/// challenges it with fresh sender-stripped paths, `repeats` times.
/// Throws DegenerateDataError for a single sender AS.
LeakageReport clasi_game(const PathSimulator& ps, const ClasiParams& params, std::uint64_t seed);

// {"epsilon_s", "baseline", "accuracy", "ci95": [lo, hi] | null, "repeats", "config_hash"}
void write_report(std::ostream& out, const LeakageReport& r);
// repeat,accuracy,epsilon_s
void write_repeats(std::ostream& out, const LeakageReport& r);

}  // namespace torsel::anon
