#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "torsel/learn/features.hpp"
#include "torsel/learn/forest.hpp"

namespace torsel::learn {

/// Binary confusion summary with "fast" as the positive class.
struct EvalReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double fpr = 0.0;  ///< FP / (FP + TN), 0 when there are no negatives
  double fnr = 0.0;  ///< FN / (FN + TP), 0 when there are no positives

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

EvalReport confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth);

/// Scores `predict` on every sample of `test`. Throws on empty input.
EvalReport evaluate(const std::function<bool(std::span<const double>)>& predict, const LabeledSet& test);
EvalReport evaluate(const Forest& model, const LabeledSet& test);

/// Share of the majority label in `test`.
double majority_baseline(const LabeledSet& test);

struct SweepPoint {
  double tau = 0.0;
  EvalReport report;
};

/// Relabels train and test at each tau, retrains, evaluates.
std::vector<SweepPoint> sweep_tau(const LabeledSet& train, const LabeledSet& test, std::span<const double> taus,
                                  const ForestParams& params, std::uint64_t seed);

/// `count` points spaced evenly from the lo-quantile to the hi-quantile of
/// the training TTLBs.
std::vector<double> tau_grid(const LabeledSet& train, std::size_t count, double lo_q = 0.05, double hi_q = 0.95);

// tau,accuracy,fpr,fnr
void write_sweep(std::ostream& out, std::span<const SweepPoint> points);

}  // namespace torsel::learn
