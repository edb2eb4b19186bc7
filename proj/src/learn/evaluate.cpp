#include "torsel/learn/evaluate.hpp"

#include <algorithm>
#include <ostream>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/stats.hpp"

namespace torsel::learn {

EvalReport confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size()) throw ValidationError("prediction/truth length mismatch");
  if (truth.empty()) throw ValidationError("cannot evaluate on an empty test set");
  EvalReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) (predicted[i] ? r.tp : r.fn)++;
    else (predicted[i] ? r.fp : r.tn)++;
  }
  const auto n = static_cast<double>(r.total());
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  r.fpr = r.fp + r.tn ? static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn) : 0.0;
  r.fnr = r.fn + r.tp ? static_cast<double>(r.fn) / static_cast<double>(r.fn + r.tp) : 0.0;
  return r;
}

EvalReport evaluate(const std::function<bool(std::span<const double>)>& predict, const LabeledSet& test) {
  std::vector<bool> p, t;
  for (const auto& s : test.samples) {
    p.push_back(predict(s.features));
    t.push_back(s.label);
  }
  return confusion(p, t);
}

EvalReport evaluate(const Forest& model, const LabeledSet& test) {
  return evaluate([&](std::span<const double> x) { return model.predict(x) == 1; }, test);
}

double majority_baseline(const LabeledSet& test) {
  if (test.samples.empty()) throw ValidationError("empty test set");
  const double pos = static_cast<double>(test.positives()) / static_cast<double>(test.samples.size());
  return std::max(pos, 1.0 - pos);
}

std::vector<SweepPoint> sweep_tau(const LabeledSet& train, const LabeledSet& test, std::span<const double> taus,
                                  const ForestParams& params, std::uint64_t seed) {
  std::vector<SweepPoint> out;
  for (double tau : taus) {
    const auto tr = relabel(train, tau);
    const auto te = relabel(test, tau);
    const auto model = Forest::train(tr.dataset(), params, seed);
    out.push_back({tau, evaluate(model, te)});
  }
  return out;
}

std::vector<double> tau_grid(const LabeledSet& train, std::size_t count, double lo_q, double hi_q) {
  if (count == 0) return {};
  std::vector<double> t;
  for (const auto& s : train.samples) t.push_back(s.ttlb_s);
  const double lo = stats::quantile(t, lo_q);
  const double hi = stats::quantile(t, hi_q);
  std::vector<double> grid;
  for (std::size_t i = 0; i < count; ++i)
    grid.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return grid;
}

void write_sweep(std::ostream& out, std::span<const SweepPoint> points) {
  out << "tau,accuracy,fpr,fnr\n";
  for (const auto& p : points)
    out << csv::fmt(p.tau) << ',' << csv::fmt(p.report.accuracy) << ',' << csv::fmt(p.report.fpr) << ','
        << csv::fmt(p.report.fnr) << '\n';
}

}  // namespace torsel::learn
