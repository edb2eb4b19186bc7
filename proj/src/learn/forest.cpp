#include "torsel/learn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/rng.hpp"

namespace torsel::learn {

void ForestParams::validate() const {
  if (n_trees < 1) throw ConfigError("forest.n_trees must be >= 1");
  if (max_depth < 1) throw ConfigError("forest.max_depth must be >= 1");
  if (min_leaf < 1) throw ConfigError("forest.min_leaf must be >= 1");
  if (features_per_split < 0) throw ConfigError("forest.features_per_split must be >= 0");
  if (threads < 0) throw ConfigError("forest.threads must be >= 0");
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  const TreeNode* n = &nodes[0];
  while (n->feature >= 0) n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
  return *n;
}

namespace {

constexpr std::size_t kMaxBins = 256;

// Column-wise quantisation. Exact when a column has at most kMaxBins
// distinct values, which is the usual case for relay attributes.
struct Binned {
  std::size_t n = 0;
  std::size_t n_features = 0;
  std::vector<std::vector<std::uint16_t>> bin;   // [feature][sample]
  std::vector<std::vector<double>> lo, hi;       // [feature][bin] observed range
};

Binned quantise(const Dataset& d) {
  Binned b;
  b.n = d.size();
  b.n_features = d.n_features;
  b.bin.resize(d.n_features);
  b.lo.resize(d.n_features);
  b.hi.resize(d.n_features);
  std::vector<double> col(b.n);
  for (std::size_t f = 0; f < d.n_features; ++f) {
    for (std::size_t i = 0; i < b.n; ++i) col[i] = d.x[i * d.n_features + f];
    std::vector<double> uniq = col;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    // Upper edges: a value goes to the first bin whose edge is >= it.
    std::vector<double> edges;
    if (uniq.size() <= kMaxBins) {
      edges = uniq;
    } else {
      for (std::size_t k = 1; k <= kMaxBins; ++k) {
        const double e = uniq[std::min(uniq.size() - 1, k * uniq.size() / kMaxBins - 1)];
        if (edges.empty() || e > edges.back()) edges.push_back(e);
      }
      edges.back() = uniq.back();
    }
    auto& bf = b.bin[f];
    bf.resize(b.n);
    b.lo[f].assign(edges.size(), std::numeric_limits<double>::infinity());
    b.hi[f].assign(edges.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < b.n; ++i) {
      const auto k = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), col[i]) - edges.begin());
      bf[i] = static_cast<std::uint16_t>(k);
      b.lo[f][k] = std::min(b.lo[f][k], col[i]);
      b.hi[f][k] = std::max(b.hi[f][k], col[i]);
    }
  }
  return b;
}

class TreeGrower {
 public:
  TreeGrower(const Binned& b, const std::vector<std::int32_t>& y, std::size_t k, const ForestParams& p,
             std::size_t mtry)
      : b_(b), y_(y), k_(k), p_(p), mtry_(mtry), hist_(kMaxBins * k, 0), mark_(kMaxBins, 0) {}

  Tree grow(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint32_t> idx(b_.n);
    for (auto& i : idx) i = static_cast<std::uint32_t>(rng.below(b_.n));
    Tree t;
    features_.resize(b_.n_features);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    grow_node(t, idx, 0, idx.size(), 0, rng);
    return t;
  }

 private:
  struct Split {
    double gain = -1.0;
    std::size_t feature = 0;
    std::uint16_t last_left_bin = 0;
    std::uint16_t first_right_bin = 0;
  };

  std::int32_t grow_node(Tree& t, std::vector<std::uint32_t>& idx, std::size_t begin, std::size_t end,
                         int depth, Rng& rng) {
    const auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    t.leaf_counts.resize(t.leaf_counts.size() + k_, 0);
    std::vector<std::uint32_t> counts(k_, 0);
    for (auto i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(y_[idx[i]])];
    const auto n = end - begin;
    {
      auto& node = t.nodes[static_cast<std::size_t>(id)];
      node.samples = static_cast<std::uint32_t>(n);
      node.majority = static_cast<std::int32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      std::copy(counts.begin(), counts.end(), t.leaf_counts.begin() + static_cast<std::ptrdiff_t>(id * k_));
    }
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || depth >= p_.max_depth || n < 2 * static_cast<std::size_t>(p_.min_leaf)) return id;

    double parent = 0.0;
    for (auto c : counts) parent += static_cast<double>(c) * c;
    parent /= static_cast<double>(n);

    // Draw candidate features without replacement; keep drawing past mtry
    // only while no valid split has been found.
    Split best;
    for (std::size_t j = 0; j < features_.size(); ++j) {
      const auto pick = j + rng.below(features_.size() - j);
      std::swap(features_[j], features_[pick]);
      if (j >= mtry_ && best.gain > 0.0) break;
      evaluate(features_[j], idx, begin, end, counts, parent, best);
    }
    if (!(best.gain > 0.0)) return id;

    const auto& col = b_.bin[best.feature];
    const auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                    idx.begin() + static_cast<std::ptrdiff_t>(end),
                                    [&](std::uint32_t i) { return col[i] <= best.last_left_bin; });
    const auto split_at = static_cast<std::size_t>(mid - idx.begin());
    const double threshold =
        0.5 * (b_.hi[best.feature][best.last_left_bin] + b_.lo[best.feature][best.first_right_bin]);
    const auto left = grow_node(t, idx, begin, split_at, depth + 1, rng);
    const auto right = grow_node(t, idx, split_at, end, depth + 1, rng);
    auto& node = t.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(best.feature);
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  void evaluate(std::size_t f, const std::vector<std::uint32_t>& idx, std::size_t begin, std::size_t end,
                const std::vector<std::uint32_t>& counts, double parent, Split& best) {
    const auto& col = b_.bin[f];
    touched_.clear();
    for (auto i = begin; i < end; ++i) {
      const auto bin = col[idx[i]];
      if (!mark_[bin]) {
        mark_[bin] = 1;
        touched_.push_back(bin);
      }
      ++hist_[bin * k_ + static_cast<std::size_t>(y_[idx[i]])];
    }
    if (touched_.size() >= 2) {
      std::sort(touched_.begin(), touched_.end());
      left_.assign(k_, 0);
      right_.assign(counts.begin(), counts.end());
      double sq_left = 0.0, sq_right = 0.0;
      for (auto c : counts) sq_right += static_cast<double>(c) * c;
      std::size_t n_left = 0, n_right = end - begin;
      const auto min_leaf = static_cast<std::size_t>(p_.min_leaf);
      for (std::size_t j = 0; j + 1 < touched_.size(); ++j) {
        const std::uint32_t* h = &hist_[touched_[j] * k_];
        for (std::size_t c = 0; c < k_; ++c) {
          const double m = h[c];
          if (m == 0.0) continue;
          sq_left += m * (2.0 * left_[c] + m);
          sq_right += m * (m - 2.0 * right_[c]);
          left_[c] += h[c];
          right_[c] -= h[c];
          n_left += h[c];
          n_right -= h[c];
        }
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double gain = sq_left / static_cast<double>(n_left) + sq_right / static_cast<double>(n_right) - parent;
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = f;
          best.last_left_bin = touched_[j];
          best.first_right_bin = touched_[j + 1];
        }
      }
    }
    for (auto bin : touched_) {
      mark_[bin] = 0;
      std::fill_n(hist_.begin() + static_cast<std::ptrdiff_t>(bin * k_), k_, 0u);
    }
  }

  const Binned& b_;
  const std::vector<std::int32_t>& y_;
  std::size_t k_;
  const ForestParams& p_;
  std::size_t mtry_;
  std::vector<std::uint32_t> hist_;
  std::vector<char> mark_;
  std::vector<std::uint16_t> touched_;
  std::vector<std::size_t> features_;
  std::vector<double> left_, right_;
};

}  // namespace

Forest Forest::train(const Dataset& data, const ForestParams& params, std::uint64_t seed, Task task) {
  params.validate();
  if (data.n_features == 0) throw ValidationError("dataset has no features");
  if (data.size() < 10) throw ValidationError("need at least 10 samples to train");
  Forest f;
  f.task_ = task;
  f.n_features_ = data.n_features;
  f.params_ = params;
  f.seed_ = seed;
  if (task == Task::binary) {
    for (auto v : data.y)
      if (v != 0 && v != 1) throw ValidationError("binary labels must be 0 or 1");
    f.classes_ = {0, 1};
  } else {
    f.classes_ = data.y;
    std::sort(f.classes_.begin(), f.classes_.end());
    f.classes_.erase(std::unique(f.classes_.begin(), f.classes_.end()), f.classes_.end());
  }
  std::vector<std::int32_t> y(data.size());
  std::vector<std::size_t> seen(f.classes_.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    y[i] = static_cast<std::int32_t>(std::lower_bound(f.classes_.begin(), f.classes_.end(), data.y[i]) -
                                     f.classes_.begin());
    ++seen[static_cast<std::size_t>(y[i])];
  }
  if (std::count_if(seen.begin(), seen.end(), [](auto c) { return c > 0; }) < 2)
    throw DegenerateDataError("training data contains a single class");

  const Binned binned = quantise(data);
  const std::size_t mtry =
      params.features_per_split > 0
          ? std::min<std::size_t>(static_cast<std::size_t>(params.features_per_split), data.n_features)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.n_features))));

  const auto n_trees = static_cast<std::size_t>(params.n_trees);
  f.trees_.resize(n_trees);
  unsigned workers = params.threads > 0 ? static_cast<unsigned>(params.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_trees)));
  auto work = [&](unsigned w) {
    TreeGrower g(binned, y, f.classes_.size(), params, mtry);
    for (std::size_t t = w; t < n_trees; t += workers) f.trees_[t] = g.grow(seed + t);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  return f;
}

std::vector<double> Forest::vote_shares(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw ValidationError("expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  if (trees_.empty()) throw ValidationError("forest is untrained");
  std::vector<double> votes(classes_.size(), 0.0);
  for (const auto& t : trees_) votes[static_cast<std::size_t>(t.leaf_for(x).majority)] += 1.0;
  for (auto& v : votes) v /= static_cast<double>(trees_.size());
  return votes;
}

double Forest::score(std::span<const double> x) const {
  if (task_ != Task::binary) throw ValidationError("score() needs a binary forest");
  return vote_shares(x)[1];
}

std::int64_t Forest::predict(std::span<const double> x) const {
  const auto v = vote_shares(x);
  if (task_ == Task::binary) return v[1] >= 0.5 ? 1 : 0;
  return classes_[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())];
}

// Text format, one record per line:
//   torsel-forest 1
//   task binary|multiclass
//   tau <number|nan>
//   params <n_trees> <max_depth> <min_leaf> <features_per_split> <seed>
//   features <n>
//   classes <k> <label>...
//   tree <nodes>
//   <feature> <threshold> <left> <right> <majority> <samples> <count>...   (per node)
void Forest::save(std::ostream& out) const {
  out << "torsel-forest 1\n";
  out << "task " << (task_ == Task::binary ? "binary" : "multiclass") << '\n';
  out << "tau " << (std::isnan(tau) ? std::string("nan") : csv::fmt(tau)) << '\n';
  out << "params " << params_.n_trees << ' ' << params_.max_depth << ' ' << params_.min_leaf << ' '
      << params_.features_per_split << ' ' << seed_ << '\n';
  out << "features " << n_features_ << '\n';
  out << "classes " << classes_.size();
  for (auto c : classes_) out << ' ' << c;
  out << '\n';
  const auto k = classes_.size();
  for (const auto& t : trees_) {
    out << "tree " << t.nodes.size() << '\n';
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      out << n.feature << ' ' << csv::fmt(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << n.majority
          << ' ' << n.samples;
      for (std::size_t c = 0; c < k; ++c) out << ' ' << t.leaf_counts[i * k + c];
      out << '\n';
    }
  }
}

Forest Forest::load(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw ParseError("unexpected end of model file", line_no + 1);
    ++line_no;
    return std::istringstream(line);
  };
  auto expect = [&](std::istringstream& s, const char* word) {
    std::string w;
    if (!(s >> w) || w != word) throw ParseError(std::string("expected '") + word + "'", line_no);
  };
  Forest f;
  {
    auto s = next();
    expect(s, "torsel-forest");
    int version = 0;
    if (!(s >> version) || version != 1) throw ParseError("unsupported model version", line_no);
  }
  {
    auto s = next();
    expect(s, "task");
    std::string t;
    s >> t;
    if (t == "binary") f.task_ = Task::binary;
    else if (t == "multiclass") f.task_ = Task::multiclass;
    else throw ParseError("unknown task '" + t + "'", line_no);
  }
  {
    auto s = next();
    expect(s, "tau");
    std::string v;
    s >> v;
    f.tau = v == "nan" ? std::numeric_limits<double>::quiet_NaN() : csv::to_double(v, line_no);
  }
  {
    auto s = next();
    expect(s, "params");
    if (!(s >> f.params_.n_trees >> f.params_.max_depth >> f.params_.min_leaf >> f.params_.features_per_split >>
          f.seed_))
      throw ParseError("bad params line", line_no);
  }
  {
    auto s = next();
    expect(s, "features");
    if (!(s >> f.n_features_)) throw ParseError("bad features line", line_no);
  }
  std::size_t k = 0;
  {
    auto s = next();
    expect(s, "classes");
    if (!(s >> k) || k < 2) throw ParseError("bad classes line", line_no);
    f.classes_.resize(k);
    for (auto& c : f.classes_)
      if (!(s >> c)) throw ParseError("bad classes line", line_no);
  }
  for (int t = 0; t < f.params_.n_trees; ++t) {
    auto s = next();
    expect(s, "tree");
    std::size_t nodes = 0;
    if (!(s >> nodes) || nodes == 0) throw ParseError("bad tree header", line_no);
    Tree tree;
    tree.nodes.resize(nodes);
    tree.leaf_counts.resize(nodes * k);
    for (std::size_t i = 0; i < nodes; ++i) {
      auto r = next();
      auto& n = tree.nodes[i];
      std::string thr;
      if (!(r >> n.feature >> thr >> n.left >> n.right >> n.majority >> n.samples))
        throw ParseError("bad tree node", line_no);
      n.threshold = csv::to_double(thr, line_no);
      for (std::size_t c = 0; c < k; ++c)
        if (!(r >> tree.leaf_counts[i * k + c])) throw ParseError("bad leaf counts", line_no);
      const auto limit = static_cast<std::int32_t>(nodes);
      if (n.feature >= static_cast<int>(f.n_features_) ||
          (n.feature >= 0 && (n.left <= static_cast<std::int32_t>(i) || n.left >= limit ||
                              n.right <= static_cast<std::int32_t>(i) || n.right >= limit)) ||
          n.majority < 0 || n.majority >= static_cast<std::int32_t>(k))
        throw ParseError("tree node out of range", line_no);
    }
    f.trees_.push_back(std::move(tree));
  }
  return f;
}

}  // namespace torsel::learn
