#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "torsel/learn/features.hpp"

namespace torsel::learn {

struct ForestParams {
  int n_trees = 100;
  int max_depth = 16;
  int min_leaf = 5;
  int features_per_split = 3;  ///< 0: floor(sqrt(n_features))
  int threads = 0;             ///< 0: hardware concurrency

  void validate() const;
};

enum class Task { binary, multiclass };

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;  ///< go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t majority = 0;  ///< class index of the leaf's plurality (lowest index on ties)
  std::uint32_t samples = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> leaf_counts;  ///< n_classes entries per node, leaves only meaningful

  const TreeNode& leaf_for(std::span<const double> x) const;
};

/// Random forest with bootstrap sampling and Gini splits. Binary models use
/// classes {0, 1} with 1 meaning "fast".
class Forest {
 public:
  Forest() = default;

  static Forest train(const Dataset& data, const ForestParams& params, std::uint64_t seed,
                      Task task = Task::binary);

  Task task() const noexcept { return task_; }
  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<std::int64_t>& classes() const noexcept { return classes_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const ForestParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Fraction of trees voting for each class.
  std::vector<double> vote_shares(std::span<const double> x) const;

  /// Positive-vote fraction (binary only).
  double score(std::span<const double> x) const;

  /// Binary: score >= 0.5. Multiclass: plurality class label, lowest on ties.
  std::int64_t predict(std::span<const double> x) const;

  /// Threshold the model was trained at; NaN when not applicable.
  double tau = std::numeric_limits<double>::quiet_NaN();

  void save(std::ostream& out) const;
  static Forest load(std::istream& in);

 private:
  Task task_ = Task::binary;
  std::size_t n_features_ = 0;
  std::vector<std::int64_t> classes_;
  std::vector<Tree> trees_;
  ForestParams params_;
  std::uint64_t seed_ = 0;
};

}  // namespace torsel::learn
