#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "graphssl/common.hpp"

namespace graphssl {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using RowRef = Eigen::Ref<const RowVector>;

// Labels are -1, +1, or 0 for "unlabeled".
using Labels = std::vector<int>;

// n points in p dimensions with a label per point and a nonnegative weight
// per feature. Feature weights default to all ones.
class PointSet {
 public:
  PointSet() = default;
  PointSet(PointMatrix points, Labels labels);
  PointSet(PointMatrix points, Labels labels, RowVector feature_weights);

  Index size() const { return points_.rows(); }
  Index dims() const { return points_.cols(); }

  const PointMatrix& points() const { return points_; }
  auto point(Index i) const { return points_.row(i); }
  const Labels& labels() const { return labels_; }
  int label(Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  const RowVector& feature_weights() const { return feature_weights_; }

  Index labeled_count() const;
  std::vector<std::string> feature_names() const;
  void set_feature_names(std::vector<std::string> names);

  PointSet with_labels(Labels labels) const;
  PointSet subset(const std::vector<Index>& rows) const;

 private:
  void validate() const;

  PointMatrix points_;
  Labels labels_;
  RowVector feature_weights_;
  std::vector<std::string> names_;
};

// CSV schema: a header row, one float column per feature, and a final
// column named `label` holding -1, 0 or 1.
PointSet read_point_set_csv(std::istream& in);
PointSet read_point_set_csv(const std::filesystem::path& path);
void write_point_set_csv(std::ostream& out, const PointSet& ps);
void write_point_set_csv(const std::filesystem::path& path, const PointSet& ps);

}  // namespace graphssl
