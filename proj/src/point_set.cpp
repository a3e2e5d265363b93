#include "graphssl/point_set.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "graphssl/io.hpp"

namespace graphssl {

PointSet::PointSet(PointMatrix points, Labels labels)
    : PointSet(std::move(points), std::move(labels), RowVector()) {}

PointSet::PointSet(PointMatrix points, Labels labels, RowVector feature_weights)
    : points_(std::move(points)),
      labels_(std::move(labels)),
      feature_weights_(std::move(feature_weights)) {
  if (feature_weights_.size() == 0) feature_weights_ = RowVector::Ones(points_.cols());
  validate();
}

void PointSet::validate() const {
  if (points_.rows() < 1 || points_.cols() < 1)
    throw InputError("point set needs at least one point and one feature");
  if (static_cast<Index>(labels_.size()) != points_.rows())
    throw InputError(fmt::format("point set has {} points but {} labels", points_.rows(),
                                 labels_.size()));
  if (feature_weights_.size() != points_.cols())
    throw InputError("feature weight vector length must equal the number of features");
  if (!points_.allFinite()) throw InputError("point coordinates must be finite");
  for (Index k = 0; k < feature_weights_.size(); ++k)
    if (!std::isfinite(feature_weights_[k]) || feature_weights_[k] < 0.0)
      throw InputError("feature weights must be finite and nonnegative");
  for (int y : labels_)
    if (y != -1 && y != 0 && y != 1)
      throw InputError(fmt::format("label {} is not one of -1, 0, 1", y));
}

Index PointSet::labeled_count() const {
  Index n = 0;
  for (int y : labels_) n += (y != 0);
  return n;
}

std::vector<std::string> PointSet::feature_names() const {
  if (!names_.empty()) return names_;
  std::vector<std::string> names;
  for (Index k = 0; k < dims(); ++k) names.push_back(fmt::format("x{}", k));
  return names;
}

void PointSet::set_feature_names(std::vector<std::string> names) {
  if (static_cast<Index>(names.size()) != dims())
    throw InputError("feature name count must equal the number of features");
  names_ = std::move(names);
}

PointSet PointSet::with_labels(Labels labels) const {
  PointSet out(points_, std::move(labels), feature_weights_);
  out.names_ = names_;
  return out;
}

PointSet PointSet::subset(const std::vector<Index>& rows) const {
  PointMatrix pts(static_cast<Index>(rows.size()), dims());
  Labels lab;
  lab.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    pts.row(static_cast<Index>(r)) = points_.row(rows[r]);
    lab.push_back(label(rows[r]));
  }
  PointSet out(std::move(pts), std::move(lab), feature_weights_);
  out.names_ = names_;
  return out;
}

PointSet read_point_set_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("point CSV is empty (missing header)");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label")
    throw InputError("point CSV header must list feature columns followed by 'label'");
  const std::size_t p = header.size() - 1;

  std::vector<double> values;
  Labels labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != p + 1)
      throw InputError(fmt::format("point CSV row {}: expected {} fields, got {}", row, p + 1,
                                   fields.size()));
    for (std::size_t k = 0; k < p; ++k)
      values.push_back(parse_double(fields[k], fmt::format("point CSV row {}", row)));
    labels.push_back(static_cast<int>(parse_int(fields[p], fmt::format("point CSV row {}", row))));
  }
  if (labels.empty()) throw InputError("point CSV has no data rows");

  PointMatrix pts(static_cast<Index>(labels.size()), static_cast<Index>(p));
  for (Index i = 0; i < pts.rows(); ++i)
    for (Index k = 0; k < pts.cols(); ++k) pts(i, k) = values[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(k)];
  header.pop_back();
  PointSet ps(std::move(pts), std::move(labels));
  ps.set_feature_names(std::move(header));
  return ps;
}

PointSet read_point_set_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_point_set_csv(in);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_point_set_csv(std::ostream& out, const PointSet& ps) {
  for (const auto& name : ps.feature_names()) out << name << ',';
  out << "label\n";
  for (Index i = 0; i < ps.size(); ++i) {
    for (Index k = 0; k < ps.dims(); ++k) out << format_double(ps.points()(i, k)) << ',';
    out << ps.label(i) << '\n';
  }
}

void write_point_set_csv(const std::filesystem::path& path, const PointSet& ps) {
  auto out = open_output(path);
  write_point_set_csv(out, ps);
}

}  // namespace graphssl
