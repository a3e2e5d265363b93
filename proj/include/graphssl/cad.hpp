#pragma once

#include <cstdint>
#include <vector>

#include "graphssl/common.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/harmonic.hpp"
#include "graphssl/point_set.hpp"

namespace graphssl {

// Per-class complete kernel graphs, kept as their point sets and volumes
// (vol = sum over ordered same-class pairs i != j of K(x_i, x_j)).
class CadModel {
 public:
  // Every training label must be -1 or +1 and both classes present.
  // Priors are the empirical class frequencies.
  CadModel(const PointSet& train, GaussianKernel kernel, double lambda = 0.0);

  const GaussianKernel& kernel() const { return kernel_; }
  double lambda() const { return lambda_; }
  CadModel with_lambda(double lambda) const;
  double volume(int label) const { return label > 0 ? vol_pos_ : vol_neg_; }
  double prior(int label) const { return label > 0 ? prior_pos_ : prior_neg_; }
  const PointMatrix& class_points(int label) const { return label > 0 ? pos_ : neg_; }

 private:
  GaussianKernel kernel_;
  double lambda_;
  PointMatrix pos_, neg_;
  double vol_pos_ = 0.0, vol_neg_ = 0.0;
  double prior_pos_ = 0.5, prior_neg_ = 0.5;
};

struct RwcadTerms {
  // sum_i K(x_i, x) over each class
  double mass_pos = 0.0, mass_neg = 0.0;
  // vol(W^c) + 2 mass_c: total edge sum of the class graph with x added
  double total_pos = 0.0, total_neg = 0.0;
  // P(x | y = c) = mass_c / total_c (0 when both are 0)
  double like_pos = 0.0, like_neg = 0.0;
};

RwcadTerms rwcad_terms(const CadModel& model, const RowRef& x);

// P(x|y != y_e) P(y != y_e) / (lambda + sum_c P(x|c) P(c)). When lambda = 0
// and both likelihoods vanish the prior of the other class is returned.
double rwcad_score(const CadModel& model, const RowRef& x, int y);
std::vector<double> rwcad_scores(const CadModel& model, const PointSet& test);

// Parzen posterior over the training set: 1 - sum_{y_j = y} K / sum_j K.
// With k_neighbors > 0 only the k nearest training points (lowest index on
// ties) enter the sums. Throws DegenerateInputError on zero kernel mass.
double weighted_knn_score(const PointSet& train, const GaussianKernel& kernel, const RowRef& x, int y,
                          Index k_neighbors = 0);
std::vector<double> weighted_knn_scores(const PointSet& train, const GaussianKernel& kernel,
                                        const PointSet& test, Index k_neighbors = 0);

// s_i = |l*_i - y_i| with l* the soft harmonic solution for fully labeled y
// (C = c_l everywhere).
std::vector<double> softhad_score(const SimilarityGraph& g, const Labels& y, const SoftConfig& cfg,
                                  const SolverOptions& opts = {});

// Centroid graph W~ with multiplicities v and centroid labels y: minimizes
// (l - y)^T C^V (l - y) + l^T (L(V W~ V) + gamma_g V) l with C^V = c_l V,
// and returns |l - y| per centroid.
std::vector<double> backbone_cad(const SparseMatrix& centroid_weights, const Vector& multiplicities,
                                 const Labels& y, const SoftConfig& cfg, const SolverOptions& opts = {});

// SoftHAD for large sets: `centroids` training points drawn uniformly (at
// least one per class, each keeping its own label), multiplicities from
// nearest-centroid cell counts over the training set, backbone_cad on the
// result. A query scores |l_c - y| for its nearest centroid c.
std::vector<double> softhad_backbone_scores(const PointSet& train, const PointSet& queries,
                                            const GaussianKernel& kernel, const SoftConfig& cfg,
                                            Index centroids, std::uint64_t seed);

struct TaskScaling {
  double min = 0.0;
  double max = 1.0;

  static TaskScaling fit(const std::vector<double>& train_scores);
  // (s - min) / (max - min) clamped to [0, 1]; 0.5 when max == min.
  double apply(double s) const;
  std::vector<double> apply(const std::vector<double>& raw) const;
};

std::vector<double> scale_scores(const TaskScaling& scaling, const std::vector<double>& raw);

// 1e-5, 1e-4, ..., 1e5.
std::vector<double> lambda_grid();

}  // namespace graphssl
