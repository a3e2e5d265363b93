#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "graphssl/common.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/harmonic.hpp"
#include "graphssl/point_set.hpp"

namespace graphssl {

enum class JointInit { random_sample, kmeans };

struct JointConfig {
  Index k = 20;
  double gamma_q = 10.0;
  double gamma_g = 0.0;
  double f_l = 10.0;
  double f_u = 0.1;
  // Backbone kernel exp(-||a - b||^2_psi / (2 sigma^2)). Unset means the
  // mean per-feature sample standard deviation of the data.
  std::optional<double> sigma;
  Index max_outer = 10;
  double conv_tol = 1e-6;
  // Cap on (solve, reassign) rounds inside one quantization step.
  Index max_inner = 20;
  JointInit init = JointInit::random_sample;

  void validate() const;
};

// Backbone graph state. Rows [0, m) of `centroids` are the labeled points
// and never move; rows [m, m + k) are free.
struct BackboneState {
  PointMatrix centroids;
  Index labeled = 0;
  // -1/+1 for the pinned rows, 0 for free centroids.
  Labels centroid_targets;
  Vector soft_labels;
  // Nearest centroid (psi-weighted, lowest index on ties) for every point.
  std::vector<Index> assignment;
  double sigma = 1.0;
  std::vector<double> objective_trace;
  // Worst relative residual of the centroid system over all solves.
  double max_step_residual = 0.0;
  Index outer_iterations = 0;

  Index size() const { return centroids.rows(); }
  Index free_count() const { return centroids.rows() - labeled; }
};

// Pins the labeled points, seeds the free centroids (uniform sample of the
// unlabeled points, or k-means from that sample) and assigns every point.
BackboneState init_backbone(const PointSet& ps, const JointConfig& cfg, std::uint64_t seed);

// Complete graph over the centroids with the backbone kernel.
SimilarityGraph backbone_graph(const BackboneState& state, const RowVector& psi);

// Solves (L^C + gamma_g I + F) l = F y on the current backbone, F = f_l on
// pinned rows and f_u on free ones.
Vector propagate_on_backbone(const BackboneState& state, const JointConfig& cfg,
                             const RowVector& psi, const SolverOptions& opts = {});

struct QuantizationResult {
  PointMatrix centroids;
  double residual = 0.0;
  // Free centroids whose rows were re-seeded because the system was singular.
  std::vector<Index> reseeded;
};

// One linear solve of the centroid system for the free rows, holding the
// soft labels and assignment fixed. Pinned rows are copied unchanged.
QuantizationResult quantization_step(const PointSet& ps, const BackboneState& state,
                                     const JointConfig& cfg);

// The quadratic surrogate whose stationary point quantization_step returns:
//   -1/(4 (m+k)^2 sigma^2) sum_{i,j} (l_i - l_j)^2 ||c_i - c_j||^2
//   + gamma_q / n sum_j sum_{x in K_j} ||c_j - x||^2
double quantization_surrogate(const PointSet& ps, const BackboneState& state,
                              const JointConfig& cfg);

// Full joint objective:
//   (l - y)^T F (l - y) + l^T (L^C + gamma_g I) l
//   + gamma_q (m+k)^2 / n sum_j sum_{x in K_j} ||c_j - x||^2
double joint_objective(const PointSet& ps, const BackboneState& state, const JointConfig& cfg);

std::vector<Index> assign_points(const PointSet& ps, const PointMatrix& centroids);

// Alternates propagation and quantization until the relative objective
// change drops below conv_tol or max_outer rounds ran.
BackboneState elastic_joint(const PointSet& ps, const JointConfig& cfg, std::uint64_t seed);

// Baseline: k-means on the unlabeled points (same seeding), then a single
// propagation on the resulting backbone.
BackboneState kmeans_then_propagate(const PointSet& ps, const JointConfig& cfg,
                                    std::uint64_t seed);

struct JointPrediction {
  Index centroid = 0;
  double soft_label = 0.0;
  int label = 0;
};

// 1-NN over the centroids.
std::vector<JointPrediction> infer_unlabeled(const PointSet& ps, const BackboneState& state);

}  // namespace graphssl
