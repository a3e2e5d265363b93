#pragma once

#include <optional>
#include <vector>

#include "graphssl/common.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/harmonic.hpp"
#include "graphssl/point_set.hpp"

namespace graphssl {

// Incremental k-centers ("doubling") quantizer with multiplicities.
//
// Invariants after every observe():
//   * centroids are pairwise at least radius() apart,
//   * centroid_count() <= capacity(),
//   * the multiplicities sum to the number of observed points,
//   * every observed point lies within max_distortion() of the centroid it
//     was (transitively) merged into.
class QuantizerState {
 public:
  QuantizerState(Index capacity, double multiplier);

  struct Step {
    // Centroid holding the new point after the step.
    Index centroid = 0;
    // Set when the step repartitioned: remap[old_index] = new_index.
    std::vector<Index> remap;
  };

  // Assigns x to a centroid closer than R or opens a new one; if that
  // leaves capacity + 1 centroids, grows R by the multiplier and greedily
  // repartitions until the capacity holds again.
  Step observe(const RowRef& x, int label = 0);

  Index capacity() const { return capacity_; }
  double multiplier() const { return multiplier_; }
  // 0 until the first overflow, then the smallest distance among those
  // capacity + 1 centroids, grown by the multiplier at every repartition.
  double radius() const { return radius_; }
  Index centroid_count() const { return centroids_.rows(); }
  Index dims() const { return centroids_.cols(); }
  const PointMatrix& centroids() const { return centroids_; }
  const std::vector<long long>& multiplicities() const { return multiplicities_; }
  const Labels& centroid_labels() const { return labels_; }
  long long observed() const { return observed_; }
  // Labeled points that landed on a centroid already carrying the other
  // label (the centroid keeps its first label).
  long long label_conflicts() const { return conflicts_; }

 private:
  void add_centroid(const RowRef& x, int label, long long count);
  std::vector<Index> repartition();
  void merge_label(Index into, int label);

  Index capacity_;
  double multiplier_;
  double radius_ = 0.0;
  PointMatrix centroids_;
  std::vector<long long> multiplicities_;
  Labels labels_;
  long long observed_ = 0;
  long long conflicts_ = 0;
};

// Feeds every row of `stream` (unlabeled) and returns the centroid each row
// ends up in, following repartitions.
std::vector<Index> quantize_stream(QuantizerState& state, const PointMatrix& stream);

// Frobenius distance between the normalized Laplacians of the dense kernel
// graph on `points` and on the points moved to their centroids.
double quantization_laplacian_error(const PointMatrix& points, const PointMatrix& centroids,
                                    const std::vector<Index>& assignment, const GaussianKernel& kernel);

// R * m / (m - 1).
double max_distortion(const QuantizerState& state);
double max_distortion(double radius, double multiplier);

// Centroid similarity W~ together with the multiplicity-weighted Wq = V W~ V.
struct CompactGraph {
  Matrix centroid_weights;
  Vector multiplicities;
  SparseMatrix weights;

  Index size() const { return multiplicities.size(); }
  SparseMatrix laplacian() const;
};

// epsilon_cut zeroes centroid similarities below it.
CompactGraph build_compact_graph(const PointMatrix& centroids,
                                 const std::vector<long long>& multiplicities,
                                 const GaussianKernel& kernel, double epsilon_cut);
CompactGraph build_compact_graph(const Matrix& centroid_weights, const Vector& multiplicities);

// l_u = (Lq_uu + gamma_g V_uu)^{-1} Wq_ul l_l: the regularized harmonic
// solution of the graph where centroid i is replicated v_i times.
SoftLabels compact_harmonic(const CompactGraph& cg, const Labels& centroid_labels, double gamma_g,
                            const SolverOptions& opts = {});

struct OnlineConfig {
  Index capacity = 100;
  double multiplier = 1.5;
  double gamma_g = 0.1;
  double sigma = 1.0;
  bool normalize_by_p = true;
  // Centroid similarities below this are dropped; defaults to 0.1 gamma_g.
  std::optional<double> epsilon_cut;

  double resolved_epsilon() const { return epsilon_cut.value_or(0.1 * gamma_g); }
};

enum class OnlinePrediction { negative = -1, abstain = 0, positive = 1 };

struct OnlineStep {
  Index centroid = 0;
  OnlinePrediction prediction = OnlinePrediction::abstain;
  double soft_label = 0.0;
};

// Online quantized harmonic solution: quantize the new point, rebuild the
// centroid graph, solve the compact problem, predict the sign at the new
// point's centroid. Abstains when that centroid has no path to a label.
class OnlinePredictor {
 public:
  explicit OnlinePredictor(OnlineConfig cfg);

  OnlineStep step(const RowRef& x, int label = 0);

  const QuantizerState& state() const { return state_; }
  const OnlineConfig& config() const { return cfg_; }

 private:
  OnlineConfig cfg_;
  QuantizerState state_;
  std::optional<GaussianKernel> kernel_;
};

}  // namespace graphssl
