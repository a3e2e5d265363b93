#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "graphssl/common.hpp"
#include "graphssl/point_set.hpp"

namespace graphssl {

// Sparse symmetric nonnegative weight matrix with zero diagonal, together
// with its degree vector and volume. Immutable after construction.
class SimilarityGraph {
 public:
  SimilarityGraph() = default;

  // Validates symmetry (exact), nonnegativity, finiteness and a zero
  // diagonal; throws InputError otherwise. Explicit zeros are pruned.
  explicit SimilarityGraph(SparseMatrix weights);

  static SimilarityGraph from_dense(const Matrix& weights);

  Index size() const { return weights_.rows(); }
  const SparseMatrix& weights() const { return weights_; }
  const Vector& degrees() const { return degrees_; }
  double degree(Index i) const { return degrees_[i]; }
  double volume() const { return volume_; }
  Index edge_count() const { return weights_.nonZeros() / 2; }

  // Subgraph induced by `nodes` (in the given order); cross weights dropped.
  SimilarityGraph induced(const std::vector<Index>& nodes) const;

 private:
  SparseMatrix weights_;
  Vector degrees_;
  double volume_ = 0.0;
};

enum class GraphMode { knn, epsilon };
enum class SigmaRule { explicit_value, tenth_of_mean_std };

struct GraphConfig {
  GraphMode mode = GraphMode::knn;
  Index k_neighbors = 5;
  double epsilon_cut = 0.0;
  SigmaRule sigma_rule = SigmaRule::tenth_of_mean_std;
  double sigma = 1.0;
  // Divide the squared distance by p*sigma^2 instead of sigma^2.
  bool normalize_by_p = true;

  void validate() const;

  static GraphConfig knn(Index k) {
    GraphConfig c;
    c.mode = GraphMode::knn;
    c.k_neighbors = k;
    return c;
  }
  static GraphConfig epsilon(double cut) {
    GraphConfig c;
    c.mode = GraphMode::epsilon;
    c.epsilon_cut = cut;
    return c;
  }
  // "knn:K" or "eps:E"; sigma stays on the heuristic rule.
  static GraphConfig parse(const std::string& text);
  GraphConfig& with_sigma(double s) {
    sigma_rule = SigmaRule::explicit_value;
    sigma = s;
    return *this;
  }
};

double weighted_sq_distance(const RowRef& a, const RowRef& b, const RowRef& psi);

// exp(-sum_k psi_k (a_k - b_k)^2 / (p sigma^2)), or / sigma^2 when
// normalize_by_p is false.
double gaussian_weight(const RowRef& xi, const RowRef& xj, double sigma, const RowRef& psi,
                       bool normalize_by_p);

// Kernel with the width/normalization already resolved, so call sites that
// evaluate many pairs (CAD scoring, backbone graphs) share one definition.
class GaussianKernel {
 public:
  GaussianKernel(double sigma, RowVector psi, bool normalize_by_p);
  double operator()(const RowRef& a, const RowRef& b) const;
  double from_sq_distance(double weighted_sq) const;
  double sigma() const { return sigma_; }
  const RowVector& feature_weights() const { return psi_; }

 private:
  double sigma_;
  RowVector psi_;
  double scale_;
};

// 0.1 x the mean over features of the per-feature sample standard deviation.
double tenth_of_mean_std(const PointMatrix& points);
double resolve_sigma(const PointMatrix& points, const GraphConfig& cfg);
GaussianKernel make_kernel(const PointSet& ps, const GraphConfig& cfg);

// knn mode keeps edge (i, j) when either endpoint lists the other among its
// k nearest (ties broken toward the lower index); epsilon mode computes all
// pairs and zeroes weights below the cut.
SimilarityGraph build_graph(const PointSet& ps, const GraphConfig& cfg);
SimilarityGraph build_graph(const PointMatrix& points, const RowVector& psi,
                            const GraphConfig& cfg);

// L = D - W, or I - D^{-1/2} W D^{-1/2} when normalized.
SparseMatrix laplacian(const SimilarityGraph& g, bool normalized = false);

// s = 1^T W / vol(W), the stationary distribution of P = D^{-1} W.
Vector stationary_distribution(const SimilarityGraph& g);

// Components over nonzero edges. Members ascending; components ordered by
// smallest member.
std::vector<std::vector<Index>> connected_components(const SimilarityGraph& g);

// `i,j,w` per edge with i < j, rows in (i, j) order.
void write_edge_list(std::ostream& out, const SimilarityGraph& g);

}  // namespace graphssl
