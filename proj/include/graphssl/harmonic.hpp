#pragma once

#include <vector>

#include "graphssl/common.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/point_set.hpp"

namespace graphssl {

struct SolverOptions {
  // Stop when ||Ax - b|| <= tol * ||b||.
  double tol = 1e-12;
  // Iteration cap is max_iter_factor * n.
  Index max_iter_factor = 10;
};

// Jacobi-preconditioned conjugate gradient for sparse SPD systems. Throws
// SolverError (carrying the relative residual) when the cap is reached.
Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolverOptions& opts = {});

enum class LabelOrigin { hard_hs, soft_hs, compact_hs };

struct SoftLabels {
  Vector values;
  LabelOrigin origin = LabelOrigin::hard_hs;

  Index size() const { return values.size(); }
  double operator[](Index i) const { return values[i]; }
};

struct SoftConfig {
  double gamma_g = 0.0;
  double c_l = 10.0;
  double c_u = 0.1;

  void validate() const;
};

// Labeled entries are clamped to the input; unlabeled ones solve
// (L_uu + gamma_g I) l_u = W_ul l_l.
SoftLabels hard_harmonic(const SimilarityGraph& g, const Labels& labels, double gamma_g,
                         const SolverOptions& opts = {});

// Same as hard_harmonic with a per-node sink weight instead of gamma_g I:
// (L_uu + diag(sink)_uu) l_u = W_ul l_l. Used by the compact solution where
// the sink is gamma_g * multiplicity.
Vector clamped_harmonic(const SparseMatrix& weights, const Labels& labels, const Vector& sink,
                        const SolverOptions& opts = {});

// Minimizes (l - y)^T C (l - y) + l^T (L + gamma_g I) l with C = c_l on nodes
// where y != 0 and c_u elsewhere, by solving (L + gamma_g I + C) l = C y.
SoftLabels soft_harmonic(const SimilarityGraph& g, const Vector& y, const SoftConfig& cfg,
                         const SolverOptions& opts = {});

// As above with an explicit positive fit-weight diagonal.
Vector soft_harmonic_weighted(const SparseMatrix& weights, const Vector& y, const Vector& fit,
                              const Vector& sink, const SolverOptions& opts = {});

// Solves soft_harmonic independently on every block of `partition` (edges
// between blocks are dropped) and writes the results back by node index.
// Blocks are solved concurrently.
SoftLabels blockwise_harmonic(const SimilarityGraph& g, const Vector& y, const SoftConfig& cfg,
                              const std::vector<std::vector<Index>>& partition,
                              const SolverOptions& opts = {});

// Converts -1/0/+1 labels to a pseudo-target vector.
Vector to_targets(const Labels& labels);

}  // namespace graphssl
