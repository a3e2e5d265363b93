#include "graphssl/harmonic.hpp"

#include <cmath>
#include <queue>

#include <Eigen/IterativeLinearSolvers>
#include <fmt/format.h>

#include "graphssl/parallel.hpp"

namespace graphssl {

Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolverOptions& opts) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw InputError("solve_spd: dimension mismatch");
  if (!(opts.tol > 0.0)) throw InputError("solve_spd: tolerance must be positive");
  const Index n = b.size();
  if (n == 0) return Vector();
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Vector::Zero(n);

  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(opts.tol);
  const Index cap = std::max<Index>(opts.max_iter_factor * n, 1);
  cg.compute(A);
  if (cg.info() != Eigen::Success) throw SolverError("solve_spd: preconditioner setup failed", 1.0);

  // CG tracks a recurrence residual that drifts from the true one; restart
  // from the current iterate until the true residual meets the tolerance.
  Vector x = Vector::Zero(n);
  Index used = 0;
  double rel = 1.0;
  while (used < cap) {
    cg.setMaxIterations(cap - used);
    x = cg.solveWithGuess(b, x);
    used += std::max<Index>(cg.iterations(), 1);
    rel = (A * x - b).norm() / bnorm;
    if (!std::isfinite(rel)) break;
    if (rel <= opts.tol) return x;
    if (cg.iterations() == 0) break;
  }
  throw SolverError(fmt::format("solve_spd: no convergence after {} iterations (relative "
                                "residual {:.3g}, tolerance {:.3g})",
                                used, rel, opts.tol),
                    rel);
}

void SoftConfig::validate() const {
  if (!std::isfinite(gamma_g) || gamma_g < 0.0) throw InputError("gamma_g must be finite and >= 0");
  if (!std::isfinite(c_l) || !(c_l > 0.0)) throw InputError("c_l must be finite and > 0");
  if (!std::isfinite(c_u) || !(c_u > 0.0)) throw InputError("c_u must be finite and > 0");
}

Vector to_targets(const Labels& labels) {
  Vector y(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Index>(i)] = labels[i];
  return y;
}

Vector clamped_harmonic(const SparseMatrix& W, const Labels& labels, const Vector& sink,
                        const SolverOptions& opts) {
  const Index n = W.rows();
  if (static_cast<Index>(labels.size()) != n || sink.size() != n)
    throw InputError("harmonic: label/sink length must equal graph size");
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  std::vector<Index> unlabeled;
  Index labeled = 0;
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1 && y != -1) throw InputError("harmonic: labels must be -1, 0 or +1");
    if (!(sink[i] >= 0.0) || !std::isfinite(sink[i]))
      throw InputError("harmonic: sink weights must be finite and >= 0");
    if (y == 0) {
      slot[static_cast<std::size_t>(i)] = static_cast<Index>(unlabeled.size());
      unlabeled.push_back(i);
    } else {
      ++labeled;
    }
  }
  if (labeled == 0) throw DegenerateInputError("harmonic: at least one labeled node is required");

  Vector out = to_targets(labels);
  if (unlabeled.empty()) return out;

  // Every unlabeled node must reach a label or a sink, otherwise the block
  // L_uu + diag(sink) is singular.
  {
    std::vector<char> anchored(static_cast<std::size_t>(n), 0);
    std::queue<Index> frontier;
    for (Index i = 0; i < n; ++i)
      if (labels[static_cast<std::size_t>(i)] != 0 || sink[i] > 0.0) {
        anchored[static_cast<std::size_t>(i)] = 1;
        frontier.push(i);
      }
    while (!frontier.empty()) {
      const Index v = frontier.front();
      frontier.pop();
      for (SparseMatrix::InnerIterator it(W, v); it; ++it)
        if (it.value() > 0.0 && !anchored[static_cast<std::size_t>(it.col())]) {
          anchored[static_cast<std::size_t>(it.col())] = 1;
          frontier.push(it.col());
        }
    }
    for (Index u : unlabeled)
      if (!anchored[static_cast<std::size_t>(u)])
        throw DegenerateInputError(fmt::format(
            "harmonic: node {} lies in a component with no label and gamma_g = 0", u));
  }

  const auto nu = static_cast<Index>(unlabeled.size());
  std::vector<Triplet> trips;
  Vector rhs = Vector::Zero(nu);
  for (Index r = 0; r < nu; ++r) {
    const Index i = unlabeled[static_cast<std::size_t>(r)];
    double diag = sink[i];
    for (SparseMatrix::InnerIterator it(W, i); it; ++it) {
      if (it.col() == i) continue;
      diag += it.value();
      const Index c = slot[static_cast<std::size_t>(it.col())];
      if (c >= 0)
        trips.emplace_back(r, c, -it.value());
      else
        rhs[r] += it.value() * labels[static_cast<std::size_t>(it.col())];
    }
    trips.emplace_back(r, r, diag);
  }
  SparseMatrix A(nu, nu);
  A.setFromTriplets(trips.begin(), trips.end());
  const Vector lu = solve_spd(A, rhs, opts);
  for (Index r = 0; r < nu; ++r) out[unlabeled[static_cast<std::size_t>(r)]] = lu[r];
  return out;
}

SoftLabels hard_harmonic(const SimilarityGraph& g, const Labels& labels, double gamma_g,
                         const SolverOptions& opts) {
  if (!std::isfinite(gamma_g) || gamma_g < 0.0) throw InputError("gamma_g must be finite and >= 0");
  return {clamped_harmonic(g.weights(), labels, Vector::Constant(g.size(), gamma_g), opts),
          LabelOrigin::hard_hs};
}

Vector soft_harmonic_weighted(const SparseMatrix& W, const Vector& y, const Vector& fit,
                              const Vector& sink, const SolverOptions& opts) {
  const Index n = W.rows();
  if (y.size() != n || fit.size() != n || sink.size() != n)
    throw InputError("soft harmonic: vector lengths must equal graph size");
  if (!y.allFinite()) throw InputError("soft harmonic: targets must be finite");
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(W.nonZeros() + n));
  for (Index i = 0; i < n; ++i) {
    if (!(fit[i] > 0.0) || !std::isfinite(fit[i]))
      throw InputError("soft harmonic: fit weights must be finite and > 0");
    double diag = fit[i] + sink[i];
    for (SparseMatrix::InnerIterator it(W, i); it; ++it) {
      if (it.col() == i) continue;
      diag += it.value();
      trips.emplace_back(i, it.col(), -it.value());
    }
    trips.emplace_back(i, i, diag);
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return solve_spd(A, fit.cwiseProduct(y), opts);
}

SoftLabels soft_harmonic(const SimilarityGraph& g, const Vector& y, const SoftConfig& cfg,
                         const SolverOptions& opts) {
  cfg.validate();
  const Index n = g.size();
  if (y.size() != n) throw InputError("soft harmonic: target length must equal graph size");
  Vector fit(n);
  for (Index i = 0; i < n; ++i) fit[i] = y[i] != 0.0 ? cfg.c_l : cfg.c_u;
  return {soft_harmonic_weighted(g.weights(), y, fit, Vector::Constant(n, cfg.gamma_g), opts),
          LabelOrigin::soft_hs};
}

SoftLabels blockwise_harmonic(const SimilarityGraph& g, const Vector& y, const SoftConfig& cfg,
                              const std::vector<std::vector<Index>>& partition,
                              const SolverOptions& opts) {
  cfg.validate();
  const Index n = g.size();
  if (y.size() != n) throw InputError("blockwise harmonic: target length must equal graph size");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  Index covered = 0;
  for (const auto& block : partition) {
    if (block.empty()) throw InputError("blockwise harmonic: empty block in partition");
    for (Index i : block) {
      if (i < 0 || i >= n) throw InputError("blockwise harmonic: node index out of range");
      if (seen[static_cast<std::size_t>(i)])
        throw InputError(fmt::format("blockwise harmonic: node {} appears in two blocks", i));
      seen[static_cast<std::size_t>(i)] = 1;
      ++covered;
    }
  }
  if (covered != n) throw InputError("blockwise harmonic: partition does not cover every node");

  Vector out = Vector::Zero(n);
  parallel_for(partition.size(), [&](std::size_t b) {
    const auto& block = partition[b];
    const SimilarityGraph sub = g.induced(block);
    Vector yb(static_cast<Index>(block.size()));
    for (std::size_t k = 0; k < block.size(); ++k) yb[static_cast<Index>(k)] = y[block[k]];
    const SoftLabels lb = soft_harmonic(sub, yb, cfg, opts);
    // blocks are disjoint so these writes never overlap
    for (std::size_t k = 0; k < block.size(); ++k) out[block[k]] = lb.values[static_cast<Index>(k)];
  });
  return {std::move(out), LabelOrigin::soft_hs};
}

}  // namespace graphssl
