#include "graphssl/joint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <fmt/format.h>

#include "graphssl/parallel.hpp"
#include "graphssl/random.hpp"

namespace graphssl {

namespace {

constexpr Index kKmeansIterations = 100;

std::vector<Index> unlabeled_rows(const PointSet& ps) {
  std::vector<Index> rows;
  for (Index i = 0; i < ps.size(); ++i)
    if (ps.label(i) == 0) rows.push_back(i);
  return rows;
}

Index nearest_row(const RowRef& x, const PointMatrix& centroids, const RowRef& psi) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centroids.rows(); ++c) {
    const double d = weighted_sq_distance(x, centroids.row(c), psi);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Unlabeled point farthest from every row of `centroids`; lowest index on ties.
Index farthest_unlabeled(const PointSet& ps, const PointMatrix& centroids) {
  Index best = -1;
  double best_d = -1.0;
  const RowVector& psi = ps.feature_weights();
  for (Index i = 0; i < ps.size(); ++i) {
    if (ps.label(i) != 0) continue;
    double d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c)
      d = std::min(d, weighted_sq_distance(ps.point(i), centroids.row(c), psi));
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// Lloyd iterations on the unlabeled rows only.
PointMatrix lloyd(const PointSet& ps, const std::vector<Index>& rows, PointMatrix centers) {
  const RowVector& psi = ps.feature_weights();
  std::vector<Index> owner(rows.size(), -1);
  for (Index it = 0; it < kKmeansIterations; ++it) {
    bool changed = false;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Index c = nearest_row(ps.point(rows[r]), centers, psi);
      if (c != owner[r]) {
        owner[r] = c;
        changed = true;
      }
    }
    if (!changed && it > 0) break;
    PointMatrix sums = PointMatrix::Zero(centers.rows(), centers.cols());
    std::vector<Index> counts(static_cast<std::size_t>(centers.rows()), 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      sums.row(owner[r]) += ps.point(rows[r]);
      ++counts[static_cast<std::size_t>(owner[r])];
    }
    for (Index c = 0; c < centers.rows(); ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        Index far = 0;
        double far_d = -1.0;
        for (Index r : rows) {
          const double d = weighted_sq_distance(
              ps.point(r), centers.row(nearest_row(ps.point(r), centers, psi)), psi);
          if (d > far_d) {
            far_d = d;
            far = r;
          }
        }
        centers.row(c) = ps.point(far);
      }
    }
  }
  return centers;
}

BackboneState pinned_state(const PointSet& ps, const JointConfig& cfg) {
  BackboneState s;
  const Index m = ps.labeled_count();
  s.labeled = m;
  s.centroids.resize(m + cfg.k, ps.dims());
  Index r = 0;
  for (Index i = 0; i < ps.size(); ++i)
    if (ps.label(i) != 0) {
      s.centroids.row(r++) = ps.point(i);
      s.centroid_targets.push_back(ps.label(i));
    }
  s.centroid_targets.resize(static_cast<std::size_t>(m + cfg.k), 0);
  return s;
}

double auto_sigma(const PointMatrix& points) {
  const double s = 10.0 * tenth_of_mean_std(points);
  if (!(s > 0.0) || !std::isfinite(s))
    throw DegenerateInputError("cannot derive a backbone kernel width: features are constant");
  return s;
}

double quantization_cost(const PointSet& ps, const BackboneState& s) {
  double q = 0.0;
  for (Index i = 0; i < ps.size(); ++i)
    q += weighted_sq_distance(ps.point(i), s.centroids.row(s.assignment[static_cast<std::size_t>(i)]),
                              ps.feature_weights());
  return q;
}

void check_inputs(const PointSet& ps, const JointConfig& cfg) {
  cfg.validate();
  const Index m = ps.labeled_count();
  if (m < 1) throw InputError("joint quantization needs at least one labeled point");
  if (ps.size() <= m + cfg.k)
    throw InputError(fmt::format("joint quantization needs n > m + k (n = {}, m = {}, k = {})",
                                 ps.size(), m, cfg.k));
}

void quantize(const PointSet& ps, BackboneState& s, const JointConfig& cfg) {
  for (Index r = 0; r < cfg.max_inner; ++r) {
    auto step = quantization_step(ps, s, cfg);
    s.max_step_residual = std::max(s.max_step_residual, step.residual);
    s.centroids = std::move(step.centroids);
    auto next = assign_points(ps, s.centroids);
    const bool same = next == s.assignment;
    s.assignment = std::move(next);
    if (same) break;
  }
}

}  // namespace

void JointConfig::validate() const {
  if (k < 1) throw InputError("k must be >= 1");
  if (!std::isfinite(gamma_q) || !(gamma_q > 0.0)) throw InputError("gamma_q must be finite and > 0");
  if (!std::isfinite(gamma_g) || gamma_g < 0.0) throw InputError("gamma_g must be finite and >= 0");
  if (!std::isfinite(f_l) || !std::isfinite(f_u) || !(f_u > 0.0) || !(f_l > f_u))
    throw InputError("fit weights must satisfy f_l > f_u > 0");
  if (sigma && (!std::isfinite(*sigma) || !(*sigma > 0.0)))
    throw InputError("sigma must be finite and > 0");
  if (max_outer < 1 || max_inner < 1) throw InputError("iteration caps must be >= 1");
  if (!(conv_tol >= 0.0)) throw InputError("conv_tol must be >= 0");
}

std::vector<Index> assign_points(const PointSet& ps, const PointMatrix& centroids) {
  std::vector<Index> out(static_cast<std::size_t>(ps.size()));
  const RowVector& psi = ps.feature_weights();
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = nearest_row(ps.point(static_cast<Index>(i)), centroids, psi);
  });
  return out;
}

BackboneState init_backbone(const PointSet& ps, const JointConfig& cfg, std::uint64_t seed) {
  check_inputs(ps, cfg);
  BackboneState s = pinned_state(ps, cfg);
  const auto rows = unlabeled_rows(ps);
  SplitMix64 rng(seed);
  const auto pick = sample_without_replacement(rng, rows.size(), static_cast<std::size_t>(cfg.k));
  PointMatrix seeds(cfg.k, ps.dims());
  for (Index j = 0; j < cfg.k; ++j) seeds.row(j) = ps.point(rows[pick[static_cast<std::size_t>(j)]]);
  if (cfg.init == JointInit::kmeans) seeds = lloyd(ps, rows, std::move(seeds));
  s.centroids.bottomRows(cfg.k) = seeds;
  s.sigma = cfg.sigma ? *cfg.sigma : auto_sigma(ps.points());
  s.assignment = assign_points(ps, s.centroids);
  s.soft_labels = Vector::Zero(s.size());
  return s;
}

SimilarityGraph backbone_graph(const BackboneState& state, const RowVector& psi) {
  // exp(-d^2 / (2 sigma^2)) is the unnormalized kernel at width sqrt(2) sigma
  const GaussianKernel kernel(std::sqrt(2.0) * state.sigma, psi, false);
  const Index n = state.size();
  std::vector<Triplet> trips;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double w = kernel(state.centroids.row(i), state.centroids.row(j));
      if (w > 0.0) {
        trips.emplace_back(i, j, w);
        trips.emplace_back(j, i, w);
      }
    }
  SparseMatrix W(n, n);
  W.setFromTriplets(trips.begin(), trips.end());
  return SimilarityGraph(std::move(W));
}

Vector propagate_on_backbone(const BackboneState& state, const JointConfig& cfg,
                             const RowVector& psi, const SolverOptions& opts) {
  const auto g = backbone_graph(state, psi);
  const Vector y = to_targets(state.centroid_targets);
  Vector fit(state.size());
  for (Index i = 0; i < state.size(); ++i) fit[i] = i < state.labeled ? cfg.f_l : cfg.f_u;
  return soft_harmonic_weighted(g.weights(), y, fit, Vector::Constant(state.size(), cfg.gamma_g),
                                opts);
}

QuantizationResult quantization_step(const PointSet& ps, const BackboneState& state,
                                     const JointConfig& cfg) {
  const Index m = state.labeled, k = state.free_count(), total = state.size();
  const Index p = ps.dims();
  if (state.soft_labels.size() != total) throw InputError("soft labels do not match the centroids");
  if (static_cast<Index>(state.assignment.size()) != ps.size())
    throw InputError("assignment does not match the point set");

  const double n = static_cast<double>(ps.size());
  const double scale = 1.0 / (static_cast<double>(total * total) * state.sigma * state.sigma);
  const Vector& l = state.soft_labels;

  std::vector<Index> cell_size(static_cast<std::size_t>(total), 0);
  PointMatrix cell_sum = PointMatrix::Zero(total, p);
  for (Index i = 0; i < ps.size(); ++i) {
    const Index c = state.assignment[static_cast<std::size_t>(i)];
    ++cell_size[static_cast<std::size_t>(c)];
    cell_sum.row(c) += ps.point(i);
  }

  Matrix A = Matrix::Zero(k, k);
  Matrix B = Matrix::Zero(k, p);
  for (Index a = 0; a < k; ++a) {
    const Index j = m + a;
    double label_sum = 0.0;
    for (Index i = 0; i < total; ++i) {
      const double d = l[i] - l[j];
      const double coef = d * d * scale;
      label_sum += coef;
      if (i == j) continue;
      if (i < m)
        B.row(a) -= coef * state.centroids.row(i);
      else
        A(a, i - m) += coef;
    }
    A(a, a) += 2.0 * cfg.gamma_q * static_cast<double>(cell_size[static_cast<std::size_t>(j)]) / n -
               label_sum;
    B.row(a) += (2.0 * cfg.gamma_q / n) * cell_sum.row(j);
  }

  QuantizationResult out;
  out.centroids = state.centroids;

  // Rows whose system is degenerate are pinned at a re-seeded position and
  // moved to the right-hand side.
  std::vector<bool> fixed(static_cast<std::size_t>(k), false);
  for (;;) {
    std::vector<Index> live;
    for (Index a = 0; a < k; ++a)
      if (!fixed[static_cast<std::size_t>(a)]) live.push_back(a);
    if (live.empty()) break;
    const auto r = static_cast<Index>(live.size());
    Matrix As(r, r), Bs(r, p);
    for (Index s = 0; s < r; ++s) {
      Bs.row(s) = B.row(live[static_cast<std::size_t>(s)]);
      for (Index a = 0; a < k; ++a) {
        if (fixed[static_cast<std::size_t>(a)])
          Bs.row(s) -= A(live[static_cast<std::size_t>(s)], a) * out.centroids.row(m + a);
      }
      for (Index t = 0; t < r; ++t)
        As(s, t) = A(live[static_cast<std::size_t>(s)], live[static_cast<std::size_t>(t)]);
    }
    Eigen::FullPivLU<Matrix> lu(As);
    if (lu.isInvertible()) {
      const Matrix X = lu.solve(Bs);
      const double bscale = std::max(1.0, Bs.cwiseAbs().maxCoeff());
      const double res = X.allFinite() ? (As * X - Bs).cwiseAbs().maxCoeff() / bscale
                                       : std::numeric_limits<double>::infinity();
      if (!(res < 1e-8))
        throw SolverError(fmt::format("centroid system residual {:.3g} exceeds 1e-8", res), res);
      out.residual = res;
      for (Index s = 0; s < r; ++s) out.centroids.row(m + live[static_cast<std::size_t>(s)]) = X.row(s);
      break;
    }
    Index victim = -1;
    for (Index a : live)
      if (cell_size[static_cast<std::size_t>(m + a)] == 0) {
        victim = a;
        break;
      }
    if (victim < 0)
      throw SolverError("centroid system is singular with every cell occupied", 1.0);
    PointMatrix others(total - 1, p);
    for (Index i = 0, o = 0; i < total; ++i)
      if (i != m + victim) others.row(o++) = out.centroids.row(i);
    const Index far = farthest_unlabeled(ps, others);
    out.centroids.row(m + victim) = ps.point(far);
    fixed[static_cast<std::size_t>(victim)] = true;
    out.reseeded.push_back(m + victim);
  }
  return out;
}

double quantization_surrogate(const PointSet& ps, const BackboneState& state,
                              const JointConfig& cfg) {
  const Index total = state.size();
  const RowVector& psi = ps.feature_weights();
  const double scale = 1.0 / (static_cast<double>(total * total) * state.sigma * state.sigma);
  double label_term = 0.0;
  for (Index i = 0; i < total; ++i)
    for (Index j = i + 1; j < total; ++j) {
      const double d = state.soft_labels[i] - state.soft_labels[j];
      label_term += d * d * weighted_sq_distance(state.centroids.row(i), state.centroids.row(j), psi);
    }
  return -0.5 * scale * label_term +
         cfg.gamma_q / static_cast<double>(ps.size()) * quantization_cost(ps, state);
}

double joint_objective(const PointSet& ps, const BackboneState& state, const JointConfig& cfg) {
  const Index total = state.size();
  const Vector& l = state.soft_labels;
  const Vector y = to_targets(state.centroid_targets);
  double fit = 0.0;
  for (Index i = 0; i < total; ++i) {
    const double d = l[i] - y[i];
    fit += (i < state.labeled ? cfg.f_l : cfg.f_u) * d * d;
  }
  const SparseMatrix L = laplacian(backbone_graph(state, ps.feature_weights()));
  const double smooth = l.dot(L * l) + cfg.gamma_g * l.squaredNorm();
  const double mk = static_cast<double>(total);
  return fit + smooth + cfg.gamma_q * mk * mk / static_cast<double>(ps.size()) * quantization_cost(ps, state);
}

BackboneState elastic_joint(const PointSet& ps, const JointConfig& cfg, std::uint64_t seed) {
  BackboneState s = init_backbone(ps, cfg, seed);
  const RowVector& psi = ps.feature_weights();
  s.soft_labels = propagate_on_backbone(s, cfg, psi);
  s.objective_trace.push_back(joint_objective(ps, s, cfg));
  for (Index it = 0; it < cfg.max_outer; ++it) {
    quantize(ps, s, cfg);
    s.soft_labels = propagate_on_backbone(s, cfg, psi);
    const double prev = s.objective_trace.back();
    const double cur = joint_objective(ps, s, cfg);
    s.objective_trace.push_back(cur);
    s.outer_iterations = it + 1;
    const double denom = std::max(std::abs(prev), std::numeric_limits<double>::min());
    if (std::abs(cur - prev) / denom < cfg.conv_tol) break;
  }
  return s;
}

BackboneState kmeans_then_propagate(const PointSet& ps, const JointConfig& cfg,
                                    std::uint64_t seed) {
  JointConfig km = cfg;
  km.init = JointInit::kmeans;
  BackboneState s = init_backbone(ps, km, seed);
  s.soft_labels = propagate_on_backbone(s, cfg, ps.feature_weights());
  s.objective_trace.push_back(joint_objective(ps, s, cfg));
  return s;
}

std::vector<JointPrediction> infer_unlabeled(const PointSet& ps, const BackboneState& state) {
  if (ps.dims() != state.centroids.cols()) throw InputError("point dimension does not match the backbone");
  if (state.soft_labels.size() != state.size()) throw InputError("backbone has no soft labels");
  const auto owner = assign_points(ps, state.centroids);
  std::vector<JointPrediction> out(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i) {
    out[i].centroid = owner[i];
    out[i].soft_label = state.soft_labels[owner[i]];
    out[i].label = out[i].soft_label > 0.0 ? 1 : (out[i].soft_label < 0.0 ? -1 : 0);
  }
  return out;
}

}  // namespace graphssl
