#include "graphssl/online.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace graphssl {

namespace {

double euclidean(const RowRef& a, const RowRef& b) { return (a - b).norm(); }

}  // namespace

QuantizerState::QuantizerState(Index capacity, double multiplier)
    : capacity_(capacity), multiplier_(multiplier) {
  if (capacity < 2) throw InputError("quantizer capacity must be at least 2");
  if (!(multiplier > 1.0) || !std::isfinite(multiplier))
    throw InputError("quantizer multiplier must be finite and > 1");
}

void QuantizerState::add_centroid(const RowRef& x, int label, long long count) {
  const Index n = centroids_.rows();
  centroids_.conservativeResize(n + 1, x.size());
  centroids_.row(n) = x;
  multiplicities_.push_back(count);
  labels_.push_back(label);
}

void QuantizerState::merge_label(Index into, int label) {
  if (label == 0) return;
  int& current = labels_[static_cast<std::size_t>(into)];
  if (current == 0)
    current = label;
  else if (current != label)
    ++conflicts_;
}

QuantizerState::Step QuantizerState::observe(const RowRef& x, int label) {
  if (label != -1 && label != 0 && label != 1) throw InputError("label must be -1, 0 or +1");
  if (!x.allFinite()) throw InputError("stream point must be finite");
  if (centroids_.rows() > 0 && x.size() != centroids_.cols())
    throw InputError(fmt::format("stream point has {} features, expected {}", x.size(),
                                 centroids_.cols()));
  if (x.size() == 0) throw InputError("stream point must have at least one feature");

  ++observed_;
  Step step;
  if (centroids_.rows() == 0) {
    add_centroid(x, label, 1);
    step.centroid = 0;
    return step;
  }

  Index nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < centroids_.rows(); ++i) {
    const double d = euclidean(centroids_.row(i), x);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }

  // Until the first overflow R is 0 and only exact duplicates merge.
  if (best < radius_ || best == 0.0) {
    ++multiplicities_[static_cast<std::size_t>(nearest)];
    merge_label(nearest, label);
    step.centroid = nearest;
  } else {
    add_centroid(x, label, 1);
    step.centroid = centroids_.rows() - 1;
  }

  if (centroids_.rows() > capacity_) {
    step.remap.resize(static_cast<std::size_t>(centroids_.rows()));
    for (std::size_t i = 0; i < step.remap.size(); ++i) step.remap[i] = static_cast<Index>(i);
    if (radius_ == 0.0) {
      radius_ = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < centroids_.rows(); ++i)
        for (Index j = i + 1; j < centroids_.rows(); ++j)
          radius_ = std::min(radius_, euclidean(centroids_.row(i), centroids_.row(j)));
    }
    while (centroids_.rows() > capacity_) {
      radius_ *= multiplier_;
      const auto pass = repartition();
      for (auto& r : step.remap) r = pass[static_cast<std::size_t>(r)];
    }
    step.centroid = step.remap[static_cast<std::size_t>(step.centroid)];
  }
  return step;
}

std::vector<Index> QuantizerState::repartition() {
  const Index n = centroids_.rows();
  std::vector<Index> kept;
  for (Index i = 0; i < n; ++i) {
    bool far = true;
    for (Index k : kept)
      if (euclidean(centroids_.row(i), centroids_.row(k)) < radius_) {
        far = false;
        break;
      }
    if (far) kept.push_back(i);
  }

  std::vector<Index> remap(static_cast<std::size_t>(n), -1);
  for (std::size_t s = 0; s < kept.size(); ++s) remap[static_cast<std::size_t>(kept[s])] = static_cast<Index>(s);

  PointMatrix next(static_cast<Index>(kept.size()), centroids_.cols());
  std::vector<long long> counts(kept.size(), 0);
  Labels next_labels(kept.size(), 0);
  for (std::size_t s = 0; s < kept.size(); ++s) {
    next.row(static_cast<Index>(s)) = centroids_.row(kept[s]);
    counts[s] = multiplicities_[static_cast<std::size_t>(kept[s])];
    next_labels[s] = labels_[static_cast<std::size_t>(kept[s])];
  }

  // Removed centroids fold into their nearest survivor, which is closer
  // than R because that survivor (or another) blocked them.
  std::vector<std::pair<Index, Index>> folds;
  for (Index i = 0; i < n; ++i) {
    if (remap[static_cast<std::size_t>(i)] >= 0) continue;
    Index target = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < kept.size(); ++s) {
      const double d = euclidean(centroids_.row(i), centroids_.row(kept[s]));
      if (d < best) {
        best = d;
        target = static_cast<Index>(s);
      }
    }
    remap[static_cast<std::size_t>(i)] = target;
    folds.emplace_back(i, target);
  }

  const Labels old_labels = labels_;
  const std::vector<long long> old_counts = multiplicities_;
  centroids_ = std::move(next);
  multiplicities_ = std::move(counts);
  labels_ = std::move(next_labels);
  for (const auto& [from, to] : folds) {
    multiplicities_[static_cast<std::size_t>(to)] += old_counts[static_cast<std::size_t>(from)];
    merge_label(to, old_labels[static_cast<std::size_t>(from)]);
  }
  return remap;
}

double max_distortion(double radius, double multiplier) {
  return radius * multiplier / (multiplier - 1.0);
}

std::vector<Index> quantize_stream(QuantizerState& state, const PointMatrix& stream) {
  std::vector<Index> assign;
  assign.reserve(static_cast<std::size_t>(stream.rows()));
  for (Index t = 0; t < stream.rows(); ++t) {
    const auto step = state.observe(stream.row(t));
    if (!step.remap.empty())
      for (Index& a : assign) a = step.remap[static_cast<std::size_t>(a)];
    assign.push_back(step.centroid);
  }
  return assign;
}

double quantization_laplacian_error(const PointMatrix& points, const PointMatrix& centroids,
                                    const std::vector<Index>& assignment, const GaussianKernel& kernel) {
  const Index n = points.rows();
  if (static_cast<Index>(assignment.size()) != n) throw InputError("one centroid assignment per point required");
  for (Index a : assignment)
    if (a < 0 || a >= centroids.rows()) throw InputError("centroid assignment out of range");
  Matrix cw(centroids.rows(), centroids.rows());
  for (Index i = 0; i < centroids.rows(); ++i)
    for (Index j = i; j < centroids.rows(); ++j) cw(i, j) = cw(j, i) = kernel(centroids.row(i), centroids.row(j));
  Matrix wo = Matrix::Zero(n, n), wq = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      wo(i, j) = wo(j, i) = kernel(points.row(i), points.row(j));
      wq(i, j) = wq(j, i) = cw(assignment[static_cast<std::size_t>(i)], assignment[static_cast<std::size_t>(j)]);
    }
  const Matrix lo(laplacian(SimilarityGraph::from_dense(wo), true));
  const Matrix lq(laplacian(SimilarityGraph::from_dense(wq), true));
  return (lq - lo).norm();
}

double max_distortion(const QuantizerState& state) {
  return max_distortion(state.radius(), state.multiplier());
}

SparseMatrix CompactGraph::laplacian() const {
  const Index n = weights.rows();
  SparseMatrix L = -weights;
  Vector d = Vector::Zero(n);
  for (Index i = 0; i < n; ++i)
    for (SparseMatrix::InnerIterator it(weights, i); it; ++it) d[i] += it.value();
  for (Index i = 0; i < n; ++i) L.coeffRef(i, i) += d[i];
  L.makeCompressed();
  return L;
}

CompactGraph build_compact_graph(const Matrix& centroid_weights, const Vector& multiplicities) {
  const Index k = centroid_weights.rows();
  if (centroid_weights.cols() != k || multiplicities.size() != k)
    throw InputError("compact graph: dimension mismatch");
  for (Index i = 0; i < k; ++i)
    if (!(multiplicities[i] >= 1.0)) throw InputError("compact graph: multiplicities must be >= 1");
  CompactGraph cg;
  cg.centroid_weights = centroid_weights;
  cg.centroid_weights.diagonal().setZero();
  cg.multiplicities = multiplicities;
  // v_i v_j formed first so Wq stays bit-exactly symmetric
  std::vector<Triplet> trips;
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j)
      if (cg.centroid_weights(i, j) != 0.0)
        trips.emplace_back(i, j, cg.centroid_weights(i, j) * (multiplicities[i] * multiplicities[j]));
  cg.weights.resize(k, k);
  cg.weights.setFromTriplets(trips.begin(), trips.end());
  return cg;
}

CompactGraph build_compact_graph(const PointMatrix& centroids,
                                 const std::vector<long long>& multiplicities,
                                 const GaussianKernel& kernel, double epsilon_cut) {
  const Index k = centroids.rows();
  if (static_cast<Index>(multiplicities.size()) != k)
    throw InputError("compact graph: one multiplicity per centroid required");
  Matrix w = Matrix::Zero(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      const double v = kernel(centroids.row(i), centroids.row(j));
      if (v >= epsilon_cut) w(i, j) = w(j, i) = v;
    }
  Vector v(k);
  for (Index i = 0; i < k; ++i) v[i] = static_cast<double>(multiplicities[static_cast<std::size_t>(i)]);
  return build_compact_graph(w, v);
}

SoftLabels compact_harmonic(const CompactGraph& cg, const Labels& centroid_labels, double gamma_g,
                            const SolverOptions& opts) {
  if (!std::isfinite(gamma_g) || gamma_g < 0.0) throw InputError("gamma_g must be finite and >= 0");
  return {clamped_harmonic(cg.weights, centroid_labels, gamma_g * cg.multiplicities, opts),
          LabelOrigin::compact_hs};
}

OnlinePredictor::OnlinePredictor(OnlineConfig cfg)
    : cfg_(cfg), state_(cfg.capacity, cfg.multiplier) {
  if (!std::isfinite(cfg_.gamma_g) || cfg_.gamma_g < 0.0)
    throw InputError("gamma_g must be finite and >= 0");
  if (!(cfg_.resolved_epsilon() >= 0.0)) throw InputError("epsilon cut must be >= 0");
}

OnlineStep OnlinePredictor::step(const RowRef& x, int label) {
  const auto quantized = state_.observe(x, label);
  if (!kernel_) kernel_.emplace(cfg_.sigma, RowVector::Ones(x.size()), cfg_.normalize_by_p);

  OnlineStep out;
  out.centroid = quantized.centroid;
  const CompactGraph cg = build_compact_graph(state_.centroids(), state_.multiplicities(),
                                              *kernel_, cfg_.resolved_epsilon());
  const SimilarityGraph g(cg.weights);
  const auto& labels = state_.centroid_labels();

  // Solve only on components that contain a label; anything else has no
  // information to propagate and would make the system singular at
  // gamma_g = 0.
  std::vector<Index> nodes;
  Index target = -1;
  for (const auto& comp : connected_components(g)) {
    bool has_label = false;
    for (Index i : comp) has_label |= labels[static_cast<std::size_t>(i)] != 0;
    if (!has_label) continue;
    for (Index i : comp) {
      if (i == out.centroid) target = static_cast<Index>(nodes.size());
      nodes.push_back(i);
    }
  }
  if (target < 0) return out;

  const SimilarityGraph sub = g.induced(nodes);
  Labels sub_labels;
  Vector sub_mult(static_cast<Index>(nodes.size()));
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    sub_labels.push_back(labels[static_cast<std::size_t>(nodes[s])]);
    sub_mult[static_cast<Index>(s)] = cg.multiplicities[nodes[s]];
  }
  const Vector l = clamped_harmonic(sub.weights(), sub_labels, cfg_.gamma_g * sub_mult);
  out.soft_label = l[target];
  if (out.soft_label > 0.0)
    out.prediction = OnlinePrediction::positive;
  else if (out.soft_label < 0.0)
    out.prediction = OnlinePrediction::negative;
  return out;
}

}  // namespace graphssl
