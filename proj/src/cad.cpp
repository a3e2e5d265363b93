#include "graphssl/cad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "graphssl/parallel.hpp"
#include "graphssl/random.hpp"

namespace graphssl {

namespace {

void require_binary(const Labels& y, const char* what) {
  for (int v : y)
    if (v != -1 && v != 1) throw InputError(fmt::format("{}: every label must be -1 or +1", what));
}

double class_volume(const PointMatrix& pts, const GaussianKernel& kernel) {
  double v = 0.0;
  for (Index i = 0; i < pts.rows(); ++i)
    for (Index j = i + 1; j < pts.rows(); ++j) v += kernel(pts.row(i), pts.row(j));
  return 2.0 * v;
}

double mass(const PointMatrix& pts, const GaussianKernel& kernel, const RowRef& x) {
  double m = 0.0;
  for (Index i = 0; i < pts.rows(); ++i) m += kernel(pts.row(i), x);
  return m;
}

Index nearest(const PointMatrix& pts, const RowRef& x, const RowRef& psi) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < pts.rows(); ++i) {
    const double d = weighted_sq_distance(pts.row(i), x, psi);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Vector backbone_labels(const SparseMatrix& centroid_weights, const Vector& v, const Labels& y,
                       const SoftConfig& cfg, const SolverOptions& opts) {
  cfg.validate();
  const Index k = centroid_weights.rows();
  if (centroid_weights.cols() != k || v.size() != k || static_cast<Index>(y.size()) != k)
    throw InputError("backbone CAD: dimension mismatch");
  for (Index i = 0; i < k; ++i)
    if (!(v[i] >= 1.0) || !std::isfinite(v[i])) throw InputError("backbone CAD: multiplicities must be >= 1");
  require_binary(y, "backbone CAD");
  const SimilarityGraph g(centroid_weights);

  std::vector<Triplet> trips;
  for (Index i = 0; i < k; ++i)
    for (SparseMatrix::InnerIterator it(g.weights(), i); it; ++it)
      trips.emplace_back(i, it.col(), it.value() * (v[i] * v[it.col()]));
  SparseMatrix wv(k, k);
  wv.setFromTriplets(trips.begin(), trips.end());
  return soft_harmonic_weighted(wv, to_targets(y), cfg.c_l * v, cfg.gamma_g * v, opts);
}

}  // namespace

CadModel::CadModel(const PointSet& train, GaussianKernel kernel, double lambda)
    : kernel_(std::move(kernel)), lambda_(lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) throw InputError("lambda must be finite and >= 0");
  require_binary(train.labels(), "RWCAD training set");
  std::vector<Index> p, n;
  for (Index i = 0; i < train.size(); ++i) (train.label(i) > 0 ? p : n).push_back(i);
  if (p.empty() || n.empty()) throw DegenerateInputError("RWCAD needs training points of both classes");
  pos_ = train.subset(p).points();
  neg_ = train.subset(n).points();
  vol_pos_ = class_volume(pos_, kernel_);
  vol_neg_ = class_volume(neg_, kernel_);
  prior_pos_ = static_cast<double>(p.size()) / static_cast<double>(train.size());
  prior_neg_ = static_cast<double>(n.size()) / static_cast<double>(train.size());
}

CadModel CadModel::with_lambda(double lambda) const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw InputError("lambda must be finite and >= 0");
  CadModel m = *this;
  m.lambda_ = lambda;
  return m;
}

RwcadTerms rwcad_terms(const CadModel& model, const RowRef& x) {
  RwcadTerms t;
  t.mass_pos = mass(model.class_points(1), model.kernel(), x);
  t.mass_neg = mass(model.class_points(-1), model.kernel(), x);
  t.total_pos = model.volume(1) + 2.0 * t.mass_pos;
  t.total_neg = model.volume(-1) + 2.0 * t.mass_neg;
  t.like_pos = t.total_pos > 0.0 ? t.mass_pos / t.total_pos : 0.0;
  t.like_neg = t.total_neg > 0.0 ? t.mass_neg / t.total_neg : 0.0;
  return t;
}

double rwcad_score(const CadModel& model, const RowRef& x, int y) {
  if (y != -1 && y != 1) throw InputError("RWCAD query label must be -1 or +1");
  const auto t = rwcad_terms(model, x);
  const double own = (y > 0 ? t.like_pos : t.like_neg) * model.prior(y);
  const double other = (y > 0 ? t.like_neg : t.like_pos) * model.prior(-y);
  const double denom = model.lambda() + own + other;
  if (denom == 0.0) return model.prior(-y);
  return other / denom;
}

std::vector<double> rwcad_scores(const CadModel& model, const PointSet& test) {
  require_binary(test.labels(), "RWCAD queries");
  std::vector<double> out(static_cast<std::size_t>(test.size()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = rwcad_score(model, test.point(static_cast<Index>(i)), test.label(static_cast<Index>(i)));
  });
  return out;
}

double weighted_knn_score(const PointSet& train, const GaussianKernel& kernel, const RowRef& x, int y,
                          Index k_neighbors) {
  if (y != -1 && y != 1) throw InputError("kNN query label must be -1 or +1");
  if (k_neighbors < 0) throw InputError("k_neighbors must be >= 0");
  std::vector<Index> idx(static_cast<std::size_t>(train.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (k_neighbors > 0 && k_neighbors < train.size()) {
    std::vector<double> d(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      d[i] = weighted_sq_distance(train.point(static_cast<Index>(i)), x, kernel.feature_weights());
    std::partial_sort(idx.begin(), idx.begin() + k_neighbors, idx.end(), [&](Index a, Index b) {
      return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)] ||
             (d[static_cast<std::size_t>(a)] == d[static_cast<std::size_t>(b)] && a < b);
    });
    idx.resize(static_cast<std::size_t>(k_neighbors));
  }
  double same = 0.0, total = 0.0;
  for (Index i : idx) {
    const int label = train.label(i);
    if (label != -1 && label != 1) throw InputError("kNN training labels must be -1 or +1");
    const double w = kernel(train.point(i), x);
    total += w;
    if (label == y) same += w;
  }
  if (!(total > 0.0)) throw DegenerateInputError("kNN: query has zero kernel mass to the training set");
  return 1.0 - same / total;
}

std::vector<double> weighted_knn_scores(const PointSet& train, const GaussianKernel& kernel,
                                        const PointSet& test, Index k_neighbors) {
  std::vector<double> out(static_cast<std::size_t>(test.size()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = weighted_knn_score(train, kernel, test.point(static_cast<Index>(i)),
                                test.label(static_cast<Index>(i)), k_neighbors);
  });
  return out;
}

std::vector<double> softhad_score(const SimilarityGraph& g, const Labels& y, const SoftConfig& cfg,
                                  const SolverOptions& opts) {
  cfg.validate();
  if (static_cast<Index>(y.size()) != g.size()) throw InputError("SoftHAD: one label per node required");
  require_binary(y, "SoftHAD");
  const Vector target = to_targets(y);
  const Vector l = soft_harmonic(g, target, cfg, opts).values;
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) s[i] = std::abs(l[static_cast<Index>(i)] - target[static_cast<Index>(i)]);
  return s;
}

std::vector<double> backbone_cad(const SparseMatrix& centroid_weights, const Vector& v, const Labels& y,
                                 const SoftConfig& cfg, const SolverOptions& opts) {
  const Vector target = to_targets(y);
  const Vector l = backbone_labels(centroid_weights, v, y, cfg, opts);
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) s[i] = std::abs(l[static_cast<Index>(i)] - target[static_cast<Index>(i)]);
  return s;
}

std::vector<double> softhad_backbone_scores(const PointSet& train, const PointSet& queries,
                                            const GaussianKernel& kernel, const SoftConfig& cfg,
                                            Index centroids, std::uint64_t seed) {
  require_binary(train.labels(), "SoftHAD training set");
  require_binary(queries.labels(), "SoftHAD queries");
  if (centroids < 2 || centroids > train.size())
    throw InputError("backbone size must be in [2, training size]");
  SplitMix64 rng(seed);
  const auto order = sample_without_replacement(rng, static_cast<std::size_t>(train.size()),
                                                static_cast<std::size_t>(train.size()));
  std::vector<Index> picked;
  for (int cls : {-1, 1})
    for (auto i : order)
      if (train.label(static_cast<Index>(i)) == cls) {
        picked.push_back(static_cast<Index>(i));
        break;
      }
  for (auto i : order) {
    if (static_cast<Index>(picked.size()) >= centroids) break;
    if (std::find(picked.begin(), picked.end(), static_cast<Index>(i)) == picked.end())
      picked.push_back(static_cast<Index>(i));
  }
  std::sort(picked.begin(), picked.end());
  const PointSet cs = train.subset(picked);
  const RowVector& psi = kernel.feature_weights();

  Vector v = Vector::Zero(cs.size());
  for (Index i = 0; i < train.size(); ++i) v[nearest(cs.points(), train.point(i), psi)] += 1.0;

  std::vector<Triplet> trips;
  for (Index i = 0; i < cs.size(); ++i)
    for (Index j = i + 1; j < cs.size(); ++j) {
      const double w = kernel(cs.point(i), cs.point(j));
      if (w > 0.0) {
        trips.emplace_back(i, j, w);
        trips.emplace_back(j, i, w);
      }
    }
  SparseMatrix w(cs.size(), cs.size());
  w.setFromTriplets(trips.begin(), trips.end());

  const Vector l = backbone_labels(w, v, cs.labels(), cfg, {});
  std::vector<double> out(static_cast<std::size_t>(queries.size()));
  for (Index q = 0; q < queries.size(); ++q)
    out[static_cast<std::size_t>(q)] = std::abs(l[nearest(cs.points(), queries.point(q), psi)] - queries.label(q));
  return out;
}

TaskScaling TaskScaling::fit(const std::vector<double>& train_scores) {
  if (train_scores.empty()) throw InputError("cannot fit a scaling on no scores");
  const auto [lo, hi] = std::minmax_element(train_scores.begin(), train_scores.end());
  if (!std::isfinite(*lo) || !std::isfinite(*hi)) throw InputError("scores must be finite");
  return {*lo, *hi};
}

double TaskScaling::apply(double s) const {
  if (max == min) return 0.5;
  return std::clamp((s - min) / (max - min), 0.0, 1.0);
}

std::vector<double> TaskScaling::apply(const std::vector<double>& raw) const {
  std::vector<double> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), [this](double s) { return apply(s); });
  return out;
}

std::vector<double> scale_scores(const TaskScaling& scaling, const std::vector<double>& raw) {
  return scaling.apply(raw);
}

std::vector<double> lambda_grid() {
  std::vector<double> g;
  for (int e = -5; e <= 5; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

}  // namespace graphssl
