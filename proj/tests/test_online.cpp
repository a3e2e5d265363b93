#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <cmath>

#include "graphssl/online.hpp"
#include "test_support.hpp"

using namespace graphssl;
using namespace graphssl::testing;

namespace {

// Replays a stream while remembering, for each historical point, which
// centroid now holds it.
struct Replay {
  QuantizerState state;
  std::vector<RowVector> history;
  std::vector<Index> owner;

  Replay(Index k, double m) : state(k, m) {}

  void push(const RowVector& x, int label = 0) {
    const auto step = state.observe(x, label);
    if (!step.remap.empty())
      for (auto& o : owner) o = step.remap[static_cast<std::size_t>(o)];
    history.push_back(x);
    owner.push_back(step.centroid);
  }

  double worst_distortion() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < history.size(); ++i)
      worst = std::max(worst, (history[i] - state.centroids().row(owner[i])).norm());
    return worst;
  }

  double min_separation() const {
    double best = INFINITY;
    const auto& c = state.centroids();
    for (Index i = 0; i < c.rows(); ++i)
      for (Index j = i + 1; j < c.rows(); ++j) best = std::min(best, (c.row(i) - c.row(j)).norm());
    return best;
  }
};

}  // namespace

TEST_CASE("quantizer basic steps") {
  QuantizerState q(4, 2.0);
  RowVector x(2);
  x << 0.5, -1.0;
  CHECK(q.observe(x).centroid == 0);
  CHECK(q.multiplicities() == std::vector<long long>{1});
  for (int i = 1; i < 4; ++i) q.observe(x);
  CHECK(q.centroid_count() == 1);
  CHECK(q.multiplicities() == std::vector<long long>{4});
  CHECK(q.radius() == 0.0);

  RowVector y(2);
  y << 3.5, 3.0;
  CHECK(q.observe(y).centroid == 1);
  CHECK(q.radius() == 0.0);

  // Fifth distinct centroid: R starts at the smallest gap (1) and grows to 2,
  // which folds (1.5, -1) into the first centroid.
  RowVector a(2), b(2), c(2);
  a << 10.0, 10.0;
  b << 20.0, 10.0;
  c << 1.5, -1.0;
  q.observe(a);
  q.observe(b);
  CHECK(q.centroid_count() == 4);
  const auto step = q.observe(c);
  CHECK(q.radius() == doctest::Approx(2.0));
  CHECK(q.centroid_count() == 4);
  CHECK(step.centroid == 0);
  CHECK(q.multiplicities() == std::vector<long long>{5, 1, 1, 1});

  RowVector bad(3);
  bad << 0, 0, 0;
  CHECK_THROWS_AS(q.observe(bad), InputError);
  CHECK_THROWS_AS(q.observe(x, 2), InputError);
  CHECK_THROWS_AS(QuantizerState(1, 2.0), InputError);
  CHECK_THROWS_AS(QuantizerState(4, 1.0), InputError);
}

TEST_CASE("max distortion closed form") {
  CHECK(max_distortion(1.0, 2.0) == 2.0);
  CHECK(max_distortion(1.0, 1.5) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("quantizer invariants hold at every step of a long stream") {
  SplitMix64 rng(2024);
  Replay r(64, 1.5);
  bool ok = true;
  for (int t = 1; t <= 10000 && ok; ++t) {
    RowVector x(2);
    x << rng.uniform(), rng.uniform();
    r.push(x);
    const auto& v = r.state.multiplicities();
    ok = r.state.centroid_count() <= 64 &&
         std::accumulate(v.begin(), v.end(), 0LL) == t &&
         (r.state.centroid_count() < 2 || r.min_separation() >= r.state.radius()) &&
         (t % 50 != 0 || r.worst_distortion() <= max_distortion(r.state) + 1e-12);
  }
  CHECK(ok);
  CHECK(r.worst_distortion() <= max_distortion(r.state));
  CHECK(r.state.radius() > 0.0);
}

TEST_CASE("quantizer label merging counts conflicts") {
  QuantizerState q(3, 2.0);
  RowVector a(1), b(1);
  a << 0.0;
  b << 10.0;
  q.observe(a, 0);
  q.observe(b, 1);
  q.observe(a, -1);
  CHECK(q.centroid_labels() == Labels{-1, 1});
  q.observe(a, 1);
  CHECK(q.centroid_labels() == Labels{-1, 1});
  CHECK(q.label_conflicts() == 1);
}

TEST_CASE("compact harmonic with unit multiplicities is the plain harmonic solution") {
  SplitMix64 rng(6);
  const Matrix W = random_dense_weights(rng, 20, 0.3, true);
  const Labels y = random_labels(rng, 20, 4);
  const auto cg = build_compact_graph(W, Vector::Ones(20));
  for (double gamma : {0.0, 0.7}) {
    const Vector compact = compact_harmonic(cg, y, gamma).values;
    const Vector plain = hard_harmonic(SimilarityGraph::from_dense(W), y, gamma).values;
    CHECK(max_abs_diff(compact, plain) < 1e-10);
  }
}

TEST_CASE("compact harmonic equals the harmonic solution of the expanded graph") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const Index k = 8;
    const auto centers = random_points(rng, k, 2, 2.0);
    std::vector<long long> v(static_cast<std::size_t>(k));
    Labels centroid_labels(static_cast<std::size_t>(k), 0);
    centroid_labels[0] = 1;
    centroid_labels[1] = -1;
    Index total = 0;
    for (auto& m : v) total += (m = 1 + static_cast<long long>(rng.below(4)));
    PointMatrix expanded(total, 2);
    Labels expanded_labels;
    std::vector<Index> owner;
    Index row = 0;
    for (Index c = 0; c < k; ++c)
      for (long long r = 0; r < v[static_cast<std::size_t>(c)]; ++r) {
        expanded.row(row++) = centers.row(c);
        expanded_labels.push_back(centroid_labels[static_cast<std::size_t>(c)]);
        owner.push_back(c);
      }
    const GaussianKernel kernel(0.8, RowVector::Ones(2), true);
    const auto full = build_graph(PointSet(expanded, expanded_labels),
                                  GraphConfig::epsilon(0.0).with_sigma(0.8));
    const auto cg = build_compact_graph(centers, v, kernel, 0.0);
    for (double gamma : {0.0, 0.05, 2.0}) {
      const Vector compact = compact_harmonic(cg, centroid_labels, gamma).values;
      const Vector whole = hard_harmonic(full, expanded_labels, gamma).values;
      for (Index a = 0; a < total; ++a)
        CHECK(std::abs(whole[a] - compact[owner[static_cast<std::size_t>(a)]]) < 1e-8);
    }
  }
}

TEST_CASE("compact harmonic sink limit") {
  SplitMix64 rng(5);
  const Matrix W = random_dense_weights(rng, 10, 0.4, true);
  Vector v(10);
  for (Index i = 0; i < 10; ++i) v[i] = 1.0 + static_cast<double>(rng.below(5));
  Labels y(10, 0);
  y[0] = 1;
  y[1] = -1;
  const Vector l = compact_harmonic(build_compact_graph(W, v), y, 1e9).values;
  for (Index i = 2; i < 10; ++i) CHECK(std::abs(l[i]) < 1e-8);
  CHECK_THROWS_AS(compact_harmonic(build_compact_graph(W, v), Labels(10, 0), 0.0),
                  DegenerateInputError);
}

TEST_CASE("online predictor on a single-label stream") {
  OnlineConfig cfg;
  cfg.capacity = 10;
  cfg.gamma_g = 0.1;
  cfg.sigma = 1.0;
  OnlinePredictor p(cfg);
  RowVector x(2);
  x << 1.0, 2.0;
  for (int t = 0; t < 20; ++t) CHECK(p.step(x, 1).prediction == OnlinePrediction::positive);
}

TEST_CASE("online predictor abstains on disconnected points") {
  OnlineConfig cfg;
  cfg.capacity = 10;
  cfg.gamma_g = 0.1;
  cfg.sigma = 0.5;
  OnlinePredictor p(cfg);
  RowVector a(2), b(2), far(2);
  a << 0.0, 0.0;
  b << 0.2, 0.0;
  far << 50.0, 50.0;
  p.step(a, 1);
  CHECK(p.step(b, 0).prediction == OnlinePrediction::positive);
  CHECK(p.step(far, 0).prediction == OnlinePrediction::abstain);
}

TEST_CASE("online predictions follow cluster membership and the offline solution") {
  SplitMix64 rng(314);
  OnlineConfig cfg;
  cfg.capacity = 30;
  cfg.gamma_g = 0.01;
  cfg.sigma = 0.5;
  OnlinePredictor p(cfg);
  std::vector<RowVector> seen;
  Labels seen_labels;
  int agree = 0, compared = 0;
  for (int t = 0; t < 200; ++t) {
    const int cls = t < 2 ? (t == 0 ? 1 : -1) : (rng.uniform() < 0.5 ? 1 : -1);
    RowVector x(2);
    x << cls * 3.0 + 0.4 * rng.normal(), 0.4 * rng.normal();
    const int label = t < 2 ? cls : 0;
    const auto out = p.step(x, label);
    seen.push_back(x);
    seen_labels.push_back(label);
    if (t < 2) continue;
    CHECK(static_cast<int>(out.prediction) == cls);

    // exact harmonic solution on every point seen so far
    PointMatrix all(static_cast<Index>(seen.size()), 2);
    for (std::size_t i = 0; i < seen.size(); ++i) all.row(static_cast<Index>(i)) = seen[i];
    const auto g = build_graph(PointSet(all, seen_labels),
                               GraphConfig::epsilon(cfg.resolved_epsilon()).with_sigma(cfg.sigma));
    const double offline = hard_harmonic(g, seen_labels, cfg.gamma_g)[static_cast<Index>(t)];
    ++compared;
    agree += (offline > 0 ? 1 : -1) == static_cast<int>(out.prediction);
  }
  CHECK(agree == compared);
}

TEST_CASE("per-step cost does not grow with the stream length") {
  SplitMix64 rng(8);
  OnlineConfig cfg;
  cfg.capacity = 32;
  cfg.gamma_g = 0.1;
  cfg.sigma = 0.1;
  OnlinePredictor p(cfg);
  const Index k = cfg.capacity;
  std::vector<double> times;
  for (Index t = 0; t < 10 * k; ++t) {
    RowVector x(2);
    x << rng.uniform(), rng.uniform();
    const auto start = std::chrono::steady_clock::now();
    p.step(x, t < 4 ? (t % 2 ? 1 : -1) : 0);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  // least-squares slope of step time over t in [k, 10k], relative to the mean
  const auto n = static_cast<double>(times.size() - static_cast<std::size_t>(k));
  double mt = 0, my = 0;
  for (std::size_t t = static_cast<std::size_t>(k); t < times.size(); ++t) {
    mt += static_cast<double>(t);
    my += times[t];
  }
  mt /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t t = static_cast<std::size_t>(k); t < times.size(); ++t) {
    sxy += (static_cast<double>(t) - mt) * (times[t] - my);
    sxx += (static_cast<double>(t) - mt) * (static_cast<double>(t) - mt);
  }
  const double growth_over_run = sxy / sxx * (9.0 * static_cast<double>(k));
  CHECK(growth_over_run < 2.0 * my);
}

TEST_CASE("stream replay assignments and quantization Laplacian error") {
  SplitMix64 rng(21);
  const PointMatrix x = random_points(rng, 80, 2, 3.0);
  std::vector<Index> ident(80);
  for (Index i = 0; i < 80; ++i) ident[static_cast<std::size_t>(i)] = i;
  const GaussianKernel kernel(0.8, RowVector::Ones(2), true);
  CHECK(quantization_laplacian_error(x, x, ident, kernel) < 1e-12);

  QuantizerState small(10, 1.5);
  const auto assign = quantize_stream(small, x);
  CHECK(small.centroid_count() <= 10);
  std::vector<long long> counts(static_cast<std::size_t>(small.centroid_count()), 0);
  for (Index t = 0; t < x.rows(); ++t) {
    const Index a = assign[static_cast<std::size_t>(t)];
    ++counts[static_cast<std::size_t>(a)];
    CHECK((x.row(t) - small.centroids().row(a)).norm() <= max_distortion(small) + 1e-12);
  }
  CHECK(counts == small.multiplicities());

  // Dense oracle on three points, two of them sharing a centroid.
  PointMatrix p(3, 1), c(2, 1);
  p << 0.0, 0.2, 1.0;
  c << 0.1, 1.0;
  const GaussianKernel k1(1.0, RowVector::Ones(1), false);
  auto w = [&](double a, double b) { return std::exp(-(a - b) * (a - b)); };
  auto lsym = [](const Matrix& W) {
    const Vector d = W.rowwise().sum();
    Matrix L = Matrix::Identity(W.rows(), W.cols());
    for (Index i = 0; i < W.rows(); ++i)
      for (Index j = 0; j < W.cols(); ++j) L(i, j) -= W(i, j) / std::sqrt(d[i] * d[j]);
    return L;
  };
  Matrix wo(3, 3), wq(3, 3);
  wo << 0, w(0, 0.2), w(0, 1), w(0, 0.2), 0, w(0.2, 1), w(0, 1), w(0.2, 1), 0;
  wq << 0, 1, w(0.1, 1), 1, 0, w(0.1, 1), w(0.1, 1), w(0.1, 1), 0;
  CHECK(quantization_laplacian_error(p, c, {0, 0, 1}, k1) == doctest::Approx((lsym(wq) - lsym(wo)).norm()).epsilon(1e-12));
  CHECK_THROWS_AS(quantization_laplacian_error(p, c, {0, 2, 1}, k1), InputError);
}
