#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "graphssl/graph.hpp"
#include "graphssl/point_set.hpp"
#include "test_support.hpp"

using namespace graphssl;
using namespace graphssl::testing;

namespace {

RowVector row(std::initializer_list<double> v) {
  RowVector r(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) r[k++] = x;
  return r;
}

// O(n^2 log n) reference: for each i sort every other point by distance and
// take the first k (ties to lower index), then union.
Matrix brute_force_knn(const PointMatrix& x, const RowVector& psi, Index k, double sigma) {
  const Index n = x.rows(), p = x.cols();
  Matrix W = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> d;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0;
      for (Index c = 0; c < p; ++c) s += psi[c] * (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      d.emplace_back(s, j);
    }
    std::sort(d.begin(), d.end());
    for (Index r = 0; r < k; ++r) {
      const double w = std::exp(-d[static_cast<std::size_t>(r)].first / (p * sigma * sigma));
      W(i, d[static_cast<std::size_t>(r)].second) = w;
      W(d[static_cast<std::size_t>(r)].second, i) = w;
    }
  }
  return W;
}

}  // namespace

TEST_CASE("gaussian_weight edge cases") {
  const RowVector ones = RowVector::Ones(3);
  const RowVector a = row({0.3, -1.2, 4.0});
  CHECK(gaussian_weight(a, a, 0.7, ones, true) == 1.0);

  // sum of squared differences equals p * sigma^2
  const double sigma = 0.5;
  const RowVector b = a + RowVector::Constant(3, sigma);
  CHECK(gaussian_weight(a, b, sigma, ones, true) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(gaussian_weight(a, b, sigma, ones, true) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(gaussian_weight(a, b, sigma, ones, false) ==
        doctest::Approx(std::exp(-3.0)).epsilon(1e-15));

  // a zero feature weight hides that coordinate entirely
  const RowVector psi = row({1.0, 0.0, 1.0});
  const RowVector c = row({1.0, 100.0, 2.0});
  const RowVector d = row({0.0, -50.0, 2.5});
  const RowVector psi2 = RowVector::Ones(2);
  const double projected = std::exp(-(1.0 + 0.25) / (3 * 0.8 * 0.8));
  CHECK(gaussian_weight(c, d, 0.8, psi, true) == doctest::Approx(projected).epsilon(1e-15));
  CHECK(gaussian_weight(row({1.0, 2.0}), row({0.0, 2.5}), 0.8 * std::sqrt(1.5), psi2, true) ==
        doctest::Approx(projected).epsilon(1e-14));

  CHECK(gaussian_weight(c, d, 0.8, psi, true) == gaussian_weight(d, c, 0.8, psi, true));
  CHECK_THROWS_AS(gaussian_weight(a, row({NAN, 0, 0}), 1.0, ones, true), InputError);
  CHECK_THROWS_AS(gaussian_weight(a, a, 0.0, ones, true), InputError);
}

TEST_CASE("build_graph knn on three collinear points gives a path") {
  PointMatrix x(3, 1);
  x << 0.0, 1.0, 2.0;
  const auto g = build_graph(PointSet(x, {0, 0, 0}), GraphConfig::knn(1).with_sigma(1.0));
  CHECK(g.edge_count() == 2);
  CHECK(g.weights().coeff(0, 1) > 0.0);
  CHECK(g.weights().coeff(1, 2) > 0.0);
  CHECK(g.weights().coeff(0, 2) == 0.0);
  CHECK(g.weights().coeff(0, 1) == g.weights().coeff(1, 0));
}

TEST_CASE("build_graph epsilon 0 is complete") {
  SplitMix64 rng(3);
  const auto x = random_points(rng, 12, 2);
  const auto g = build_graph(PointSet(x, Labels(12, 0)), GraphConfig::epsilon(0.0).with_sigma(2.0));
  CHECK(g.edge_count() == 12 * 11 / 2);
  for (Index i = 0; i < 12; ++i) CHECK(g.weights().coeff(i, i) == 0.0);
}

TEST_CASE("build_graph knn matches brute force on random point sets") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SplitMix64 rng(seed);
    const auto x = random_points(rng, 50, 3);
    RowVector psi(3);
    psi << 1.0, 0.5, 2.0;
    const Index k = 1 + static_cast<Index>(rng.below(6));
    const auto g = build_graph(PointSet(x, Labels(50, 0), psi), GraphConfig::knn(k).with_sigma(0.4));
    const Matrix oracle = brute_force_knn(x, psi, k, 0.4);
    const Matrix got = Matrix(g.weights());
    CHECK((got - oracle).cwiseAbs().maxCoeff() == 0.0);
    CHECK((got - got.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("duplicate points get weight one edges and no self loops") {
  PointMatrix x(3, 2);
  x << 1, 1, 1, 1, 5, 5;
  const auto g = build_graph(PointSet(x, {0, 0, 0}), GraphConfig::knn(1).with_sigma(1.0));
  CHECK(g.weights().coeff(0, 1) == 1.0);
  CHECK(g.weights().coeff(0, 0) == 0.0);
}

TEST_CASE("build_graph rejects bad input") {
  PointMatrix one(1, 2);
  one << 0, 0;
  CHECK_THROWS_AS(build_graph(PointSet(one, {0}), GraphConfig::knn(1)), InputError);
  PointMatrix x(3, 1);
  x << 0, 1, 2;
  CHECK_THROWS_AS(build_graph(PointSet(x, {0, 0, 0}), GraphConfig::knn(3)), InputError);
  CHECK_THROWS_AS(build_graph(PointSet(x, {0, 0, 0}), GraphConfig::knn(1).with_sigma(-1)),
                  InputError);
}

TEST_CASE("sigma heuristic makes graphs scale equivariant") {
  SplitMix64 rng(11);
  const auto x = random_points(rng, 40, 3);
  const PointSet a(x, Labels(40, 0));
  const PointSet b(PointMatrix(x * 7.5), Labels(40, 0));
  for (auto cfg : {GraphConfig::knn(4), GraphConfig::epsilon(1e-3)}) {
    const Matrix wa(build_graph(a, cfg).weights());
    const Matrix wb(build_graph(b, cfg).weights());
    CHECK((wa - wb).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(tenth_of_mean_std(PointMatrix(x * 7.5)) ==
        doctest::Approx(7.5 * tenth_of_mean_std(x)).epsilon(1e-13));
}

TEST_CASE("laplacian small cases") {
  Matrix W(2, 2);
  W << 0, 1, 1, 0;
  const Matrix L(laplacian(SimilarityGraph::from_dense(W)));
  Matrix expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK(L == expected);

  SplitMix64 rng(5);
  const auto g = random_graph(rng, 30);
  const Vector r = laplacian(g) * Vector::Ones(30);
  CHECK(r.cwiseAbs().maxCoeff() < 1e-14);

  const auto isolated = SimilarityGraph::from_dense(Matrix::Zero(3, 3));
  CHECK_THROWS_AS(laplacian(isolated, true), DegenerateInputError);
}

TEST_CASE("laplacian quadratic form identity and positive semidefiniteness") {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix W = random_dense_weights(rng, 25, 0.3, trial % 2 == 0);
    const auto g = SimilarityGraph::from_dense(W);
    const SparseMatrix L = laplacian(g);
    const SparseMatrix Ln = trial % 2 == 0 ? laplacian(g, true) : SparseMatrix();
    for (int h_trial = 0; h_trial < 100; ++h_trial) {
      Vector h(25);
      for (Index i = 0; i < 25; ++i) h[i] = rng.uniform(-2, 2);
      double direct = 0.0;
      for (Index i = 0; i < 25; ++i)
        for (Index j = 0; j < 25; ++j) direct += W(i, j) * (h[i] - h[j]) * (h[i] - h[j]);
      const double quad = h.dot(L * h);
      CHECK(std::abs(quad - 0.5 * direct) < 1e-10);
      CHECK(quad >= -1e-9);
      if (trial % 2 == 0) CHECK(h.dot(Ln * h) >= -1e-9);
    }
  }
}

TEST_CASE("stationary distribution") {
  Matrix W2(2, 2);
  W2 << 0, 1, 1, 0;
  const Vector s2 = stationary_distribution(SimilarityGraph::from_dense(W2));
  CHECK(s2[0] == 0.5);
  CHECK(s2[1] == 0.5);

  Matrix W3 = Matrix::Zero(3, 3);
  W3(0, 1) = W3(1, 0) = W3(1, 2) = W3(2, 1) = 1.0;
  const Vector s3 = stationary_distribution(SimilarityGraph::from_dense(W3));
  CHECK(s3[0] == 0.25);
  CHECK(s3[1] == 0.5);
  CHECK(s3[2] == 0.25);

  CHECK_THROWS_AS(stationary_distribution(SimilarityGraph::from_dense(Matrix::Zero(2, 2))),
                  DegenerateInputError);
}

TEST_CASE("stationary distribution is the fixed point found by power iteration") {
  SplitMix64 rng(8);
  const Matrix W = random_dense_weights(rng, 30, 0.25, true);
  const auto g = SimilarityGraph::from_dense(W);
  const Vector s = stationary_distribution(g);
  Matrix P = W;
  for (Index i = 0; i < 30; ++i) P.row(i) /= W.row(i).sum();
  CHECK((P.transpose() * s - s).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-14));

  // lazy walk so periodic graphs converge too
  const Matrix lazy = 0.5 * (Matrix::Identity(30, 30) + P);
  Vector q = Vector::Constant(30, 1.0 / 30);
  for (int it = 0; it < 20000; ++it) q = lazy.transpose() * q;
  CHECK((q - s).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("connected components") {
  Matrix complete = Matrix::Ones(5, 5) - Matrix::Identity(5, 5);
  CHECK(connected_components(SimilarityGraph::from_dense(complete)).size() == 1);

  const auto singles = connected_components(SimilarityGraph::from_dense(Matrix::Zero(4, 4)));
  REQUIRE(singles.size() == 4);
  for (Index i = 0; i < 4; ++i) CHECK(singles[static_cast<std::size_t>(i)] == std::vector<Index>{i});

  // cliques {0,2,4} and {1,3}
  Matrix W = Matrix::Zero(5, 5);
  for (Index a : {0, 2, 4})
    for (Index b : {0, 2, 4})
      if (a != b) W(a, b) = 1.0;
  W(1, 3) = W(3, 1) = 0.5;
  const auto comps = connected_components(SimilarityGraph::from_dense(W));
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<Index>{0, 2, 4});
  CHECK(comps[1] == std::vector<Index>{1, 3});
}

TEST_CASE("SimilarityGraph validation") {
  Matrix asym = Matrix::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(SimilarityGraph::from_dense(asym), InputError);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 1) = neg(1, 0) = -1.0;
  CHECK_THROWS_AS(SimilarityGraph::from_dense(neg), InputError);
  Matrix loop = Matrix::Zero(2, 2);
  loop(0, 0) = 1.0;
  CHECK_THROWS_AS(SimilarityGraph::from_dense(loop), InputError);

  SplitMix64 rng(2);
  const auto g = random_graph(rng, 20);
  for (Index i = 0; i < 20; ++i)
    CHECK(g.degree(i) == doctest::Approx(Matrix(g.weights()).row(i).sum()).epsilon(1e-12));
  CHECK(g.volume() == doctest::Approx(g.degrees().sum()));
}

TEST_CASE("edge list export uses i<j and 17 significant digits") {
  Matrix W = Matrix::Zero(3, 3);
  W(0, 2) = W(2, 0) = 0.1;
  W(1, 2) = W(2, 1) = 1.0 / 3.0;
  std::ostringstream out;
  write_edge_list(out, SimilarityGraph::from_dense(W));
  CHECK(out.str() == "0,2,0.10000000000000001\n1,2,0.33333333333333331\n");
}

TEST_CASE("point set CSV") {
  std::istringstream in("a,b,label\n1.5,2,1\n-3,4e-1,0\n0,0,-1\n");
  const auto ps = read_point_set_csv(in);
  CHECK(ps.size() == 3);
  CHECK(ps.dims() == 2);
  CHECK(ps.points()(1, 1) == 0.4);
  CHECK(ps.labels() == Labels{1, 0, -1});
  std::ostringstream out;
  write_point_set_csv(out, ps);
  std::istringstream again(out.str());
  const auto back = read_point_set_csv(again);
  CHECK(back.points() == ps.points());
  CHECK(back.labels() == ps.labels());

  std::istringstream bad_label("a,label\n1,2\n");
  CHECK_THROWS_AS(read_point_set_csv(bad_label), InputError);
  std::istringstream bad_header("a,b\n1,2\n");
  CHECK_THROWS_AS(read_point_set_csv(bad_header), InputError);
  std::istringstream nonfinite("a,label\ninf,1\n");
  CHECK_THROWS_AS(read_point_set_csv(nonfinite), InputError);
}

TEST_CASE("graph spec strings") {
  const auto k = GraphConfig::parse("knn:7");
  CHECK(k.mode == GraphMode::knn);
  CHECK(k.k_neighbors == 7);
  CHECK(k.sigma_rule == SigmaRule::tenth_of_mean_std);
  const auto e = GraphConfig::parse("eps:0.05");
  CHECK(e.mode == GraphMode::epsilon);
  CHECK(e.epsilon_cut == 0.05);
  for (const char* bad : {"knn", "knn:", "knn:x", "knn:0", "eps:-1", "ball:3", ""})
    CHECK_THROWS_AS(GraphConfig::parse(bad), InputError);
}
