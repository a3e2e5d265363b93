#include <doctest.h>

#include <cmath>

#include "graphssl/harmonic.hpp"
#include "test_support.hpp"

using namespace graphssl;
using namespace graphssl::testing;

namespace {

// Dense reference for the clamped solution.
Vector dense_hard(const Matrix& W, const Labels& y, double gamma_g) {
  const Index n = W.rows();
  std::vector<Index> u, l;
  for (Index i = 0; i < n; ++i) (y[static_cast<std::size_t>(i)] == 0 ? u : l).push_back(i);
  const Matrix L = dense_laplacian(W);
  Matrix Auu(static_cast<Index>(u.size()), static_cast<Index>(u.size()));
  Vector rhs = Vector::Zero(static_cast<Index>(u.size()));
  for (std::size_t a = 0; a < u.size(); ++a) {
    for (std::size_t b = 0; b < u.size(); ++b) Auu(static_cast<Index>(a), static_cast<Index>(b)) = L(u[a], u[b]);
    Auu(static_cast<Index>(a), static_cast<Index>(a)) += gamma_g;
    for (Index j : l) rhs[static_cast<Index>(a)] += W(u[a], j) * y[static_cast<std::size_t>(j)];
  }
  const Vector lu = dense_solve(Auu, rhs);
  Vector out = to_targets(y);
  for (std::size_t a = 0; a < u.size(); ++a) out[u[a]] = lu[static_cast<Index>(a)];
  return out;
}

SimilarityGraph three_node(double w_plus, double w_minus) {
  // node 0 unlabeled, 1 labeled +1, 2 labeled -1
  Matrix W = Matrix::Zero(3, 3);
  W(0, 1) = W(1, 0) = w_plus;
  W(0, 2) = W(2, 0) = w_minus;
  return SimilarityGraph::from_dense(W);
}

}  // namespace

TEST_CASE("solve_spd trivial systems") {
  SparseMatrix I(5, 5);
  I.setIdentity();
  Vector b(5);
  b << 1, -2, 3, 0.5, 7;
  CHECK(max_abs_diff(solve_spd(I, b), b) < 1e-14);

  SparseMatrix D(4, 4);
  const double diag[] = {2.0, 0.5, 10.0, 3.0};
  for (Index i = 0; i < 4; ++i) D.insert(i, i) = diag[i];
  Vector c(4);
  c << 1, 1, 1, 1;
  const Vector x = solve_spd(D, c);
  for (Index i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(1.0 / diag[i]).epsilon(1e-14));
}

TEST_CASE("solve_spd matches dense elimination on random SPD systems") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix B(40, 40);
    for (Index i = 0; i < 40; ++i)
      for (Index j = 0; j < 40; ++j) B(i, j) = rng.uniform(-1, 1);
    const Matrix A = B * B.transpose() + 2.0 * Matrix::Identity(40, 40);
    Vector b(40);
    for (Index i = 0; i < 40; ++i) b[i] = rng.uniform(-1, 1);
    const SparseMatrix As = A.sparseView();
    const Vector x = solve_spd(As, b);
    CHECK(max_abs_diff(x, dense_solve(A, b)) < 1e-8);
    CHECK((As * x - b).norm() <= 1e-12 * b.norm());
  }
}

TEST_CASE("solve_spd reports non-convergence") {
  SplitMix64 rng(9);
  Matrix B(30, 30);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j) B(i, j) = rng.uniform(-1, 1);
  const Matrix A = B * B.transpose() + 1e-3 * Matrix::Identity(30, 30);
  const SparseMatrix As = A.sparseView();
  SolverOptions opts;
  opts.tol = 1e-15;
  opts.max_iter_factor = 0;
  const Vector b = Vector::Ones(30);
  try {
    solve_spd(As, b, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("hard harmonic on one unlabeled node") {
  CHECK(std::abs(hard_harmonic(three_node(1.0, 1.0), {0, 1, -1}, 0.0)[0]) < 1e-15);
  CHECK(hard_harmonic(three_node(2.0, 1.0), {0, 1, -1}, 0.0)[0] ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  double previous = 1.0 / 3.0;
  for (double gamma : {0.1, 1.0, 10.0, 100.0, 1e4, 1e8}) {
    const double v = hard_harmonic(three_node(2.0, 1.0), {0, 1, -1}, gamma)[0];
    CHECK(v < previous);
    CHECK(v > 0.0);
    previous = v;
  }
  CHECK(previous < 1e-7);
}

TEST_CASE("hard harmonic clamps labels, checks inputs, and detects singular systems") {
  SplitMix64 rng(12);
  const auto g = random_graph(rng, 15);
  const Labels y = random_labels(rng, 15, 4);
  const auto l = hard_harmonic(g, y, 0.0);
  CHECK(l.origin == LabelOrigin::hard_hs);
  for (Index i = 0; i < 15; ++i)
    if (y[static_cast<std::size_t>(i)] != 0) CHECK(l[i] == y[static_cast<std::size_t>(i)]);

  CHECK_THROWS_AS(hard_harmonic(g, Labels(15, 0), 0.0), DegenerateInputError);
  CHECK_THROWS_AS(hard_harmonic(g, Labels(3, 1), 0.0), InputError);

  // two components, only the first labeled
  Matrix W = Matrix::Zero(4, 4);
  W(0, 1) = W(1, 0) = 1.0;
  W(2, 3) = W(3, 2) = 1.0;
  const auto split = SimilarityGraph::from_dense(W);
  CHECK_THROWS_AS(hard_harmonic(split, {1, 0, 0, 0}, 0.0), DegenerateInputError);
  const auto ok = hard_harmonic(split, {1, 0, 0, 0}, 0.5);
  CHECK(ok[2] == 0.0);
  CHECK(ok[1] == doctest::Approx(1.0 / 1.5).epsilon(1e-13));
}

TEST_CASE("hard harmonic agrees with dense reference and the harmonic property") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix W = random_dense_weights(rng, 40, 0.15, true);
    const auto g = SimilarityGraph::from_dense(W);
    const Labels y = random_labels(rng, 40, 5);
    for (double gamma : {0.0, 0.3}) {
      const Vector l = hard_harmonic(g, y, gamma).values;
      CHECK(max_abs_diff(l, dense_hard(W, y, gamma)) < 1e-9);
      if (gamma == 0.0)
        for (Index i = 0; i < 40; ++i) {
          if (y[static_cast<std::size_t>(i)] != 0) continue;
          CHECK(std::abs(l[i] - W.row(i).dot(l) / W.row(i).sum()) < 1e-8);
        }
      CHECK(l.maxCoeff() <= 1.0 + 1e-9);
      CHECK(l.minCoeff() >= -1.0 - 1e-9);
    }
  }
}

TEST_CASE("hard harmonic equals absorbing random walk label probabilities") {
  SplitMix64 rng(77);
  const Matrix W = random_dense_weights(rng, 12, 0.3, true);
  const auto g = SimilarityGraph::from_dense(W);
  const Labels y = {1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0};
  const Vector l = hard_harmonic(g, y, 0.0).values;

  SplitMix64 walk_rng(1234);
  const int walks = 100000;
  for (Index start : {1, 5, 8}) {
    int plus = 0, minus = 0;
    for (int w = 0; w < walks; ++w) {
      Index v = start;
      while (y[static_cast<std::size_t>(v)] == 0) {
        std::vector<double> row(12);
        for (Index j = 0; j < 12; ++j) row[static_cast<std::size_t>(j)] = W(v, j);
        v = static_cast<Index>(walk_rng.categorical(row));
      }
      (y[static_cast<std::size_t>(v)] > 0 ? plus : minus)++;
    }
    const double p_plus = static_cast<double>(plus) / walks;
    const double p_minus = static_cast<double>(minus) / walks;
    const double estimate = p_plus - p_minus;
    // variance of the +1/-1 outcome is 1 - estimate^2
    const double se = std::sqrt(std::max(1.0 - estimate * estimate, 1e-12) / walks);
    CHECK(std::abs(estimate - l[start]) < 3.0 * se);
  }
}

TEST_CASE("soft harmonic scalar and zero cases") {
  const auto isolated = SimilarityGraph::from_dense(Matrix::Zero(1, 1));
  Vector y1(1);
  y1 << 1.0;
  for (double gamma : {0.0, 0.5, 3.0}) {
    SoftConfig cfg{gamma, 1.0, 0.1};
    CHECK(soft_harmonic(isolated, y1, cfg)[0] == doctest::Approx(1.0 / (1.0 + gamma)).epsilon(1e-14));
  }
  SplitMix64 rng(3);
  const auto g = random_graph(rng, 10);
  const auto zero = soft_harmonic(g, Vector::Zero(10), SoftConfig{});
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.origin == LabelOrigin::soft_hs);

  CHECK_THROWS_AS(soft_harmonic(g, Vector::Zero(10), SoftConfig{-1.0, 1.0, 1.0}), InputError);
  CHECK_THROWS_AS(soft_harmonic(g, Vector::Zero(10), SoftConfig{0.0, 1.0, 0.0}), InputError);
}

TEST_CASE("soft harmonic matches the dense closed form") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix W = random_dense_weights(rng, 30, 0.2, trial % 3 != 0);
    const auto g = SimilarityGraph::from_dense(W);
    const Vector y = to_targets(random_labels(rng, 30, 8));
    const SoftConfig cfg{0.2 * trial, 10.0, 0.1};
    Vector c(30);
    for (Index i = 0; i < 30; ++i) c[i] = y[i] != 0 ? cfg.c_l : cfg.c_u;
    const Matrix K = dense_laplacian(W) + cfg.gamma_g * Matrix::Identity(30, 30);
    // (C^{-1} K + I)^{-1} y, formed literally
    const Matrix M = c.cwiseInverse().asDiagonal() * K + Matrix::Identity(30, 30);
    const Vector oracle = M.inverse() * y;
    const Vector l = soft_harmonic(g, y, cfg).values;
    CHECK(max_abs_diff(l, oracle) < 1e-8);
    // first-order condition C(l - y) + K l = 0
    CHECK((c.asDiagonal() * (l - y) + K * l).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("soft harmonic norm bound and monotone shrinkage") {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_graph(rng, 25, 0.2, trial % 2 == 0);
    const Labels lab = random_labels(rng, 25, 1 + static_cast<Index>(rng.below(10)));
    const Vector y = to_targets(lab);
    double nl = 0;
    for (int v : lab) nl += (v != 0);
    const double c_l = 0.1 + 0.9 * rng.uniform();
    double previous = INFINITY;
    for (double gamma : {0.1, 1.0, 10.0}) {
      const SoftConfig cfg{gamma, c_l, std::min(c_l, 0.1)};
      const double norm = soft_harmonic(g, y, cfg).values.norm();
      CHECK(norm <= std::sqrt(nl) / (gamma + 1.0) + 1e-9);
      CHECK(norm <= previous);
      previous = norm;
    }
  }
}

TEST_CASE("blockwise harmonic") {
  // two disjoint cliques
  Matrix W = Matrix::Zero(7, 7);
  const std::vector<Index> a = {0, 1, 2, 3}, b = {4, 5, 6};
  for (const auto* blk : {&a, &b})
    for (Index i : *blk)
      for (Index j : *blk)
        if (i != j) W(i, j) = 0.5 + 0.1 * static_cast<double>(i + j);
  const auto g = SimilarityGraph::from_dense(W);
  Vector y(7);
  y << 1, 0, 0, -1, 0, 1, 0;
  const SoftConfig cfg{0.1, 10.0, 0.1};
  const Vector full = soft_harmonic(g, y, cfg).values;
  const auto comps = connected_components(g);
  CHECK(max_abs_diff(blockwise_harmonic(g, y, cfg, comps).values, full) < 1e-10);
  std::vector<std::vector<Index>> all{{0, 1, 2, 3, 4, 5, 6}};
  CHECK(max_abs_diff(blockwise_harmonic(g, y, cfg, all).values, full) < 1e-12);

  CHECK_THROWS_AS(blockwise_harmonic(g, y, cfg, {{0, 1, 2}, {3, 4, 5}}), InputError);
  CHECK_THROWS_AS(blockwise_harmonic(g, y, cfg, {{0, 1, 2, 3}, {3, 4, 5, 6}}), InputError);
  CHECK_THROWS_AS(blockwise_harmonic(g, y, cfg, {{0, 1, 2, 3}, {4, 5, 9}}), InputError);
}

TEST_CASE("blockwise harmonic deviation shrinks with cross-block coupling") {
  SplitMix64 rng(41);
  const Matrix A = random_dense_weights(rng, 15, 0.4, true);
  const Matrix B = random_dense_weights(rng, 15, 0.4, true);
  Vector y = Vector::Zero(30);
  y[0] = 1;
  y[3] = -1;
  y[16] = 1;
  y[20] = -1;
  const SoftConfig cfg{0.05, 10.0, 0.1};
  std::vector<std::vector<Index>> blocks(2);
  for (Index i = 0; i < 15; ++i) {
    blocks[0].push_back(i);
    blocks[1].push_back(15 + i);
  }
  double previous = INFINITY;
  for (double w_max : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    Matrix W = Matrix::Zero(30, 30);
    W.topLeftCorner(15, 15) = A;
    W.bottomRightCorner(15, 15) = B;
    for (Index i = 0; i < 15; i += 3) W(i, 15 + i) = W(15 + i, i) = w_max;
    const auto g = SimilarityGraph::from_dense(W);
    const double dev = max_abs_diff(blockwise_harmonic(g, y, cfg, blocks).values,
                                    soft_harmonic(g, y, cfg).values);
    CHECK(dev < previous);
    CHECK(dev < 10.0 * w_max);
    previous = dev;
  }
}
