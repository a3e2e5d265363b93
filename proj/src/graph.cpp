#include "graphssl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <queue>

#include <fmt/format.h>

#include "graphssl/io.hpp"
#include "graphssl/parallel.hpp"

namespace graphssl {

SimilarityGraph::SimilarityGraph(SparseMatrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols()) throw InputError("weight matrix must be square");
  weights_.prune(0.0, 0.0);
  weights_.makeCompressed();
  const Index n = weights_.rows();
  degrees_ = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(weights_, i); it; ++it) {
      const double w = it.value();
      if (!std::isfinite(w) || w < 0.0)
        throw InputError(fmt::format("weight ({},{}) = {} is not finite and nonnegative", i,
                                     it.col(), w));
      if (it.col() == i) throw InputError(fmt::format("self-loop at node {}", i));
      if (weights_.coeff(it.col(), i) != w)
        throw InputError(fmt::format("weight matrix is not symmetric at ({},{})", i, it.col()));
      degrees_[i] += w;
    }
  }
  volume_ = degrees_.sum();
}

SimilarityGraph SimilarityGraph::from_dense(const Matrix& weights) {
  return SimilarityGraph(SparseMatrix(weights.sparseView()));
}

SimilarityGraph SimilarityGraph::induced(const std::vector<Index>& nodes) const {
  std::vector<Index> position(static_cast<std::size_t>(size()), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] < 0 || nodes[k] >= size()) throw InputError("induced: node index out of range");
    position[static_cast<std::size_t>(nodes[k])] = static_cast<Index>(k);
  }
  std::vector<Triplet> trips;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    for (SparseMatrix::InnerIterator it(weights_, nodes[k]); it; ++it) {
      const Index j = position[static_cast<std::size_t>(it.col())];
      if (j >= 0) trips.emplace_back(static_cast<Index>(k), j, it.value());
    }
  const auto m = static_cast<Index>(nodes.size());
  SparseMatrix w(m, m);
  w.setFromTriplets(trips.begin(), trips.end());
  return SimilarityGraph(std::move(w));
}

void GraphConfig::validate() const {
  if (mode == GraphMode::knn && k_neighbors < 1)
    throw InputError("knn graph needs k_neighbors >= 1");
  if (mode == GraphMode::epsilon && !(epsilon_cut >= 0.0))
    throw InputError("epsilon graph needs a nonnegative cut");
  if (sigma_rule == SigmaRule::explicit_value && !(sigma > 0.0 && std::isfinite(sigma)))
    throw InputError("explicit sigma must be positive and finite");
}

GraphConfig GraphConfig::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (colon == std::string::npos || colon + 1 == text.size())
    throw InputError(fmt::format("graph spec '{}': expected knn:K or eps:E", text));
  const std::string value = text.substr(colon + 1);
  GraphConfig c;
  if (kind == "knn") {
    c = knn(static_cast<Index>(parse_int(value, "graph spec")));
  } else if (kind == "eps") {
    c = epsilon(parse_double(value, "graph spec"));
  } else {
    throw InputError(fmt::format("graph spec '{}': expected knn:K or eps:E", text));
  }
  c.validate();
  return c;
}

double weighted_sq_distance(const RowRef& a, const RowRef& b, const RowRef& psi) {
  if (a.size() != b.size() || a.size() != psi.size())
    throw InputError("distance: vectors must have equal length");
  double acc = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += psi[k] * d * d;
  }
  return acc;
}

double gaussian_weight(const RowRef& xi, const RowRef& xj, double sigma, const RowRef& psi,
                       bool normalize_by_p) {
  if (!(sigma > 0.0)) throw InputError("gaussian_weight: sigma must be positive");
  if (!xi.allFinite() || !xj.allFinite() || !psi.allFinite() || !std::isfinite(sigma))
    throw InputError("gaussian_weight: non-finite input");
  const double p = normalize_by_p ? static_cast<double>(xi.size()) : 1.0;
  return std::exp(-weighted_sq_distance(xi, xj, psi) / (p * sigma * sigma));
}

GaussianKernel::GaussianKernel(double sigma, RowVector psi, bool normalize_by_p)
    : sigma_(sigma), psi_(std::move(psi)) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InputError("kernel width must be positive and finite");
  const double p = normalize_by_p ? static_cast<double>(psi_.size()) : 1.0;
  scale_ = p * sigma * sigma;
}

double GaussianKernel::operator()(const RowRef& a, const RowRef& b) const {
  return from_sq_distance(weighted_sq_distance(a, b, psi_));
}

double GaussianKernel::from_sq_distance(double weighted_sq) const {
  return std::exp(-weighted_sq / scale_);
}

double tenth_of_mean_std(const PointMatrix& points) {
  const Index n = points.rows();
  if (n < 2) throw InputError("sigma heuristic needs at least two points");
  double total = 0.0;
  for (Index k = 0; k < points.cols(); ++k) {
    const double mean = points.col(k).mean();
    const double ss = (points.col(k).array() - mean).square().sum();
    total += std::sqrt(ss / static_cast<double>(n - 1));
  }
  const double sigma = 0.1 * total / static_cast<double>(points.cols());
  if (!(sigma > 0.0))
    throw DegenerateInputError("sigma heuristic is zero: every feature is constant");
  return sigma;
}

double resolve_sigma(const PointMatrix& points, const GraphConfig& cfg) {
  return cfg.sigma_rule == SigmaRule::explicit_value ? cfg.sigma : tenth_of_mean_std(points);
}

GaussianKernel make_kernel(const PointSet& ps, const GraphConfig& cfg) {
  cfg.validate();
  return GaussianKernel(resolve_sigma(ps.points(), cfg), ps.feature_weights(), cfg.normalize_by_p);
}

SimilarityGraph build_graph(const PointSet& ps, const GraphConfig& cfg) {
  return build_graph(ps.points(), ps.feature_weights(), cfg);
}

SimilarityGraph build_graph(const PointMatrix& points, const RowVector& psi,
                            const GraphConfig& cfg) {
  cfg.validate();
  const Index n = points.rows();
  if (n < 2) throw InputError("build_graph needs at least two points");
  if (psi.size() != points.cols()) throw InputError("feature weight length mismatch");
  if (cfg.mode == GraphMode::knn && cfg.k_neighbors >= n)
    throw InputError(fmt::format("k_neighbors = {} must be < n = {}", cfg.k_neighbors, n));
  const GaussianKernel kernel(resolve_sigma(points, cfg), psi, cfg.normalize_by_p);
  const auto un = static_cast<std::size_t>(n);

  // Row-local results; merged serially so the output never depends on
  // scheduling.
  std::vector<std::vector<Index>> chosen(un);
  std::vector<std::vector<std::pair<Index, double>>> eps_rows(un);

  if (cfg.mode == GraphMode::knn) {
    const auto k = static_cast<std::size_t>(cfg.k_neighbors);
    parallel_for(un, [&](std::size_t ui) {
      const auto i = static_cast<Index>(ui);
      std::vector<std::pair<double, Index>> dist;
      dist.reserve(un - 1);
      for (Index j = 0; j < n; ++j)
        if (j != i) dist.emplace_back(weighted_sq_distance(points.row(i), points.row(j), psi), j);
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      auto& row = chosen[ui];
      for (std::size_t r = 0; r < k; ++r) row.push_back(dist[r].second);
    });
    std::vector<std::vector<Index>> adjacency(un);
    for (std::size_t i = 0; i < un; ++i)
      for (Index j : chosen[i]) {
        adjacency[i].push_back(j);
        adjacency[static_cast<std::size_t>(j)].push_back(static_cast<Index>(i));
      }
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < un; ++i) {
      auto& row = adjacency[i];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      for (Index j : row) {
        const auto ii = static_cast<Index>(i);
        // weight always computed on the (min, max) ordered pair
        const Index a = std::min(ii, j), b = std::max(ii, j);
        const double w = kernel(points.row(a), points.row(b));
        if (w > 0.0) trips.emplace_back(ii, j, w);
      }
    }
    SparseMatrix W(n, n);
    W.setFromTriplets(trips.begin(), trips.end());
    return SimilarityGraph(std::move(W));
  }

  parallel_for(un, [&](std::size_t ui) {
    const auto i = static_cast<Index>(ui);
    for (Index j = i + 1; j < n; ++j) {
      const double w = kernel(points.row(i), points.row(j));
      if (w >= cfg.epsilon_cut && w > 0.0) eps_rows[ui].emplace_back(j, w);
    }
  });
  std::vector<Triplet> trips;
  for (std::size_t i = 0; i < un; ++i)
    for (const auto& [j, w] : eps_rows[i]) {
      trips.emplace_back(static_cast<Index>(i), j, w);
      trips.emplace_back(j, static_cast<Index>(i), w);
    }
  SparseMatrix W(n, n);
  W.setFromTriplets(trips.begin(), trips.end());
  return SimilarityGraph(std::move(W));
}

SparseMatrix laplacian(const SimilarityGraph& g, bool normalized) {
  const Index n = g.size();
  const auto& W = g.weights();
  const auto& d = g.degrees();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(W.nonZeros() + n));
  if (!normalized) {
    for (Index i = 0; i < n; ++i) {
      trips.emplace_back(i, i, d[i]);
      for (SparseMatrix::InnerIterator it(W, i); it; ++it)
        trips.emplace_back(i, it.col(), -it.value());
    }
  } else {
    for (Index i = 0; i < n; ++i)
      if (!(d[i] > 0.0))
        throw DegenerateInputError(
            fmt::format("normalized Laplacian undefined: node {} has zero degree", i));
    for (Index i = 0; i < n; ++i) {
      trips.emplace_back(i, i, 1.0);
      for (SparseMatrix::InnerIterator it(W, i); it; ++it)
        trips.emplace_back(i, it.col(), -it.value() / std::sqrt(d[i] * d[it.col()]));
    }
  }
  SparseMatrix L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

Vector stationary_distribution(const SimilarityGraph& g) {
  if (!(g.volume() > 0.0))
    throw DegenerateInputError("stationary distribution undefined: graph volume is zero");
  // column sums equal row sums by symmetry
  return g.degrees() / g.volume();
}

std::vector<std::vector<Index>> connected_components(const SimilarityGraph& g) {
  const Index n = g.size();
  std::vector<Index> component(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> out;
  for (Index start = 0; start < n; ++start) {
    if (component[static_cast<std::size_t>(start)] >= 0) continue;
    const auto id = static_cast<Index>(out.size());
    out.emplace_back();
    std::queue<Index> frontier;
    frontier.push(start);
    component[static_cast<std::size_t>(start)] = id;
    while (!frontier.empty()) {
      const Index v = frontier.front();
      frontier.pop();
      out.back().push_back(v);
      for (SparseMatrix::InnerIterator it(g.weights(), v); it; ++it) {
        auto& c = component[static_cast<std::size_t>(it.col())];
        if (c < 0 && it.value() > 0.0) {
          c = id;
          frontier.push(it.col());
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

void write_edge_list(std::ostream& out, const SimilarityGraph& g) {
  for (Index i = 0; i < g.size(); ++i)
    for (SparseMatrix::InnerIterator it(g.weights(), i); it; ++it)
      if (it.col() > i) out << i << ',' << it.col() << ',' << format_double(it.value()) << '\n';
}

}  // namespace graphssl
