#include "graphssl/graph_cuts.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "graphssl/io.hpp"
#include "graphssl/parallel.hpp"
#include "graphssl/random.hpp"

namespace graphssl {

namespace {

constexpr double kTau = 1e-12;

// Bias minimizing sum_i max(0, 1 - y_i (g_i + b)); midpoint of the
// minimizing interval.
double best_bias(const Vector& g, const Labels& y, double& hinge_sum) {
  const auto n = static_cast<std::size_t>(g.size());
  std::vector<double> cand(n);
  for (std::size_t i = 0; i < n; ++i) cand[i] = y[i] - g[static_cast<Index>(i)];
  auto loss = [&](double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::max(0.0, 1.0 - y[i] * (g[static_cast<Index>(i)] + b));
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  for (double b : cand) best = std::min(best, loss(b));
  const double slack = 1e-12 * std::max(1.0, best);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double b : cand)
    if (loss(b) <= best + slack) {
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
  const double b = 0.5 * (lo + hi);
  hinge_sum = loss(b);
  return b;
}

}  // namespace

void KernelSpec::validate() const {
  if (kind == KernelKind::rbf && !(width > 0.0 && std::isfinite(width)))
    throw InputError("rbf kernel width must be finite and > 0");
}

double KernelSpec::operator()(const RowRef& a, const RowRef& b) const {
  switch (kind) {
    case KernelKind::linear:
      return a.dot(b);
    case KernelKind::cubic: {
      const double t = a.dot(b) + 1.0;
      return t * t * t;
    }
    case KernelKind::rbf:
      return std::exp(-(a - b).squaredNorm() / (2.0 * width * width));
  }
  return 0.0;
}

KernelSpec KernelSpec::parse(const std::string& text, double default_width) {
  KernelSpec k;
  if (text == "linear") {
    k.kind = KernelKind::linear;
  } else if (text == "cubic") {
    k.kind = KernelKind::cubic;
  } else if (text == "rbf") {
    k.kind = KernelKind::rbf;
    k.width = default_width;
  } else if (text.rfind("rbf:", 0) == 0) {
    k.kind = KernelKind::rbf;
    k.width = parse_double(text.substr(4), "rbf width");
  } else {
    throw InputError(fmt::format("unknown kernel '{}' (linear, cubic, rbf[:W])", text));
  }
  k.validate();
  return k;
}

std::string KernelSpec::to_string() const {
  switch (kind) {
    case KernelKind::linear:
      return "linear";
    case KernelKind::cubic:
      return "cubic";
    case KernelKind::rbf:
      return "rbf:" + format_double(width);
  }
  return "linear";
}

double KernelSpec::default_width(const PointMatrix& points) {
  return std::sqrt(static_cast<double>(points.cols())) * 10.0 * tenth_of_mean_std(points);
}

InducedLabels induce_labels(const SimilarityGraph& g, const Labels& labels, double gamma_g, double epsilon,
                            const SolverOptions& opts) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InputError("epsilon must be finite and >= 0");
  if (static_cast<Index>(labels.size()) != g.size()) throw InputError("one label per node required");
  InducedLabels out;
  out.confidence = hard_harmonic(g, labels, gamma_g, opts).values;
  for (Index i = 0; i < g.size(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const double l = out.confidence[i];
    if (y != 0) {
      out.indices.push_back(i);
      out.labels.push_back(y);
    } else if (l != 0.0 && std::abs(l) >= epsilon) {
      out.indices.push_back(i);
      out.labels.push_back(l > 0.0 ? 1 : -1);
    }
  }
  return out;
}

CutClassifier::CutClassifier(KernelSpec kernel, PointMatrix support, std::vector<Index> indices, Vector alpha,
                             double bias, double objective)
    : kernel_(kernel),
      support_(std::move(support)),
      indices_(std::move(indices)),
      alpha_(std::move(alpha)),
      bias_(bias),
      objective_(objective) {
  kernel_.validate();
  if (alpha_.size() != support_.rows() || static_cast<Index>(indices_.size()) != support_.rows())
    throw InputError("classifier: support, indices and alpha differ in length");
}

double CutClassifier::decision(const RowRef& x) const {
  if (x.size() != support_.cols()) throw InputError("classifier: feature count mismatch");
  double f = bias_;
  for (Index i = 0; i < support_.rows(); ++i)
    if (alpha_[i] != 0.0) f += alpha_[i] * kernel_(support_.row(i), x);
  return f;
}

std::vector<double> CutClassifier::decisions(const PointMatrix& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  parallel_for(out.size(), [&](std::size_t i) { out[i] = decision(x.row(static_cast<Index>(i))); });
  return out;
}

void CutClassifier::save(std::ostream& out) const {
  out << "mmgc 1\n";
  out << "kernel " << kernel_.to_string() << '\n';
  out << "bias " << format_double(bias_) << '\n';
  out << "objective " << format_double(objective_) << '\n';
  out << "dims " << support_.cols() << '\n';
  out << "count " << support_.rows() << '\n';
  for (Index i = 0; i < support_.rows(); ++i) {
    out << indices_[static_cast<std::size_t>(i)] << ' ' << format_double(alpha_[i]);
    for (Index k = 0; k < support_.cols(); ++k) out << ' ' << format_double(support_(i, k));
    out << '\n';
  }
}

void CutClassifier::save(const std::filesystem::path& path) const {
  auto out = open_output(path);
  save(out);
}

CutClassifier CutClassifier::load(std::istream& in) {
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw IoError(fmt::format("model file: expected '{}'", key));
  };
  expect("mmgc");
  int version = 0;
  if (!(in >> version) || version != 1) throw IoError("model file: unsupported version");
  std::string token;
  expect("kernel");
  in >> token;
  const KernelSpec kernel = KernelSpec::parse(token);
  expect("bias");
  in >> token;
  const double bias = parse_double(token, "bias");
  expect("objective");
  in >> token;
  const double objective = parse_double(token, "objective");
  Index dims = 0, count = 0;
  expect("dims");
  in >> dims;
  expect("count");
  in >> count;
  if (!in || dims < 1 || count < 0) throw IoError("model file: bad header");
  PointMatrix support(count, dims);
  Vector alpha(count);
  std::vector<Index> indices(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    if (!(in >> indices[static_cast<std::size_t>(i)] >> token)) throw IoError("model file: truncated");
    alpha[i] = parse_double(token, "alpha");
    for (Index k = 0; k < dims; ++k) {
      if (!(in >> token)) throw IoError("model file: truncated");
      support(i, k) = parse_double(token, "support point");
    }
  }
  return CutClassifier(kernel, std::move(support), std::move(indices), std::move(alpha), bias, objective);
}

CutClassifier CutClassifier::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load(in);
}

CutClassifier train_maxmargin(const PointMatrix& x, const Labels& y, const std::vector<Index>& indices,
                              const KernelSpec& kernel, double gamma, const MarginOptions& opts) {
  kernel.validate();
  const Index n = x.rows();
  if (static_cast<Index>(y.size()) != n || static_cast<Index>(indices.size()) != n)
    throw InputError("max-margin: points, labels and indices differ in length");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be finite and > 0");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v != -1 && v != 1) throw InputError("max-margin labels must be -1 or +1");
    (v > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw InputError("max-margin training needs both classes");

  const double C = 1.0 / (2.0 * gamma);
  Matrix K(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    for (Index j = 0; j < n; ++j) K(i, j) = kernel(x.row(i), x.row(j));
  });
  Vector yv(n);
  for (Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];

  // Dual: min 1/2 a^T Q a - sum a, 0 <= a <= C, y^T a = 0, Q = diag(y) K diag(y).
  Vector a = Vector::Zero(n);
  if (opts.init_seed) {
    SplitMix64 rng(*opts.init_seed);
    double sp = 0.0, sn = 0.0;
    for (Index i = 0; i < n; ++i) {
      a[i] = C * rng.uniform();
      (yv[i] > 0 ? sp : sn) += a[i];
    }
    const double target = std::min(sp, sn);
    for (Index i = 0; i < n; ++i) a[i] *= yv[i] > 0 ? (sp > 0 ? target / sp : 0.0) : (sn > 0 ? target / sn : 0.0);
  }
  Vector G = -Vector::Ones(n);
  for (Index j = 0; j < n; ++j)
    if (a[j] != 0.0)
      for (Index i = 0; i < n; ++i) G[i] += yv[i] * yv[j] * K(i, j) * a[j];

  auto in_up = [&](Index t) { return (yv[t] > 0 && a[t] < C) || (yv[t] < 0 && a[t] > 0); };
  auto in_low = [&](Index t) { return (yv[t] < 0 && a[t] < C) || (yv[t] > 0 && a[t] > 0); };

  auto evaluate = [&](double& primal, double& dual, double& bias) {
    const Vector ay = a.cwiseProduct(yv);
    const Vector g = K * ay;
    double hinge = 0.0;
    bias = best_bias(g, y, hinge);
    const double quad = ay.dot(g);
    primal = 0.5 * quad + C * hinge;
    dual = a.sum() - 0.5 * quad;
  };

  double eps = 1e-3;
  Index iter = 0;
  double primal = 0.0, dual = 0.0, bias = 0.0;
  for (;;) {
    while (iter < opts.max_iterations) {
      Index i = -1;
      double gmax = -std::numeric_limits<double>::infinity();
      for (Index t = 0; t < n; ++t)
        if (in_up(t) && -yv[t] * G[t] >= gmax) {
          if (-yv[t] * G[t] > gmax || i < 0) i = t;
          gmax = -yv[t] * G[t];
        }
      Index j = -1;
      double gmin = std::numeric_limits<double>::infinity(), best_obj = std::numeric_limits<double>::infinity();
      for (Index t = 0; t < n; ++t) {
        if (!in_low(t)) continue;
        const double v = -yv[t] * G[t];
        gmin = std::min(gmin, v);
        if (i >= 0) {
          const double b = gmax - v;
          if (b > 0.0) {
            double quad = K(i, i) + K(t, t) - 2.0 * K(i, t);
            if (quad <= 0.0) quad = kTau;
            const double obj = -(b * b) / quad;
            if (obj < best_obj) {
              best_obj = obj;
              j = t;
            }
          }
        }
      }
      if (i < 0 || j < 0 || gmax - gmin < eps) break;
      ++iter;

      const double Ki = K(i, i), Kj = K(j, j), Kij = K(i, j);
      const double ai_old = a[i], aj_old = a[j];
      if (yv[i] != yv[j]) {
        double quad = Ki + Kj - 2.0 * Kij;
        if (quad <= 0.0) quad = kTau;
        const double delta = (-G[i] - G[j]) / quad;
        const double diff = a[i] - a[j];
        a[i] += delta;
        a[j] += delta;
        if (diff > 0) {
          if (a[j] < 0) {
            a[j] = 0;
            a[i] = diff;
          }
        } else if (a[i] < 0) {
          a[i] = 0;
          a[j] = -diff;
        }
        if (diff > 0) {
          if (a[i] > C) {
            a[i] = C;
            a[j] = C - diff;
          }
        } else if (a[j] > C) {
          a[j] = C;
          a[i] = C + diff;
        }
      } else {
        double quad = Ki + Kj - 2.0 * Kij;
        if (quad <= 0.0) quad = kTau;
        const double delta = (G[i] - G[j]) / quad;
        const double sum = a[i] + a[j];
        a[i] -= delta;
        a[j] += delta;
        if (sum > C) {
          if (a[i] > C) {
            a[i] = C;
            a[j] = sum - C;
          }
        } else if (a[j] < 0) {
          a[j] = 0;
          a[i] = sum;
        }
        if (sum > C) {
          if (a[j] > C) {
            a[j] = C;
            a[i] = sum - C;
          }
        } else if (a[i] < 0) {
          a[i] = 0;
          a[j] = sum;
        }
      }
      const double di = a[i] - ai_old, dj = a[j] - aj_old;
      for (Index t = 0; t < n; ++t) G[t] += yv[t] * (yv[i] * K(t, i) * di + yv[j] * K(t, j) * dj);
    }
    evaluate(primal, dual, bias);
    const double gap = primal - dual;
    if (gap <= opts.tolerance * std::max(1.0, std::abs(primal))) break;
    if (iter >= opts.max_iterations || eps < 1e-14)
      throw SolverError(fmt::format("max-margin training stopped with relative gap {}", gap / std::max(1.0, std::abs(primal))),
                        gap);
    eps *= 0.1;
  }

  Vector alpha = a.cwiseProduct(yv);
  // sum hinge + gamma |f|^2 = 2 gamma * primal
  return CutClassifier(kernel, x, indices, std::move(alpha), bias, 2.0 * gamma * primal);
}

CutClassifier max_margin_graph_cut(const PointSet& ps, const SimilarityGraph& g, const GraphCutConfig& cfg,
                                   const MarginOptions& opts) {
  if (g.size() != ps.size()) throw InputError("graph and point set differ in size");
  const InducedLabels induced = induce_labels(g, ps.labels(), cfg.gamma_g, cfg.epsilon);
  return train_maxmargin(ps.subset(induced.indices).points(), induced.labels, induced.indices, cfg.kernel,
                         cfg.gamma, opts);
}

}  // namespace graphssl
