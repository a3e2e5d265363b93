#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graphssl/common.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/harmonic.hpp"
#include "graphssl/point_set.hpp"

namespace graphssl {

enum class KernelKind { linear, cubic, rbf };

// linear: <a, b>; cubic: (<a, b> + 1)^3; rbf: exp(-|a - b|^2 / (2 width^2)).
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double width = 1.0;

  void validate() const;
  double operator()(const RowRef& a, const RowRef& b) const;

  // "linear", "cubic", "rbf:W" or "rbf" (width from default_width).
  static KernelSpec parse(const std::string& text, double default_width = 1.0);
  std::string to_string() const;
  // sqrt(p) * sigma with sigma the mean per-feature standard deviation.
  static double default_width(const PointMatrix& points);
};

struct InducedLabels {
  std::vector<Index> indices;  // ascending
  Labels labels;               // sgn(l*) per retained index, original label if labeled
  Vector confidence;           // l* for every node
};

// hard_harmonic at gamma_g, then keeps labeled nodes plus unlabeled nodes with
// |l*| >= epsilon and l* != 0.
InducedLabels induce_labels(const SimilarityGraph& g, const Labels& labels, double gamma_g,
                            double epsilon = 1e-6, const SolverOptions& opts = {});

struct MarginOptions {
  // Relative duality gap at which training stops.
  double tolerance = 1e-6;
  Index max_iterations = 1000000;
  // Random feasible starting point for the dual instead of zero.
  std::optional<std::uint64_t> init_seed;
};

class CutClassifier {
 public:
  CutClassifier() = default;
  CutClassifier(KernelSpec kernel, PointMatrix support, std::vector<Index> indices, Vector alpha, double bias,
                double objective);

  // f(x) = sum_i alpha_i k(x_i, x) + bias over the retained points.
  double decision(const RowRef& x) const;
  int predict(const RowRef& x) const { return decision(x) >= 0.0 ? 1 : -1; }
  std::vector<double> decisions(const PointMatrix& x) const;

  const KernelSpec& kernel() const { return kernel_; }
  const PointMatrix& support() const { return support_; }
  const std::vector<Index>& indices() const { return indices_; }
  const Vector& alpha() const { return alpha_; }
  double bias() const { return bias_; }
  // sum of hinge losses + gamma |f|^2 at the returned solution.
  double objective() const { return objective_; }

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static CutClassifier load(std::istream& in);
  static CutClassifier load(const std::filesystem::path& path);

 private:
  KernelSpec kernel_;
  PointMatrix support_;
  std::vector<Index> indices_;
  Vector alpha_;
  double bias_ = 0.0;
  double objective_ = 0.0;
};

// Minimizes sum_i hinge(y_i f(x_i)) + gamma |f|_K^2 with an unregularized bias,
// through the dual with C = 1 / (2 gamma). `indices` are carried into the
// classifier for reference. Throws InputError if only one class is present.
CutClassifier train_maxmargin(const PointMatrix& x, const Labels& y, const std::vector<Index>& indices,
                              const KernelSpec& kernel, double gamma, const MarginOptions& opts = {});

struct GraphCutConfig {
  double gamma = 0.1;
  double gamma_g = 0.0;
  double epsilon = 1e-6;
  KernelSpec kernel;
};

// induce_labels on g, then train_maxmargin on the retained points of ps.
CutClassifier max_margin_graph_cut(const PointSet& ps, const SimilarityGraph& g, const GraphCutConfig& cfg,
                                   const MarginOptions& opts = {});

}  // namespace graphssl
