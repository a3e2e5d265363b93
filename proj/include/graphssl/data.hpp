#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "graphssl/common.hpp"
#include "graphssl/config.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/point_set.hpp"

namespace graphssl {

struct GaussianComponent {
  double weight = 1.0;
  RowVector mean;
  Matrix covariance;
};

struct MixtureSpec {
  std::vector<GaussianComponent> negative;
  std::vector<GaussianComponent> positive;
  double prior_negative = 0.5;
  double prior_positive = 0.5;

  Index dims() const;
  const std::vector<GaussianComponent>& components(int label) const;
  double prior(int label) const { return label > 0 ? prior_positive : prior_negative; }
  // Weights >= 0 summing to 1 per class, priors summing to 1, SPD
  // covariances of matching size.
  void validate() const;

  // Keys: dims, prior.neg, prior.pos, then for every component i of class
  // neg/pos: <cls>.<i>.weight, <cls>.<i>.mean, <cls>.<i>.cov.
  static MixtureSpec from_config(const KeyValueConfig& cfg);
  static MixtureSpec load(const std::filesystem::path& path);
};

// Points labeled with the class they were drawn from.
PointSet gen_gauss_mixture(const MixtureSpec& spec, Index n, std::uint64_t seed);

// P(y != label | x) from the exact class posteriors. When both class
// densities underflow to zero the prior of the other class is returned.
double true_anomaly_score(const MixtureSpec& spec, const RowRef& x, int label);
std::vector<double> true_anomaly_scores(const MixtureSpec& spec, const PointSet& ps);

struct FlipResult {
  PointSet data;
  std::vector<bool> flipped;
};

// Negates the labels of floor(fraction * n) distinct uniformly chosen points.
FlipResult flip_labels(const PointSet& ps, double fraction, std::uint64_t seed);

struct Square {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(const RowRef& x) const;
};

struct CoreGroup {
  Square box;
  Index negatives = 0;
  Index positives = 0;
};

struct CoreSpec {
  Square big{0.0, 10.0};
  Index big_count = 100;
  Square inner{4.0, 6.0};
  Index inner_count = 50;
  std::vector<CoreGroup> tiny{{{12.0, 12.5}, 3, 0}, {{-2.5, -2.0}, 0, 3}};
  Index anomalies = 12;
  Index test_factor = 2;
  // Whether training big-square points may fall inside the inner square.
  bool train_overlap = false;

  void validate() const;
  // Keys: big, big.count, inner, inner.count, tiny.<i>, tiny.<i>.neg,
  // tiny.<i>.pos, anomalies, test.factor, train.overlap (0/1). Squares are
  // `[lo, hi]`.
  static CoreSpec from_config(const KeyValueConfig& cfg);
  static CoreSpec load(const std::filesystem::path& path);
};

enum class CoreRegion { big, inner, tiny };

struct CoreDataset {
  PointSet train;
  PointSet test;
  std::vector<bool> anomaly;
  std::vector<CoreRegion> test_region;
};

// Training: big-square points (-1) uniform over the big square (outside the
// inner one unless train_overlap), inner-square points (+1), tiny groups. Test: test_factor times every
// count, where exactly `anomalies` of the big-square points fall inside the
// inner square and the rest outside it.
CoreDataset gen_core_dataset(const CoreSpec& spec, std::uint64_t seed);

// Two interleaved half circles, n / 2 per class (-1 upper, +1 lower), with
// isotropic Gaussian noise.
PointSet gen_two_moons(Index n, double noise, std::uint64_t seed);

struct TwoSquares {
  PointSet truth;      // every point with its cluster label
  Labels revealed;     // one labeled point per cluster, rest 0
  SimilarityGraph graph;
};

// Two side x side unit grids, the -1 one at x in [0, side-1] and the +1 one
// shifted right by side-1+gap, both with y in [0, side-1]. Grid neighbors at
// distance 1 are joined with weight exp(-1/2); there are no other edges. The
// revealed points are the -1 grid's top-right corner and the +1 grid's
// bottom-left corner.
TwoSquares gen_two_squares(Index side = 10, double gap = 2.0);

// Keeps `count` labels (at least one per class when count >= 2 and both
// classes exist) and zeroes the rest.
Labels reveal_labels(const Labels& truth, Index count, std::uint64_t seed);

// Mann-Whitney: P(score_pos > score_neg) + P(tie) / 2.
double auroc(const std::vector<double>& scores, const std::vector<bool>& truth);

// AUROC against a graded truth: over all pairs with truth_i > truth_j, the
// fraction with score_i > score_j, ties in score counting one half. Equals
// auroc() when truth takes two values.
double ordering_auroc(const std::vector<double>& scores, const std::vector<double>& truth);

// Pearson correlation of mid-ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Mid-ranks (1-based, ties averaged).
std::vector<double> average_ranks(const std::vector<double>& v);

struct TruthTable {
  std::vector<Index> index;
  Labels true_labels;
  std::vector<bool> flipped;
  std::vector<double> scores;
};

// `index,true_label,flipped,true_anomaly_score`.
TruthTable read_truth_csv(const std::filesystem::path& path);
void write_truth_csv(std::ostream& out, const Labels& true_labels, const std::vector<bool>& flipped,
                     const std::vector<double>& scores);
void write_truth_csv(const std::filesystem::path& path, const Labels& true_labels,
                     const std::vector<bool>& flipped, const std::vector<double>& scores);

}  // namespace graphssl
