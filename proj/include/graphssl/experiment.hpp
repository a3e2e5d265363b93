#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphssl/cad.hpp"
#include "graphssl/config.hpp"
#include "graphssl/data.hpp"

namespace graphssl {

enum class CadMethod { rwcad, softhad, knn };

CadMethod parse_cad_method(const std::string& name);
std::string to_string(CadMethod m);

// Shared by every CAD method. The kernel width is sigma_scale times the
// graph heuristic computed on the training points; the default 10 makes it
// the mean feature standard deviation.
struct CadParams {
  double sigma_scale = 10.0;
  // Unset: chosen from lambda_grid() by ordering_auroc on a validation split
  // of the training set (needs true scores).
  std::optional<double> lambda;
  double gamma_g = 10.0;
  double c_l = 1.0;
  Index graph_k = 30;
  Index knn_k = 0;

  void validate() const;
  // Keys: sigma_scale, lambda, gamma_g, c_l, graph_k, knn_k.
  void set(const std::string& key, double value);
  static CadParams from_config(const KeyValueConfig& cfg);
  // Canonical `key=value` list (17 significant digits), sorted by key.
  std::string describe() const;
};

struct MixtureProtocol {
  Index n = 1000;
  double flip_fraction = 0.03;
  double train_fraction = 2.0 / 3.0;

  void validate() const;
};

struct CadScores {
  std::vector<double> scores;  // one per test point
  std::optional<double> lambda;
};

// Scores the labeled test points against the labeled training points.
// SoftHAD runs on a knn graph over train and test together. Automatic lambda
// selection needs the true anomaly scores of the training points.
CadScores score_cad(CadMethod method, const CadParams& params, const PointSet& train, const PointSet& test,
                    const std::vector<double>* train_true_scores = nullptr);

struct MixtureRun {
  double auroc = 0.0;               // ordering_auroc against true_scores
  std::vector<Index> test_indices;  // into the generated sample
  std::vector<double> scores;
  std::vector<double> true_scores;  // P(y != y_i | x_i) for the test points
  std::optional<double> lambda;
  Index flipped = 0;
};

// Draws n points, flips labels on the full sample, splits train/test at
// random and scores the test part.
MixtureRun run_mixture_cad(const MixtureSpec& spec, const MixtureProtocol& protocol, CadMethod method,
                           const CadParams& params, std::uint64_t seed);

struct ExperimentPlan {
  CadMethod method = CadMethod::rwcad;
  CadParams base;
  // Parameter name -> values; the grid is their cartesian product.
  std::map<std::string, std::vector<double>> grid;
  std::filesystem::path dataset;  // MixtureSpec config
  MixtureProtocol protocol;
  Index runs = 1;
  std::uint64_t base_seed = 1;
  // Run k uses base_seed + seed_stride * k.
  std::uint64_t seed_stride = 1;
  std::filesystem::path outdir;

  void validate() const;
  // Keys: method, dataset, runs, seed, seed_stride, outdir, n, flip, train_fraction, any
  // CadParams key, and grid.<param> = [values]. Relative paths resolve
  // against `base_dir`.
  static ExperimentPlan from_config(const KeyValueConfig& cfg, const std::filesystem::path& base_dir);
  static ExperimentPlan load(const std::filesystem::path& path);
};

struct PlanRow {
  std::string grid_hash;
  std::string params;
  std::string row;  // run<k>, mean
  std::optional<std::uint64_t> seed;
  std::string status;
  double auroc = 0.0;
  std::optional<double> variance;
};

// Every (grid point, run) cell writes <outdir>/<method>/<grid-hash>/run<k>/
// {scores.csv, metrics.json}; summary.csv goes to <outdir>. Rows are ordered
// by the canonical parameter string, then run, then the aggregate row.
std::vector<PlanRow> run_plan(const ExperimentPlan& plan);

// 16 hex digits of FNV-1a over the canonical parameter string.
std::string grid_hash(const std::string& params);

}  // namespace graphssl
