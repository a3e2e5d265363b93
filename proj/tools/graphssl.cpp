// Command-line front end. Every subcommand reads CSV point sets
// (feature columns, then `label`) and writes CSV or text with 17
// significant digits.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "graphssl/cad.hpp"
#include "graphssl/data.hpp"
#include "graphssl/experiment.hpp"
#include "graphssl/graph.hpp"
#include "graphssl/graph_cuts.hpp"
#include "graphssl/harmonic.hpp"
#include "graphssl/io.hpp"
#include "graphssl/joint.hpp"
#include "graphssl/online.hpp"
#include "graphssl/parallel.hpp"
#include "graphssl/random.hpp"

namespace fs = std::filesystem;
using namespace graphssl;

namespace {

struct Global {
  std::uint64_t seed = 1;
  bool seed_given = false;
  unsigned threads = 0;
};

// "auto" keeps the heuristic rule, anything else is an explicit width.
GraphConfig graph_config(const std::string& graph, const std::string& sigma) {
  GraphConfig cfg = GraphConfig::parse(graph);
  if (sigma != "auto") cfg.with_sigma(parse_double(sigma, "--sigma"));
  return cfg;
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
  std::string kind = "mixture";
  std::string spec;
  Index n = 1000;
  double flip = 0.03;
  double noise = 0.1;
  Index labels = 10;
  std::string out;
  std::string truth;
  std::string test_out;
};

int gen_data(const GenDataOpts& o, const Global& g) {
  const fs::path out(o.out);
  const fs::path truth = o.truth.empty() ? out.parent_path() / "truth.csv" : fs::path(o.truth);
  SplitMix64 seeds(g.seed);
  const std::uint64_t data_seed = seeds.next(), aux_seed = seeds.next();

  if (o.kind == "mixture") {
    if (o.spec.empty()) throw InputError("gen-data --kind mixture needs --spec");
    const MixtureSpec spec = MixtureSpec::load(o.spec);
    const PointSet clean = gen_gauss_mixture(spec, o.n, data_seed);
    const FlipResult f = flip_labels(clean, o.flip, aux_seed);
    write_point_set_csv(out, f.data);
    write_truth_csv(truth, clean.labels(), f.flipped, true_anomaly_scores(spec, f.data));
  } else if (o.kind == "core") {
    if (o.test_out.empty()) throw InputError("gen-data --kind core needs --test-out");
    const CoreSpec spec = o.spec.empty() ? CoreSpec{} : CoreSpec::load(o.spec);
    const CoreDataset d = gen_core_dataset(spec, data_seed);
    write_point_set_csv(out, d.train);
    write_point_set_csv(o.test_out, d.test);
    Labels expected;
    std::vector<double> score;
    for (Index i = 0; i < d.test.size(); ++i) {
      const bool a = d.anomaly[static_cast<std::size_t>(i)];
      expected.push_back(a ? -d.test.label(i) : d.test.label(i));
      score.push_back(a ? 1.0 : 0.0);
    }
    write_truth_csv(truth, expected, d.anomaly, score);
  } else if (o.kind == "moons" || o.kind == "squares") {
    PointSet full;
    Labels revealed;
    if (o.kind == "moons") {
      full = gen_two_moons(o.n, o.noise, data_seed);
      revealed = reveal_labels(full.labels(), o.labels, aux_seed);
    } else {
      const TwoSquares t = gen_two_squares();
      full = t.truth;
      revealed = t.revealed;
    }
    write_point_set_csv(out, full.with_labels(revealed));
    write_truth_csv(truth, full.labels(), std::vector<bool>(static_cast<std::size_t>(full.size()), false),
                    std::vector<double>(static_cast<std::size_t>(full.size()), 0.0));
  } else {
    throw InputError(fmt::format("unknown --kind '{}' (mixture, core, moons, squares)", o.kind));
  }
  return 0;
}

// ------------------------------------------------------------- build-graph

struct BuildGraphOpts {
  std::string input, out, graph = "knn:10", sigma = "auto";
};

int build_graph_cmd(const BuildGraphOpts& o) {
  const PointSet ps = read_point_set_csv(fs::path(o.input));
  const SimilarityGraph g = build_graph(ps, graph_config(o.graph, o.sigma));
  auto out = open_output(o.out);
  write_edge_list(out, g);
  return 0;
}

// --------------------------------------------------------------------- ssl

struct SslOpts {
  std::string input, out, mode = "hard", graph = "knn:10", sigma = "auto";
  double gamma_g = 0.0, c_l = 10.0, c_u = 0.1;
};

int ssl_cmd(const SslOpts& o) {
  const PointSet ps = read_point_set_csv(fs::path(o.input));
  const SimilarityGraph g = build_graph(ps, graph_config(o.graph, o.sigma));
  Vector l;
  if (o.mode == "hard")
    l = hard_harmonic(g, ps.labels(), o.gamma_g).values;
  else if (o.mode == "soft")
    l = soft_harmonic(g, to_targets(ps.labels()), SoftConfig{o.gamma_g, o.c_l, o.c_u}).values;
  else
    throw InputError(fmt::format("unknown --mode '{}' (hard, soft)", o.mode));
  auto out = open_output(o.out);
  out << "index,soft_label,predicted_sign\n";
  for (Index i = 0; i < l.size(); ++i) out << i << ',' << format_double(l[i]) << ',' << sign_of(l[i]) << '\n';
  return 0;
}

// -------------------------------------------------------------- online-ssl

struct OnlineOpts {
  std::string input, out, state, sigma = "auto";
  Index k = 100;
  double m = 1.5, gamma_g = 0.1;
  std::optional<double> epsilon;
};

int online_cmd(const OnlineOpts& o) {
  const PointSet ps = read_point_set_csv(fs::path(o.input));
  OnlineConfig cfg;
  cfg.capacity = o.k;
  cfg.multiplier = o.m;
  cfg.gamma_g = o.gamma_g;
  cfg.sigma = o.sigma == "auto" ? tenth_of_mean_std(ps.points()) : parse_double(o.sigma, "--sigma");
  cfg.epsilon_cut = o.epsilon;
  OnlinePredictor p(cfg);
  auto out = open_output(o.out);
  out << "t,assigned_centroid,prediction,abstained\n";
  for (Index t = 0; t < ps.size(); ++t) {
    const OnlineStep s = p.step(ps.point(t), ps.label(t));
    out << t << ',' << s.centroid << ',' << static_cast<int>(s.prediction) << ','
        << (s.prediction == OnlinePrediction::abstain ? 1 : 0) << '\n';
  }
  if (!o.state.empty()) {
    const QuantizerState& q = p.state();
    auto st = open_output(o.state);
    st << "radius " << format_double(q.radius()) << "\nmultiplier " << format_double(q.multiplier())
       << "\ncentroids " << q.centroid_count() << "\n";
    for (Index c = 0; c < q.centroid_count(); ++c) {
      st << q.multiplicities()[static_cast<std::size_t>(c)] << ' ' << q.centroid_labels()[static_cast<std::size_t>(c)];
      for (Index d = 0; d < q.dims(); ++d) st << ' ' << format_double(q.centroids()(c, d));
      st << '\n';
    }
  }
  return 0;
}

// --------------------------------------------------------------- joint-ssl

struct JointOpts {
  std::string input, out, trace, init = "random";
  Index k = 20, max_outer = 10;
  double gamma_q = 10.0, gamma_g = 0.0, f_l = 10.0, f_u = 0.1;
  std::optional<double> sigma;
};

int joint_cmd(const JointOpts& o, const Global& g) {
  const PointSet ps = read_point_set_csv(fs::path(o.input));
  JointConfig cfg;
  cfg.k = o.k;
  cfg.gamma_q = o.gamma_q;
  cfg.gamma_g = o.gamma_g;
  cfg.f_l = o.f_l;
  cfg.f_u = o.f_u;
  cfg.sigma = o.sigma;
  cfg.max_outer = o.max_outer;
  if (o.init == "kmeans")
    cfg.init = JointInit::kmeans;
  else if (o.init != "random")
    throw InputError(fmt::format("unknown --init '{}' (random, kmeans)", o.init));
  const BackboneState s = elastic_joint(ps, cfg, g.seed);
  const auto preds = infer_unlabeled(ps, s);
  auto out = open_output(o.out);
  out << "index,centroid,soft_label,prediction\n";
  for (std::size_t i = 0; i < preds.size(); ++i)
    out << i << ',' << preds[i].centroid << ',' << format_double(preds[i].soft_label) << ',' << preds[i].label << '\n';
  if (!o.trace.empty()) {
    auto tr = open_output(o.trace);
    tr << "iteration,objective\n";
    for (std::size_t i = 0; i < s.objective_trace.size(); ++i) tr << i << ',' << format_double(s.objective_trace[i]) << '\n';
  }
  return 0;
}

// -------------------------------------------------------- mmgc, mmgc-predict

struct MmgcOpts {
  std::string train, out, kernel = "linear", graph = "knn:10", sigma = "auto";
  double gamma = 0.1, gamma_g = 0.0, epsilon = 1e-6;
};

int mmgc_cmd(const MmgcOpts& o) {
  const PointSet ps = read_point_set_csv(fs::path(o.train));
  const SimilarityGraph g = build_graph(ps, graph_config(o.graph, o.sigma));
  GraphCutConfig cfg;
  cfg.gamma = o.gamma;
  cfg.gamma_g = o.gamma_g;
  cfg.epsilon = o.epsilon;
  cfg.kernel = KernelSpec::parse(o.kernel, KernelSpec::default_width(ps.points()));
  const CutClassifier c = max_margin_graph_cut(ps, g, cfg);
  c.save(fs::path(o.out));
  return 0;
}

struct MmgcPredictOpts {
  std::string model, input, out;
};

int mmgc_predict_cmd(const MmgcPredictOpts& o) {
  const CutClassifier c = CutClassifier::load(fs::path(o.model));
  const PointSet ps = read_point_set_csv(fs::path(o.input));
  const auto f = c.decisions(ps.points());
  auto out = open_output(o.out);
  out << "index,decision,prediction\n";
  for (std::size_t i = 0; i < f.size(); ++i) out << i << ',' << format_double(f[i]) << ',' << (f[i] >= 0.0 ? 1 : -1) << '\n';
  return 0;
}

// --------------------------------------------------------------------- cad

struct CadOpts {
  std::string train, test, out, method = "rwcad", lambda = "0", scale = "none", train_truth;
  CadParams params;
};

std::vector<Index> rank_descending(const std::vector<double>& s) {
  std::vector<Index> order(s.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)];
  });
  std::vector<Index> rank(s.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<Index>(r + 1);
  return rank;
}

void write_scores(std::ostream& out, const std::vector<double>& raw, const std::vector<double>& scaled,
                  const std::optional<double>& lambda) {
  const auto rank = rank_descending(raw);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (lambda) out << format_double(*lambda) << ',';
    out << i << ',' << format_double(raw[i]) << ',' << format_double(scaled[i]) << ',' << rank[i] << '\n';
  }
}

int cad_cmd(CadOpts o) {
  const CadMethod method = parse_cad_method(o.method);
  const PointSet train = read_point_set_csv(fs::path(o.train));
  const PointSet test = read_point_set_csv(fs::path(o.test));
  if (o.scale != "none" && o.scale != "minmax")
    throw InputError(fmt::format("unknown --scale '{}' (none, minmax)", o.scale));

  std::vector<double> train_truth;
  if (!o.train_truth.empty()) train_truth = read_truth_csv(o.train_truth).scores;

  std::vector<std::optional<double>> lambdas;
  if (method != CadMethod::rwcad || o.lambda == "auto")
    lambdas.push_back(std::nullopt);
  else if (o.lambda == "grid")
    for (double l : lambda_grid()) lambdas.emplace_back(l);
  else
    lambdas.emplace_back(parse_double(o.lambda, "--lambda"));
  if (method == CadMethod::rwcad && o.lambda == "auto" && train_truth.empty())
    throw InputError("--lambda auto needs --train-truth with true anomaly scores");

  auto out = open_output(o.out);
  out << (o.lambda == "grid" && method == CadMethod::rwcad ? "lambda," : "") << "index,raw_score,scaled_score,rank\n";
  for (const auto& l : lambdas) {
    CadParams p = o.params;
    p.lambda = l;
    const CadScores s = score_cad(method, p, train, test, train_truth.empty() ? nullptr : &train_truth);
    std::vector<double> scaled = s.scores;
    if (o.scale == "minmax") {
      CadParams fixed = p;
      fixed.lambda = s.lambda;
      const auto own = score_cad(method, fixed, train, train, train_truth.empty() ? nullptr : &train_truth).scores;
      scaled = scale_scores(TaskScaling::fit(own), s.scores);
    }
    write_scores(out, s.scores, scaled, o.lambda == "grid" && method == CadMethod::rwcad ? l : std::nullopt);
    if (s.lambda && o.lambda == "auto") std::cerr << "lambda " << format_double(*s.lambda) << '\n';
  }
  return 0;
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
  std::string scores, truth, out, column = "raw_score", target = "graded", method = "unknown", params;
};

int eval_cmd(const EvalOpts& o) {
  const TruthTable truth = read_truth_csv(o.truth);
  std::map<Index, std::size_t> row_of;
  for (std::size_t r = 0; r < truth.index.size(); ++r) row_of[truth.index[r]] = r;

  auto in = open_input(o.scores);
  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("{}: empty file", o.scores));
  const auto header = split_csv_line(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError(fmt::format("{}: no column '{}'", o.scores, name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ic = col("index"), sc = col(o.column);

  std::vector<double> scores, graded;
  std::vector<bool> flipped;
  for (long long row = 2; std::getline(in, line); ++row) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string ctx = fmt::format("{}:{}", o.scores, row);
    if (cells.size() != header.size()) throw IoError(fmt::format("{}: expected {} columns", ctx, header.size()));
    const auto idx = static_cast<Index>(parse_int(cells[ic], ctx));
    const auto it = row_of.find(idx);
    if (it == row_of.end()) throw InputError(fmt::format("{}: index {} missing from {}", ctx, idx, o.truth));
    scores.push_back(parse_double(cells[sc], ctx));
    graded.push_back(truth.scores[it->second]);
    flipped.push_back(truth.flipped[it->second]);
  }

  double value = 0.0;
  if (o.target == "graded")
    value = ordering_auroc(scores, graded);
  else if (o.target == "flipped")
    value = auroc(scores, flipped);
  else
    throw InputError(fmt::format("unknown --target '{}' (graded, flipped)", o.target));

  nlohmann::ordered_json j;
  j["auroc"] = value;
  j["n"] = scores.size();
  j["method"] = o.method;
  j["params"] = o.params;
  auto out = open_output(o.out);
  out << j.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- run-plan

struct PlanOpts {
  std::string plan, outdir;
};

int run_plan_cmd(const PlanOpts& o, const Global& g) {
  ExperimentPlan plan = ExperimentPlan::load(o.plan);
  if (!o.outdir.empty()) plan.outdir = o.outdir;
  if (g.seed_given) plan.base_seed = g.seed;
  const auto rows = run_plan(plan);
  std::size_t failed = 0;
  for (const auto& r : rows)
    if (r.row != "mean" && r.status != "ok") ++failed;
  std::cout << (plan.outdir / "summary.csv").lexically_normal().string() << '\n';
  if (failed) std::cerr << failed << " run(s) failed; see summary.csv\n";
  return 0;
}

void add_cad_params(CLI::App* sub, CadParams& p) {
  sub->add_option("--sigma-scale", p.sigma_scale, "Kernel width as a multiple of 0.1 x mean feature std")
      ->capture_default_str();
  sub->add_option("--gamma-g", p.gamma_g, "SoftHAD regularizer")->capture_default_str();
  sub->add_option("--c-l", p.c_l, "SoftHAD label fit weight")->capture_default_str();
  sub->add_option("--graph-k", p.graph_k, "SoftHAD knn graph degree")->capture_default_str();
  sub->add_option("--knn-k", p.knn_k, "Neighbors for the kNN baseline (0 = all)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based semi-supervised learning and conditional anomaly detection"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with option defaults ([subcommand] sections)");
  Global g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.fallthrough();

  GenDataOpts gd;
  auto* s_gen = app.add_subcommand("gen-data", "Generate a synthetic dataset and its truth.csv");
  s_gen->add_option("--kind", gd.kind, "mixture, core, moons or squares")->capture_default_str();
  s_gen->add_option("--spec", gd.spec, "MixtureSpec or CoreSpec config");
  s_gen->add_option("--n", gd.n, "Number of points (mixture, moons)")->capture_default_str();
  s_gen->add_option("--flip", gd.flip, "Fraction of labels to flip (mixture)")->capture_default_str();
  s_gen->add_option("--noise", gd.noise, "Noise (moons)")->capture_default_str();
  s_gen->add_option("--labels", gd.labels, "Revealed labels (moons)")->capture_default_str();
  s_gen->add_option("--out", gd.out, "Output CSV")->required();
  s_gen->add_option("--truth", gd.truth, "Truth CSV (default: truth.csv next to --out)");
  s_gen->add_option("--test-out", gd.test_out, "Test CSV (core)");

  BuildGraphOpts bg;
  auto* s_graph = app.add_subcommand("build-graph", "Write the similarity graph as an edge list");
  s_graph->add_option("--input", bg.input, "Point set CSV")->required();
  s_graph->add_option("--graph", bg.graph, "knn:K or eps:E")->capture_default_str();
  s_graph->add_option("--sigma", bg.sigma, "auto or a width")->capture_default_str();
  s_graph->add_option("--out", bg.out, "Edge list i,j,w")->required();

  SslOpts ss;
  auto* s_ssl = app.add_subcommand("ssl", "Hard or soft harmonic solution");
  s_ssl->add_option("--input", ss.input, "Point set CSV (label 0 = unlabeled)")->required();
  s_ssl->add_option("--mode", ss.mode, "hard or soft")->capture_default_str();
  s_ssl->add_option("--gamma-g", ss.gamma_g, "Regularizer")->capture_default_str();
  s_ssl->add_option("--c-l", ss.c_l, "Labeled fit weight (soft)")->capture_default_str();
  s_ssl->add_option("--c-u", ss.c_u, "Unlabeled fit weight (soft)")->capture_default_str();
  s_ssl->add_option("--graph", ss.graph, "knn:K or eps:E")->capture_default_str();
  s_ssl->add_option("--sigma", ss.sigma, "auto or a width")->capture_default_str();
  s_ssl->add_option("--out", ss.out, "index,soft_label,predicted_sign")->required();

  OnlineOpts on;
  auto* s_online = app.add_subcommand("online-ssl", "Online quantized harmonic solution over a stream");
  s_online->add_option("--input", on.input, "Stream CSV in arrival order")->required();
  s_online->add_option("--k", on.k, "Centroid capacity")->capture_default_str();
  s_online->add_option("--m", on.m, "Radius multiplier")->capture_default_str();
  s_online->add_option("--gamma-g", on.gamma_g, "Regularizer")->capture_default_str();
  s_online->add_option("--sigma", on.sigma, "auto (heuristic over the whole stream file) or a width")->capture_default_str();
  s_online->add_option("--epsilon", on.epsilon, "Similarity cut (default 0.1 gamma_g)");
  s_online->add_option("--out", on.out, "t,assigned_centroid,prediction,abstained")->required();
  s_online->add_option("--state", on.state, "Final quantizer state dump");

  JointOpts jo;
  auto* s_joint = app.add_subcommand("joint-ssl", "Joint quantization and label propagation");
  s_joint->add_option("--input", jo.input, "Point set CSV (label 0 = unlabeled)")->required();
  s_joint->add_option("--k", jo.k, "Free centroids")->capture_default_str();
  s_joint->add_option("--gamma-q", jo.gamma_q, "Quantization cost")->capture_default_str();
  s_joint->add_option("--gamma-g", jo.gamma_g, "Regularizer")->capture_default_str();
  s_joint->add_option("--f-l", jo.f_l, "Labeled fit weight")->capture_default_str();
  s_joint->add_option("--f-u", jo.f_u, "Unlabeled fit weight")->capture_default_str();
  s_joint->add_option("--sigma", jo.sigma, "Backbone kernel width (default: mean feature std)");
  s_joint->add_option("--max-outer", jo.max_outer, "Outer iterations")->capture_default_str();
  s_joint->add_option("--init", jo.init, "random or kmeans")->capture_default_str();
  s_joint->add_option("--out", jo.out, "index,centroid,soft_label,prediction")->required();
  s_joint->add_option("--trace", jo.trace, "iteration,objective");

  MmgcOpts mm;
  auto* s_mmgc = app.add_subcommand("mmgc", "Train a max-margin graph cut");
  s_mmgc->add_option("--train", mm.train, "Point set CSV (label 0 = unlabeled)")->required();
  s_mmgc->add_option("--gamma", mm.gamma, "Norm regularizer")->capture_default_str();
  s_mmgc->add_option("--gamma-g", mm.gamma_g, "Graph regularizer")->capture_default_str();
  s_mmgc->add_option("--epsilon", mm.epsilon, "Confidence threshold")->capture_default_str();
  s_mmgc->add_option("--kernel", mm.kernel, "linear, cubic, rbf or rbf:W")->capture_default_str();
  s_mmgc->add_option("--graph", mm.graph, "knn:K or eps:E")->capture_default_str();
  s_mmgc->add_option("--sigma", mm.sigma, "auto or a width")->capture_default_str();
  s_mmgc->add_option("--out", mm.out, "Model text file")->required();

  MmgcPredictOpts mp;
  auto* s_mmgcp = app.add_subcommand("mmgc-predict", "Apply a trained graph cut");
  s_mmgcp->add_option("--model", mp.model, "Model text file")->required();
  s_mmgcp->add_option("--input", mp.input, "Point set CSV")->required();
  s_mmgcp->add_option("--out", mp.out, "index,decision,prediction")->required();

  CadOpts cd;
  auto* s_cad = app.add_subcommand("cad", "Conditional anomaly scores for labeled test points");
  s_cad->add_option("--train", cd.train, "Labeled training CSV")->required();
  s_cad->add_option("--test", cd.test, "Labeled test CSV")->required();
  s_cad->add_option("--method", cd.method, "rwcad, softhad or knn")->capture_default_str();
  s_cad->add_option("--lambda", cd.lambda, "RWCAD lambda: a value, auto or grid")->capture_default_str();
  s_cad->add_option("--train-truth", cd.train_truth, "truth.csv for the training rows (lambda auto)");
  s_cad->add_option("--scale", cd.scale, "none or minmax (fitted on training scores)")->capture_default_str();
  add_cad_params(s_cad, cd.params);
  s_cad->add_option("--out", cd.out, "index,raw_score,scaled_score,rank")->required();

  EvalOpts ev;
  auto* s_eval = app.add_subcommand("eval", "AUROC of a score file against truth.csv");
  s_eval->add_option("--scores", ev.scores, "CSV with an index column")->required();
  s_eval->add_option("--truth", ev.truth, "truth.csv")->required();
  s_eval->add_option("--column", ev.column, "Score column")->capture_default_str();
  s_eval->add_option("--target", ev.target, "graded (true anomaly score) or flipped")->capture_default_str();
  s_eval->add_option("--method", ev.method, "Recorded in the JSON")->capture_default_str();
  s_eval->add_option("--params", ev.params, "Recorded in the JSON");
  s_eval->add_option("--out", ev.out, "metrics.json")->required();

  PlanOpts pl;
  auto* s_plan = app.add_subcommand("run-plan", "Run a multi-seed CAD experiment grid");
  s_plan->add_option("--plan", pl.plan, "Plan config")->required();
  s_plan->add_option("--outdir", pl.outdir, "Override the plan's outdir");

  CLI11_PARSE(app, argc, argv);
  g.seed_given = seed_opt->count() > 0;
  set_thread_count(g.threads);

  try {
    if (*s_gen) return gen_data(gd, g);
    if (*s_graph) return build_graph_cmd(bg);
    if (*s_ssl) return ssl_cmd(ss);
    if (*s_online) return online_cmd(on);
    if (*s_joint) return joint_cmd(jo, g);
    if (*s_mmgc) return mmgc_cmd(mm);
    if (*s_mmgcp) return mmgc_predict_cmd(mp);
    if (*s_cad) return cad_cmd(cd);
    if (*s_eval) return eval_cmd(ev);
    if (*s_plan) return run_plan_cmd(pl, g);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const DegenerateInputError& e) {
    std::cerr << "degenerate input: " << e.what() << '\n';
    return 4;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 5;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
