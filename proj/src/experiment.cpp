#include "graphssl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "graphssl/graph.hpp"
#include "graphssl/io.hpp"
#include "graphssl/parallel.hpp"
#include "graphssl/random.hpp"

namespace graphssl {

namespace {

GaussianKernel cad_kernel(const CadParams& p, const PointSet& train) {
  return GaussianKernel(p.sigma_scale * tenth_of_mean_std(train.points()), train.feature_weights(), true);
}

PointSet stack(const PointSet& a, const PointSet& b) {
  PointMatrix x(a.size() + b.size(), a.dims());
  x << a.points(), b.points();
  Labels y = a.labels();
  y.insert(y.end(), b.labels().begin(), b.labels().end());
  return PointSet(std::move(x), std::move(y), a.feature_weights());
}

std::vector<double> softhad_test_scores(const CadParams& p, const PointSet& train, const PointSet& test) {
  const PointSet all = stack(train, test);
  GraphConfig gc = GraphConfig::knn(p.graph_k);
  gc.with_sigma(p.sigma_scale * tenth_of_mean_std(train.points()));
  const SimilarityGraph g = build_graph(all, gc);
  const auto s = softhad_score(g, all.labels(), SoftConfig{p.gamma_g, p.c_l, 0.1});
  return {s.begin() + train.size(), s.end()};
}

std::vector<Index> range(Index lo, Index hi) {
  std::vector<Index> v(static_cast<std::size_t>(hi - lo));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

bool has_both(const PointSet& ps) {
  bool p = false, n = false;
  for (int y : ps.labels()) (y > 0 ? p : n) = true;
  return p && n;
}

}  // namespace

CadMethod parse_cad_method(const std::string& name) {
  if (name == "rwcad") return CadMethod::rwcad;
  if (name == "softhad") return CadMethod::softhad;
  if (name == "knn") return CadMethod::knn;
  throw InputError(fmt::format("unknown CAD method '{}' (rwcad, softhad, knn)", name));
}

std::string to_string(CadMethod m) {
  switch (m) {
    case CadMethod::rwcad:
      return "rwcad";
    case CadMethod::softhad:
      return "softhad";
    case CadMethod::knn:
      return "knn";
  }
  return "rwcad";
}

void CadParams::validate() const {
  if (!(sigma_scale > 0.0) || !std::isfinite(sigma_scale)) throw InputError("sigma_scale must be > 0");
  if (lambda && (!(*lambda >= 0.0) || !std::isfinite(*lambda))) throw InputError("lambda must be >= 0");
  if (!(gamma_g >= 0.0) || !std::isfinite(gamma_g)) throw InputError("gamma_g must be >= 0");
  if (!(c_l > 0.0) || !std::isfinite(c_l)) throw InputError("c_l must be > 0");
  if (graph_k < 1) throw InputError("graph_k must be >= 1");
  if (knn_k < 0) throw InputError("knn_k must be >= 0");
}

void CadParams::set(const std::string& key, double value) {
  auto as_index = [&](const char* name) {
    if (value != std::floor(value)) throw InputError(fmt::format("{} must be an integer", name));
    return static_cast<Index>(value);
  };
  if (key == "sigma_scale") sigma_scale = value;
  else if (key == "lambda") lambda = value;
  else if (key == "gamma_g") gamma_g = value;
  else if (key == "c_l") c_l = value;
  else if (key == "graph_k") graph_k = as_index("graph_k");
  else if (key == "knn_k") knn_k = as_index("knn_k");
  else throw InputError(fmt::format("unknown CAD parameter '{}'", key));
}

CadParams CadParams::from_config(const KeyValueConfig& cfg) {
  CadParams p;
  for (const char* key : {"sigma_scale", "lambda", "gamma_g", "c_l", "graph_k", "knn_k"})
    if (cfg.has(key)) p.set(key, cfg.number(key));
  p.validate();
  return p;
}

std::string CadParams::describe() const {
  std::string s = fmt::format("c_l={};gamma_g={};graph_k={};knn_k={};lambda={};sigma_scale={}", format_double(c_l),
                              format_double(gamma_g), graph_k, knn_k, lambda ? format_double(*lambda) : "auto",
                              format_double(sigma_scale));
  return s;
}

void MixtureProtocol::validate() const {
  if (n < 6) throw InputError("mixture protocol needs n >= 6");
  if (!(flip_fraction >= 0.0 && flip_fraction <= 1.0)) throw InputError("flip fraction must be in [0, 1]");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train fraction must be in (0, 1)");
}

CadScores score_cad(CadMethod method, const CadParams& params, const PointSet& train, const PointSet& test,
                    const std::vector<double>* train_true_scores) {
  params.validate();
  CadScores out;
  switch (method) {
    case CadMethod::knn:
      out.scores = weighted_knn_scores(train, cad_kernel(params, train), test, params.knn_k);
      break;
    case CadMethod::softhad:
      out.scores = softhad_test_scores(params, train, test);
      break;
    case CadMethod::rwcad: {
      const GaussianKernel kernel = cad_kernel(params, train);
      double lambda = 0.0;
      if (params.lambda) {
        lambda = *params.lambda;
      } else {
        if (!train_true_scores || static_cast<Index>(train_true_scores->size()) != train.size())
          throw InputError("automatic lambda needs true anomaly scores for the training points");
        const Index fit = (2 * train.size()) / 3;
        const PointSet a = train.subset(range(0, fit)), b = train.subset(range(fit, train.size()));
        const std::vector<double> vt(train_true_scores->begin() + fit, train_true_scores->end());
        const bool usable = has_both(a) && *std::min_element(vt.begin(), vt.end()) < *std::max_element(vt.begin(), vt.end());
        if (usable) {
          const CadModel m(a, kernel, 0.0);
          double best = -1.0;
          for (double l : lambda_grid()) {
            const double auc = ordering_auroc(rwcad_scores(m.with_lambda(l), b), vt);
            if (auc > best) {
              best = auc;
              lambda = l;
            }
          }
        }
      }
      out.lambda = lambda;
      out.scores = rwcad_scores(CadModel(train, kernel, lambda), test);
      break;
    }
  }
  return out;
}

MixtureRun run_mixture_cad(const MixtureSpec& spec, const MixtureProtocol& protocol, CadMethod method,
                           const CadParams& params, std::uint64_t seed) {
  protocol.validate();
  SplitMix64 seeds(seed);
  const std::uint64_t data_seed = seeds.next(), flip_seed = seeds.next(), split_seed = seeds.next();
  const PointSet clean = gen_gauss_mixture(spec, protocol.n, data_seed);
  const FlipResult flipped = flip_labels(clean, protocol.flip_fraction, flip_seed);
  const PointSet& data = flipped.data;
  const auto true_scores = true_anomaly_scores(spec, data);

  SplitMix64 rng(split_seed);
  const auto order = sample_without_replacement(rng, static_cast<std::size_t>(data.size()),
                                                static_cast<std::size_t>(data.size()));
  const auto n_train = static_cast<std::size_t>(std::floor(protocol.train_fraction * static_cast<double>(data.size())));
  std::vector<Index> tr, te;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_train ? tr : te).push_back(static_cast<Index>(order[k]));
  const PointSet train = data.subset(tr), test = data.subset(te);
  std::vector<double> train_true;
  for (Index i : tr) train_true.push_back(true_scores[static_cast<std::size_t>(i)]);

  MixtureRun run;
  const CadScores s = score_cad(method, params, train, test, &train_true);
  run.test_indices = te;
  run.scores = s.scores;
  run.lambda = s.lambda;
  for (Index i : te) run.true_scores.push_back(true_scores[static_cast<std::size_t>(i)]);
  run.flipped = static_cast<Index>(std::count(flipped.flipped.begin(), flipped.flipped.end(), true));
  run.auroc = ordering_auroc(run.scores, run.true_scores);
  return run;
}

void ExperimentPlan::validate() const {
  base.validate();
  protocol.validate();
  if (runs < 1) throw InputError("a plan needs runs >= 1");
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw InputError(fmt::format("grid.{} is empty", key));
    CadParams probe = base;
    for (double v : values) probe.set(key, v);
  }
  if (dataset.empty()) throw InputError("a plan needs a dataset");
  if (outdir.empty()) throw InputError("a plan needs an outdir");
}

ExperimentPlan ExperimentPlan::from_config(const KeyValueConfig& cfg, const std::filesystem::path& base_dir) {
  ExperimentPlan p;
  p.method = parse_cad_method(cfg.raw("method"));
  p.base = CadParams::from_config(cfg);
  auto resolve = [&](const std::string& v) {
    const std::filesystem::path path(v);
    return path.is_absolute() ? path : base_dir / path;
  };
  p.dataset = resolve(cfg.raw("dataset"));
  p.outdir = resolve(cfg.raw("outdir"));
  p.runs = cfg.integer("runs", 1);
  p.base_seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
  const Index stride = cfg.integer("seed_stride", 1);
  if (stride < 0) throw InputError("seed_stride must be >= 0");
  p.seed_stride = static_cast<std::uint64_t>(stride);
  p.protocol.n = cfg.integer("n", p.protocol.n);
  p.protocol.flip_fraction = cfg.number("flip", p.protocol.flip_fraction);
  p.protocol.train_fraction = cfg.number("train_fraction", p.protocol.train_fraction);
  for (const auto& [key, value] : cfg.entries())
    if (key.rfind("grid.", 0) == 0) p.grid[key.substr(5)] = cfg.numbers(key);
  p.validate();
  return p;
}

ExperimentPlan ExperimentPlan::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path), path.parent_path());
}

std::string grid_hash(const std::string& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : params) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::vector<PlanRow> run_plan(const ExperimentPlan& plan) {
  plan.validate();
  const MixtureSpec spec = MixtureSpec::load(plan.dataset);

  // Cartesian product, deduplicated and ordered by canonical string.
  std::vector<CadParams> points{plan.base};
  for (const auto& [key, values] : plan.grid) {
    std::vector<CadParams> next;
    for (const auto& p : points)
      for (double v : values) {
        CadParams q = p;
        q.set(key, v);
        next.push_back(q);
      }
    points = std::move(next);
  }
  std::map<std::string, CadParams> by_name;
  for (const auto& p : points) by_name.emplace(p.describe(), p);
  std::vector<std::pair<std::string, CadParams>> cells_params(by_name.begin(), by_name.end());

  struct Cell {
    std::size_t point;
    Index run;
    std::uint64_t seed;
    std::string status = "ok";
    double auroc = 0.0;
  };
  std::vector<Cell> cells;
  for (std::size_t g = 0; g < cells_params.size(); ++g)
    for (Index r = 0; r < plan.runs; ++r) cells.push_back({g, r, plan.base_seed + plan.seed_stride * static_cast<std::uint64_t>(r)});

  const std::string method = to_string(plan.method);
  parallel_for(cells.size(), [&](std::size_t c) {
    Cell& cell = cells[c];
    const auto& [name, params] = cells_params[cell.point];
    const auto dir = plan.outdir / method / grid_hash(name) / fmt::format("run{}", cell.run);
    try {
      const MixtureRun run = run_mixture_cad(spec, plan.protocol, plan.method, params, cell.seed);
      cell.auroc = run.auroc;
      std::filesystem::create_directories(dir);
      {
        auto out = open_output(dir / "scores.csv");
        out << "index,score,true_anomaly_score\n";
        for (std::size_t i = 0; i < run.scores.size(); ++i)
          out << run.test_indices[i] << ',' << format_double(run.scores[i]) << ','
              << format_double(run.true_scores[i]) << '\n';
      }
      nlohmann::ordered_json j;
      j["auroc"] = run.auroc;
      j["n"] = plan.protocol.n;
      j["method"] = method;
      j["params"] = name;
      j["seed"] = cell.seed;
      j["flipped"] = run.flipped;
      j["flips_before_split"] = true;
      if (run.lambda) j["lambda"] = *run.lambda;
      auto out = open_output(dir / "metrics.json");
      out << j.dump(2) << '\n';
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      cell.status = "error: " + msg;
    }
  });

  std::vector<PlanRow> rows;
  for (std::size_t g = 0; g < cells_params.size(); ++g) {
    const std::string& name = cells_params[g].first;
    const std::string hash = grid_hash(name);
    std::vector<double> ok;
    for (const auto& cell : cells) {
      if (cell.point != g) continue;
      rows.push_back({hash, name, fmt::format("run{}", cell.run), cell.seed, cell.status, cell.auroc, std::nullopt});
      if (cell.status == "ok") ok.push_back(cell.auroc);
    }
    PlanRow agg{hash, name, "mean", std::nullopt, fmt::format("ok {}/{}", ok.size(), plan.runs), 0.0, std::nullopt};
    if (!ok.empty()) {
      const double mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
      double ss = 0.0;
      for (double v : ok) ss += (v - mean) * (v - mean);
      agg.auroc = mean;
      agg.variance = ok.size() > 1 ? ss / static_cast<double>(ok.size() - 1) : 0.0;
    }
    rows.push_back(agg);
  }

  std::filesystem::create_directories(plan.outdir);
  auto out = open_output(plan.outdir / "summary.csv");
  out << "method,grid_hash,params,row,seed,status,auroc,variance\n";
  for (const auto& r : rows)
    out << method << ',' << r.grid_hash << ',' << r.params << ',' << r.row << ','
        << (r.seed ? std::to_string(*r.seed) : "") << ',' << r.status << ','
        << (r.status == "ok" || r.variance ? format_double(r.auroc) : "") << ','
        << (r.variance ? format_double(*r.variance) : "") << '\n';
  return rows;
}

}  // namespace graphssl
