#include "graphssl/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "graphssl/io.hpp"
#include "graphssl/random.hpp"

namespace graphssl {

namespace {

struct Factored {
  double log_weight;
  RowVector mean;
  Eigen::LLT<Matrix> llt;
  double log_norm;
};

std::vector<Factored> factor(const std::vector<GaussianComponent>& comps) {
  std::vector<Factored> out;
  for (const auto& c : comps) {
    Factored f{std::log(c.weight), c.mean, Eigen::LLT<Matrix>(c.covariance), 0.0};
    const Matrix L = f.llt.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    f.log_norm = -0.5 * (static_cast<double>(c.mean.size()) * std::log(2.0 * std::numbers::pi) + log_det);
    out.push_back(std::move(f));
  }
  return out;
}

// log sum_k w_k N(x; mu_k, Sigma_k)
double log_density(const std::vector<Factored>& comps, const RowRef& x) {
  std::vector<double> terms;
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& c : comps) {
    if (c.log_weight == -std::numeric_limits<double>::infinity()) continue;
    const Vector z = c.llt.matrixL().solve((x - c.mean).transpose());
    const double t = c.log_weight + c.log_norm - 0.5 * z.squaredNorm();
    terms.push_back(t);
    top = std::max(top, t);
  }
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

void validate_class(const std::vector<GaussianComponent>& comps, Index p, const char* name) {
  if (comps.empty()) throw InputError(fmt::format("mixture class {} has no components", name));
  double total = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    if (!std::isfinite(c.weight) || c.weight < 0.0)
      throw InputError(fmt::format("mixture {}.{}: weight must be finite and >= 0", name, i));
    total += c.weight;
    if (c.mean.size() != p || c.covariance.rows() != p || c.covariance.cols() != p)
      throw InputError(fmt::format("mixture {}.{}: expected dimension {}", name, i, p));
    if (!c.mean.allFinite() || !c.covariance.allFinite())
      throw InputError(fmt::format("mixture {}.{}: non-finite parameters", name, i));
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, c.covariance.cwiseAbs().maxCoeff()))
      throw InputError(fmt::format("mixture {}.{}: covariance is not symmetric", name, i));
    Eigen::LLT<Matrix> llt(c.covariance);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0))
      throw InputError(fmt::format("mixture {}.{}: covariance is not positive definite", name, i));
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InputError(fmt::format("mixture class {}: weights sum to {}, expected 1", name, total));
}

std::vector<GaussianComponent> read_class(const KeyValueConfig& cfg, const std::string& cls, Index p) {
  std::vector<GaussianComponent> out;
  for (int i = 0;; ++i) {
    const std::string base = fmt::format("{}.{}.", cls, i);
    if (!cfg.has(base + "mean")) break;
    GaussianComponent c;
    c.weight = cfg.number(base + "weight");
    const auto mean = cfg.numbers(base + "mean");
    c.mean = RowVector::Map(mean.data(), static_cast<Index>(mean.size()));
    const auto cov = cfg.json(base + "cov");
    if (!cov.is_array() || static_cast<Index>(cov.size()) != p)
      throw InputError(fmt::format("{}: key '{}cov' must be a {}x{} array", cfg.source(), base, p, p));
    c.covariance.resize(p, p);
    for (Index r = 0; r < p; ++r) {
      const auto& row = cov[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Index>(row.size()) != p)
        throw InputError(fmt::format("{}: key '{}cov' must be a {}x{} array", cfg.source(), base, p, p));
      for (Index k = 0; k < p; ++k) c.covariance(r, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    out.push_back(std::move(c));
  }
  return out;
}

Square read_square(const KeyValueConfig& cfg, const std::string& key) {
  const auto v = cfg.numbers(key);
  if (v.size() != 2) throw InputError(fmt::format("{}: key '{}' must be [lo, hi]", cfg.source(), key));
  return {v[0], v[1]};
}

RowVector uniform_in(SplitMix64& rng, const Square& s) {
  RowVector x(2);
  x[0] = rng.uniform(s.lo, s.hi);
  x[1] = rng.uniform(s.lo, s.hi);
  return x;
}

bool overlaps(const Square& a, const Square& b) {
  return a.lo < b.hi && b.lo < a.hi;
}

}  // namespace

Index MixtureSpec::dims() const {
  if (!negative.empty()) return negative.front().mean.size();
  if (!positive.empty()) return positive.front().mean.size();
  return 0;
}

const std::vector<GaussianComponent>& MixtureSpec::components(int label) const {
  return label > 0 ? positive : negative;
}

void MixtureSpec::validate() const {
  const Index p = dims();
  if (p < 1) throw InputError("mixture must have at least one feature");
  validate_class(negative, p, "neg");
  validate_class(positive, p, "pos");
  if (!(prior_negative >= 0.0) || !(prior_positive >= 0.0) ||
      std::abs(prior_negative + prior_positive - 1.0) > 1e-9)
    throw InputError("mixture priors must be >= 0 and sum to 1");
}

MixtureSpec MixtureSpec::from_config(const KeyValueConfig& cfg) {
  MixtureSpec spec;
  const Index p = cfg.integer("dims");
  spec.prior_negative = cfg.number("prior.neg", 0.5);
  spec.prior_positive = cfg.number("prior.pos", 0.5);
  spec.negative = read_class(cfg, "neg", p);
  spec.positive = read_class(cfg, "pos", p);
  spec.validate();
  return spec;
}

MixtureSpec MixtureSpec::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

PointSet gen_gauss_mixture(const MixtureSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 0) throw InputError("sample count must be >= 0");
  const Index p = spec.dims();
  std::vector<Matrix> chol[2];
  for (int c = 0; c < 2; ++c)
    for (const auto& comp : spec.components(c == 0 ? -1 : 1))
      chol[c].push_back(Eigen::LLT<Matrix>(comp.covariance).matrixL());
  std::vector<double> wts[2];
  for (int c = 0; c < 2; ++c)
    for (const auto& comp : spec.components(c == 0 ? -1 : 1)) wts[c].push_back(comp.weight);

  SplitMix64 rng(seed);
  PointMatrix x(n, p);
  Labels y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int label = rng.uniform() < spec.prior_positive ? 1 : -1;
    const int c = label > 0 ? 1 : 0;
    const std::size_t k = rng.categorical(wts[c]);
    Vector z(p);
    for (Index d = 0; d < p; ++d) z[d] = rng.normal();
    x.row(i) = spec.components(label)[k].mean + (chol[c][k] * z).transpose();
    y[static_cast<std::size_t>(i)] = label;
  }
  return PointSet(std::move(x), std::move(y));
}

double true_anomaly_score(const MixtureSpec& spec, const RowRef& x, int label) {
  if (label != -1 && label != 1) throw InputError("true anomaly score needs a -1/+1 label");
  const double own = log_density(factor(spec.components(label)), x);
  const double other = log_density(factor(spec.components(-label)), x);
  const double lp_own = std::log(spec.prior(label)) + own;
  const double lp_other = std::log(spec.prior(-label)) + other;
  if (!std::isfinite(std::max(lp_own, lp_other))) return spec.prior(-label);
  // other / (own + other) in log space
  const double top = std::max(lp_own, lp_other);
  return std::exp(lp_other - top) / (std::exp(lp_own - top) + std::exp(lp_other - top));
}

std::vector<double> true_anomaly_scores(const MixtureSpec& spec, const PointSet& ps) {
  spec.validate();
  const auto fn = factor(spec.negative), fp = factor(spec.positive);
  std::vector<double> out(static_cast<std::size_t>(ps.size()));
  for (Index i = 0; i < ps.size(); ++i) {
    const int label = ps.label(i);
    if (label != -1 && label != 1) throw InputError("true anomaly score needs -1/+1 labels");
    const double ln = std::log(spec.prior_negative) + log_density(fn, ps.point(i));
    const double lp = std::log(spec.prior_positive) + log_density(fp, ps.point(i));
    const double lo = label > 0 ? lp : ln, lx = label > 0 ? ln : lp;
    const double top = std::max(lo, lx);
    out[static_cast<std::size_t>(i)] =
        std::isfinite(top) ? std::exp(lx - top) / (std::exp(lo - top) + std::exp(lx - top))
                           : spec.prior(-label);
  }
  return out;
}

FlipResult flip_labels(const PointSet& ps, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InputError("flip fraction must be in [0, 1]");
  const auto n = static_cast<std::size_t>(ps.size());
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  SplitMix64 rng(seed);
  const auto picks = sample_without_replacement(rng, n, count);
  Labels y = ps.labels();
  std::vector<bool> mask(n, false);
  for (auto i : picks) {
    y[i] = -y[i];
    mask[i] = true;
  }
  return {ps.with_labels(std::move(y)), std::move(mask)};
}

bool Square::contains(const RowRef& x) const {
  return x.size() == 2 && x[0] >= lo && x[0] <= hi && x[1] >= lo && x[1] <= hi;
}

void CoreSpec::validate() const {
  auto check = [](const Square& s, const char* name) {
    if (!std::isfinite(s.lo) || !std::isfinite(s.hi) || !(s.hi > s.lo))
      throw InputError(fmt::format("core square '{}' must satisfy lo < hi", name));
  };
  check(big, "big");
  check(inner, "inner");
  if (!(inner.lo >= big.lo && inner.hi <= big.hi)) throw InputError("inner square must lie inside the big square");
  if (big_count < 1 || inner_count < 1) throw InputError("square counts must be >= 1");
  for (const auto& g : tiny) {
    check(g.box, "tiny");
    if (overlaps(g.box, big)) throw InputError("tiny squares must be disjoint from the big square");
    if (g.negatives < 0 || g.positives < 0) throw InputError("tiny group counts must be >= 0");
  }
  if (test_factor < 1) throw InputError("test factor must be >= 1");
  if (anomalies < 0 || anomalies > big_count * test_factor)
    throw InputError("anomaly count must fit in the test big-square sample");
}

CoreSpec CoreSpec::from_config(const KeyValueConfig& cfg) {
  CoreSpec s;
  if (cfg.has("big")) s.big = read_square(cfg, "big");
  s.big_count = cfg.integer("big.count", s.big_count);
  if (cfg.has("inner")) s.inner = read_square(cfg, "inner");
  s.inner_count = cfg.integer("inner.count", s.inner_count);
  if (cfg.has("tiny.0")) {
    s.tiny.clear();
    for (int i = 0; cfg.has(fmt::format("tiny.{}", i)); ++i) {
      const std::string base = fmt::format("tiny.{}", i);
      s.tiny.push_back({read_square(cfg, base), cfg.integer(base + ".neg", 0), cfg.integer(base + ".pos", 0)});
    }
  }
  s.anomalies = cfg.integer("anomalies", s.anomalies);
  s.test_factor = cfg.integer("test.factor", s.test_factor);
  s.train_overlap = cfg.integer("train.overlap", s.train_overlap ? 1 : 0) != 0;
  s.validate();
  return s;
}

CoreSpec CoreSpec::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

CoreDataset gen_core_dataset(const CoreSpec& spec, std::uint64_t seed) {
  spec.validate();
  SplitMix64 rng(seed);
  std::vector<RowVector> pts;
  Labels labels;
  auto emit = [&](const RowVector& x, int y) {
    pts.push_back(x);
    labels.push_back(y);
  };
  auto to_set = [&]() {
    PointMatrix m(static_cast<Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Index>(i)) = pts[i];
    PointSet ps(std::move(m), labels);
    pts.clear();
    labels.clear();
    return ps;
  };

  for (Index i = 0; i < spec.big_count; ++i) {
    RowVector x = uniform_in(rng, spec.big);
    while (!spec.train_overlap && spec.inner.contains(x)) x = uniform_in(rng, spec.big);
    emit(x, -1);
  }
  for (Index i = 0; i < spec.inner_count; ++i) emit(uniform_in(rng, spec.inner), 1);
  for (const auto& g : spec.tiny) {
    for (Index i = 0; i < g.negatives; ++i) emit(uniform_in(rng, g.box), -1);
    for (Index i = 0; i < g.positives; ++i) emit(uniform_in(rng, g.box), 1);
  }
  CoreDataset out;
  out.train = to_set();

  const Index f = spec.test_factor;
  for (Index i = 0; i < spec.anomalies; ++i) {
    emit(uniform_in(rng, spec.inner), -1);
    out.anomaly.push_back(true);
    out.test_region.push_back(CoreRegion::inner);
  }
  for (Index i = spec.anomalies; i < spec.big_count * f; ++i) {
    RowVector x = uniform_in(rng, spec.big);
    while (spec.inner.contains(x)) x = uniform_in(rng, spec.big);
    emit(x, -1);
    out.anomaly.push_back(false);
    out.test_region.push_back(CoreRegion::big);
  }
  for (Index i = 0; i < spec.inner_count * f; ++i) {
    emit(uniform_in(rng, spec.inner), 1);
    out.anomaly.push_back(false);
    out.test_region.push_back(CoreRegion::inner);
  }
  for (const auto& g : spec.tiny) {
    for (Index i = 0; i < g.negatives * f; ++i) {
      emit(uniform_in(rng, g.box), -1);
      out.anomaly.push_back(false);
      out.test_region.push_back(CoreRegion::tiny);
    }
    for (Index i = 0; i < g.positives * f; ++i) {
      emit(uniform_in(rng, g.box), 1);
      out.anomaly.push_back(false);
      out.test_region.push_back(CoreRegion::tiny);
    }
  }
  out.test = to_set();
  return out;
}

PointSet gen_two_moons(Index n, double noise, std::uint64_t seed) {
  if (n < 2) throw InputError("two moons needs at least 2 points");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InputError("noise must be finite and >= 0");
  SplitMix64 rng(seed);
  PointMatrix x(n, 2);
  Labels y(static_cast<std::size_t>(n));
  const Index half = n / 2;
  for (Index i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform();
    if (i < half) {
      x(i, 0) = std::cos(t);
      x(i, 1) = std::sin(t);
      y[static_cast<std::size_t>(i)] = -1;
    } else {
      x(i, 0) = 1.0 - std::cos(t);
      x(i, 1) = 0.5 - std::sin(t);
      y[static_cast<std::size_t>(i)] = 1;
    }
    x(i, 0) += noise * rng.normal();
    x(i, 1) += noise * rng.normal();
  }
  return PointSet(std::move(x), std::move(y));
}

TwoSquares gen_two_squares(Index side, double gap) {
  if (side < 2) throw InputError("two squares: side must be >= 2");
  if (!(gap > 1.0) || !std::isfinite(gap)) throw InputError("two squares: gap must be > 1");
  const Index per = side * side;
  PointMatrix x(2 * per, 2);
  Labels y(static_cast<std::size_t>(2 * per));
  const double shift = static_cast<double>(side - 1) + gap;
  for (Index c = 0; c < 2; ++c)
    for (Index r = 0; r < side; ++r)
      for (Index q = 0; q < side; ++q) {
        const Index i = c * per + r * side + q;
        x(i, 0) = static_cast<double>(q) + (c == 1 ? shift : 0.0);
        x(i, 1) = static_cast<double>(r);
        y[static_cast<std::size_t>(i)] = c == 0 ? -1 : 1;
      }
  std::vector<Triplet> trips;
  const double w = std::exp(-0.5);
  for (Index c = 0; c < 2; ++c)
    for (Index r = 0; r < side; ++r)
      for (Index q = 0; q < side; ++q) {
        const Index i = c * per + r * side + q;
        if (q + 1 < side) {
          trips.emplace_back(i, i + 1, w);
          trips.emplace_back(i + 1, i, w);
        }
        if (r + 1 < side) {
          trips.emplace_back(i, i + side, w);
          trips.emplace_back(i + side, i, w);
        }
      }
  SparseMatrix W(2 * per, 2 * per);
  W.setFromTriplets(trips.begin(), trips.end());
  Labels revealed(y.size(), 0);
  revealed[static_cast<std::size_t>((side - 1) * side + side - 1)] = -1;
  revealed[static_cast<std::size_t>(per)] = 1;
  return {PointSet(std::move(x), std::move(y)), std::move(revealed), SimilarityGraph(std::move(W))};
}

Labels reveal_labels(const Labels& truth, Index count, std::uint64_t seed) {
  const auto n = truth.size();
  if (count < 0 || static_cast<std::size_t>(count) > n) throw InputError("label count out of range");
  SplitMix64 rng(seed);
  const auto order = sample_without_replacement(rng, n, n);
  Labels out(n, 0);
  std::size_t taken = 0;
  // first draw of each class, then fill in draw order
  for (int cls : {-1, 1}) {
    if (taken >= static_cast<std::size_t>(count) || count < 2) break;
    for (auto i : order)
      if (truth[i] == cls) {
        out[i] = cls;
        ++taken;
        break;
      }
  }
  for (auto i : order) {
    if (taken >= static_cast<std::size_t>(count)) break;
    if (out[i] != 0 || truth[i] == 0) continue;
    out[i] = truth[i];
    ++taken;
  }
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

double auroc(const std::vector<double>& scores, const std::vector<bool>& truth) {
  if (scores.size() != truth.size()) throw InputError("auroc: scores and truth differ in length");
  for (double s : scores)
    if (std::isnan(s)) throw InputError("auroc: scores must not be NaN");
  const auto pos = static_cast<double>(std::count(truth.begin(), truth.end(), true));
  const double neg = static_cast<double>(truth.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw InputError("auroc: truth must contain both classes");
  const auto rank = average_ranks(scores);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i]) sum += rank[i];
  return (sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double ordering_auroc(const std::vector<double>& scores, const std::vector<double>& truth) {
  if (scores.size() != truth.size()) throw InputError("ordering auroc: scores and truth differ in length");
  double good = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (!(truth[i] > truth[j])) continue;
      pairs += 1.0;
      good += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
    }
  if (pairs == 0.0) throw InputError("ordering auroc: truth is constant");
  return good / pairs;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("spearman: need two equal-length samples");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInputError("spearman: a sample is constant");
  return sab / std::sqrt(saa * sbb);
}

void write_truth_csv(std::ostream& out, const Labels& true_labels, const std::vector<bool>& flipped,
                     const std::vector<double>& scores) {
  if (flipped.size() != true_labels.size() || scores.size() != true_labels.size())
    throw InputError("truth columns differ in length");
  out << "index,true_label,flipped,true_anomaly_score\n";
  for (std::size_t i = 0; i < true_labels.size(); ++i)
    out << i << ',' << true_labels[i] << ',' << (flipped[i] ? 1 : 0) << ',' << format_double(scores[i])
        << '\n';
}

void write_truth_csv(const std::filesystem::path& path, const Labels& true_labels,
                     const std::vector<bool>& flipped, const std::vector<double>& scores) {
  auto out = open_output(path);
  write_truth_csv(out, true_labels, flipped, scores);
}

TruthTable read_truth_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  const std::string where = path.string();
  if (!std::getline(in, line) || trim(line) != "index,true_label,flipped,true_anomaly_score")
    throw IoError(fmt::format("{}: expected header index,true_label,flipped,true_anomaly_score", where));
  TruthTable t;
  for (long long row = 2; std::getline(in, line); ++row) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string ctx = fmt::format("{}:{}", where, row);
    if (cells.size() != 4) throw IoError(fmt::format("{}: expected 4 columns", ctx));
    t.index.push_back(static_cast<Index>(parse_int(cells[0], ctx)));
    t.true_labels.push_back(static_cast<int>(parse_int(cells[1], ctx)));
    t.flipped.push_back(parse_int(cells[2], ctx) != 0);
    t.scores.push_back(parse_double(cells[3], ctx));
  }
  return t;
}

}  // namespace graphssl
