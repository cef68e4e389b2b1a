#include "lgaze/boosted_trees.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "lgaze/error.hpp"
#include "lgaze/random.hpp"

namespace lgaze {

namespace {

constexpr int kFormatVersion = 1;
constexpr double kMinSplitGain = 1e-12;

// Neumaier summation; the error term is folded in once at the end.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// a - b split into the rounded difference and its exact rounding error.
double two_diff(double a, double b, double& err) {
  const double d = a - b;
  const double bv = a - d;
  err = (a - (d + bv)) + (bv - b);
  return d;
}

struct BinnedMatrix {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<std::vector<double>> cuts;  // per feature, ascending
  std::vector<std::uint16_t> bins;        // feature-major: bins[f * n_rows + i]

  std::uint16_t at(std::size_t f, std::size_t i) const { return bins[f * n_rows + i]; }
  std::size_t bin_count(std::size_t f) const { return cuts[f].size() + 1; }
};

// Bin b holds values in (cuts[b-1], cuts[b]]; so bin(x) <= b  <=>  x <= cuts[b].
std::vector<double> compute_cuts(std::vector<double> values, int n_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> unique_vals;
  unique_vals.reserve(values.size());
  for (double v : values) {
    if (unique_vals.empty() || v != unique_vals.back()) unique_vals.push_back(v);
  }
  std::vector<double> cuts;
  if (unique_vals.size() <= static_cast<std::size_t>(n_bins)) {
    for (std::size_t k = 0; k + 1 < unique_vals.size(); ++k) {
      cuts.push_back(0.5 * (unique_vals[k] + unique_vals[k + 1]));
    }
    return cuts;
  }
  const std::size_t n = values.size();
  for (int q = 1; q < n_bins; ++q) {
    const double v = values[static_cast<std::size_t>(q) * n / static_cast<std::size_t>(n_bins)];
    if (v == values.back()) break;  // a cut at the max would leave an empty last bin
    if (cuts.empty() || v > cuts.back()) cuts.push_back(v);
  }
  return cuts;
}

BinnedMatrix bin_features(const Eigen::MatrixXd& x, int n_bins) {
  BinnedMatrix bm;
  bm.n_features = static_cast<std::size_t>(x.rows());
  bm.n_rows = static_cast<std::size_t>(x.cols());
  bm.cuts.resize(bm.n_features);
  bm.bins.resize(bm.n_features * bm.n_rows);
  std::vector<double> col(bm.n_rows);
  for (std::size_t f = 0; f < bm.n_features; ++f) {
    for (std::size_t i = 0; i < bm.n_rows; ++i) {
      col[i] = x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i));
    }
    bm.cuts[f] = compute_cuts(col, n_bins);
    const auto& c = bm.cuts[f];
    for (std::size_t i = 0; i < bm.n_rows; ++i) {
      bm.bins[f * bm.n_rows + i] =
          static_cast<std::uint16_t>(std::lower_bound(c.begin(), c.end(), col[i]) - c.begin());
    }
  }
  return bm;
}

struct HistBin {
  double grad = 0.0;
  double count = 0.0;
};

// Histograms for the sampled features, laid out feature by feature.
struct Histogram {
  std::vector<HistBin> bins;
  std::vector<std::size_t> offset;  // per sampled feature
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;
};

class TreeBuilder {
 public:
  // grad_err holds the rounding error of each gradient so node sums stay exact
  // when residuals nearly cancel.
  TreeBuilder(const BinnedMatrix& data, const std::vector<double>& grad,
              const std::vector<double>& grad_err, const GbtConfig& cfg,
              std::vector<std::size_t> features)
      : data_(data), grad_(grad), grad_err_(grad_err), cfg_(cfg), features_(std::move(features)) {
    offsets_.resize(features_.size());
    std::size_t total = 0;
    for (std::size_t k = 0; k < features_.size(); ++k) {
      offsets_[k] = total;
      total += data_.bin_count(features_[k]);
    }
    hist_size_ = total;
  }

  RegressionTree build(std::vector<std::size_t>& rows) {
    tree_ = RegressionTree{};
    split_bin_.clear();
    Histogram root = make_histogram(rows.begin(), rows.end());
    grow(rows.begin(), rows.end(), root, 0);
    return std::move(tree_);
  }

  // Bin threshold of each internal node (-1 for leaves), for fast in-sample
  // routing on binned data.
  const std::vector<int>& split_bins() const { return split_bin_; }

 private:
  using RowIt = std::vector<std::size_t>::iterator;

  Histogram make_histogram(RowIt first, RowIt last) const {
    Histogram h;
    h.bins.assign(hist_size_, {});
    h.offset = offsets_;
    for (std::size_t k = 0; k < features_.size(); ++k) {
      const std::size_t f = features_[k];
      HistBin* hb = h.bins.data() + offsets_[k];
      const std::uint16_t* col = data_.bins.data() + f * data_.n_rows;
      for (auto it = first; it != last; ++it) {
        HistBin& b = hb[col[*it]];
        b.grad += grad_[*it];
        b.count += 1.0;
      }
    }
    return h;
  }

  Histogram subtract(const Histogram& parent, const Histogram& child) const {
    Histogram h;
    h.offset = offsets_;
    h.bins.resize(hist_size_);
    for (std::size_t i = 0; i < hist_size_; ++i) {
      h.bins[i].grad = parent.bins[i].grad - child.bins[i].grad;
      h.bins[i].count = parent.bins[i].count - child.bins[i].count;
    }
    return h;
  }

  int add_node() {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(0.0);
    split_bin_.push_back(-1);
    return static_cast<int>(tree_.feature.size()) - 1;
  }

  SplitCandidate best_split(const Histogram& h, double g_total, double n_total) const {
    SplitCandidate best;
    const double lambda = cfg_.lambda_l2;
    const double parent_score = g_total * g_total / (n_total + lambda);
    const double min_leaf = static_cast<double>(cfg_.min_samples_leaf);
    // Features ascending, bins ascending, strict improvement: ties go to the
    // lowest feature index, then the lowest bin.
    std::vector<std::size_t> order(features_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return features_[a] < features_[b]; });
    for (std::size_t k : order) {
      const std::size_t f = features_[k];
      const std::size_t nb = data_.bin_count(f);
      const HistBin* hb = h.bins.data() + h.offset[k];
      double gl = 0.0;
      double nl = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hb[b].grad;
        nl += hb[b].count;
        const double nr = n_total - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double gr = g_total - gl;
        const double gain = gl * gl / (nl + lambda) + gr * gr / (nr + lambda) - parent_score;
        if (gain > best.gain + kMinSplitGain) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.bin = static_cast<int>(b);
        }
      }
    }
    return best;
  }

  int grow(RowIt first, RowIt last, const Histogram& hist, int depth) {
    const int node = add_node();
    CompensatedSum g_sum;
    for (auto it = first; it != last; ++it) {
      g_sum.add(grad_[*it]);
      g_sum.add(grad_err_[*it]);
    }
    const double g_total = g_sum.value();
    const double n_total = static_cast<double>(last - first);

    SplitCandidate split;
    if (depth < cfg_.max_depth && n_total >= 2.0 * cfg_.min_samples_leaf) {
      split = best_split(hist, g_total, n_total);
    }
    if (split.feature < 0) {
      tree_.value[static_cast<std::size_t>(node)] =
          -cfg_.learning_rate * g_total / (n_total + cfg_.lambda_l2);
      return node;
    }

    const std::size_t f = static_cast<std::size_t>(split.feature);
    const auto sb = static_cast<std::uint16_t>(split.bin);
    const auto mid = std::stable_partition(
        first, last, [&](std::size_t i) { return data_.at(f, i) <= sb; });

    const bool left_smaller = (mid - first) <= (last - mid);
    Histogram small = left_smaller ? make_histogram(first, mid) : make_histogram(mid, last);
    Histogram large = subtract(hist, small);
    const Histogram& hl = left_smaller ? small : large;
    const Histogram& hr = left_smaller ? large : small;

    const auto un = static_cast<std::size_t>(node);
    tree_.feature[un] = split.feature;
    tree_.threshold[un] = data_.cuts[f][static_cast<std::size_t>(split.bin)];
    split_bin_[un] = split.bin;
    const int l = grow(first, mid, hl, depth + 1);
    tree_.left[un] = l;
    const int r = grow(mid, last, hr, depth + 1);
    tree_.right[un] = r;
    return node;
  }

  const BinnedMatrix& data_;
  const std::vector<double>& grad_;
  const std::vector<double>& grad_err_;
  const GbtConfig& cfg_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> offsets_;
  std::size_t hist_size_ = 0;
  RegressionTree tree_;
  std::vector<int> split_bin_;
};

double predict_binned(const RegressionTree& t, const std::vector<int>& split_bins,
                      const BinnedMatrix& data, std::size_t row) {
  std::size_t node = 0;
  while (t.feature[node] >= 0) {
    const auto f = static_cast<std::size_t>(t.feature[node]);
    node = static_cast<std::size_t>(data.at(f, row) <= split_bins[node] ? t.left[node]
                                                                        : t.right[node]);
  }
  return t.value[node];
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, double fraction, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (fraction >= 1.0) return idx;
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

nlohmann::json tree_to_json(const RegressionTree& t) {
  return {{"feature", t.feature},
          {"threshold", t.threshold},
          {"left", t.left},
          {"right", t.right},
          {"value", t.value}};
}

RegressionTree tree_from_json(const nlohmann::json& j, std::size_t input_dim) {
  RegressionTree t;
  t.feature = j.at("feature").get<std::vector<int>>();
  t.threshold = j.at("threshold").get<std::vector<double>>();
  t.left = j.at("left").get<std::vector<int>>();
  t.right = j.at("right").get<std::vector<int>>();
  t.value = j.at("value").get<std::vector<double>>();
  const std::size_t n = t.feature.size();
  if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
      t.value.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "malformed tree arrays");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (t.feature[i] >= 0) {
      // Children must come after their parent, which also rules out cycles.
      auto child_ok = [&](int c) {
        return c > static_cast<int>(i) && static_cast<std::size_t>(c) < n;
      };
      const bool ok = static_cast<std::size_t>(t.feature[i]) < input_dim && child_ok(t.left[i]) &&
                      child_ok(t.right[i]);
      if (!ok) throw Error(ErrorKind::InvalidArgument, "tree node has invalid children");
    }
    if (!std::isfinite(t.value[i])) throw Error(ErrorKind::InvalidArgument, "non-finite leaf");
  }
  return t;
}

}  // namespace

void GbtConfig::validate() const {
  if (n_trees < 1 || max_depth < 0 || !(learning_rate > 0.0) || !(row_subsample > 0.0) ||
      row_subsample > 1.0 || !(feature_subsample > 0.0) || feature_subsample > 1.0 ||
      n_bins < 2 || n_bins > 65535 || min_samples_leaf < 1 || !(lambda_l2 >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid boosted-tree configuration");
  }
}

nlohmann::json GbtConfig::to_json() const {
  return {{"n_trees", n_trees},
          {"max_depth", max_depth},
          {"learning_rate", learning_rate},
          {"row_subsample", row_subsample},
          {"feature_subsample", feature_subsample},
          {"n_bins", n_bins},
          {"min_samples_leaf", min_samples_leaf},
          {"lambda_l2", lambda_l2},
          {"seed", seed}};
}

GbtConfig GbtConfig::from_json(const nlohmann::json& j) {
  GbtConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "n_trees") c.n_trees = v.get<int>();
    else if (key == "max_depth") c.max_depth = v.get<int>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "row_subsample") c.row_subsample = v.get<double>();
    else if (key == "feature_subsample") c.feature_subsample = v.get<double>();
    else if (key == "n_bins") c.n_bins = v.get<int>();
    else if (key == "min_samples_leaf") c.min_samples_leaf = v.get<int>();
    else if (key == "lambda_l2") c.lambda_l2 = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else throw Error(ErrorKind::InvalidArgument, "unknown GBT config key '" + key + "'");
  }
  c.validate();
  return c;
}

double RegressionTree::predict(const double* x) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    node = static_cast<std::size_t>(x[feature[node]] <= threshold[node] ? left[node] : right[node]);
  }
  return value[node];
}

double TreeEnsemble::predict(const double* x) const {
  double s = base_prediction;
  for (const auto& t : trees) s += t.predict(x);
  return s;
}

TreeEnsemble fit_component(const Eigen::MatrixXd& features, std::span<const double> targets,
                           const GbtConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(features.cols());
  if (n < 2 || targets.size() != n) {
    throw Error(ErrorKind::EmptyData, "boosting needs >= 2 rows with one target each");
  }
  if (!features.allFinite() ||
      !std::all_of(targets.begin(), targets.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorKind::InvalidArgument, "non-finite training data");
  }

  TreeEnsemble ens;
  CompensatedSum sum;
  for (double t : targets) sum.add(t);
  ens.base_prediction = sum.value() / static_cast<double>(n);

  std::vector<double> pred(n, ens.base_prediction);
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (pred[i] - targets[i]) * (pred[i] - targets[i]);
    return s / static_cast<double>(n);
  };
  ens.train_mse.push_back(mse());

  const BinnedMatrix data = bin_features(features, cfg.n_bins);
  const bool constant = std::all_of(data.cuts.begin(), data.cuts.end(),
                                    [](const auto& c) { return c.empty(); });
  if (constant) {
    spdlog::warn("boosted trees: feature matrix is constant; ensemble is the base prediction only");
    return ens;
  }

  Rng rng(cfg.seed);
  std::vector<double> grad(n);
  std::vector<double> grad_err(n);
  const std::size_t d = data.n_features;
  for (int round = 0; round < cfg.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = two_diff(pred[i], targets[i], grad_err[i]);
    std::vector<std::size_t> rows = sample_without_replacement(n, cfg.row_subsample, rng);
    std::vector<std::size_t> feats = sample_without_replacement(d, cfg.feature_subsample, rng);
    TreeBuilder builder(data, grad, grad_err, cfg, std::move(feats));
    RegressionTree tree = builder.build(rows);
    for (std::size_t i = 0; i < n; ++i) pred[i] += predict_binned(tree, builder.split_bins(), data, i);
    ens.trees.push_back(std::move(tree));
    ens.train_mse.push_back(mse());
  }
  return ens;
}

GbtModel::GbtModel(GbtConfig cfg, std::array<TreeEnsemble, 3> components, std::size_t input_dim)
    : cfg_(cfg), components_(std::move(components)), input_dim_(input_dim) {}

Eigen::Vector3d GbtModel::predict_one(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(input_dim_) +
                                                  " features, got " + std::to_string(x.size()));
  }
  return {components_[0].predict(x.data()), components_[1].predict(x.data()),
          components_[2].predict(x.data())};
}

Eigen::Matrix3Xd GbtModel::predict(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.rows()) != input_dim_) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(input_dim_) +
                                                  " feature rows, got " +
                                                  std::to_string(features.rows()));
  }
  Eigen::Matrix3Xd out(3, features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double* x = features.col(j).data();
    for (int c = 0; c < 3; ++c) out(c, j) = components_[static_cast<std::size_t>(c)].predict(x);
  }
  return out;
}

nlohmann::json GbtModel::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& e : components_) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : e.trees) trees.push_back(tree_to_json(t));
    comps.push_back({{"base", e.base_prediction}, {"trees", std::move(trees)}});
  }
  return {{"format", "lgaze-gbt"},
          {"version", kFormatVersion},
          {"config", cfg_.to_json()},
          {"input_dim", input_dim_},
          {"feature_layout", "global"},
          {"components", std::move(comps)}};
}

GbtModel GbtModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "lgaze-gbt") {
    throw Error(ErrorKind::InvalidArgument, "not an lgaze GBT checkpoint");
  }
  if (j.at("version").get<int>() != kFormatVersion) {
    throw Error(ErrorKind::SchemaVersionMismatch,
                "GBT checkpoint version " + std::to_string(j.at("version").get<int>()));
  }
  const auto dim = j.at("input_dim").get<std::size_t>();
  const auto& comps = j.at("components");
  if (comps.size() != 3) throw Error(ErrorKind::InvalidArgument, "GBT needs 3 components");
  std::array<TreeEnsemble, 3> ens;
  for (std::size_t c = 0; c < 3; ++c) {
    ens[c].base_prediction = comps[c].at("base").get<double>();
    for (const auto& t : comps[c].at("trees")) ens[c].trees.push_back(tree_from_json(t, dim));
  }
  return GbtModel(GbtConfig::from_json(j.at("config")), std::move(ens), dim);
}

void GbtModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

GbtModel GbtModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
  return from_json(j);
}

GbtModel fit_multi(const Eigen::MatrixXd& features, const Eigen::Matrix3Xd& targets,
                   const GbtConfig& cfg, bool shared_component_seed) {
  if (features.cols() != targets.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "feature and target counts differ");
  }
  std::array<TreeEnsemble, 3> ens;
  for (int c = 0; c < 3; ++c) {
    GbtConfig cc = cfg;
    if (!shared_component_seed) cc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(c));
    const Eigen::VectorXd t = targets.row(c).transpose();
    ens[static_cast<std::size_t>(c)] =
        fit_component(features, std::span<const double>(t.data(), static_cast<std::size_t>(t.size())), cc);
  }
  return GbtModel(cfg, std::move(ens), static_cast<std::size_t>(features.rows()));
}

}  // namespace lgaze
