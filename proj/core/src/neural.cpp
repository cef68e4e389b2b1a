#include "lgaze/neural.hpp"

#include <cmath>
#include <fstream>

#include "lgaze/error.hpp"

namespace lgaze {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using detail::BatchNormCache;
using detail::BatchNormRef;
using detail::LinearCache;
using detail::LinearRef;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr Index kPredictChunk = 2048;
constexpr int kCheckpointVersion = 1;

using ConstMatMap = Eigen::Map<const MatrixXd>;
using ConstVecMap = Eigen::Map<const VectorXd>;
using MatMap = Eigen::Map<MatrixXd>;
using VecMap = Eigen::Map<VectorXd>;

class TableBuilder {
 public:
  explicit TableBuilder(std::vector<TensorInfo>& table) : table_(table) {}

  std::size_t add(std::string name, Index rows, Index cols) {
    const std::size_t offset = next_;
    table_.push_back({std::move(name), rows, cols, offset});
    next_ += static_cast<std::size_t>(rows * cols);
    return offset;
  }
  std::size_t total() const { return next_; }

 private:
  std::vector<TensorInfo>& table_;
  std::size_t next_ = 0;
};

LinearRef add_linear(TableBuilder& p, const std::string& name, Index in, Index out) {
  LinearRef l;
  l.in = in;
  l.out = out;
  l.weight = p.add(name + ".weight", out, in);
  l.bias = p.add(name + ".bias", out, 1);
  return l;
}

BatchNormRef add_bn(TableBuilder& p, TableBuilder& b, const std::string& name, Index dim) {
  BatchNormRef r;
  r.dim = dim;
  r.gamma = p.add(name + ".gamma", dim, 1);
  r.beta = p.add(name + ".beta", dim, 1);
  r.running_mean = b.add(name + ".running_mean", dim, 1);
  r.running_var = b.add(name + ".running_var", dim, 1);
  return r;
}

detail::EncoderRef add_encoder(TableBuilder& p, TableBuilder& b, const std::string& name, Index in,
                               Index hidden, int blocks, Index input_offset) {
  detail::EncoderRef e;
  e.input_offset = input_offset;
  e.proj = add_linear(p, name + ".proj", in, hidden);
  e.proj_bn = add_bn(p, b, name + ".proj_bn", hidden);
  for (int k = 0; k < blocks; ++k) {
    const std::string bn = name + ".blocks." + std::to_string(k);
    detail::BlockRef blk;
    blk.fc1 = add_linear(p, bn + ".fc1", hidden, hidden);
    blk.bn1 = add_bn(p, b, bn + ".bn1", hidden);
    blk.fc2 = add_linear(p, bn + ".fc2", hidden, hidden);
    blk.bn2 = add_bn(p, b, bn + ".bn2", hidden);
    e.blocks.push_back(std::move(blk));
  }
  return e;
}

// ---- layer kernels -------------------------------------------------------

MatrixXd linear_forward(const LinearRef& l, const double* params, const MatrixXd& x,
                        LinearCache* cache) {
  const ConstMatMap w(params + l.weight, l.out, l.in);
  const ConstVecMap b(params + l.bias, l.out);
  MatrixXd y = w * x;
  y.colwise() += b;
  if (cache) cache->input = x;
  return y;
}

MatrixXd linear_backward(const LinearRef& l, const double* params, const LinearCache& cache,
                         const MatrixXd& dy, double* grads) {
  const ConstMatMap w(params + l.weight, l.out, l.in);
  MatMap gw(grads + l.weight, l.out, l.in);
  VecMap gb(grads + l.bias, l.out);
  gw.noalias() += dy * cache.input.transpose();
  gb += dy.rowwise().sum();
  return w.transpose() * dy;
}

MatrixXd bn_forward(const BatchNormRef& r, const double* params, const double* buffers,
                    double* running, Mode mode, double momentum, double eps, const MatrixXd& x,
                    BatchNormCache* cache) {
  const ConstVecMap gamma(params + r.gamma, r.dim);
  const ConstVecMap beta(params + r.beta, r.dim);
  MatrixXd xhat;
  VectorXd inv_std;
  if (mode == Mode::Train) {
    const double n = static_cast<double>(x.cols());
    const VectorXd mean = x.rowwise().mean();
    MatrixXd centered = x.colwise() - mean;
    const VectorXd var = centered.array().square().rowwise().sum() / n;
    inv_std = (var.array() + eps).rsqrt();
    xhat = inv_std.asDiagonal() * centered;
    if (running) {
      VecMap rm(running + r.running_mean, r.dim);
      VecMap rv(running + r.running_var, r.dim);
      rm = (1.0 - momentum) * rm + momentum * mean;
      rv = (1.0 - momentum) * rv + momentum * var * (n / (n - 1.0));
    }
    if (cache) {
      cache->batch_mean = mean;
      cache->batch_var = var;
    }
  } else {
    const ConstVecMap rm(buffers + r.running_mean, r.dim);
    const ConstVecMap rv(buffers + r.running_var, r.dim);
    inv_std = (rv.array() + eps).rsqrt();
    xhat = inv_std.asDiagonal() * (x.colwise() - rm);
    if (cache) {
      cache->batch_mean.resize(0);
      cache->batch_var.resize(0);
    }
  }
  MatrixXd y = gamma.asDiagonal() * xhat;
  y.colwise() += beta;
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

MatrixXd bn_backward(const BatchNormRef& r, const double* params, const BatchNormCache& cache,
                     Mode mode, const MatrixXd& dy, double* grads) {
  const ConstVecMap gamma(params + r.gamma, r.dim);
  VecMap ggamma(grads + r.gamma, r.dim);
  VecMap gbeta(grads + r.beta, r.dim);
  ggamma += (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
  gbeta += dy.rowwise().sum();
  const MatrixXd dxhat = gamma.asDiagonal() * dy;
  if (mode == Mode::Eval) return cache.inv_std.asDiagonal() * dxhat;
  // Gradient through the batch mean and variance.
  const double n = static_cast<double>(dy.cols());
  const VectorXd sum_dxhat = dxhat.rowwise().sum();
  const VectorXd sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum().matrix();
  MatrixXd dx = n * dxhat;
  dx.colwise() -= sum_dxhat;
  dx -= (cache.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
  return (cache.inv_std / n).asDiagonal() * dx;
}

MatrixXd gelu_forward(const MatrixXd& x, detail::GeluCache* cache) {
  MatrixXd cdf = x.unaryExpr([](double v) { return 0.5 * (1.0 + std::erf(v * kInvSqrt2)); });
  MatrixXd y = x.cwiseProduct(cdf);
  if (cache) {
    cache->input = x;
    cache->cdf = std::move(cdf);
  }
  return y;
}

MatrixXd gelu_backward(const detail::GeluCache& cache, const MatrixXd& dy) {
  const MatrixXd pdf_term =
      cache.input.unaryExpr([](double v) { return v * kInvSqrt2Pi * std::exp(-0.5 * v * v); });
  return dy.cwiseProduct(cache.cdf + pdf_term);
}

MatrixXd dropout_forward(const MatrixXd& x, double p, Mode mode, Rng* rng,
                         detail::DropoutCache* cache) {
  if (mode == Mode::Eval || p <= 0.0) {
    if (cache) cache->mask.resize(0, 0);
    return x;
  }
  if (!rng) throw Error(ErrorKind::InvalidArgument, "train-mode dropout needs a generator");
  const double keep = 1.0 - p;
  MatrixXd mask(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      mask(i, j) = uniform(*rng, 0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    }
  }
  MatrixXd y = x.cwiseProduct(mask);
  if (cache) cache->mask = std::move(mask);
  return y;
}

MatrixXd dropout_backward(const detail::DropoutCache& cache, const MatrixXd& dy) {
  if (cache.mask.size() == 0) return dy;
  return dy.cwiseProduct(cache.mask);
}

void fill_uniform(double* data, std::size_t n, double bound, Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) data[i] = uniform(rng, -bound, bound);
}

}  // namespace

// ---- config ----------------------------------------------------------------

std::string_view to_string(Architecture arch) {
  return arch == Architecture::Holistic ? "holistic" : "siamese";
}

Architecture architecture_from_string(std::string_view s) {
  if (s == "holistic") return Architecture::Holistic;
  if (s == "siamese") return Architecture::Siamese;
  throw Error(ErrorKind::InvalidArgument, "unknown architecture '" + std::string(s) + "'");
}

MlpConfig MlpConfig::holistic() {
  MlpConfig c;
  c.architecture = Architecture::Holistic;
  c.hidden = 256;
  c.blocks = 3;
  c.dropout = 0.1;
  return c;
}

MlpConfig MlpConfig::siamese() {
  MlpConfig c;
  c.architecture = Architecture::Siamese;
  c.hidden = 64;
  c.blocks = 3;
  c.dropout = 0.1;
  c.fusion_hidden = 64;
  return c;
}

void MlpConfig::validate() const {
  if (hidden < 2 || blocks < 0 || !(dropout >= 0.0 && dropout < 1.0) || fusion_hidden < 1 ||
      !(bn_momentum > 0.0 && bn_momentum <= 1.0) || !(bn_eps > 0.0) ||
      !(final_init_scale > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid MLP configuration");
  }
}

nlohmann::json MlpConfig::to_json() const {
  return {{"architecture", to_string(architecture)},
          {"hidden", hidden},
          {"blocks", blocks},
          {"dropout", dropout},
          {"fusion_hidden", fusion_hidden},
          {"bn_momentum", bn_momentum},
          {"bn_eps", bn_eps},
          {"final_init_scale", final_init_scale},
          {"head_anchor_mode", to_string(head_anchor_mode)}};
}

MlpConfig MlpConfig::from_json(const nlohmann::json& j) {
  MlpConfig c = architecture_from_string(j.at("architecture").get<std::string>()) ==
                        Architecture::Holistic
                    ? holistic()
                    : siamese();
  for (const auto& [key, value] : j.items()) {
    if (key == "architecture") continue;
    if (key == "hidden") c.hidden = value.get<int>();
    else if (key == "blocks") c.blocks = value.get<int>();
    else if (key == "dropout") c.dropout = value.get<double>();
    else if (key == "fusion_hidden") c.fusion_hidden = value.get<int>();
    else if (key == "bn_momentum") c.bn_momentum = value.get<double>();
    else if (key == "bn_eps") c.bn_eps = value.get<double>();
    else if (key == "final_init_scale") c.final_init_scale = value.get<double>();
    else if (key == "head_anchor_mode") c.head_anchor_mode = head_anchor_mode_from_string(value.get<std::string>());
    else throw Error(ErrorKind::InvalidArgument, "unknown MLP config key '" + key + "'");
  }
  c.validate();
  return c;
}

// ---- tape --------------------------------------------------------------------

std::vector<std::pair<VectorXd, VectorXd>> ForwardTape::batch_statistics() const {
  std::vector<std::pair<VectorXd, VectorXd>> out;
  for (const auto& e : encoders) {
    out.emplace_back(e.proj_bn.batch_mean, e.proj_bn.batch_var);
    for (const auto& b : e.blocks) {
      out.emplace_back(b.bn1.batch_mean, b.bn1.batch_var);
      out.emplace_back(b.bn2.batch_mean, b.bn2.batch_var);
    }
  }
  return out;
}

// ---- model -------------------------------------------------------------------

MlpModel::MlpModel(const MlpConfig& config) : config_(config) {
  config_.validate();
  TableBuilder p(param_info_);
  TableBuilder b(buffer_info_);
  const Index d = config_.hidden;
  if (config_.architecture == Architecture::Holistic) {
    net_.encoders.push_back(add_encoder(p, b, "encoder", kGlobalFeatureDim, d, config_.blocks, 0));
    net_.head.fc1 = add_linear(p, "head.fc1", d, d / 2);
    net_.head.fc2 = add_linear(p, "head.fc2", d / 2, 3);
  } else {
    net_.encoders.push_back(
        add_encoder(p, b, "left", kEyeFeatureDim, d, config_.blocks, kSiameseLeftOffset));
    net_.encoders.push_back(
        add_encoder(p, b, "right", kEyeFeatureDim, d, config_.blocks, kSiameseRightOffset));
    const Index fusion_in = 2 * d + kDeltaFeatureDim + kHeadFeatureDim;
    net_.head.fc1 = add_linear(p, "fusion.fc1", fusion_in, config_.fusion_hidden);
    net_.head.fc2 = add_linear(p, "fusion.fc2", config_.fusion_hidden, 3);
  }
  params_.assign(p.total(), 0.0);
  buffers_.assign(b.total(), 0.0);
}

MlpModel MlpModel::init(const MlpConfig& config, std::uint64_t seed) {
  MlpModel m(config);
  Rng rng(derive_seed(seed, "mlp-init"));
  auto init_linear = [&](const LinearRef& l, double extra_scale) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    fill_uniform(m.params_.data() + l.weight, static_cast<std::size_t>(l.in * l.out),
                 bound * extra_scale, rng);
    fill_uniform(m.params_.data() + l.bias, static_cast<std::size_t>(l.out), bound * extra_scale,
                 rng);
  };
  auto init_bn = [&](const BatchNormRef& r) {
    for (Index i = 0; i < r.dim; ++i) {
      m.params_[r.gamma + static_cast<std::size_t>(i)] = 1.0;
      m.params_[r.beta + static_cast<std::size_t>(i)] = 0.0;
      m.buffers_[r.running_mean + static_cast<std::size_t>(i)] = 0.0;
      m.buffers_[r.running_var + static_cast<std::size_t>(i)] = 1.0;
    }
  };
  for (const auto& e : m.net_.encoders) {
    init_linear(e.proj, 1.0);
    init_bn(e.proj_bn);
    for (const auto& blk : e.blocks) {
      init_linear(blk.fc1, 1.0);
      init_bn(blk.bn1);
      init_linear(blk.fc2, 1.0);
      init_bn(blk.bn2);
    }
  }
  init_linear(m.net_.head.fc1, 1.0);
  init_linear(m.net_.head.fc2, config.final_init_scale);
  return m;
}

Eigen::Matrix3Xd MlpModel::forward(const MatrixXd& x, Mode mode, ForwardTape* tape, Rng* rng) {
  return run(x, mode, tape, rng, mode == Mode::Train ? buffers_.data() : nullptr);
}

Eigen::Matrix3Xd MlpModel::run(const MatrixXd& x, Mode mode, ForwardTape* tape, Rng* rng,
                               double* running) const {
  if (x.rows() != static_cast<Index>(config_.input_dim())) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(config_.input_dim()) + " input features, got " +
                    std::to_string(x.rows()));
  }
  if (mode == Mode::Train && x.cols() < 2) {
    throw Error(ErrorKind::DimensionMismatch, "train-mode batch-norm needs batch >= 2");
  }
  if (x.cols() < 1) throw Error(ErrorKind::DimensionMismatch, "empty batch");

  const double* p = params_.data();
  const double* buf = buffers_.data();
  const double mom = config_.bn_momentum;
  const double eps = config_.bn_eps;
  const double drop = config_.dropout;

  if (tape) {
    tape->mode = mode;
    tape->owner = this;
    tape->version = version_;
    tape->batch = x.cols();
    tape->encoders.assign(net_.encoders.size(), {});
  }

  std::vector<MatrixXd> latents;
  for (std::size_t ei = 0; ei < net_.encoders.size(); ++ei) {
    const auto& e = net_.encoders[ei];
    detail::EncoderCache* ec = tape ? &tape->encoders[ei] : nullptr;
    if (ec) ec->blocks.assign(e.blocks.size(), {});
    const MatrixXd in = x.middleRows(e.input_offset, e.proj.in);
    MatrixXd h = linear_forward(e.proj, p, in, ec ? &ec->proj : nullptr);
    h = bn_forward(e.proj_bn, p, buf, running, mode, mom, eps, h, ec ? &ec->proj_bn : nullptr);
    h = gelu_forward(h, ec ? &ec->proj_act : nullptr);
    for (std::size_t k = 0; k < e.blocks.size(); ++k) {
      const auto& blk = e.blocks[k];
      detail::BlockCache* bc = ec ? &ec->blocks[k] : nullptr;
      MatrixXd f = linear_forward(blk.fc1, p, h, bc ? &bc->fc1 : nullptr);
      f = bn_forward(blk.bn1, p, buf, running, mode, mom, eps, f, bc ? &bc->bn1 : nullptr);
      f = gelu_forward(f, bc ? &bc->act1 : nullptr);
      f = dropout_forward(f, drop, mode, rng, bc ? &bc->drop1 : nullptr);
      f = linear_forward(blk.fc2, p, f, bc ? &bc->fc2 : nullptr);
      f = bn_forward(blk.bn2, p, buf, running, mode, mom, eps, f, bc ? &bc->bn2 : nullptr);
      f = gelu_forward(f, bc ? &bc->act2 : nullptr);
      f = dropout_forward(f, drop, mode, rng, bc ? &bc->drop2 : nullptr);
      h += f;
    }
    latents.push_back(std::move(h));
  }

  MatrixXd head_in;
  if (config_.architecture == Architecture::Holistic) {
    head_in = std::move(latents[0]);
  } else {
    const Index d = config_.hidden;
    head_in.resize(net_.head.fc1.in, x.cols());
    head_in.topRows(d) = latents[0];
    head_in.middleRows(d, d) = latents[1];
    head_in.bottomRows(kDeltaFeatureDim + kHeadFeatureDim) =
        x.middleRows(kSiameseDeltaOffset, kDeltaFeatureDim + kHeadFeatureDim);
  }
  detail::HeadCache* hc = tape ? &tape->head : nullptr;
  MatrixXd z = linear_forward(net_.head.fc1, p, head_in, hc ? &hc->fc1 : nullptr);
  z = gelu_forward(z, hc ? &hc->act : nullptr);
  z = linear_forward(net_.head.fc2, p, z, hc ? &hc->fc2 : nullptr);
  return z;
}

Eigen::Matrix3Xd MlpModel::predict(const MatrixXd& features) const {
  Eigen::Matrix3Xd out(3, features.cols());
  for (Index start = 0; start < features.cols(); start += kPredictChunk) {
    const Index n = std::min(kPredictChunk, features.cols() - start);
    out.middleCols(start, n) =
        run(features.middleCols(start, n), Mode::Eval, nullptr, nullptr, nullptr);
  }
  return out;
}

ParamVector MlpModel::backward(const ForwardTape& tape,
                                       const Eigen::Matrix3Xd& upstream) const {
  if (tape.empty() || tape.owner != this || tape.version != version_ ||
      tape.encoders.size() != net_.encoders.size()) {
    throw Error(ErrorKind::StaleTape, "tape does not match the current parameters");
  }
  if (upstream.cols() != tape.batch) {
    throw Error(ErrorKind::DimensionMismatch, "upstream gradient batch size mismatch");
  }
  ParamVector grads(params_.size(), 0.0);
  const double* p = params_.data();
  double* g = grads.data();
  const Mode mode = tape.mode;

  MatrixXd dz = linear_backward(net_.head.fc2, p, tape.head.fc2, upstream, g);
  dz = gelu_backward(tape.head.act, dz);
  const MatrixXd dhead_in = linear_backward(net_.head.fc1, p, tape.head.fc1, dz, g);

  const Index d = config_.hidden;
  for (std::size_t ei = 0; ei < net_.encoders.size(); ++ei) {
    const auto& e = net_.encoders[ei];
    const auto& ec = tape.encoders[ei];
    MatrixXd dh = config_.architecture == Architecture::Holistic
                      ? dhead_in
                      : MatrixXd(dhead_in.middleRows(static_cast<Index>(ei) * d, d));
    for (std::size_t k = e.blocks.size(); k-- > 0;) {
      const auto& blk = e.blocks[k];
      const auto& bc = ec.blocks[k];
      MatrixXd df = dropout_backward(bc.drop2, dh);
      df = gelu_backward(bc.act2, df);
      df = bn_backward(blk.bn2, p, bc.bn2, mode, df, g);
      df = linear_backward(blk.fc2, p, bc.fc2, df, g);
      df = dropout_backward(bc.drop1, df);
      df = gelu_backward(bc.act1, df);
      df = bn_backward(blk.bn1, p, bc.bn1, mode, df, g);
      df = linear_backward(blk.fc1, p, bc.fc1, df, g);
      dh += df;
    }
    dh = gelu_backward(ec.proj_act, dh);
    dh = bn_backward(e.proj_bn, p, ec.proj_bn, mode, dh, g);
    linear_backward(e.proj, p, ec.proj, dh, g);
  }
  return grads;
}

void MlpModel::set_running_statistics(const std::vector<std::pair<VectorXd, VectorXd>>& stats) {
  std::size_t i = 0;
  auto apply = [&](const BatchNormRef& r) {
    if (i >= stats.size() || stats[i].first.size() != r.dim || stats[i].second.size() != r.dim) {
      throw Error(ErrorKind::DimensionMismatch, "running statistics do not match the model");
    }
    VecMap(buffers_.data() + r.running_mean, r.dim) = stats[i].first;
    VecMap(buffers_.data() + r.running_var, r.dim) = stats[i].second;
    ++i;
  };
  for (const auto& e : net_.encoders) {
    apply(e.proj_bn);
    for (const auto& b : e.blocks) {
      apply(b.bn1);
      apply(b.bn2);
    }
  }
  if (i != stats.size()) {
    throw Error(ErrorKind::DimensionMismatch, "too many running statistics");
  }
}

// ---- checkpoint ----------------------------------------------------------------

nlohmann::json MlpModel::to_json() const {
  auto dump_tensors = [](const std::vector<TensorInfo>& info, const ParamVector& data) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : info) {
      arr.push_back({{"name", t.name},
                     {"shape", {t.rows, t.cols}},
                     {"data", std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(t.offset),
                                                  data.begin() + static_cast<std::ptrdiff_t>(t.offset + t.size()))}});
    }
    return arr;
  };
  return {{"format", "lgaze-mlp"},
          {"version", kCheckpointVersion},
          {"architecture", to_string(config_.architecture)},
          {"config", config_.to_json()},
          {"features",
           {{"layout", config_.layout() == FeatureLayout::Global ? "global" : "siamese"},
            {"head_anchor_mode", to_string(config_.head_anchor_mode)}}},
          {"parameters", dump_tensors(param_info_, params_)},
          {"buffers", dump_tensors(buffer_info_, buffers_)}};
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "lgaze-mlp") {
    throw Error(ErrorKind::InvalidArgument, "not an lgaze MLP checkpoint");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw Error(ErrorKind::SchemaVersionMismatch,
                "MLP checkpoint version " + std::to_string(j.at("version").get<int>()));
  }
  MlpModel m(MlpConfig::from_json(j.at("config")));
  auto load_tensors = [](const nlohmann::json& arr, const std::vector<TensorInfo>& info,
                         ParamVector& data) {
    if (arr.size() != info.size()) {
      throw Error(ErrorKind::DimensionMismatch, "checkpoint tensor count mismatch");
    }
    for (std::size_t i = 0; i < info.size(); ++i) {
      const auto& t = info[i];
      const auto& e = arr[i];
      const auto values = e.at("data").get<std::vector<double>>();
      if (e.at("name").get<std::string>() != t.name || values.size() != t.size() ||
          e.at("shape")[0].get<Index>() != t.rows || e.at("shape")[1].get<Index>() != t.cols) {
        throw Error(ErrorKind::DimensionMismatch, "checkpoint tensor '" + t.name + "' mismatch");
      }
      std::copy(values.begin(), values.end(), data.begin() + static_cast<std::ptrdiff_t>(t.offset));
    }
  };
  load_tensors(j.at("parameters"), m.param_info_, m.params_);
  load_tensors(j.at("buffers"), m.buffer_info_, m.buffers_);
  return m;
}

void MlpModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

MlpModel MlpModel::load(const std::filesystem::path& path) {
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

}  // namespace lgaze
