#include "tcs/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "tcs/binary.hpp"
#include "tcs/dataset.hpp"
#include "tcs/rng.hpp"

namespace tcs {

namespace {
constexpr std::string_view kMlpMagic = "SCSN";
constexpr std::uint16_t kMlpVersion = 1;
constexpr Eigen::Index kDecodeChunk = 2048;
}  // namespace

template <typename Scalar>
std::size_t MlpParams<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += std::size_t(l.weights.size() + l.bias.size());
  return n;
}

template <typename Scalar>
MlpParams<Scalar> MlpParams<Scalar>::zeros_like() const {
  MlpParams out;
  for (const auto& l : layers)
    out.layers.push_back({Matrix<Scalar>::Zero(l.weights.rows(), l.weights.cols()),
                          Vector<Scalar>::Zero(l.bias.size())});
  return out;
}

template <typename Scalar>
double MlpParams<Scalar>::squared_norm() const {
  double total = 0.0;
  for (const auto& l : layers)
    total += double(l.weights.squaredNorm()) + double(l.bias.squaredNorm());
  return total;
}

template <typename Scalar>
bool MlpParams<Scalar>::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const auto& l) { return l.weights.allFinite() && l.bias.allFinite(); });
}

template <typename Scalar>
NormStats<Scalar> NormStats<Scalar>::compute(const Matrix<Scalar>& measurements,
                                             double floor) {
  const Eigen::Index m = measurements.rows();
  const Eigen::Index n = measurements.cols();
  if (n == 0) throw InvalidArgument("cannot compute normalization of an empty set");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < n; ++j) mean += measurements.col(j).template cast<double>();
  mean /= double(n);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < n; ++j)
    var += (measurements.col(j).template cast<double>() - mean).cwiseAbs2();
  var /= double(n);
  Eigen::VectorXd sd = var.cwiseSqrt().cwiseMax(floor);
  return {mean.cast<Scalar>(), sd.cast<Scalar>()};
}

template <typename Scalar>
NormStats<Scalar> NormStats<Scalar>::identity(std::size_t size) {
  return {Vector<Scalar>::Zero(Eigen::Index(size)), Vector<Scalar>::Ones(Eigen::Index(size))};
}

template <typename Scalar>
MlpParams<Scalar> init_params(int hidden_layers, std::size_t block_size,
                              std::size_t measurement_size, std::uint64_t seed) {
  if (hidden_layers < 1) throw InvalidArgument("an MLP needs at least one hidden layer");
  if (block_size == 0 || measurement_size == 0) throw InvalidArgument("layer sizes must be positive");
  Rng rng(seed);
  MlpParams<Scalar> params;
  std::size_t inputs = measurement_size;
  for (int k = 0; k <= hidden_layers; ++k) {
    DenseLayer<Scalar> layer{Matrix<Scalar>(Eigen::Index(block_size), Eigen::Index(inputs)),
                             Vector<Scalar>::Zero(Eigen::Index(block_size))};
    const double bound = 1.0 / std::sqrt(double(inputs));
    const auto limit = Scalar(bound);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        Scalar w;
        do {
          w = Scalar(rng.uniform(-bound, bound));
        } while (!(std::abs(w) < limit));
        layer.weights(r, c) = w;
      }
    params.layers.push_back(std::move(layer));
    inputs = block_size;
  }
  return params;
}

template <typename Scalar>
Matrix<Scalar> forward(const MlpParams<Scalar>& params, const NormStats<Scalar>& stats,
                       const Matrix<Scalar>& measurements,
                       ForwardCache<Scalar>* cache) {
  if (std::size_t(measurements.rows()) != params.input_size() ||
      stats.mean.size() != measurements.rows() || stats.stddev.size() != measurements.rows())
    throw GeometryError("measurement length does not match the network input");
  if (!measurements.allFinite()) throw InvalidArgument("non-finite network input");

  Matrix<Scalar> h = ((measurements.colwise() - stats.mean).array().colwise() / stats.stddev.array())
                         .matrix();
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(h);
  }
  const int hidden = params.hidden_layers();
  for (int k = 0; k < hidden; ++k) {
    const auto& layer = params.layers[std::size_t(k)];
    Matrix<Scalar> a(layer.weights.rows(), h.cols());
    a.noalias() = layer.weights * h;
    a.colwise() += layer.bias;
    a = a.cwiseMax(Scalar(0));
    if (cache) cache->activations.push_back(a);
    h = std::move(a);
  }
  const auto& out_layer = params.layers.back();
  Matrix<Scalar> out(out_layer.weights.rows(), h.cols());
  out.noalias() = out_layer.weights * h;
  out.colwise() += out_layer.bias;
  return out;
}

template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const MlpParams<Scalar>& params, const NormStats<Scalar>& stats,
                                  const Matrix<Scalar>& measurements,
                                  const Matrix<Scalar>& blocks,
                                  double weight_decay) {
  const Eigen::Index n = measurements.cols();
  if (n == 0) throw InvalidArgument("empty batch");
  if (blocks.cols() != n || std::size_t(blocks.rows()) != params.output_size())
    throw GeometryError("target blocks do not match the network output");

  ForwardCache<Scalar> cache;
  Matrix<Scalar> delta = forward(params, stats, measurements, &cache) - blocks;

  LossAndGrad<Scalar> result;
  result.mse = double(delta.squaredNorm()) / double(n);
  double decay = 0.0;
  for (const auto& l : params.layers) decay += double(l.weights.squaredNorm());
  result.objective = result.mse + weight_decay * decay;
  if (!std::isfinite(result.objective)) throw DivergedError("non-finite training loss");

  delta *= Scalar(2.0 / double(n));
  result.grads.layers.resize(params.layers.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    const Matrix<Scalar>& input = cache.activations[l];
    auto& g = result.grads.layers[l];
    g.weights.noalias() = delta * input.transpose();
    if (weight_decay != 0.0) g.weights += Scalar(2.0 * weight_decay) * layer.weights;
    g.bias = delta.rowwise().sum();
    if (l > 0) {
      Matrix<Scalar> back(layer.weights.cols(), delta.cols());
      back.noalias() = layer.weights.transpose() * delta;
      delta = (input.array() > Scalar(0)).select(back, Scalar(0));
    }
  }
  return result;
}

template <typename Scalar>
double clip_gradients(MlpParams<Scalar>& grads, double threshold) {
  const double norm = std::sqrt(grads.squared_norm());
  if (threshold > 0.0 && norm > threshold) {
    const auto scale = Scalar(threshold / norm);
    for (auto& l : grads.layers) {
      l.weights *= scale;
      l.bias *= scale;
    }
  }
  return norm;
}

template <typename Scalar>
double SgdOptimizer<Scalar>::learning_rate_at(std::uint64_t iteration) const {
  if (config_.drop_iteration > 0 && iteration > config_.drop_iteration)
    return config_.learning_rate / config_.drop_factor;
  return config_.learning_rate;
}

template <typename Scalar>
double SgdOptimizer<Scalar>::step(MlpParams<Scalar>& params, MlpParams<Scalar>& grads) {
  if (grads.layers.size() != params.layers.size())
    throw GeometryError("gradient shapes do not match the parameters");
  ++iteration_;
  const double norm = clip_gradients(grads, config_.clip_norm);
  const auto lr = Scalar(learning_rate_at(iteration_));
  const auto momentum = Scalar(config_.momentum);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& v = velocity_.layers[l];
    const auto& g = grads.layers[l];
    v.weights = momentum * v.weights - lr * g.weights;
    v.bias = momentum * v.bias - lr * g.bias;
    params.layers[l].weights += v.weights;
    params.layers[l].bias += v.bias;
  }
  return norm;
}

Eigen::MatrixXd MlpModel::decode_batch(const Eigen::Ref<const Eigen::MatrixXd>& measurements) const {
  if (std::size_t(measurements.rows()) != measurement_size())
    throw GeometryError("measurement length does not match the network input");
  Eigen::MatrixXd out(Eigen::Index(block_size()), measurements.cols());
  for (Eigen::Index start = 0; start < measurements.cols(); start += kDecodeChunk) {
    const Eigen::Index n = std::min(kDecodeChunk, measurements.cols() - start);
    const Matrix<float> y = measurements.middleCols(start, n).cast<float>();
    out.middleCols(start, n) =
        forward(params_, stats_, y).cwiseMax(0.0f).cwiseMin(1.0f).cast<double>();
  }
  return out;
}

void MlpModel::save(std::ostream& out) const {
  BinaryWriter w(out);
  w.put_magic(kMlpMagic);
  w.put<std::uint16_t>(kMlpVersion);
  w.put<std::uint32_t>(std::uint32_t(params_.hidden_layers()));
  w.put<std::uint32_t>(std::uint32_t(block_size()));
  w.put<std::uint32_t>(std::uint32_t(measurement_size()));
  w.put<std::uint64_t>(mask_hash_);
  w.put_array<float>({stats_.mean.data(), std::size_t(stats_.mean.size())});
  w.put_array<float>({stats_.stddev.data(), std::size_t(stats_.stddev.size())});
  for (const auto& l : params_.layers) {
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = l.weights;
    w.put_array<float>({rows.data(), std::size_t(rows.size())});
    w.put_array<float>({l.bias.data(), std::size_t(l.bias.size())});
  }
  w.check();
}

void MlpModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  save(out);
}

MlpModel MlpModel::load(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(kMlpMagic);
  if (r.get<std::uint16_t>() != kMlpVersion) throw FormatError("unsupported network model version");
  const auto hidden = r.get<std::uint32_t>();
  const auto n_p = r.get<std::uint32_t>();
  const auto m_p = r.get<std::uint32_t>();
  const auto hash = r.get<std::uint64_t>();
  if (hidden == 0 || hidden > 64 || n_p == 0 || m_p == 0 || n_p > (1u << 16) || m_p > n_p)
    throw FormatError("implausible network dimensions");
  NormStats<float> stats{Vector<float>(m_p), Vector<float>(m_p)};
  r.get_array<float>({stats.mean.data(), m_p});
  r.get_array<float>({stats.stddev.data(), m_p});
  MlpParams<float> params;
  std::uint32_t inputs = m_p;
  for (std::uint32_t k = 0; k <= hidden; ++k) {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n_p, inputs);
    r.get_array<float>({rows.data(), std::size_t(rows.size())});
    Vector<float> bias(n_p);
    r.get_array<float>({bias.data(), n_p});
    params.layers.push_back({Matrix<float>(rows), std::move(bias)});
    inputs = n_p;
  }
  if (!params.all_finite() || !stats.mean.allFinite() || !(stats.stddev.array() > 0.0f).all())
    throw FormatError("network model contains invalid values");
  return MlpModel(std::move(params), std::move(stats), hash);
}

MlpModel MlpModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load(in);
}

SgdConfig scaled_schedule(std::uint64_t iterations, SgdConfig base) {
  base.drop_iteration = iterations * 3 / 4;
  return base;
}

double evaluate_mse(const MlpModel& model, const TrainingSet& data,
                    const std::vector<std::size_t>& columns) {
  if (columns.empty()) return 0.0;
  double total = 0.0;
  constexpr std::size_t chunk = 1024;
  for (std::size_t start = 0; start < columns.size(); start += chunk) {
    const std::span<const std::size_t> part(columns.data() + start,
                                            std::min(chunk, columns.size() - start));
    const Matrix<float> y = data.measurements_of<float>(part);
    const Matrix<float> x = data.blocks<float>(part);
    total += double((forward(model.params(), model.stats(), y) - x).squaredNorm());
  }
  return total / (double(columns.size()) * double(data.block_size()));
}

TrainResult train_mlp(const TrainingSet& data, const TrainConfig& config) {
  const std::size_t n = data.size();
  if (n == 0) throw InvalidArgument("training set is empty");
  if (config.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0)
    throw InvalidArgument("validation fraction must lie in [0, 1)");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(config.seed, 1));
  split_rng.shuffle(order.begin(), order.end());

  std::size_t n_val = 0;
  if (config.validation_fraction > 0.0)
    n_val = std::clamp<std::size_t>(std::size_t(std::llround(config.validation_fraction * double(n))),
                                    1, n > 1 ? n - 1 : 0);
  std::vector<std::size_t> val(order.begin(), order.begin() + std::ptrdiff_t(n_val));
  std::vector<std::size_t> train(order.begin() + std::ptrdiff_t(n_val), order.end());
  if (train.empty()) throw InvalidArgument("no samples left for training");
  if (val.empty()) val = train;
  std::sort(train.begin(), train.end());

  const NormStats<float> stats =
      NormStats<double>::compute(data.measurements_of<double>(train)).cast<float>();
  MlpParams<float> params = init_params<float>(config.hidden_layers, data.block_size(),
                                               data.measurement_size(), derive_seed(config.seed, 2));
  SgdOptimizer<float> optimizer(config.sgd, params);

  Rng batch_rng(derive_seed(config.seed, 3));
  std::vector<std::size_t> epoch = train;
  batch_rng.shuffle(epoch.begin(), epoch.end());
  std::size_t cursor = 0;
  std::vector<std::size_t> batch(std::min(config.batch_size, train.size()));

  TrainResult result;
  std::shared_ptr<const MlpModel> best;
  double window_mse = 0.0;
  std::uint64_t window_count = 0;
  const std::uint64_t interval = std::max<std::uint64_t>(1, config.eval_interval);

  for (std::uint64_t it = 1; it <= config.iterations; ++it) {
    for (auto& idx : batch) {
      if (cursor == epoch.size()) {
        batch_rng.shuffle(epoch.begin(), epoch.end());
        cursor = 0;
      }
      idx = epoch[cursor++];
    }
    const Matrix<float> y = data.measurements_of<float>(batch);
    const Matrix<float> x = data.blocks<float>(batch);
    LossAndGrad<float> lg;
    try {
      lg = loss_and_grad(params, stats, y, x, config.sgd.weight_decay);
    } catch (const DivergedError& e) {
      throw DivergedError("training diverged at iteration " + std::to_string(it), best);
    }
    window_mse += lg.mse / double(data.block_size());
    ++window_count;
    optimizer.step(params, lg.grads);
    result.iterations_run = it;

    if (it % interval == 0 || it == config.iterations) {
      auto candidate = std::make_shared<MlpModel>(params, stats, data.mask_hash);
      TrainLogRow row;
      row.iteration = it;
      row.learning_rate = optimizer.learning_rate_at(it);
      row.train_mse = window_mse / double(window_count);
      row.val_mse = evaluate_mse(*candidate, data, val);
      window_mse = 0.0;
      window_count = 0;
      if (!std::isfinite(row.val_mse) || !params.all_finite())
        throw DivergedError("training diverged at iteration " + std::to_string(it), best);
      result.log.push_back(row);
      if (config.on_eval) config.on_eval(row);
      if (!best || row.val_mse < result.best_val_mse) {
        best = std::move(candidate);
        result.best_val_mse = row.val_mse;
        result.best_iteration = it;
      }
      if (config.target_val_mse > 0.0 && row.val_mse < config.target_val_mse) break;
    }
  }
  result.model = *best;
  return result;
}

void write_train_log_csv(const std::vector<TrainLogRow>& log, std::ostream& out) {
  out << "iteration,lr,train_mse,val_mse\n";
  for (const auto& r : log)
    out << r.iteration << ',' << r.learning_rate << ',' << r.train_mse << ',' << r.val_mse << '\n';
}

template struct MlpParams<float>;
template struct MlpParams<double>;
template struct NormStats<float>;
template struct NormStats<double>;
template class SgdOptimizer<float>;
template class SgdOptimizer<double>;

#define TCS_INSTANTIATE_MLP(S)                                                                    \
  template MlpParams<S> init_params<S>(int, std::size_t, std::size_t, std::uint64_t);             \
  template Matrix<S> forward<S>(const MlpParams<S>&, const NormStats<S>&,                        \
                                const Matrix<S>&, ForwardCache<S>*);           \
  template LossAndGrad<S> loss_and_grad<S>(const MlpParams<S>&, const NormStats<S>&,             \
                                           const Matrix<S>&,                   \
                                           const Matrix<S>&, double);          \
  template double clip_gradients<S>(MlpParams<S>&, double);

TCS_INSTANTIATE_MLP(float)
TCS_INSTANTIATE_MLP(double)

#undef TCS_INSTANTIATE_MLP

}  // namespace tcs
