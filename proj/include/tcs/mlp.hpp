#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tcs/decoder.hpp"
#include "tcs/error.hpp"

namespace tcs {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // outputs x inputs
  Vector<Scalar> bias;
};

/// K ReLU hidden layers of width N_p followed by a linear output layer.
/// layers[0..K-1] are hidden, layers[K] is the output layer.
template <typename Scalar>
struct MlpParams {
  std::vector<DenseLayer<Scalar>> layers;

  int hidden_layers() const { return int(layers.size()) - 1; }
  std::size_t input_size() const { return std::size_t(layers.front().weights.cols()); }
  std::size_t output_size() const { return std::size_t(layers.back().weights.rows()); }
  std::size_t parameter_count() const;

  /// Zero-valued parameters with the same shapes.
  MlpParams zeros_like() const;
  double squared_norm() const;
  bool all_finite() const;

  template <typename Other>
  MlpParams<Other> cast() const {
    MlpParams<Other> out;
    for (const auto& l : layers)
      out.layers.push_back({l.weights.template cast<Other>(), l.bias.template cast<Other>()});
    return out;
  }
};

/// Per-feature input normalization frozen from training measurements.
template <typename Scalar>
struct NormStats {
  Vector<Scalar> mean;
  Vector<Scalar> stddev;

  static constexpr double kStddevFloor = 1e-6;
  /// Columns of `measurements` are samples. Population std, floored.
  static NormStats compute(const Matrix<Scalar>& measurements,
                           double floor = kStddevFloor);
  static NormStats identity(std::size_t size);

  template <typename Other>
  NormStats<Other> cast() const {
    return {mean.template cast<Other>(), stddev.template cast<Other>()};
  }
};

/// Weights ~ Uniform(-1/sqrt(s), 1/sqrt(s)) with s the layer's input size,
/// biases zero.
template <typename Scalar>
MlpParams<Scalar> init_params(int hidden_layers, std::size_t block_size,
                              std::size_t measurement_size, std::uint64_t seed);

template <typename Scalar>
struct ForwardCache {
  std::vector<Matrix<Scalar>> activations;  // [0] normalized input, [k] hidden layer k
};

/// Unclamped network output for each column of `measurements`.
template <typename Scalar>
Matrix<Scalar> forward(const MlpParams<Scalar>& params, const NormStats<Scalar>& stats,
                       const Matrix<Scalar>& measurements,
                       ForwardCache<Scalar>* cache = nullptr);

class MlpModel;

/// Non-finite loss. When raised by train_mlp it carries the last finite
/// validation-best checkpoint, if one was taken.
class DivergedError : public Error {
 public:
  explicit DivergedError(const std::string& message, std::shared_ptr<const MlpModel> checkpoint = {})
      : Error("diverged", message), checkpoint_(std::move(checkpoint)) {}

  const std::shared_ptr<const MlpModel>& checkpoint() const { return checkpoint_; }

 private:
  std::shared_ptr<const MlpModel> checkpoint_;
};

template <typename Scalar>
struct LossAndGrad {
  /// (1/n) sum_i ||f(y_i) - x_i||^2
  double mse = 0.0;
  /// mse + weight_decay * sum ||W||^2 (biases excluded); the function the
  /// gradients belong to.
  double objective = 0.0;
  MlpParams<Scalar> grads;
};

/// Reverse-mode gradients of the objective. ReLU'(0) is taken as 0.
/// Throws DivergedError on a non-finite loss.
template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const MlpParams<Scalar>& params, const NormStats<Scalar>& stats,
                                  const Matrix<Scalar>& measurements,
                                  const Matrix<Scalar>& blocks,
                                  double weight_decay);

/// Scales all gradients jointly so their global l2 norm is at most
/// `threshold`. Returns the norm before clipping. Gradients already within
/// the threshold are left untouched.
template <typename Scalar>
double clip_gradients(MlpParams<Scalar>& grads, double threshold);

struct SgdConfig {
  double learning_rate = 0.01;
  double drop_factor = 10.0;
  /// Iterations 1..drop_iteration use learning_rate, later ones
  /// learning_rate / drop_factor. 0 disables the drop.
  std::uint64_t drop_iteration = 3000000;
  double momentum = 0.9;
  /// Non-positive disables clipping.
  double clip_norm = 10.0;
  double weight_decay = 1e-5;
};

/// SGD with classical momentum: v <- m v - lr g, theta <- theta + v.
template <typename Scalar>
class SgdOptimizer {
 public:
  SgdOptimizer(SgdConfig config, const MlpParams<Scalar>& like)
      : config_(config), velocity_(like.zeros_like()) {}

  double learning_rate_at(std::uint64_t iteration) const;
  /// Clips `grads` in place, applies one update and advances the iteration
  /// counter. Returns the gradient norm before clipping.
  double step(MlpParams<Scalar>& params, MlpParams<Scalar>& grads);

  std::uint64_t iteration() const { return iteration_; }
  const SgdConfig& config() const { return config_; }
  const MlpParams<Scalar>& velocity() const { return velocity_; }

 private:
  SgdConfig config_;
  MlpParams<Scalar> velocity_;
  std::uint64_t iteration_ = 0;
};

/// Float network plus its normalization, usable as a reconstruction decoder.
class MlpModel : public PatchDecoder {
 public:
  MlpModel() = default;
  MlpModel(MlpParams<float> params, NormStats<float> stats, std::uint64_t mask_hash)
      : params_(std::move(params)), stats_(std::move(stats)), mask_hash_(mask_hash) {}

  const MlpParams<float>& params() const { return params_; }
  const NormStats<float>& stats() const { return stats_; }

  std::size_t measurement_size() const override { return params_.input_size(); }
  std::size_t block_size() const override { return params_.output_size(); }
  std::uint64_t mask_hash() const override { return mask_hash_; }
  Eigen::MatrixXd decode_batch(const Eigen::Ref<const Eigen::MatrixXd>& measurements) const override;

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static MlpModel load(std::istream& in);
  static MlpModel load(const std::string& path);

 private:
  MlpParams<float> params_;
  NormStats<float> stats_;
  std::uint64_t mask_hash_ = 0;
};

struct TrainingSet;

/// One evaluation point. MSE values here are per voxel (loss / N_p) so
/// they relate directly to PSNR.
struct TrainLogRow {
  std::uint64_t iteration = 0;
  double learning_rate = 0.0;
  double train_mse = 0.0;  // mean over the mini-batches since the last row
  double val_mse = 0.0;
};

struct TrainConfig {
  int hidden_layers = 4;
  std::size_t batch_size = 200;
  std::uint64_t iterations = 4000000;
  SgdConfig sgd{};
  std::uint64_t seed = 1;
  /// Fraction of samples held out for validation/checkpointing. At zero
  /// the whole training set doubles as the validation set.
  double validation_fraction = 0.01;
  std::uint64_t eval_interval = 1000;
  /// Stops once the validation MSE per voxel falls below this (0 = never).
  double target_val_mse = 0.0;
  /// Optional progress callback, invoked after each evaluation.
  std::function<void(const TrainLogRow&)> on_eval;
};

struct TrainResult {
  MlpModel model;  // validation-best parameters
  std::vector<TrainLogRow> log;
  std::uint64_t best_iteration = 0;
  double best_val_mse = 0.0;
  std::uint64_t iterations_run = 0;
};

/// Default schedule for a reduced budget: the drop happens at 75% of it.
SgdConfig scaled_schedule(std::uint64_t iterations, SgdConfig base = {});

TrainResult train_mlp(const TrainingSet& data, const TrainConfig& config);

/// Per-voxel MSE of a model over a sample set.
double evaluate_mse(const MlpModel& model, const TrainingSet& data,
                    const std::vector<std::size_t>& columns);

void write_train_log_csv(const std::vector<TrainLogRow>& log, std::ostream& out);

extern template struct MlpParams<float>;
extern template struct MlpParams<double>;
extern template struct NormStats<float>;
extern template struct NormStats<double>;
extern template class SgdOptimizer<float>;
extern template class SgdOptimizer<double>;

}  // namespace tcs
