#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/fixtures.hpp"
#include "tcs/dataset.hpp"
#include "tcs/error.hpp"
#include "tcs/geometry.hpp"
#include "tcs/mlp.hpp"
#include "tcs/reference.hpp"

using namespace tcs;

namespace {

Matrix<double> seeded(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1,
                      double hi = 1) {
  Rng rng(seed);
  Matrix<double> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

MlpParams<double> with_random_biases(MlpParams<double> p, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : p.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = rng.uniform(-0.2, 0.2);
  return p;
}

// Small paired set: 2x2x4 block, 4x4x4 patch (N_p = 64, M_p = 16), smooth
// blocks so the mapping is learnable.
TrainingSet small_set(std::size_t n, std::uint64_t seed) {
  const auto mask = fixtures::make_mask(2, 2, 4, 3);
  const auto g = Geometry::from_block(0, 0, 2, 2, 4);
  TrainingSet set;
  set.patch_width = 4;
  set.patch_height = 4;
  set.temporal_len = 4;
  set.mask_hash = mask.hash();
  set.pixels.resize(64, Eigen::Index(n));
  Rng rng(seed);
  for (Eigen::Index j = 0; j < Eigen::Index(n); ++j) {
    const double base = rng.uniform(40, 200), gx = rng.uniform(-8, 8), gt = rng.uniform(-8, 8);
    for (int k = 0; k < 4; ++k)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
          set.pixels(x + 4 * (y + 4 * k), j) = std::uint8_t(std::lround(base + gx * x + gt * k + 2 * y));
  }
  set.measurements = measure_blocks(set.pixels, patch_matrix(mask, g));
  return set;
}

}  // namespace

TEST(MlpInit, ShapesAndBounds) {
  const auto p = init_params<double>(3, 64, 16, 1);
  ASSERT_EQ(p.layers.size(), 4u);
  EXPECT_EQ(p.hidden_layers(), 3);
  EXPECT_EQ(p.input_size(), 16u);
  EXPECT_EQ(p.output_size(), 64u);
  EXPECT_EQ(p.layers[0].weights.rows(), 64);
  EXPECT_EQ(p.layers[0].weights.cols(), 16);
  EXPECT_EQ(p.parameter_count(), 64u * 16 + 64 + 3 * (64u * 64 + 64));
  for (const auto& l : p.layers) {
    const double bound = 1.0 / std::sqrt(double(l.weights.cols()));
    EXPECT_LT(l.weights.cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(l.weights.cwiseAbs().maxCoeff(), 0.9 * bound);
    EXPECT_NEAR(l.weights.mean(), 0.0, 0.05 * bound);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(init_params<double>(3, 64, 16, 1).layers[2].weights, p.layers[2].weights);
  EXPECT_NE(init_params<double>(3, 64, 16, 2).layers[2].weights, p.layers[2].weights);
}

TEST(NormStats, PopulationMomentsWithFloor) {
  Matrix<double> y(2, 4);
  y << 1, 2, 3, 4,  //
      5, 5, 5, 5;
  const auto s = NormStats<double>::compute(y);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.5);
  EXPECT_DOUBLE_EQ(s.stddev[0], std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.mean[1], 5.0);
  EXPECT_DOUBLE_EQ(s.stddev[1], NormStats<double>::kStddevFloor);
}

TEST(MlpForward, MatchesScalarReference) {
  const auto params = with_random_biases(init_params<double>(2, 12, 5, 4), 5);
  const NormStats<double> stats{seeded(5, 1, 6).col(0), seeded(5, 1, 7, 0.5, 2.0).col(0)};
  const auto y = seeded(5, 9, 8, 0, 3);
  const auto out = forward(params, stats, y);
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const std::vector<double> col(y.col(j).data(), y.col(j).data() + 5);
    const auto ref = reference::forward(params, stats, col);
    for (Eigen::Index i = 0; i < 12; ++i) EXPECT_NEAR(out(i, j), ref[std::size_t(i)], 1e-12);
  }
}

TEST(MlpForward, RejectsBadInput) {
  const auto params = init_params<double>(1, 8, 4, 1);
  const auto stats = NormStats<double>::identity(4);
  EXPECT_THROW(forward(params, stats, seeded(3, 2, 1)), GeometryError);
  auto y = seeded(4, 2, 1);
  y(1, 1) = std::nan("");
  EXPECT_THROW(forward(params, stats, y), InvalidArgument);
}

TEST(MlpGradient, MatchesCentralDifferences) {
  // M_p = 4, N_p = 8, K = 2, batch 3, double precision.
  const auto params = with_random_biases(init_params<double>(2, 8, 4, 21), 22);
  const NormStats<double> stats{seeded(4, 1, 23).col(0), seeded(4, 1, 24, 0.5, 1.5).col(0)};
  const auto y = seeded(4, 3, 25, 0, 2);
  const auto x = seeded(8, 3, 26, 0, 1);
  const double wd = 1e-3;
  const auto lg = loss_and_grad(params, stats, y, x, wd);

  auto objective = [&](const MlpParams<double>& p) {
    const Matrix<double> d = forward(p, stats, y) - x;
    double decay = 0.0;
    for (const auto& l : p.layers) decay += l.weights.squaredNorm();
    return d.squaredNorm() / 3.0 + wd * decay;
  };
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double analytic, auto&& perturb) {
    auto plus = params, minus = params;
    perturb(plus, h);
    perturb(minus, -h);
    const double numeric = (objective(plus) - objective(minus)) / (2 * h);
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& g = lg.grads.layers[l];
    for (Eigen::Index i = 0; i < g.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < g.weights.cols(); ++j)
        check(g.weights(i, j), [&](MlpParams<double>& p, double d) { p.layers[l].weights(i, j) += d; });
    for (Eigen::Index i = 0; i < g.bias.size(); ++i)
      check(g.bias[i], [&](MlpParams<double>& p, double d) { p.layers[l].bias[i] += d; });
  }
  EXPECT_LT(worst, 1e-4);
  EXPECT_NEAR(lg.objective, objective(params), 1e-12);
}

TEST(MlpGradient, WeightDecaySkipsBiases) {
  const auto params = with_random_biases(init_params<double>(1, 6, 3, 1), 2);
  const auto stats = NormStats<double>::identity(3);
  const auto y = seeded(3, 4, 3), x = seeded(6, 4, 4);
  const auto a = loss_and_grad(params, stats, y, x, 0.0);
  const auto b = loss_and_grad(params, stats, y, x, 0.5);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    EXPECT_LT((b.grads.layers[l].weights - a.grads.layers[l].weights - params.layers[l].weights)
                  .cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(b.grads.layers[l].bias, a.grads.layers[l].bias);
  }
  EXPECT_DOUBLE_EQ(a.mse, b.mse);
}

TEST(MlpGradient, NonFiniteLossDiverges) {
  auto params = init_params<double>(1, 4, 2, 1);
  params.layers.back().weights(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(loss_and_grad(params, NormStats<double>::identity(2), seeded(2, 2, 1), seeded(4, 2, 2), 0.0),
               DivergedError);
}

TEST(Clip, ScalesOnlyAboveThreshold) {
  auto g = init_params<double>(1, 3, 2, 1);
  for (auto& l : g.layers) {
    l.weights.setConstant(1.0);
    l.bias.setConstant(1.0);
  }
  const double norm = std::sqrt(double(g.parameter_count()));
  auto small = g;
  EXPECT_DOUBLE_EQ(clip_gradients(small, 100.0), norm);
  EXPECT_EQ(small.layers[0].weights, g.layers[0].weights);
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), norm);
  EXPECT_NEAR(std::sqrt(g.squared_norm()), 1.0, 1e-12);
  EXPECT_NEAR(g.layers[1].bias[0], 1.0 / norm, 1e-12);
}

TEST(Sgd, ScheduleDropsAfterConfiguredIteration) {
  const auto p = init_params<double>(1, 2, 2, 1);
  SgdOptimizer<double> opt({.learning_rate = 0.01, .drop_factor = 10, .drop_iteration = 3000000}, p);
  EXPECT_DOUBLE_EQ(opt.learning_rate_at(1), 0.01);
  EXPECT_DOUBLE_EQ(opt.learning_rate_at(3000000), 0.01);
  EXPECT_DOUBLE_EQ(opt.learning_rate_at(3000001), 0.001);
  EXPECT_EQ(scaled_schedule(20000).drop_iteration, 15000u);
}

TEST(Sgd, MomentumRecurrenceByHand) {
  // Scalar problem: one parameter vector, constant gradient g.
  auto p = init_params<double>(1, 1, 1, 1);
  for (auto& l : p.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
  SgdOptimizer<double> opt({.learning_rate = 0.1, .drop_iteration = 0, .momentum = 0.9, .clip_norm = 0}, p);
  auto grads = p.zeros_like();
  grads.layers[0].weights(0, 0) = 1.0;
  // v1 = -0.1, theta1 = -0.1; v2 = -0.19, theta2 = -0.29; v3 = -0.271, theta3 = -0.561
  const double expect[] = {-0.1, -0.29, -0.561};
  for (double e : expect) {
    auto g = grads;
    opt.step(p, g);
    EXPECT_NEAR(p.layers[0].weights(0, 0), e, 1e-15);
  }
  EXPECT_EQ(opt.iteration(), 3u);
  EXPECT_EQ(p.layers[1].weights(0, 0), 0.0);
}

TEST(Sgd, StepClipsGradients) {
  auto p = init_params<double>(1, 1, 1, 1);
  const double w0 = p.layers[0].weights(0, 0);
  SgdOptimizer<double> opt({.learning_rate = 1.0, .drop_iteration = 0, .momentum = 0.0, .clip_norm = 10.0}, p);
  auto g = p.zeros_like();
  g.layers[0].weights(0, 0) = 1000.0;
  EXPECT_DOUBLE_EQ(opt.step(p, g), 1000.0);
  EXPECT_NEAR(p.layers[0].weights(0, 0), w0 - 10.0, 1e-12);
}

TEST(MlpModel, SaveLoadIsExact) {
  fixtures::TempDir dir("mlp_rt");
  const auto params = with_random_biases(init_params<double>(2, 16, 4, 3), 4).cast<float>();
  const NormStats<float> stats{Vector<float>::Constant(4, 0.5f), Vector<float>::Constant(4, 2.0f)};
  const MlpModel model(params, stats, 0xabc);
  model.save(dir.file("n.scsn"));
  const auto back = MlpModel::load(dir.file("n.scsn"));
  EXPECT_EQ(back.mask_hash(), 0xabcu);
  ASSERT_EQ(back.params().layers.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(back.params().layers[l].weights, params.layers[l].weights);
    EXPECT_EQ(back.params().layers[l].bias, params.layers[l].bias);
  }
  EXPECT_EQ(back.stats().stddev, stats.stddev);
  EXPECT_EQ(fixtures::file_hash(dir.file("n.scsn")), fixtures::stream_hash(back));
}

TEST(MlpModel, CorruptFileRejected) {
  const MlpModel model(init_params<float>(1, 8, 2, 1), NormStats<float>::identity(2), 1);
  std::stringstream ss;
  model.save(ss);
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(MlpModel::load(truncated), FormatError);
  // Zero the stddev block: not a valid normalization.
  std::string bad = bytes;
  std::fill(bad.begin() + 4 + 2 + 12 + 8 + 8, bad.begin() + 4 + 2 + 12 + 8 + 16, '\0');
  std::stringstream b(bad);
  EXPECT_THROW(MlpModel::load(b), FormatError);
}

TEST(MlpModel, DecodeIsClampedForward) {
  const auto params = with_random_biases(init_params<double>(1, 8, 3, 7), 8);
  const MlpModel model(params.cast<float>(), NormStats<float>::identity(3), 0);
  const auto y = seeded(3, 5000, 9, -20, 20);  // spans several decode chunks
  const auto out = model.decode_batch(y);
  const Matrix<float> raw = forward(params.cast<float>(), NormStats<float>::identity(3), Matrix<float>(y.cast<float>()));
  EXPECT_GE(out.minCoeff(), 0.0);
  EXPECT_LE(out.maxCoeff(), 1.0);
  EXPECT_LT((out - raw.cast<double>().cwiseMax(0.0).cwiseMin(1.0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(TrainMlp, LossDecreasesAndIsDeterministic) {
  const auto set = small_set(400, 1);
  TrainConfig cfg;
  cfg.hidden_layers = 2;
  cfg.batch_size = 50;
  cfg.iterations = 600;
  cfg.eval_interval = 100;
  cfg.validation_fraction = 0.1;
  cfg.sgd = scaled_schedule(cfg.iterations);
  const auto a = train_mlp(set, cfg);
  ASSERT_EQ(a.log.size(), 6u);
  EXPECT_LT(a.log.back().val_mse, 0.5 * a.log.front().val_mse);
  EXPECT_DOUBLE_EQ(a.log.back().learning_rate, 0.001);
  EXPECT_EQ(a.iterations_run, 600u);
  EXPECT_EQ(a.model.mask_hash(), set.mask_hash);
  const auto b = train_mlp(set, cfg);
  EXPECT_EQ(fixtures::stream_hash(a.model), fixtures::stream_hash(b.model));
  // Checkpoint is the best validation point.
  double best = 1e9;
  for (const auto& r : a.log) best = std::min(best, r.val_mse);
  EXPECT_DOUBLE_EQ(a.best_val_mse, best);
}

TEST(TrainMlp, EarlyStopAtTarget) {
  const auto set = small_set(200, 2);
  TrainConfig cfg;
  cfg.hidden_layers = 1;
  cfg.batch_size = 20;
  cfg.iterations = 100000;
  cfg.eval_interval = 50;
  cfg.validation_fraction = 0.0;
  cfg.target_val_mse = 2e-3;
  const auto r = train_mlp(set, cfg);
  EXPECT_LT(r.iterations_run, cfg.iterations);
  EXPECT_LT(r.best_val_mse, 2e-3);
}

TEST(TrainMlp, DivergenceCarriesCheckpoint) {
  const auto set = small_set(100, 3);
  TrainConfig cfg;
  cfg.hidden_layers = 2;
  cfg.batch_size = 10;
  cfg.iterations = 2000;
  cfg.eval_interval = 1;
  cfg.sgd.learning_rate = 50.0;
  cfg.sgd.clip_norm = 0.0;
  try {
    train_mlp(set, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergedError& e) {
    EXPECT_EQ(e.kind(), "diverged");
    ASSERT_TRUE(e.checkpoint());
    EXPECT_TRUE(e.checkpoint()->params().all_finite());
  }
}

TEST(TrainMlp, RejectsBadConfig) {
  const auto set = small_set(10, 4);
  TrainConfig cfg;
  cfg.iterations = 1;
  cfg.batch_size = 0;
  EXPECT_THROW(train_mlp(set, cfg), InvalidArgument);
  cfg.batch_size = 5;
  cfg.validation_fraction = 1.0;
  EXPECT_THROW(train_mlp(set, cfg), InvalidArgument);
}

TEST(TrainLog, CsvHasHeaderAndRows) {
  std::ostringstream out;
  write_train_log_csv({{1000, 0.01, 0.5, 0.25}, {2000, 0.001, 0.4, 0.2}}, out);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "iteration,lr,train_mse,val_mse");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
