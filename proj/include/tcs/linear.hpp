#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tcs/decoder.hpp"
#include "tcs/error.hpp"

namespace tcs {

/// Running sums A = sum x_i y_i^T and B = sum y_i y_i^T, kept in 64-bit.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  MomentAccumulator(std::size_t block_size, std::size_t measurement_size);

  /// Columns of `blocks` (N_p x n) pair with columns of `measurements` (M_p x n).
  void accumulate(const Eigen::Ref<const Eigen::MatrixXd>& blocks,
                  const Eigen::Ref<const Eigen::MatrixXd>& measurements);
  void merge(const MomentAccumulator& other);

  const Eigen::MatrixXd& cross() const { return cross_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  std::uint64_t count() const { return count_; }
  std::size_t block_size() const { return std::size_t(cross_.rows()); }
  std::size_t measurement_size() const { return std::size_t(gram_.rows()); }

 private:
  Eigen::MatrixXd cross_;
  Eigen::MatrixXd gram_;
  std::uint64_t count_ = 0;
};

struct SolveOptions {
  double ridge = 0.0;
  /// Falls back to the eigen-decomposition pseudo-inverse instead of failing
  /// on a singular system.
  bool pseudo_inverse = false;
  /// Eigenvalues below tolerance * max eigenvalue count as zero.
  double singular_tolerance = 1e-13;
  double condition_warning = 1e12;
};

/// Raised when B + ridge*I is singular. `empty_measurements` lists the
/// measurement indices (patch pixels) whose row of B is identically zero,
/// i.e. pixels the mask never samples.
class SolveError : public Error {
 public:
  SolveError(const std::string& message, std::size_t rank_deficiency,
             std::vector<std::size_t> empty_measurements)
      : Error("no_solution", message), rank_deficiency_(rank_deficiency),
        empty_measurements_(std::move(empty_measurements)) {}

  std::size_t rank_deficiency() const { return rank_deficiency_; }
  const std::vector<std::size_t>& empty_measurements() const { return empty_measurements_; }

 private:
  std::size_t rank_deficiency_;
  std::vector<std::size_t> empty_measurements_;
};

/// x = W_p y, clamped to [0, 1] on decode.
class LinearModel : public PatchDecoder {
 public:
  LinearModel() = default;
  LinearModel(Eigen::MatrixXd weights, std::uint64_t mask_hash, std::uint64_t samples, double ridge);

  const Eigen::MatrixXd& weights() const { return weights_; }
  std::uint64_t samples() const { return samples_; }
  double ridge() const { return ridge_; }
  /// Condition number of the solved system; 0 when not known (loaded model).
  double condition_number() const { return condition_number_; }
  bool ill_conditioned() const { return ill_conditioned_; }

  std::size_t measurement_size() const override { return std::size_t(weights_.cols()); }
  std::size_t block_size() const override { return std::size_t(weights_.rows()); }
  std::uint64_t mask_hash() const override { return mask_hash_; }

  Eigen::VectorXd decode_unclamped(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::VectorXd decode_patch(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::MatrixXd decode_batch(const Eigen::Ref<const Eigen::MatrixXd>& measurements) const override;

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static LinearModel load(std::istream& in);
  static LinearModel load(const std::string& path);

 private:
  friend LinearModel solve(const MomentAccumulator&, std::uint64_t, const SolveOptions&);

  Eigen::MatrixXd weights_;
  std::uint64_t mask_hash_ = 0;
  std::uint64_t samples_ = 0;
  double ridge_ = 0.0;
  double condition_number_ = 0.0;
  bool ill_conditioned_ = false;
};

/// W_p = A (B + ridge I)^{-1}, by Cholesky of the symmetric positive-definite
/// system. Throws SolveError when the system is singular and
/// pseudo_inverse is off.
LinearModel solve(const MomentAccumulator& moments, std::uint64_t mask_hash,
                  const SolveOptions& options = {});

}  // namespace tcs
