#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace tcs {

/// Anything that maps measurement vectors to video blocks. Implementations
/// must be safe to call concurrently.
class PatchDecoder {
 public:
  virtual ~PatchDecoder() = default;

  virtual std::size_t measurement_size() const = 0;  // M_p
  virtual std::size_t block_size() const = 0;        // N_p
  virtual std::uint64_t mask_hash() const = 0;

  /// Columns of `measurements` (M_p x n) are decoded to columns of the
  /// result (N_p x n), clamped to [0, 1].
  virtual Eigen::MatrixXd decode_batch(const Eigen::Ref<const Eigen::MatrixXd>& measurements) const = 0;
};

}  // namespace tcs
