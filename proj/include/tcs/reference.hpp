#pragma once

// Straight-line serial versions of the parallel kernels. They share no
// code with the production paths and exist for cross-checking and
// benchmarking.

#include <vector>

#include "tcs/decoder.hpp"
#include "tcs/mask.hpp"
#include "tcs/mlp.hpp"
#include "tcs/volume.hpp"

namespace tcs::reference {

/// Per-pixel triple loop over (y, x, k).
CodedFrame encode(const VideoVolume& volume, const MeasurementMask& mask);

/// One patch at a time, accumulated in patch order with a running count.
VideoVolume reconstruct(const CodedFrame& coded, const PatchDecoder& decoder, const Geometry& geometry);

/// Scalar-loop forward pass of one measurement vector.
std::vector<double> forward(const MlpParams<double>& params, const NormStats<double>& stats,
                            const std::vector<double>& measurement);

}  // namespace tcs::reference
