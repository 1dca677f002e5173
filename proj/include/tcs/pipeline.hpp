#pragma once

#include <optional>
#include <vector>

#include "tcs/decoder.hpp"
#include "tcs/encoder.hpp"
#include "tcs/mask.hpp"
#include "tcs/volume.hpp"

namespace tcs {

/// Number of patches covering each pixel; identical for every decoder.
Image overlap_weights(const Geometry& geometry);

/// Decodes every stride-aligned window of `coded` and averages the
/// overlapping blocks. Refuses (HashMismatchError) when the decoder was
/// trained for a different mask than the one that produced `coded`.
VideoVolume reconstruct(const CodedFrame& coded, const PatchDecoder& decoder, const Geometry& geometry);

/// Scatter-add of decoded blocks (N_p x patch_count, columns in patch
/// order) into an averaged volume. Rows of patches are processed in
/// interleaved passes so no two threads touch the same pixel.
VideoVolume average_blocks(const Eigen::Ref<const Eigen::MatrixXd>& blocks, const Geometry& geometry);

/// Per-pixel temporal-mean estimate: every frame gets y(x, y) divided by
/// the number of open slots at that pixel.
VideoVolume temporal_mean_baseline(const CodedFrame& coded, const MeasurementMask& mask);

struct SequenceResult {
  VideoVolume video;
  std::vector<CodedFrame> coded;
  std::vector<double> realized_snr_db;  // empty without noise
};

/// Encodes consecutive groups of t frames (optionally with measurement
/// noise on each coded frame), reconstructs each group independently and
/// concatenates the results.
SequenceResult reconstruct_sequence(const VideoVolume& video, const MeasurementMask& mask,
                                    const PatchDecoder& decoder, const Geometry& patch_geometry,
                                    const NoiseSpec& noise = NoiseSpec::none());

/// Same grouping for the temporal-mean baseline.
VideoVolume baseline_sequence(const VideoVolume& video, const MeasurementMask& mask);

}  // namespace tcs
