#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tcs/volume.hpp"

namespace tcs {

/// 8-bit frames as stored on disk, row-major, frame after frame.
struct Video8 {
  int width = 0;
  int height = 0;
  int frames = 0;
  std::vector<std::uint8_t> levels;
};

struct Frame8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> levels;
};

/// Binary (P5) or ASCII (P2) graymap, maxval up to 255. Color P6 files are
/// accepted only with `rgb_to_gray`, using BT.601 luma weights.
Frame8 read_pnm(const std::filesystem::path& path, bool rgb_to_gray = false);
void write_pgm(const std::filesystem::path& path, const Frame8& frame);

/// A directory of .pgm files (sorted by name), a raw+JSON sidecar (either
/// file may be named) or a single PNM frame.
Video8 read_video8(const std::filesystem::path& path, bool rgb_to_gray = false);

/// Writes `<dir>/frame_00000.pgm`, ... .
void write_pgm_sequence(const std::filesystem::path& dir, const Video8& video);
/// Writes `<stem>.raw` (u8 frames) and `<stem>.json` {width, height, frames, dtype, data}.
void write_raw_video(const std::filesystem::path& stem, const Video8& video);

VideoVolume to_volume(const Video8& video);
/// Rounds [0, 1] intensities to 8-bit levels.
Video8 to_video8(const VideoVolume& volume);

/// Extends each frame to multiples of (multiple_x, multiple_y) by mirroring
/// across the right and bottom edges (edge pixel not repeated).
VideoVolume pad_reflect(const VideoVolume& volume, int multiple_x, int multiple_y);

struct IngestedVideo {
  VideoVolume volume;          // padded, normalized, whole groups of t frames
  int original_width = 0;      // crop back to this size on export
  int original_height = 0;
  int source_frames = 0;
  int dropped_frames = 0;
};

IngestedVideo ingest_video(const Video8& video, int block_width, int block_height, int temporal_len);
IngestedVideo ingest_video(const std::filesystem::path& path, int block_width, int block_height,
                           int temporal_len, bool rgb_to_gray = false);

enum class VideoFormat { PgmSequence, RawJson };

/// Crops to the given size (when positive), quantizes to 8 bits and writes.
void export_video(const VideoVolume& volume, const std::filesystem::path& destination,
                  VideoFormat format, int crop_width = 0, int crop_height = 0);

/// `<stem>.raw` holds float32 measurements row-major; `<stem>.json` holds
/// {W_f, H_f, t, mask_hash, crop_width, crop_height, data}.
struct CodedFrameFile {
  CodedFrame coded;
  int crop_width = 0;
  int crop_height = 0;
};
void write_coded_frame(const std::filesystem::path& stem, const CodedFrame& coded, int crop_width = 0,
                       int crop_height = 0);
/// Accepts either the .json sidecar or the .raw file next to it.
CodedFrameFile read_coded_frame(const std::filesystem::path& path);

}  // namespace tcs
