#include "tcs/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tcs/binary.hpp"
#include "tcs/error.hpp"

namespace fs = std::filesystem;

namespace tcs {

namespace {

/// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(char(c));
  }
  return token;
}

int pnm_int(std::istream& in, const fs::path& path) {
  const std::string token = pnm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used == token.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("bad PNM header in " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad JSON in " + path.string() + ": " + e.what());
  }
}

template <typename T>
T json_field(const nlohmann::json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw FormatError(path.string() + " lacks field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(path.string() + ": field '" + key + "' has the wrong type");
  }
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

}  // namespace

Frame8 read_pnm(const fs::path& path, bool rgb_to_gray) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P2" && magic != "P6")
    throw FormatError(path.string() + " is not a PGM/PPM file");
  if (magic == "P6" && !rgb_to_gray)
    throw FormatError(path.string() + " is a color image; enable grayscale conversion");
  Frame8 frame;
  frame.width = pnm_int(in, path);
  frame.height = pnm_int(in, path);
  const int maxval = pnm_int(in, path);
  if (frame.width <= 0 || frame.height <= 0 || maxval <= 0 || maxval > 255)
    throw FormatError(path.string() + ": only 8-bit images are supported");
  const std::size_t n = std::size_t(frame.width) * frame.height;
  frame.levels.resize(n);
  auto scale = [maxval](int v) {
    return std::uint8_t(std::lround(std::min(v, maxval) * 255.0 / maxval));
  };
  if (magic == "P2") {
    for (auto& v : frame.levels) v = scale(pnm_int(in, path));
  } else if (magic == "P5") {
    in.read(reinterpret_cast<char*>(frame.levels.data()), std::streamsize(n));
    if (!in) throw FormatError(path.string() + " is truncated");
    if (maxval != 255)
      for (auto& v : frame.levels) v = scale(v);
  } else {
    std::vector<std::uint8_t> rgb(3 * n);
    in.read(reinterpret_cast<char*>(rgb.data()), std::streamsize(rgb.size()));
    if (!in) throw FormatError(path.string() + " is truncated");
    for (std::size_t i = 0; i < n; ++i) {
      const double luma = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
      frame.levels[i] = scale(int(std::lround(luma)));
    }
  }
  return frame;
}

void write_pgm(const fs::path& path, const Frame8& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.levels.data()), std::streamsize(frame.levels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Video8 read_video8(const fs::path& path, bool rgb_to_gray) {
  Video8 video;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      const auto ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm"))
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no PGM frames in " + path.string());
    for (const auto& f : files) {
      Frame8 frame = read_pnm(f, rgb_to_gray);
      if (video.frames == 0) {
        video.width = frame.width;
        video.height = frame.height;
      } else if (frame.width != video.width || frame.height != video.height) {
        throw FormatError("inconsistent frame size in " + f.string());
      }
      video.levels.insert(video.levels.end(), frame.levels.begin(), frame.levels.end());
      ++video.frames;
    }
    return video;
  }
  if (path.extension() == ".raw") return read_video8(fs::path(path).replace_extension(".json"));
  if (path.extension() == ".json") {
    const auto j = read_json(path);
    video.width = json_field<int>(j, "width", path);
    video.height = json_field<int>(j, "height", path);
    video.frames = json_field<int>(j, "frames", path);
    const auto dtype = j.value("dtype", std::string("u8"));
    if (dtype != "u8") throw FormatError(path.string() + ": only u8 raw video is supported");
    if (video.width <= 0 || video.height <= 0 || video.frames <= 0)
      throw FormatError(path.string() + ": bad dimensions");
    const fs::path data =
        path.parent_path() / j.value("data", path.stem().string() + ".raw");
    std::ifstream in(data, std::ios::binary);
    if (!in) throw IoError("cannot open " + data.string());
    video.levels.resize(std::size_t(video.width) * video.height * video.frames);
    in.read(reinterpret_cast<char*>(video.levels.data()), std::streamsize(video.levels.size()));
    if (!in) throw FormatError(data.string() + " is shorter than its sidecar claims");
    return video;
  }
  if (fs::is_regular_file(path)) {
    Frame8 frame = read_pnm(path, rgb_to_gray);
    return {frame.width, frame.height, 1, std::move(frame.levels)};
  }
  throw IoError("cannot read video from " + path.string());
}

void write_pgm_sequence(const fs::path& dir, const Video8& video) {
  fs::create_directories(dir);
  const std::size_t plane = std::size_t(video.width) * video.height;
  for (int k = 0; k < video.frames; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.pgm", k);
    Frame8 frame{video.width, video.height,
                 {video.levels.begin() + std::ptrdiff_t(plane * k),
                  video.levels.begin() + std::ptrdiff_t(plane * (k + 1))}};
    write_pgm(dir / name, frame);
  }
}

void write_raw_video(const fs::path& stem, const Video8& video) {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  const fs::path raw = fs::path(stem).concat(".raw");
  std::ofstream out(raw, std::ios::binary);
  if (!out) throw IoError("cannot create " + raw.string());
  out.write(reinterpret_cast<const char*>(video.levels.data()), std::streamsize(video.levels.size()));
  nlohmann::json j{{"width", video.width},
                   {"height", video.height},
                   {"frames", video.frames},
                   {"dtype", "u8"},
                   {"data", raw.filename().string()}};
  std::ofstream side(fs::path(stem).concat(".json"));
  side << j.dump(2) << '\n';
  if (!out || !side) throw IoError("write failed: " + stem.string());
}

VideoVolume to_volume(const Video8& video) {
  VideoVolume volume(video.width, video.height, video.frames);
  auto dst = volume.values();
  for (std::size_t i = 0; i < video.levels.size(); ++i) dst[i] = video.levels[i] / 255.0;
  return volume;
}

Video8 to_video8(const VideoVolume& volume) {
  Video8 video{volume.width(), volume.height(), volume.frames(), {}};
  video.levels.resize(volume.size());
  const auto src = volume.values();
  for (std::size_t i = 0; i < src.size(); ++i)
    video.levels[i] = std::uint8_t(std::lround(std::clamp(src[i], 0.0, 1.0) * 255.0));
  return video;
}

VideoVolume pad_reflect(const VideoVolume& volume, int multiple_x, int multiple_y) {
  const int w = volume.width();
  const int h = volume.height();
  const int pw = (w + multiple_x - 1) / multiple_x * multiple_x;
  const int ph = (h + multiple_y - 1) / multiple_y * multiple_y;
  if (pw == w && ph == h) return volume;
  VideoVolume out(pw, ph, volume.frames());
  for (int k = 0; k < volume.frames(); ++k)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) out.at(x, y, k) = volume.at(reflect(x, w), reflect(y, h), k);
  return out;
}

IngestedVideo ingest_video(const Video8& video, int block_width, int block_height, int temporal_len) {
  if (block_width < 1 || block_height < 1 || temporal_len < 1)
    throw InvalidArgument("block sizes must be positive");
  if (video.frames < temporal_len)
    throw GeometryError("video has fewer frames than one capture (" + std::to_string(video.frames) +
                        " < " + std::to_string(temporal_len) + ")");
  IngestedVideo result;
  result.original_width = video.width;
  result.original_height = video.height;
  result.source_frames = video.frames;
  const int kept = video.frames / temporal_len * temporal_len;
  result.dropped_frames = video.frames - kept;
  VideoVolume full = to_volume(video);
  result.volume = pad_reflect(kept == video.frames ? full : full.slice(0, kept), block_width, block_height);
  return result;
}

IngestedVideo ingest_video(const fs::path& path, int block_width, int block_height, int temporal_len,
                           bool rgb_to_gray) {
  return ingest_video(read_video8(path, rgb_to_gray), block_width, block_height, temporal_len);
}

void export_video(const VideoVolume& volume, const fs::path& destination, VideoFormat format,
                  int crop_width, int crop_height) {
  const bool crop = crop_width > 0 && crop_height > 0 &&
                    (crop_width != volume.width() || crop_height != volume.height());
  const Video8 video = to_video8(crop ? volume.crop(crop_width, crop_height) : volume);
  if (format == VideoFormat::PgmSequence)
    write_pgm_sequence(destination, video);
  else
    write_raw_video(destination, video);
}

void write_coded_frame(const fs::path& stem, const CodedFrame& coded, int crop_width, int crop_height) {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  const fs::path raw = fs::path(stem).concat(".raw");
  std::ofstream out(raw, std::ios::binary);
  if (!out) throw IoError("cannot create " + raw.string());
  const auto values = coded.measurements.values();
  std::vector<float> f(values.begin(), values.end());
  out.write(reinterpret_cast<const char*>(f.data()), std::streamsize(f.size() * sizeof(float)));
  nlohmann::json j{{"W_f", coded.measurements.width()},
                   {"H_f", coded.measurements.height()},
                   {"t", coded.temporal_len},
                   {"mask_hash", hex64(coded.mask_hash)},
                   {"crop_width", crop_width > 0 ? crop_width : coded.measurements.width()},
                   {"crop_height", crop_height > 0 ? crop_height : coded.measurements.height()},
                   {"dtype", "f32"},
                   {"data", raw.filename().string()}};
  std::ofstream side(fs::path(stem).concat(".json"));
  side << j.dump(2) << '\n';
  if (!out || !side) throw IoError("write failed: " + stem.string());
}

CodedFrameFile read_coded_frame(const fs::path& path) {
  fs::path sidecar = path;
  if (sidecar.extension() != ".json") sidecar.replace_extension(".json");
  const auto j = read_json(sidecar);
  CodedFrameFile file;
  const int w = json_field<int>(j, "W_f", sidecar);
  const int h = json_field<int>(j, "H_f", sidecar);
  file.coded.temporal_len = json_field<int>(j, "t", sidecar);
  file.coded.mask_hash = parse_hex64(json_field<std::string>(j, "mask_hash", sidecar));
  file.crop_width = j.value("crop_width", w);
  file.crop_height = j.value("crop_height", h);
  if (w <= 0 || h <= 0 || file.coded.temporal_len <= 0) throw FormatError("bad coded frame sidecar");
  const fs::path data = sidecar.parent_path() / j.value("data", sidecar.stem().string() + ".raw");
  std::ifstream in(data, std::ios::binary);
  if (!in) throw IoError("cannot open " + data.string());
  std::vector<float> f(std::size_t(w) * h);
  in.read(reinterpret_cast<char*>(f.data()), std::streamsize(f.size() * sizeof(float)));
  if (!in) throw FormatError(data.string() + " is shorter than its sidecar claims");
  file.coded.measurements = Image(w, h);
  std::copy(f.begin(), f.end(), file.coded.measurements.values().begin());
  return file;
}

}  // namespace tcs
