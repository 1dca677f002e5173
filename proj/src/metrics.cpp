#include "tcs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "tcs/error.hpp"

namespace tcs {

namespace {

void require_same_size(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw GeometryError("frames differ in size");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[std::size_t(i)] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += k[std::size_t(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable 'valid' correlation of a row-major plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int width, int height,
                                 const std::vector<double>& kernel) {
  const int n = int(kernel.size());
  const int ow = width - n + 1;
  const int oh = height - n + 1;
  std::vector<double> horizontal(std::size_t(ow) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += kernel[std::size_t(i)] * plane[std::size_t(y) * width + x + i];
      horizontal[std::size_t(y) * ow + x] = s;
    }
  std::vector<double> out(std::size_t(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += kernel[std::size_t(i)] * horizontal[std::size_t(y + i) * ow + x];
      out[std::size_t(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr(const Image& reference, const Image& test, double peak) {
  require_same_size(reference, test);
  if (reference.size() == 0) throw GeometryError("empty frame");
  double sse = 0.0;
  const auto a = reference.values();
  const auto b = test.values();
  for (std::size_t i = 0; i < a.size(); ++i) sse += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = sse / double(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& reference, const Image& test, const SsimParams& params) {
  require_same_size(reference, test);
  const int w = reference.width();
  const int h = reference.height();
  if (w < params.window || h < params.window)
    throw GeometryError("frame smaller than the SSIM window");

  const auto kernel = gaussian_kernel(params.window, params.sigma);
  const auto a = reference.values();
  const auto b = test.values();
  std::vector<double> xa(a.begin(), a.end()), xb(b.begin(), b.end());
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(xa, w, h, kernel);
  const auto mu_b = filter_valid(xb, w, h, kernel);
  const auto e_aa = filter_valid(aa, w, h, kernel);
  const auto e_bb = filter_valid(bb, w, h, kernel);
  const auto e_ab = filter_valid(ab, w, h, kernel);

  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
    const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / double(mu_a.size());
}

Image quantize_frame(const VideoVolume& video, int frame) {
  Image out(video.width(), video.height());
  const auto src = video.frame(frame);
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = std::round(std::clamp(src[i], 0.0, 1.0) * 255.0);
  return out;
}

SequenceMetrics evaluate_sequence(const VideoVolume& reference, const VideoVolume& test) {
  if (reference.frames() != test.frames())
    throw GeometryError("sequences differ in length (" + std::to_string(reference.frames()) +
                        " vs " + std::to_string(test.frames()) + " frames)");
  if (reference.width() != test.width() || reference.height() != test.height())
    throw GeometryError("sequences differ in frame size");
  SequenceMetrics out;
  out.frames.resize(std::size_t(reference.frames()));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < reference.frames(); ++k) {
    const Image a = quantize_frame(reference, k);
    const Image b = quantize_frame(test, k);
    out.frames[std::size_t(k)] = {k, psnr(a, b), ssim(a, b)};
  }
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  std::size_t finite = 0;
  for (const auto& f : out.frames) {
    if (std::isinf(f.psnr)) {
      ++out.infinite_psnr_frames;
    } else {
      psnr_sum += f.psnr;
      ++finite;
    }
    ssim_sum += f.ssim;
  }
  if (finite > 0) out.mean_psnr = psnr_sum / double(finite);
  if (!out.frames.empty()) out.mean_ssim = ssim_sum / double(out.frames.size());
  return out;
}

void write_metrics_csv(const SequenceMetrics& metrics, std::ostream& out) {
  out << "frame,psnr,ssim\n";
  for (const auto& f : metrics.frames) out << f.frame << ',' << f.psnr << ',' << f.ssim << '\n';
  out << "mean," << metrics.mean_psnr << ',' << metrics.mean_ssim << '\n';
}

void write_metrics_json(const SequenceMetrics& metrics, std::ostream& out) {
  auto number = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (const auto& f : metrics.frames)
    j["frames"].push_back({{"frame", f.frame}, {"psnr", number(f.psnr)}, {"ssim", f.ssim}});
  j["mean_psnr"] = number(metrics.mean_psnr);
  j["mean_ssim"] = metrics.mean_ssim;
  j["infinite_psnr_frames"] = metrics.infinite_psnr_frames;
  out << j.dump(2) << '\n';
}

}  // namespace tcs
