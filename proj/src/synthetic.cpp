#include "tcs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tcs/error.hpp"
#include "tcs/rng.hpp"

namespace tcs {

namespace {

enum class Shape { Disc, Ellipse, Rect };

struct Sprite {
  Shape shape;
  double cx, cy;    // position at frame 0
  double vx, vy;
  double a, b;      // half extents
  double angle;
  double spin;      // radians per frame
  double level;
  double stripe_freq, stripe_angle, stripe_phase;
};

bool inside(const Sprite& s, double dx, double dy, double angle) {
  const double c = std::cos(angle), sn = std::sin(angle);
  const double u = c * dx + sn * dy;
  const double v = -sn * dx + c * dy;
  switch (s.shape) {
    case Shape::Disc:
      return u * u + v * v <= s.a * s.a;
    case Shape::Ellipse:
      return (u * u) / (s.a * s.a) + (v * v) / (s.b * s.b) <= 1.0;
    case Shape::Rect:
      return std::abs(u) <= s.a && std::abs(v) <= s.b;
  }
  return false;
}

}  // namespace

VideoVolume synthesize_video(const SyntheticVideoSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.frames < 1)
    throw InvalidArgument("synthetic video dimensions must be positive");
  Rng rng(spec.seed);
  const double pan_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double pan_x = spec.pan_speed * std::cos(pan_angle);
  const double pan_y = spec.pan_speed * std::sin(pan_angle);

  // Background: smooth gradient plus two low-frequency waves.
  const double bg_level = rng.uniform(0.25, 0.75);
  const double gx = rng.uniform(-0.3, 0.3) / spec.width;
  const double gy = rng.uniform(-0.3, 0.3) / spec.height;
  const double w1 = rng.uniform(0.02, 0.08), w2 = rng.uniform(0.02, 0.08);
  const double p1 = rng.uniform(0.0, 6.3), p2 = rng.uniform(0.0, 6.3);

  const double margin = spec.max_radius + spec.max_speed * spec.frames + std::abs(spec.pan_speed) * spec.frames;
  std::vector<Sprite> sprites;
  for (int i = 0; i < spec.objects; ++i) {
    Sprite s{};
    const double pick = rng.uniform();
    s.shape = pick < 0.4 ? Shape::Disc : (pick < 0.7 ? Shape::Ellipse : Shape::Rect);
    s.a = spec.min_radius * std::pow(spec.max_radius / spec.min_radius, rng.uniform());
    s.b = s.shape == Shape::Disc ? s.a : s.a * rng.uniform(0.3, 1.0);
    s.cx = rng.uniform(-margin * 0.5, spec.width + margin * 0.5);
    s.cy = rng.uniform(-margin * 0.5, spec.height + margin * 0.5);
    const double speed = spec.max_speed * std::sqrt(rng.uniform());
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.vx = speed * std::cos(dir);
    s.vy = speed * std::sin(dir);
    s.angle = rng.uniform(0.0, std::numbers::pi);
    s.spin = rng.uniform(-0.03, 0.03);
    s.level = rng.uniform(0.05, 0.95);
    s.stripe_freq = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.2, 1.2);
    s.stripe_angle = rng.uniform(0.0, std::numbers::pi);
    s.stripe_phase = rng.uniform(0.0, 6.3);
    sprites.push_back(s);
  }

  VideoVolume video(spec.width, spec.height, spec.frames);
  constexpr int ss = 2;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < spec.frames; ++k) {
    std::vector<double> canvas(std::size_t(spec.width * ss) * spec.height * ss);
    const int cw = spec.width * ss;
    const int ch = spec.height * ss;
    const double ox = pan_x * k;
    const double oy = pan_y * k;
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        const double wx = (x + 0.5) / ss + ox;
        const double wy = (y + 0.5) / ss + oy;
        canvas[std::size_t(y) * cw + x] = bg_level + gx * wx + gy * wy +
                                          0.06 * std::sin(w1 * wx + p1) * std::cos(w2 * wy + p2);
      }
    for (const auto& s : sprites) {
      const double cx = s.cx + s.vx * k - ox;
      const double cy = s.cy + s.vy * k - oy;
      const double angle = s.angle + s.spin * k;
      const double reach = std::max(s.a, s.b) * 1.5;
      const int x0 = std::max(0, int(std::floor((cx - reach) * ss)));
      const int x1 = std::min(cw - 1, int(std::ceil((cx + reach) * ss)));
      const int y0 = std::max(0, int(std::floor((cy - reach) * ss)));
      const int y1 = std::min(ch - 1, int(std::ceil((cy + reach) * ss)));
      const double sc = std::cos(s.stripe_angle), sn = std::sin(s.stripe_angle);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double dx = (x + 0.5) / ss - cx;
          const double dy = (y + 0.5) / ss - cy;
          if (!inside(s, dx, dy, angle)) continue;
          double v = s.level;
          if (s.stripe_freq > 0.0)
            v += spec.texture * std::sin(s.stripe_freq * (sc * dx + sn * dy) + s.stripe_phase);
          canvas[std::size_t(y) * cw + x] = v;
        }
    }
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        double sum = 0.0;
        for (int j = 0; j < ss; ++j)
          for (int i = 0; i < ss; ++i) sum += canvas[std::size_t(y * ss + j) * cw + x * ss + i];
        const double v = std::clamp(sum / (ss * ss), 0.0, 1.0);
        video.at(x, y, k) = std::round(v * 255.0) / 255.0;
      }
  }
  return video;
}

}  // namespace tcs
