#include "bodyimage/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bodyimage/error.hpp"
#include "bodyimage/rng.hpp"

namespace bodyimage::scene {

void ArmGeometry::validate() const {
  const std::size_t n = link_lengths.size();
  require(n > 0, ErrorCode::kConfig, "arm: at least one link required");
  require(link_widths.size() == n && body_color.size() == n, ErrorCode::kConfig,
          "arm: link_lengths, link_widths and body_color must have equal counts");
  for (std::size_t k = 0; k < n; ++k) {
    require(link_lengths[k] > 0.0, ErrorCode::kConfig, "arm: link length " + std::to_string(k) + " must be positive");
    require(link_widths[k] > 0.0, ErrorCode::kConfig, "arm: link width " + std::to_string(k) + " must be positive");
  }
}

void validate_joints(const JointVector& joints, const std::vector<JointRange>& ranges) {
  require(joints.angles.size() == ranges.size(), ErrorCode::kConfig, "joints: count does not match ranges");
  for (std::size_t n = 0; n < ranges.size(); ++n) {
    const double a = joints.angles[n];
    require(a >= ranges[n].lo && a <= ranges[n].hi, ErrorCode::kConfig,
            "joints: angle " + std::to_string(n) + " outside its range");
  }
}

std::vector<Segment> forward_kinematics(const JointVector& joints, const ArmGeometry& geometry) {
  require(joints.angles.size() == geometry.joint_count(), ErrorCode::kConfig,
          "forward_kinematics: joint count differs from link count");
  std::vector<Segment> segments;
  segments.reserve(joints.angles.size());
  Point p = geometry.base_anchor;
  double heading = geometry.base_orientation;
  for (std::size_t k = 0; k < joints.angles.size(); ++k) {
    heading += joints.angles[k];
    const Point q{p.x + geometry.link_lengths[k] * std::cos(heading),
                  p.y + geometry.link_lengths[k] * std::sin(heading)};
    segments.push_back({p, q});
    p = q;
  }
  return segments;
}

double point_segment_distance(Point p, const Segment& s) {
  const double dx = s.end.x - s.start.x;
  const double dy = s.end.y - s.start.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x - s.start.x) * dx + (p.y - s.start.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double ex = s.start.x + t * dx - p.x;
  const double ey = s.start.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

ArmLayer rasterize_arm(const std::vector<Segment>& segments, const ArmGeometry& geometry, Extent canvas) {
  require(canvas.height > 0 && canvas.width > 0, ErrorCode::kInvalidArgument, "rasterize_arm: empty canvas");
  require(segments.size() <= geometry.joint_count(), ErrorCode::kConfig,
          "rasterize_arm: more segments than links");
  ArmLayer layer{Image(canvas), Mask(canvas)};

  for (int r = 0; r < canvas.height; ++r) {
    for (int c = 0; c < canvas.width; ++c) {
      const Point center{c + 0.5, r + 0.5};
      double best = std::numeric_limits<double>::infinity();
      int owner = -1;
      for (std::size_t k = 0; k < segments.size(); ++k) {
        const double d = point_segment_distance(center, segments[k]);
        if (d <= 0.5 * geometry.link_widths[k] && d < best) {
          best = d;
          owner = static_cast<int>(k);
        }
      }
      if (owner < 0) continue;
      for (int ch = 0; ch < kChannels; ++ch) {
        layer.color.at(r, c, ch) = geometry.body_color[owner][ch];
        layer.coverage.set(r, c, ch, true);
      }
    }
  }
  return layer;
}

namespace {

Rgb random_tint(Rng& rng, double lo, double hi) {
  // Shared brightness with a small per-channel tint.
  const double base = rng.uniform(lo, hi);
  Rgb c{};
  for (auto& v : c) v = static_cast<float>(std::clamp(base + rng.uniform(-0.08, 0.08), 0.0, 1.0));
  return c;
}

}  // namespace

Image render_background(std::uint64_t seed, Extent canvas, const BackgroundStyle& style) {
  require(canvas.height > 0 && canvas.width > 0, ErrorCode::kInvalidArgument, "render_background: empty canvas");
  require(style.min_shapes >= 0 && style.max_shapes >= style.min_shapes, ErrorCode::kConfig,
          "background: shape count range invalid");
  Rng rng(seed);
  Image img(canvas);

  Rgb upper = style.upper_color;
  Rgb lower = style.lower_color;
  if (style.random_colors) {
    upper = random_tint(rng, 0.55, 0.95);
    lower = random_tint(rng, 0.05, 0.45);
  }
  const double split_frac = rng.uniform(style.split_min, style.split_max);
  const int split = static_cast<int>(std::lround(split_frac * canvas.height));
  for (int r = 0; r < canvas.height; ++r) {
    const Rgb& band = r < split ? upper : lower;
    for (int c = 0; c < canvas.width; ++c) {
      for (int ch = 0; ch < kChannels; ++ch) img.at(r, c, ch) = band[ch];
    }
  }

  const int shapes = rng.between(style.min_shapes, style.max_shapes);
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.0, canvas.width);
    const double cy = rng.uniform(0.0, canvas.height);
    const double rx = rng.uniform(0.05, 0.25) * canvas.width;
    const double ry = rng.uniform(0.05, 0.25) * canvas.height;
    Rgb color{};
    for (auto& v : color) v = static_cast<float>(rng.uniform());

    const int r0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int r1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(cy + ry)));
    const int c0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
    const int c1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(cx + rx)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double u = (c + 0.5 - cx) / rx;
        const double v = (r + 0.5 - cy) / ry;
        const bool inside = ellipse ? (u * u + v * v <= 1.0) : (std::abs(u) <= 1.0 && std::abs(v) <= 1.0);
        if (!inside) continue;
        for (int ch = 0; ch < kChannels; ++ch) img.at(r, c, ch) = color[ch];
      }
    }
  }
  return img;
}

RenderedScene compose_scene(const ArmLayer& arm, const Image& background, JointVector joints) {
  require(arm.color.extent == background.extent && arm.coverage.extent == background.extent, ErrorCode::kShape,
          "compose_scene: arm layer and background dimensions differ");
  RenderedScene out{background, arm.coverage, std::move(joints)};
  for (std::size_t i = 0; i < out.image.data.size(); ++i) {
    if (arm.coverage.data[i]) out.image.data[i] = arm.color.data[i];
  }
  return out;
}

}  // namespace bodyimage::scene
