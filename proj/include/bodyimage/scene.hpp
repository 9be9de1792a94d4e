#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bodyimage/image.hpp"

namespace bodyimage::scene {

struct Point {
  double x = 0.0;  // column axis, pixels
  double y = 0.0;  // row axis (pointing down), pixels
};

struct Segment {
  Point start;
  Point end;
};

using Rgb = std::array<float, 3>;

/// Planar articulated arm. Lengths and widths are in render pixels.
struct ArmGeometry {
  std::vector<double> link_lengths;
  std::vector<double> link_widths;
  Point base_anchor;
  double base_orientation = 0.0;  // radians, 0 = +x, positive turns toward +y
  std::vector<Rgb> body_color;

  std::size_t joint_count() const { return link_lengths.size(); }
  /// Throws Error(kConfig) on count mismatch or non-positive sizes.
  void validate() const;
};

struct JointRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Raw joint angles in radians.
struct JointVector {
  std::vector<double> angles;
};

/// Throws Error(kConfig) when counts differ or an angle leaves its range.
void validate_joints(const JointVector& joints, const std::vector<JointRange>& ranges);

/// Link segments ordered base to tip; link k points along
/// base_orientation + sum_{j<=k} angles[j].
std::vector<Segment> forward_kinematics(const JointVector& joints, const ArmGeometry& geometry);

struct ArmLayer {
  Image color;   // body_color where covered, 0 elsewhere
  Mask coverage;
};

/// Capsule rasterization: a pixel (center at col+0.5, row+0.5) is covered
/// when it lies within width/2 of some link segment. No anti-aliasing.
ArmLayer rasterize_arm(const std::vector<Segment>& segments, const ArmGeometry& geometry, Extent canvas);

/// Distance from p to the closed segment s.
double point_segment_distance(Point p, const Segment& s);

struct BackgroundStyle {
  int min_shapes = 3;
  int max_shapes = 10;
  bool random_colors = true;
  // Used verbatim when random_colors is false.
  Rgb upper_color{0.8f, 0.8f, 0.75f};
  Rgb lower_color{0.3f, 0.25f, 0.2f};
  // Split row as a fraction of the height.
  double split_min = 0.35;
  double split_max = 0.65;
};

/// Two-stripe base (bright upper, dark lower) plus random rectangles and
/// ellipses; a pure function of the seed.
Image render_background(std::uint64_t seed, Extent canvas, const BackgroundStyle& style);

struct RenderedScene {
  Image image;
  Mask body_mask;
  JointVector joints;
};

/// Arm layer over background: arm where covered, background elsewhere.
RenderedScene compose_scene(const ArmLayer& arm, const Image& background, JointVector joints = {});

}  // namespace bodyimage::scene
