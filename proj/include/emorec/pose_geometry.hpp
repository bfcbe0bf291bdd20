#ifndef EMOREC_POSE_GEOMETRY_HPP
#define EMOREC_POSE_GEOMETRY_HPP

#include <array>
#include <string>
#include <vector>

#include "emorec/core.hpp"

namespace emorec::pose {

/// Indices of the named body points within a 20-point landmark frame.
/// The defaults assign slots 0..19 in declaration order; ingestion remaps
/// external landmark sets onto this convention via an index map.
struct SkeletonSchema {
  int head_top = 0;
  int head = 1;
  int neck = 2;
  int back = 3;
  int chest = 4;
  int r_shoulder = 5;
  int r_elbow = 6;
  int r_wrist = 7;
  int r_hand = 8;
  int l_shoulder = 9;
  int l_elbow = 10;
  int l_wrist = 11;
  int l_hand = 12;
  int r_hip = 13;
  int l_hip = 14;
  int r_knee = 15;
  int r_foot = 16;
  int l_knee = 17;
  int l_foot = 18;
  int root = 19;

  std::array<int, 20> all() const {
    return {head_top, head,    neck,    back,   chest,  r_shoulder, r_elbow,
            r_wrist,  r_hand,  l_shoulder, l_elbow, l_wrist, l_hand, r_hip,
            l_hip,    r_knee,  r_foot,  l_knee, l_foot, root};
  }

  /// Throws ConfigError unless all 20 indices are distinct and in [0,20).
  void validate() const;
};

inline constexpr int kPostureFeatureCount = 24;

/// 24-entry posture feature vector: 10 angles, 8 distances, 5 triangle areas
/// and 1 bounding-box measure, all normalized into [0,1].
struct PostureVisualFeatures {
  std::array<double, kPostureFeatureCount> values{};

  static const std::array<std::string, kPostureFeatureCount>& names();
};

/// Interior angle at `vertex` between the rays vertex->a and vertex->b,
/// in [0, pi]. Returns 0 when either ray is shorter than 1e-9.
double angle_at(Point2 vertex, Point2 a, Point2 b);

/// |cross(b-a, c-a)| / 2.
double triangle_area(Point2 a, Point2 b, Point2 c);

/// Computes the 24 posture features from a validated landmark frame.
///
/// Normalization: angles / pi; distances / visible-landmark bounding-box
/// diagonal; areas / (box width * box height / 2); the final entry is
/// box area / frame area. The hips reference point is the midpoint of the
/// two hip landmarks. The bounding box spans the visible landmarks.
///
/// Throws DegeneratePoseError when a landmark the features require is
/// invisible (the message names it) or when the bounding box has zero area.
PostureVisualFeatures compute_posture_features(const LandmarkFrame& frame,
                                               const SkeletonSchema& schema);

}  // namespace emorec::pose

#endif  // EMOREC_POSE_GEOMETRY_HPP
