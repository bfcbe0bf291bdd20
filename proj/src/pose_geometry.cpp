#include "emorec/pose_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace emorec::pose {

namespace {

constexpr double kRayEpsilon = 1e-9;

void require_finite(Point2 p, const char* what) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw InvalidInputError(std::string("non-finite coordinate in ") + what);
  }
}

double distance(Point2 a, Point2 b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

void SkeletonSchema::validate() const {
  std::set<int> seen;
  for (int idx : all()) {
    if (idx < 0 || idx >= kLandmarkCount) {
      throw ConfigError("skeleton index " + std::to_string(idx) +
                        " out of [0,20)");
    }
    if (!seen.insert(idx).second) {
      throw ConfigError("skeleton index " + std::to_string(idx) +
                        " used twice");
    }
  }
}

const std::array<std::string, kPostureFeatureCount>&
PostureVisualFeatures::names() {
  static const std::array<std::string, kPostureFeatureCount> n = {
      "angle_neck_shoulders",
      "angle_r_shoulder_neck_l_shoulder",
      "angle_l_shoulder_neck_r_shoulder",
      "angle_neck_vertical_back",
      "angle_neck_head_back",
      "angle_r_shoulder_r_elbow_neck",
      "angle_l_shoulder_l_elbow_neck",
      "angle_r_elbow_r_shoulder_r_hand",
      "angle_l_elbow_l_shoulder_l_hand",
      "angle_hips_vertical_neck",
      "dist_r_hand_hips",
      "dist_l_hand_hips",
      "dist_r_foot_hips",
      "dist_l_foot_hips",
      "dist_r_hand_r_shoulder",
      "dist_l_hand_l_shoulder",
      "dist_r_elbow_hips",
      "dist_l_elbow_hips",
      "area_hands_neck",
      "area_shoulders_neck",
      "area_feet_hips",
      "area_hands_hips",
      "area_elbows_neck",
      "bounding_box",
  };
  return n;
}

double angle_at(Point2 vertex, Point2 a, Point2 b) {
  require_finite(vertex, "angle_at");
  require_finite(a, "angle_at");
  require_finite(b, "angle_at");
  const double ux = a.x - vertex.x, uy = a.y - vertex.y;
  const double vx = b.x - vertex.x, vy = b.y - vertex.y;
  const double lu = std::hypot(ux, uy);
  const double lv = std::hypot(vx, vy);
  if (lu < kRayEpsilon || lv < kRayEpsilon) return 0.0;
  const double dot = ux * vx + uy * vy;
  const double cross = ux * vy - uy * vx;
  // atan2 form is exact over the whole [0, pi] range, including near the
  // collinear endpoints where acos loses digits.
  return std::atan2(std::abs(cross), dot);
}

double triangle_area(Point2 a, Point2 b, Point2 c) {
  require_finite(a, "triangle_area");
  require_finite(b, "triangle_area");
  require_finite(c, "triangle_area");
  const double cross =
      (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return std::abs(cross) / 2.0;
}

PostureVisualFeatures compute_posture_features(const LandmarkFrame& frame,
                                               const SkeletonSchema& schema) {
  schema.validate();
  if (frame.points.size() != kLandmarkCount ||
      frame.visibility.size() != kLandmarkCount) {
    throw SchemaError("landmark frame must be validated before feature "
                      "extraction");
  }

  const auto pt = [&](int idx) -> Point2 {
    return frame.points[static_cast<size_t>(idx)];
  };
  const auto visible = [&](int idx) -> bool {
    return frame.visibility[static_cast<size_t>(idx)];
  };

  // Landmarks the feature list actually references.
  const std::pair<int, const char*> required[] = {
      {schema.head, "head"},           {schema.neck, "neck"},
      {schema.back, "back"},           {schema.r_shoulder, "r_shoulder"},
      {schema.l_shoulder, "l_shoulder"}, {schema.r_elbow, "r_elbow"},
      {schema.l_elbow, "l_elbow"},     {schema.r_hand, "r_hand"},
      {schema.l_hand, "l_hand"},       {schema.r_hip, "r_hip"},
      {schema.l_hip, "l_hip"},         {schema.r_foot, "r_foot"},
      {schema.l_foot, "l_foot"},
  };
  std::string missing;
  for (const auto& [idx, name] : required) {
    if (!visible(idx)) {
      if (!missing.empty()) missing += ", ";
      missing += name;
    }
  }
  if (!missing.empty()) {
    throw DegeneratePoseError("required landmarks invisible: " + missing);
  }

  // Bounding box over the visible landmarks.
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (!visible(i)) continue;
    min_x = std::min(min_x, pt(i).x);
    max_x = std::max(max_x, pt(i).x);
    min_y = std::min(min_y, pt(i).y);
    max_y = std::max(max_y, pt(i).y);
  }
  const double box_w = max_x - min_x;
  const double box_h = max_y - min_y;
  if (!(box_w > 0.0) || !(box_h > 0.0)) {
    throw DegeneratePoseError("landmark bounding box has zero area");
  }
  const double diag = std::hypot(box_w, box_h);
  const double area_norm = box_w * box_h / 2.0;

  const Point2 head = pt(schema.head);
  const Point2 neck = pt(schema.neck);
  const Point2 back = pt(schema.back);
  const Point2 r_sh = pt(schema.r_shoulder);
  const Point2 l_sh = pt(schema.l_shoulder);
  const Point2 r_el = pt(schema.r_elbow);
  const Point2 l_el = pt(schema.l_elbow);
  const Point2 r_ha = pt(schema.r_hand);
  const Point2 l_ha = pt(schema.l_hand);
  const Point2 r_ft = pt(schema.r_foot);
  const Point2 l_ft = pt(schema.l_foot);
  const Point2 hips = {(pt(schema.r_hip).x + pt(schema.l_hip).x) / 2.0,
                       (pt(schema.r_hip).y + pt(schema.l_hip).y) / 2.0};
  // Image coordinates grow downward, so "up" is -y.
  const Point2 up_from_neck = {neck.x, neck.y - 1.0};
  const Point2 up_from_hips = {hips.x, hips.y - 1.0};

  PostureVisualFeatures f;
  auto& v = f.values;
  const double pi = std::numbers::pi;

  v[0] = angle_at(neck, r_sh, l_sh) / pi;
  v[1] = angle_at(r_sh, neck, l_sh) / pi;
  v[2] = angle_at(l_sh, neck, r_sh) / pi;
  v[3] = angle_at(neck, up_from_neck, back) / pi;
  v[4] = angle_at(neck, head, back) / pi;
  v[5] = angle_at(r_sh, r_el, neck) / pi;
  v[6] = angle_at(l_sh, l_el, neck) / pi;
  v[7] = angle_at(r_el, r_sh, r_ha) / pi;
  v[8] = angle_at(l_el, l_sh, l_ha) / pi;
  v[9] = angle_at(hips, up_from_hips, neck) / pi;

  v[10] = distance(r_ha, hips) / diag;
  v[11] = distance(l_ha, hips) / diag;
  v[12] = distance(r_ft, hips) / diag;
  v[13] = distance(l_ft, hips) / diag;
  v[14] = distance(r_ha, r_sh) / diag;
  v[15] = distance(l_ha, l_sh) / diag;
  v[16] = distance(r_el, hips) / diag;
  v[17] = distance(l_el, hips) / diag;

  v[18] = triangle_area(r_ha, l_ha, neck) / area_norm;
  v[19] = triangle_area(r_sh, l_sh, neck) / area_norm;
  v[20] = triangle_area(r_ft, l_ft, hips) / area_norm;
  v[21] = triangle_area(r_ha, l_ha, hips) / area_norm;
  v[22] = triangle_area(r_el, l_el, neck) / area_norm;

  v[23] = (box_w * box_h) / (frame.frame_width * frame.frame_height);

  for (double& x : v) {
    if (!(x >= -1e-12 && x <= 1.0 + 1e-12)) {
      std::ostringstream os;
      os << "posture feature " << x << " escaped [0,1]";
      throw NumericalError(os.str());
    }
    x = std::clamp(x, 0.0, 1.0);
  }
  return f;
}

}  // namespace emorec::pose
