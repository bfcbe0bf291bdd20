#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "emorec/pose_geometry.hpp"
#include "emorec/rng.hpp"
#include "test_util.hpp"

using namespace emorec;
using namespace emorec::pose;

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Straight-from-definition oracle, kept independent of the implementation:
// acos-based angles, shoelace areas, explicit normalizers.
// ---------------------------------------------------------------------------

double oracle_angle(Point2 v, Point2 a, Point2 b) {
  const double ux = a.x - v.x, uy = a.y - v.y;
  const double vx = b.x - v.x, vy = b.y - v.y;
  const double lu = std::sqrt(ux * ux + uy * uy);
  const double lv = std::sqrt(vx * vx + vy * vy);
  if (lu < 1e-9 || lv < 1e-9) return 0.0;
  double c = (ux * vx + uy * vy) / (lu * lv);
  c = std::max(-1.0, std::min(1.0, c));
  return std::acos(c);
}

double oracle_dist(Point2 a, Point2 b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
}

double oracle_area(Point2 a, Point2 b, Point2 c) {
  // Shoelace form.
  return std::abs(a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y)) /
         2.0;
}

std::array<double, 24> oracle_features(const LandmarkFrame& f,
                                       const SkeletonSchema& s) {
  const auto p = [&](int i) { return f.points[static_cast<size_t>(i)]; };
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (!f.visibility[static_cast<size_t>(i)]) continue;
    min_x = std::min(min_x, p(i).x);
    max_x = std::max(max_x, p(i).x);
    min_y = std::min(min_y, p(i).y);
    max_y = std::max(max_y, p(i).y);
  }
  const double bw = max_x - min_x, bh = max_y - min_y;
  const double diag = std::sqrt(bw * bw + bh * bh);
  const double half_box = bw * bh / 2.0;

  const Point2 hips = {(p(s.r_hip).x + p(s.l_hip).x) / 2.0,
                       (p(s.r_hip).y + p(s.l_hip).y) / 2.0};
  const Point2 up_neck = {p(s.neck).x, p(s.neck).y - 1.0};
  const Point2 up_hips = {hips.x, hips.y - 1.0};

  std::array<double, 24> v{};
  v[0] = oracle_angle(p(s.neck), p(s.r_shoulder), p(s.l_shoulder)) / kPi;
  v[1] = oracle_angle(p(s.r_shoulder), p(s.neck), p(s.l_shoulder)) / kPi;
  v[2] = oracle_angle(p(s.l_shoulder), p(s.neck), p(s.r_shoulder)) / kPi;
  v[3] = oracle_angle(p(s.neck), up_neck, p(s.back)) / kPi;
  v[4] = oracle_angle(p(s.neck), p(s.head), p(s.back)) / kPi;
  v[5] = oracle_angle(p(s.r_shoulder), p(s.r_elbow), p(s.neck)) / kPi;
  v[6] = oracle_angle(p(s.l_shoulder), p(s.l_elbow), p(s.neck)) / kPi;
  v[7] = oracle_angle(p(s.r_elbow), p(s.r_shoulder), p(s.r_hand)) / kPi;
  v[8] = oracle_angle(p(s.l_elbow), p(s.l_shoulder), p(s.l_hand)) / kPi;
  v[9] = oracle_angle(hips, up_hips, p(s.neck)) / kPi;
  v[10] = oracle_dist(p(s.r_hand), hips) / diag;
  v[11] = oracle_dist(p(s.l_hand), hips) / diag;
  v[12] = oracle_dist(p(s.r_foot), hips) / diag;
  v[13] = oracle_dist(p(s.l_foot), hips) / diag;
  v[14] = oracle_dist(p(s.r_hand), p(s.r_shoulder)) / diag;
  v[15] = oracle_dist(p(s.l_hand), p(s.l_shoulder)) / diag;
  v[16] = oracle_dist(p(s.r_elbow), hips) / diag;
  v[17] = oracle_dist(p(s.l_elbow), hips) / diag;
  v[18] = oracle_area(p(s.r_hand), p(s.l_hand), p(s.neck)) / half_box;
  v[19] = oracle_area(p(s.r_shoulder), p(s.l_shoulder), p(s.neck)) / half_box;
  v[20] = oracle_area(p(s.r_foot), p(s.l_foot), hips) / half_box;
  v[21] = oracle_area(p(s.r_hand), p(s.l_hand), hips) / half_box;
  v[22] = oracle_area(p(s.r_elbow), p(s.l_elbow), p(s.neck)) / half_box;
  v[23] = (bw * bh) / (f.frame_width * f.frame_height);
  return v;
}

LandmarkFrame random_frame(Rng& rng) {
  LandmarkFrame f;
  f.frame_width = rng.uniform(60.0, 400.0);
  f.frame_height = rng.uniform(60.0, 400.0);
  for (int i = 0; i < kLandmarkCount; ++i) {
    f.points.push_back({rng.uniform(0.0, f.frame_width),
                        rng.uniform(0.0, f.frame_height)});
    f.visibility.push_back(true);
  }
  return validate_landmark_frame(std::move(f));
}

LandmarkFrame standing_pose() {
  LandmarkFrame f;
  f.frame_width = 100;
  f.frame_height = 100;
  f.points.assign(kLandmarkCount, {50, 50});
  f.visibility.assign(kLandmarkCount, true);
  const SkeletonSchema s;
  auto set = [&f](int i, double x, double y) {
    f.points[static_cast<size_t>(i)] = {x, y};
  };
  set(s.head_top, 50, 8);
  set(s.head, 50, 14);
  set(s.neck, 50, 30);
  set(s.chest, 50, 38);
  set(s.back, 50, 44);
  set(s.root, 50, 50);
  set(s.r_shoulder, 30, 30);
  set(s.l_shoulder, 70, 30);
  set(s.r_elbow, 26, 42);
  set(s.l_elbow, 74, 42);
  set(s.r_wrist, 25, 52);
  set(s.l_wrist, 75, 52);
  set(s.r_hand, 24, 55);
  set(s.l_hand, 76, 55);
  set(s.r_hip, 42, 56);
  set(s.l_hip, 58, 56);
  set(s.r_knee, 42, 74);
  set(s.l_knee, 58, 74);
  set(s.r_foot, 40, 93);
  set(s.l_foot, 60, 93);
  return validate_landmark_frame(std::move(f));
}

}  // namespace

TEST_CASE("angle_at basics") {
  CHECK_NEAR(angle_at({0, 0}, {1, 0}, {0, 1}), kPi / 2, 1e-12);
  CHECK_NEAR(angle_at({0, 0}, {1, 0}, {-1, 0}), kPi, 1e-12);
  CHECK(angle_at({0, 0}, {0, 0}, {1, 1}) == 0.0);  // degenerate ray
  CHECK_NEAR(angle_at({2, 3}, {5, 3}, {2, 9}), kPi / 2, 1e-12);
  const double nan = std::nan("");
  CHECK_THROWS_AS(angle_at({nan, 0}, {1, 0}, {0, 1}), InvalidInputError);
}

TEST_CASE("triangle_area basics") {
  CHECK(triangle_area({0, 0}, {4, 0}, {0, 3}) == 6.0);
  CHECK(triangle_area({0, 0}, {1, 1}, {2, 2}) == 0.0);
  // Shoelace cross-check.
  CHECK(triangle_area({0, 0}, {5, 0}, {2, 7}) == 17.5);
  CHECK_NEAR(triangle_area({0, 0}, {5, 0}, {2, 7}),
             oracle_area({0, 0}, {5, 0}, {2, 7}), 1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(triangle_area({inf, 0}, {1, 0}, {0, 1}), InvalidInputError);
}

TEST_CASE("skeleton schema validation") {
  SkeletonSchema ok;
  CHECK_NOTHROW(ok.validate());
  SkeletonSchema dup;
  dup.head = dup.neck;
  CHECK_THROWS_AS(dup.validate(), ConfigError);
  SkeletonSchema out;
  out.root = 20;
  CHECK_THROWS_AS(out.validate(), ConfigError);
}

TEST_CASE("collinear shoulders give angle feature 1") {
  const SkeletonSchema s;
  const auto f = compute_posture_features(standing_pose(), s);
  // neck (50,30) between shoulders (30,30) and (70,30): straight line.
  CHECK_NEAR(f.values[0], 1.0, 1e-12);
}

TEST_CASE("coincident hands and neck give zero area") {
  const SkeletonSchema s;
  auto pose = standing_pose();
  pose.points[static_cast<size_t>(s.r_hand)] =
      pose.points[static_cast<size_t>(s.neck)];
  pose.points[static_cast<size_t>(s.l_hand)] =
      pose.points[static_cast<size_t>(s.neck)];
  const auto f = compute_posture_features(pose, s);
  CHECK(f.values[18] == 0.0);
}

TEST_CASE("random frames match the independent oracle") {
  const SkeletonSchema s;
  Rng rng(20240811);
  for (int trial = 0; trial < 300; ++trial) {
    const auto frame = random_frame(rng);
    const auto got = compute_posture_features(frame, s);
    const auto want = oracle_features(frame, s);
    for (int i = 0; i < kPostureFeatureCount; ++i) {
      CAPTURE(trial);
      CAPTURE(i);
      CHECK_NEAR(got.values[static_cast<size_t>(i)],
                 want[static_cast<size_t>(i)], 1e-9);
      CHECK(got.values[static_cast<size_t>(i)] >= 0.0);
      CHECK(got.values[static_cast<size_t>(i)] <= 1.0);
    }
  }
}

TEST_CASE("translation leaves the 23 non-box features alone") {
  const SkeletonSchema s;
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    LandmarkFrame f;
    f.frame_width = 500;
    f.frame_height = 500;
    for (int i = 0; i < kLandmarkCount; ++i) {
      f.points.push_back({rng.uniform(100.0, 250.0), rng.uniform(100.0, 250.0)});
      f.visibility.push_back(true);
    }
    f = validate_landmark_frame(std::move(f));
    auto shifted = f;
    const double dx = rng.uniform(-80.0, 80.0), dy = rng.uniform(-80.0, 80.0);
    for (auto& p : shifted.points) {
      p.x += dx;
      p.y += dy;
    }
    shifted = validate_landmark_frame(std::move(shifted));

    const auto a = compute_posture_features(f, s);
    const auto b = compute_posture_features(shifted, s);
    for (int i = 0; i < 23; ++i) {
      CHECK_NEAR(a.values[static_cast<size_t>(i)],
                 b.values[static_cast<size_t>(i)], 1e-9);
    }
  }
}

TEST_CASE("uniform scaling about the centroid fixes the first 23 features") {
  const SkeletonSchema s;
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    LandmarkFrame f;
    f.frame_width = 600;
    f.frame_height = 600;
    for (int i = 0; i < kLandmarkCount; ++i) {
      f.points.push_back({rng.uniform(200.0, 400.0), rng.uniform(200.0, 400.0)});
      f.visibility.push_back(true);
    }
    f = validate_landmark_frame(std::move(f));

    double cx = 0, cy = 0;
    for (const auto& p : f.points) {
      cx += p.x;
      cy += p.y;
    }
    cx /= kLandmarkCount;
    cy /= kLandmarkCount;
    const double scale = rng.uniform(0.6, 1.4);
    auto scaled = f;
    for (auto& p : scaled.points) {
      p.x = cx + (p.x - cx) * scale;
      p.y = cy + (p.y - cy) * scale;
    }
    scaled = validate_landmark_frame(std::move(scaled));

    const auto a = compute_posture_features(f, s);
    const auto b = compute_posture_features(scaled, s);
    for (int i = 0; i < 23; ++i) {
      CHECK_NEAR(a.values[static_cast<size_t>(i)],
                 b.values[static_cast<size_t>(i)], 1e-9);
    }
  }
}

TEST_CASE("left-right mirror swaps paired features") {
  const SkeletonSchema s;
  // Feature index pairs that trade places under a left-right mirror.
  const std::pair<int, int> swapped[] = {{1, 2},   {5, 6},   {7, 8},
                                         {10, 11}, {12, 13}, {14, 15},
                                         {16, 17}};
  const int fixed[] = {0, 3, 4, 9, 18, 19, 20, 21, 22, 23};
  const std::pair<int, int> slot_pairs[] = {
      {s.r_shoulder, s.l_shoulder}, {s.r_elbow, s.l_elbow},
      {s.r_wrist, s.l_wrist},       {s.r_hand, s.l_hand},
      {s.r_hip, s.l_hip},           {s.r_knee, s.l_knee},
      {s.r_foot, s.l_foot}};

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_frame(rng);
    auto mirrored = f;
    for (int i = 0; i < kLandmarkCount; ++i) {
      mirrored.points[static_cast<size_t>(i)].x =
          f.frame_width - f.points[static_cast<size_t>(i)].x;
    }
    for (const auto& [r, l] : slot_pairs) {
      std::swap(mirrored.points[static_cast<size_t>(r)],
                mirrored.points[static_cast<size_t>(l)]);
    }
    mirrored = validate_landmark_frame(std::move(mirrored));

    const auto a = compute_posture_features(f, s);
    const auto b = compute_posture_features(mirrored, s);
    for (const auto& [r, l] : swapped) {
      CHECK_NEAR(a.values[static_cast<size_t>(r)],
                 b.values[static_cast<size_t>(l)], 1e-9);
      CHECK_NEAR(a.values[static_cast<size_t>(l)],
                 b.values[static_cast<size_t>(r)], 1e-9);
    }
    for (int i : fixed) {
      CHECK_NEAR(a.values[static_cast<size_t>(i)],
                 b.values[static_cast<size_t>(i)], 1e-9);
    }
  }
}

TEST_CASE("invisible required landmark is a degenerate pose") {
  const SkeletonSchema s;
  auto pose = standing_pose();
  pose.visibility[static_cast<size_t>(s.r_hand)] = false;
  try {
    compute_posture_features(pose, s);
    FAIL("expected DegeneratePoseError");
  } catch (const DegeneratePoseError& e) {
    CHECK(std::string(e.what()).find("r_hand") != std::string::npos);
  }

  // Optional point (wrist) may be hidden without consequence.
  auto ok = standing_pose();
  ok.visibility[static_cast<size_t>(s.r_wrist)] = false;
  CHECK_NOTHROW(compute_posture_features(ok, s));
}

TEST_CASE("zero-area bounding box is a degenerate pose") {
  const SkeletonSchema s;
  LandmarkFrame f;
  f.frame_width = 100;
  f.frame_height = 100;
  for (int i = 0; i < kLandmarkCount; ++i) {
    f.points.push_back({50.0, 1.0 + i});  // all x equal: zero-width box
    f.visibility.push_back(true);
  }
  f = validate_landmark_frame(std::move(f));
  CHECK_THROWS_AS(compute_posture_features(f, s), DegeneratePoseError);
}
