#include "support.hpp"

#include "immpi/errors.hpp"
#include "immpi/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace immpi;
using namespace immpi::testing;

namespace {

Camera camera_at(const Eigen::Matrix3d& r, const Eigen::Vector3d& t, const Intrinsics& k) {
  Camera cam;
  cam.intrinsics = k;
  cam.world_to_camera = RigidTransform(r, t);
  cam.depth_range = {2.0, 20.0};
  return cam;
}

}  // namespace

TEST(RigidTransform, RejectsNonOrthonormalAndReflections) {
  Eigen::Matrix3d scaled = 1.01 * Eigen::Matrix3d::Identity();
  EXPECT_THROW(RigidTransform(scaled, Eigen::Vector3d::Zero()), InvalidCamera);
  Eigen::Matrix3d mirror = Eigen::Matrix3d::Identity();
  mirror(2, 2) = -1.0;
  EXPECT_THROW(RigidTransform(mirror, Eigen::Vector3d::Zero()), InvalidCamera);
}

TEST(RigidTransform, InverseAndComposition) {
  std::mt19937_64 rng(3);
  const RigidTransform a(small_rotation(rng, 1.0), Eigen::Vector3d(1, -2, 3));
  const RigidTransform b(small_rotation(rng, 1.0), Eigen::Vector3d(-0.5, 0.2, 4));
  const Eigen::Vector3d p(0.3, -0.7, 2.0);
  EXPECT_LT((a.inverse()(a(p)) - p).norm(), 1e-12);
  EXPECT_LT(((a * b)(p) - a(b(p))).norm(), 1e-12);
  EXPECT_LT((RigidTransform::from_matrix(a.matrix()).matrix() - a.matrix()).norm(), 1e-15);
}

TEST(Intrinsics, InverseMatchesGeneralInverse) {
  const Intrinsics k{300.0, 280.0, 100.5, 90.25, 200, 180};
  EXPECT_LT((k.inverse() - k.matrix().inverse()).cwiseAbs().maxCoeff(), 1e-15);
  Intrinsics bad = k;
  bad.fx = 0.0;
  EXPECT_THROW(bad.inverse(), InvalidCamera);
}

TEST(Projection, BackprojectKeepsDepthAndRoundTrips) {
  const Intrinsics k{120.0, 110.0, 31.5, 27.0, 64, 56};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 64.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d px(u(rng), u(rng));
    const double z = 1.0 + u(rng);
    const Eigen::Vector3d p = backproject(px, z, k);
    EXPECT_EQ(p.z(), z);
    EXPECT_LT((project(p, k) - px).norm(), 1e-10);
  }
}

TEST(RelativeTransform, IdenticalCamerasGiveIdentity) {
  std::mt19937_64 rng(5);
  const Camera cam = camera_at(small_rotation(rng, 0.5), Eigen::Vector3d(1, 2, 3), simple_intrinsics(32, 32, 40));
  const RigidTransform rel = relative_transform(cam, cam);
  EXPECT_LT((rel.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RelativeTransform, TranslatedTargetMapsSharedPoints) {
  const Intrinsics k = simple_intrinsics(32, 32, 40);
  std::mt19937_64 rng(6);
  const Eigen::Matrix3d r = small_rotation(rng, 0.4);
  const Camera ref = camera_at(r, Eigen::Vector3d(0.1, 0.2, 0.3), k);
  const Camera tgt = camera_at(r, Eigen::Vector3d(0.1, 0.2, 0.3) + r * Eigen::Vector3d(-1.0, 0.5, 0.0), k);
  const RigidTransform rel = relative_transform(ref, tgt);
  EXPECT_LT((rel.rotation() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::Vector3d world(0.4, -1.0, 6.0);
  EXPECT_LT((rel(tgt.world_to_camera(world)) - ref.world_to_camera(world)).norm(), 1e-12);
}

TEST(RelativeTransform, RandomPairsMapWorldPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const Intrinsics k = simple_intrinsics(32, 32, 40);
  for (int trial = 0; trial < 10; ++trial) {
    const Camera ref = camera_at(small_rotation(rng, 3.0), Eigen::Vector3d(u(rng), u(rng), u(rng)), k);
    const Camera tgt = camera_at(small_rotation(rng, 3.0), Eigen::Vector3d(u(rng), u(rng), u(rng)), k);
    const RigidTransform rel = relative_transform(ref, tgt);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d p(u(rng), u(rng), u(rng));
      EXPECT_LT((ref.world_to_camera(p) - rel(tgt.world_to_camera(p))).norm(), 1e-9);
    }
  }
}

TEST(PlaneHomography, IdentityPoseSameIntrinsicsIsIdentity) {
  const Camera cam = camera_at(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), simple_intrinsics(64, 48, 70));
  const Eigen::Matrix3d h = plane_homography(cam, cam, relative_transform(cam, cam), 7.5);
  EXPECT_LT((h - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PlaneHomography, IntrinsicChangeOnly) {
  const Camera ref = camera_at(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), Intrinsics{70, 72, 30, 20, 64, 48});
  const Camera tgt = camera_at(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), Intrinsics{90, 85, 33, 25, 64, 48});
  const Eigen::Matrix3d h = plane_homography(ref, tgt, relative_transform(ref, tgt), 5.0);
  const Eigen::Matrix3d expected = ref.intrinsics.matrix() * tgt.intrinsics.matrix().inverse();
  EXPECT_LT((h - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PlaneHomography, AxialTranslationMatchesPointTransfer) {
  const Intrinsics k = simple_intrinsics(64, 64, 64);
  const Camera ref = camera_at(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), k);
  const Camera tgt = camera_at(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, -0.8), k);
  const RigidTransform rel = relative_transform(ref, tgt);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 63.0);
  for (double z : {3.0, 6.5}) {
    const Eigen::Matrix3d h = plane_homography(ref, tgt, rel, z);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector2d p(u(rng), u(rng));
      EXPECT_LT((apply_homography(h, p) - transfer_through_plane(ref, tgt, p, z)).norm(), 1e-6);
    }
  }
}

TEST(PlaneHomography, GeneralPosesMatchPointTransfer) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Camera ref = camera_at(small_rotation(rng, 0.3), Eigen::Vector3d(u(rng), u(rng), u(rng)),
                                 Intrinsics{80, 75, 40, 30, 80, 60});
    const Camera tgt = jittered_camera(ref, rng, 0.2, 1.0, 0.2);
    const RigidTransform rel = relative_transform(ref, tgt);
    const double z = 4.0 + 8.0 * u(rng);
    const Eigen::Matrix3d h = plane_homography(ref, tgt, rel, z);
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector2d p(80.0 * u(rng), 60.0 * u(rng));
      EXPECT_LT((apply_homography(h, p) - transfer_through_plane(ref, tgt, p, z)).norm(), 1e-6);
    }
  }
}

TEST(PlaneHomography, PlaneThroughTargetCenterIsDegenerate) {
  const Intrinsics k = simple_intrinsics(32, 32, 32);
  const Camera ref = camera_at(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), k);
  // Target center sits at Z_ref = 5.
  const Camera tgt = camera_at(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, -5), k);
  EXPECT_THROW(plane_homography(ref, tgt, relative_transform(ref, tgt), 5.0), DegenerateHomography);
}

TEST(InverseDepthSampling, TwoPlanesInUnitRange) {
  const DepthSampling s = sample_inverse_depths(1.0, 2.0, 2);
  ASSERT_EQ(s.count(), 2);
  EXPECT_NEAR(s.depths[0], 4.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.depths[1], 2.0);
}

TEST(InverseDepthSampling, SinglePlaneSitsAtFar) {
  const DepthSampling s = sample_inverse_depths(2.0 - 1e-9, 2.0, 1);
  ASSERT_EQ(s.count(), 1);
  EXPECT_DOUBLE_EQ(s.depths[0], 2.0);
}

TEST(InverseDepthSampling, DefaultCountAndErrors) {
  EXPECT_EQ(kDefaultPlaneCount, 32);
  EXPECT_EQ(sample_inverse_depths(1.0, 100.0, kDefaultPlaneCount).count(), 32);
  EXPECT_THROW(sample_inverse_depths(1.0, 2.0, 0), InvalidArgument);
  EXPECT_THROW(sample_inverse_depths(2.0, 1.0, 4), InvalidArgument);
}

TEST(InverseDepthSampling, ReciprocalsAreAffineAndAscending) {
  for (int d : {2, 3, 8, 32, 100}) {
    const DepthSampling s = sample_inverse_depths(0.5, 40.0, d);
    s.validate();
    // near-to-far storage: reciprocal of entry j is 1/z_far + (d - 1 - j)/d * span
    const double span = 1.0 / 0.5 - 1.0 / 40.0;
    for (int j = 0; j < d; ++j) {
      const double expected = 1.0 / 40.0 + static_cast<double>(d - 1 - j) / d * span;
      EXPECT_NEAR(1.0 / s.depths[j], expected, 1e-12 * expected);
    }
  }
}

TEST(PlaneSpacing, PrincipalPointUsesDepthGaps) {
  const Intrinsics k{50, 50, 10, 12, 21, 25};
  const DepthSampling s{{1.0, 2.0, 3.0}};
  const std::vector<double> d = plane_spacing({10, 12}, s, k);
  ASSERT_EQ(d.size(), 3u);
  for (double v : d) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(PlaneSpacing, OffAxisPixelScalesBySqrtTwo) {
  const Intrinsics k{50, 50, 10, 12, 100, 100};
  const DepthSampling s{{1.0, 2.0}};
  const std::vector<double> d = plane_spacing({60, 12}, s, k);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0], std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(d[1], std::sqrt(2.0), 1e-14);
}

TEST(PlaneSpacing, SinglePlaneUsesConfiguredConstant) {
  const Intrinsics k{50, 50, 10, 12, 100, 100};
  const DepthSampling s{{4.0}};
  EXPECT_DOUBLE_EQ(plane_spacing({60, 70}, s, k)[0], kDefaultSinglePlaneSpacing);
  EXPECT_DOUBLE_EQ(plane_spacing({60, 70}, s, k, 0.25)[0], 0.25);
}

TEST(LookAt, ForwardAxisPointsAtTarget) {
  const Eigen::Vector3d eye(1.0, -0.5, 0.0);
  const Eigen::Vector3d target(0.0, 0.0, 10.0);
  const RigidTransform pose = look_at(eye, target, Eigen::Vector3d(0, -1, 0));
  const Eigen::Vector3d in_cam = pose(target);
  EXPECT_NEAR(in_cam.x(), 0.0, 1e-12);
  EXPECT_NEAR(in_cam.y(), 0.0, 1e-12);
  EXPECT_GT(in_cam.z(), 0.0);
  EXPECT_LT(pose(eye).norm(), 1e-12);
}
