#include "support.hpp"

#include "immpi/mpi.hpp"
#include "immpi/synth.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace immpi;
using namespace immpi::testing;

TEST(MakeScene, DefaultConfiguration) {
  const SyntheticScene s = make_scene(SynthConfig{});
  EXPECT_EQ(s.ground_truth.width(), 64);
  EXPECT_EQ(s.ground_truth.height(), 64);
  EXPECT_EQ(s.ground_truth.plane_count(), 3);
  ASSERT_EQ(s.scene.views.size(), 8u);
  EXPECT_EQ(s.scene.train, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(s.scene.test, (std::vector<int>{5, 6, 7}));
  EXPECT_EQ(s.scene.views[0].camera, s.ground_truth.reference_camera);
  s.ground_truth.validate();
}

TEST(MakeScene, SeedIsDeterministic) {
  SynthConfig sc;
  sc.seed = 42;
  const SyntheticScene a = make_scene(sc);
  const SyntheticScene b = make_scene(sc);
  EXPECT_EQ(a.ground_truth.planes.values, b.ground_truth.planes.values);
  for (std::size_t i = 0; i < a.scene.views.size(); ++i) {
    EXPECT_EQ(a.scene.views[i].image.data, b.scene.views[i].image.data);
  }
  sc.seed = 43;
  EXPECT_NE(make_scene(sc).ground_truth.planes.values, a.ground_truth.planes.values);
}

TEST(MakeScene, CamerasLookDownWithLimitedTilt) {
  const SyntheticScene s = make_scene(SynthConfig{});
  const Eigen::Vector3d nadir = Eigen::Vector3d::UnitZ();
  for (const View& v : s.scene.views) {
    const Eigen::Vector3d axis = v.camera.world_to_camera.rotation().row(2).transpose();
    EXPECT_LE(std::acos(std::clamp(axis.dot(nadir), -1.0, 1.0)), 25.0 * std::numbers::pi / 180.0);
  }
}

TEST(MakeScene, LayersAtDistinctDepthsWithOpaqueBack) {
  const SyntheticScene s = make_scene(SynthConfig{});
  const MultiplaneImage& gt = s.ground_truth;
  gt.sampling.validate();
  const int back = gt.plane_count() - 1;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) EXPECT_GT(gt.planes.at(back, x, y, 3), 5.0f);
}

TEST(MakeScene, SinglePlaneIsPureHomography) {
  SynthConfig sc;
  sc.planes = 1;
  sc.width = 32;
  sc.height = 32;
  const SyntheticScene s = make_scene(sc);
  const MultiplaneImage& gt = s.ground_truth;
  const View& v = s.scene.views[3];
  const Eigen::Matrix3d h = plane_homographies(gt.reference_camera, gt.sampling, v.camera)[0];
  const double alpha = 1.0 - std::exp(-gt.planes.at(0, 0, 0, 3) * kDefaultSinglePlaneSpacing);
  // Pixel centers in the interior map to bilinear samples of the single plane.
  for (int y = 8; y < 24; y += 3)
    for (int x = 8; x < 24; x += 3) {
      const Eigen::Vector2d q = apply_homography(h, Eigen::Vector2d(x, y));
      const int x0 = static_cast<int>(std::floor(q.x()));
      const int y0 = static_cast<int>(std::floor(q.y()));
      const double fx = q.x() - x0;
      const double fy = q.y() - y0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - fx) * gt.planes.at(0, x0, y0, c) + fx * gt.planes.at(0, x0 + 1, y0, c);
        const double bottom = (1 - fx) * gt.planes.at(0, x0, y0 + 1, c) + fx * gt.planes.at(0, x0 + 1, y0 + 1, c);
        EXPECT_NEAR(v.image.at(x, y, c), alpha * ((1 - fy) * top + fy * bottom), 1e-5);
      }
    }
}

TEST(BruteForce, IdentityViewMatchesDirectComposite) {
  const SyntheticScene s = make_scene(SynthConfig{});
  const RenderOutput direct = composite_reference(s.ground_truth);
  const BruteForceOutput oracle = brute_force_render(s.ground_truth, s.ground_truth.reference_camera);
  for (std::size_t i = 0; i < direct.color.data.size(); ++i) {
    EXPECT_NEAR(oracle.color.data[i], direct.color.data[i], 1e-6);
  }
}

TEST(BruteForce, AgreesWithFastRendererOnSyntheticViews) {
  SynthConfig sc;
  sc.seed = 5;
  const SyntheticScene s = make_scene(sc);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Camera target = jittered_camera(s.scene.views[trial].camera, rng, 0.05, 0.5);
    const RenderOutput fast = render_novel_view(s.ground_truth, target);
    const BruteForceOutput slow = brute_force_render(s.ground_truth, target);
    for (std::size_t i = 0; i < fast.color.data.size(); ++i) {
      ASSERT_NEAR(fast.color.data[i], slow.color.data[i], 1e-5);
    }
    for (std::size_t i = 0; i < fast.depth.data.size(); ++i) {
      if (slow.opacity.data[i] > 0.99f) ASSERT_NEAR(fast.depth.data[i], slow.depth.data[i], 1e-4);
    }
  }
}
