#include "support.hpp"

#include "immpi/activations.hpp"
#include "immpi/adam.hpp"
#include "immpi/errors.hpp"
#include "immpi/generator.hpp"
#include "immpi/metrics.hpp"
#include "immpi/optimize.hpp"
#include "immpi/synth.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace immpi;
using namespace immpi::testing;

TEST(DepthEmbedding, KnownValuesAndShape) {
  const std::vector<double> zero = depth_embedding(0.0, 3);
  const std::vector<double> expected{0, 1, 0, 1, 0, 1};
  ASSERT_EQ(zero.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(zero[i], expected[i], 1e-15);
  const std::vector<double> one = depth_embedding(1.0, 1);
  EXPECT_NEAR(one[0], 0.0, 1e-15);
  EXPECT_NEAR(one[1], -1.0, 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> l(1, 12);
  for (int i = 0; i < 20; ++i) {
    const int n = l(rng);
    EXPECT_EQ(depth_embedding(0.3, n).size(), static_cast<std::size_t>(2 * n));
  }
  EXPECT_THROW(depth_embedding(0.5, 0), InvalidArgument);
}

TEST(Activations, StableAndInvertible) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_GE(softplus(-800.0), 0.0);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  for (double y : {1e-3, 0.5, 3.0, 50.0}) EXPECT_NEAR(softplus(softplus_inverse(y)), y, 1e-9 * y);
  for (double p : {0.02, 0.5, 0.98}) EXPECT_NEAR(sigmoid(logit(p)), p, 1e-12);
}

TEST(Decode, DirectZeroPreactivation) {
  const Parameterization p = Parameterization::direct(5, 4, 3);
  const PlaneStack<double> planes = p.decode();
  for (int i = 0; i < 3; ++i)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) {
        for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(planes.at(i, x, y, c), 0.5);
        EXPECT_DOUBLE_EQ(planes.at(i, x, y, 3), std::log(2.0));
      }
}

TEST(Decode, ImplicitZeroWeightsGiveConstantPlanes) {
  Parameterization p = Parameterization::implicit(6, 5, 4, GeneratorConfig{}, 3);
  std::fill(p.values().begin(), p.values().end(), 0.0);
  const PlaneStack<double> planes = p.decode();
  for (std::size_t i = 0; i < planes.values.size(); ++i) {
    EXPECT_DOUBLE_EQ(planes.values[i], planes.values[i % 4]);
  }
}

TEST(Decode, RandomParametersAlwaysGiveValidPlanes) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int draw = 0; draw < 100; ++draw) {
    const bool implicit = draw % 5 == 0;
    Parameterization p = implicit ? Parameterization::implicit(6, 5, 3, GeneratorConfig{2, 8, 3}, draw)
                                  : Parameterization::direct(6, 5, 3);
    for (double& v : p.values()) v = n(rng);
    MultiplaneImage mpi;
    mpi.reference_camera.intrinsics = simple_intrinsics(6, 5, 6);
    mpi.sampling = sample_inverse_depths(1.0, 3.0, 3);
    mpi.planes = to_float_planes(p.decode());
    EXPECT_NO_THROW(mpi.validate());
  }
}

TEST(Decode, ReferenceInitializationCopiesImage) {
  std::mt19937_64 rng(5);
  const ImageD img = random_image(4, 3, 3, rng);
  Parameterization p = Parameterization::direct(4, 3, 2);
  p.initialize_from_image(image_cast<float>(img), 0.7);
  const PlaneStack<double> planes = p.decode();
  for (int i = 0; i < 2; ++i)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) {
        for (int c = 0; c < 3; ++c) {
          EXPECT_NEAR(planes.at(i, x, y, c), std::clamp(img.at(x, y, c), 0.02, 0.98), 1e-6);
        }
        EXPECT_NEAR(planes.at(i, x, y, 3), 0.7, 1e-9);
      }
}

TEST(Generator, BackwardMatchesFiniteDifferences) {
  const CoordinateGenerator gen(GeneratorConfig{2, 6, 2});
  std::vector<double> params(gen.parameter_count());
  gen.initialize(params, 7);
  const Eigen::MatrixXd inputs = gen.plane_inputs(3, 2, 2);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd upstream(4, inputs.cols());
  for (int i = 0; i < upstream.size(); ++i) upstream.data()[i] = n(rng);
  CoordinateGenerator::Cache cache;
  gen.forward(params, inputs, &cache);
  std::vector<double> grad(params.size(), 0.0);
  gen.backward(params, cache, upstream, grad);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + 1e-6;
    const double plus = (gen.forward(params, inputs, nullptr).array() * upstream.array()).sum();
    params[i] = saved - 1e-6;
    const double minus = (gen.forward(params, inputs, nullptr).array() * upstream.array()).sum();
    params[i] = saved;
    EXPECT_NEAR(grad[i], (plus - minus) / 2e-6, 1e-6 * std::max(1.0, std::abs(grad[i])));
  }
}

TEST(Loss, IdenticalImagesCostNothing) {
  std::mt19937_64 rng(9);
  const std::vector<ImageD> pyr = build_pyramid(random_image(24, 24, 3, rng), kDefaultPyramidLevels);
  const PyramidLoss loss = scene_loss(pyr, pyr, LossWeights{});
  EXPECT_NEAR(loss.terms.l1, 0.0, 1e-15);
  EXPECT_NEAR(loss.terms.ssim, 0.0, 1e-12);
}

TEST(Loss, ConstantOffsetL1PerScale) {
  ImageD a(16, 16, 3);
  ImageD b(16, 16, 3);
  for (double& v : a.data) v = 0.3;
  for (double& v : b.data) v = 0.4;
  LossWeights w;
  const int levels = 3;
  const PyramidLoss loss = scene_loss(build_pyramid(a, levels), build_pyramid(b, levels), w);
  EXPECT_NEAR(loss.terms.l1, levels * 0.1 * w.beta1, 1e-12);
  const PyramidLoss prior = prior_loss(build_pyramid(a, levels), build_pyramid(b, levels), w);
  EXPECT_NEAR(prior.terms.l1, levels * 0.1 * w.lambda1, 1e-12);
}

TEST(Loss, ShapeMismatchAndLpipsWeightRejected) {
  const std::vector<ImageD> a = build_pyramid(ImageD(16, 16, 3), 2);
  const std::vector<ImageD> b = build_pyramid(ImageD(16, 12, 3), 2);
  EXPECT_THROW(scene_loss(a, b, LossWeights{}), InvalidArgument);
  LossWeights w;
  w.beta3 = 0.5;
  EXPECT_THROW(w.validate(), InvalidArgument);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  const std::vector<ImageD> target = build_pyramid(random_image(16, 16, 3, rng), kDefaultPyramidLevels);
  ImageD rendered = random_image(16, 16, 3, rng);
  const LossWeights w;
  auto value = [&](const ImageD& r) { return scene_image_loss(r, target, w).terms.total; };
  const ImageD grad = scene_image_loss(rendered, target, w).gradient;
  double diff2 = 0.0;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    const double saved = rendered.data[i];
    rendered.data[i] = saved + 1e-6;
    const double plus = value(rendered);
    rendered.data[i] = saved - 1e-6;
    const double minus = value(rendered);
    rendered.data[i] = saved;
    const double numeric = (plus - minus) / 2e-6;
    diff2 += (numeric - grad.data[i]) * (numeric - grad.data[i]);
    norm2 += grad.data[i] * grad.data[i];
  }
  EXPECT_LT(std::sqrt(diff2 / norm2), 1e-4);
}

TEST(BackwardRender, TwoPlaneFourByFourMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  Camera ref;
  ref.intrinsics = simple_intrinsics(4, 4, 5.0);
  ref.depth_range = {3.0, 6.0};
  RenderObjective obj;
  obj.reference = ref;
  obj.sampling = sample_inverse_depths(3.0, 6.0, 2);
  obj.target = jittered_camera(ref, rng, 0.02, 0.1);
  obj.target_pyramid = build_pyramid(random_image(4, 4, 3, rng), 2);
  Parameterization p = Parameterization::direct(4, 4, 2, 1.0);
  std::normal_distribution<double> n(0.0, 0.5);
  for (double& v : p.values()) v = n(rng);
  const GradientCheck check = check_gradient(obj, p, 0, rng);
  EXPECT_LT(check.relative_error, 1e-4);
  EXPECT_GT(check.gradient_norm, 0.0);
}

TEST(BackwardRender, OccludedPlaneColorHasNoGradient) {
  Camera ref;
  ref.intrinsics = simple_intrinsics(3, 3, 4.0);
  ref.depth_range = {2.0, 4.0};
  const DepthSampling sampling{{2.0, 3.0}};
  Parameterization p = Parameterization::direct(3, 3, 2, 1.0);
  PlaneStack<double> layout(3, 3, 2);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) p.values()[layout.index(0, x, y, 3)] = 80.0;  // opaque front
  ImageD upstream(3, 3, 3);
  for (double& v : upstream.data) v = 1.0;
  const std::vector<double> grad = backward_render(p, ref, sampling, ref, upstream);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(grad[layout.index(1, x, y, c)], 0.0, 1e-20);
}

TEST(BackwardRender, SinglePlaneSigmaClosedForm) {
  Camera ref;
  ref.intrinsics = simple_intrinsics(2, 2, 4.0);
  ref.depth_range = {2.0, 4.0};
  const DepthSampling sampling{{3.0}};
  Parameterization p = Parameterization::direct(2, 2, 1, 1.0);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : p.values()) v = n(rng);
  ImageD upstream(2, 2, 3);
  upstream.at(1, 0, 2) = 1.0;  // d I_blue(1, 0)
  const std::vector<double> grad = backward_render(p, ref, sampling, ref, upstream);
  const PlaneStack<double> planes = p.decode();
  const double sigma = planes.at(0, 1, 0, 3);
  const double color = planes.at(0, 1, 0, 2);
  const double delta = kDefaultSinglePlaneSpacing;
  const double d_sigma = delta * std::exp(-sigma * delta) * color;
  const double raw = p.values()[planes.index(0, 1, 0, 3)];
  EXPECT_NEAR(grad[planes.index(0, 1, 0, 3)], d_sigma * softplus_grad(raw), 1e-12);
}

TEST(BackwardRender, RandomInstancesMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    GradientInstance inst = make_gradient_instance(seed);
    std::mt19937_64 rng(seed);
    const GradientCheck check = check_gradient(inst.objective, inst.params, 48, rng);
    EXPECT_LT(check.relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> params{1.0, -2.0};
  AdamState state(2);
  adam_step(params, std::vector<double>{0.0, 0.0}, state, AdamConfig{});
  EXPECT_EQ(params, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> params{1.0, -2.0, 0.5};
  AdamState state(3);
  const AdamConfig config;
  adam_step(params, std::vector<double>{3.0, -0.2, 1e-3}, state, config);
  // m_hat = g, v_hat = g^2 after bias correction: update = lr * g / (|g| + eps)
  EXPECT_NEAR(params[0], 1.0 - config.learning_rate * 3.0 / (3.0 + config.epsilon), 1e-15);
  EXPECT_NEAR(params[1], -2.0 + config.learning_rate * 0.2 / (0.2 + config.epsilon), 1e-15);
  EXPECT_NEAR(params[2], 0.5 - config.learning_rate * 1e-3 / (1e-3 + config.epsilon), 1e-15);
}

TEST(Adam, QuadraticBowlConverges) {
  std::vector<double> params{0.3, -0.2};
  AdamState state(2);
  AdamConfig config;
  config.learning_rate = 0.01;
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> grad{2.0 * (params[0] - 0.1), 8.0 * (params[1] + 0.05)};
    adam_step(params, grad, state, config);
  }
  EXPECT_NEAR(params[0], 0.1, 1e-2);
  EXPECT_NEAR(params[1], -0.05, 1e-2);
}

TEST(Adam, NonFiniteGradientFailsFast) {
  std::vector<double> params{1.0};
  AdamState state(1);
  EXPECT_THROW(adam_step(params, std::vector<double>{std::nan("")}, state, AdamConfig{}), NonFiniteValue);
  EXPECT_EQ(params[0], 1.0);
  EXPECT_EQ(state.step, 0);
}

TEST(OptimizeScene, RejectsEmptyInput) {
  EXPECT_THROW(optimize_scene({}, OptimizeConfig{}), InvalidArgument);
}

TEST(OptimizeScene, DivergenceReportsIteration) {
  SynthConfig sc;
  sc.width = 16;
  sc.height = 16;
  sc.views = 2;
  sc.train = 2;
  const SyntheticScene s = make_scene(sc);
  std::vector<TrainingView> views;
  for (const View& v : s.scene.views) views.push_back({v.camera, v.image});
  OptimizeConfig config;
  config.planes = 2;
  config.iterations = 3;
  config.adam.learning_rate = 1e300;
  config.direct_gain = 1e10;
  try {
    optimize_scene(views, config);
    FAIL() << "expected Divergence";
  } catch (const Divergence& e) {
    EXPECT_GE(e.iteration(), 1);
  }
}

TEST(OptimizeScene, ZeroIterationsReturnsInitialization) {
  SynthConfig sc;
  sc.width = 12;
  sc.height = 10;
  sc.views = 2;
  sc.train = 1;
  const SyntheticScene s = make_scene(sc);
  std::vector<TrainingView> views{{s.scene.views[0].camera, s.scene.views[0].image}};
  OptimizeConfig config;
  config.planes = 3;
  config.iterations = 0;
  const OptimizeResult result = optimize_scene(views, config);
  EXPECT_TRUE(result.log.empty());
  for (std::size_t i = 0; i < result.mpi.planes.values.size(); ++i) {
    EXPECT_FLOAT_EQ(result.mpi.planes.values[i], i % 4 == 3 ? static_cast<float>(std::log(2.0)) : 0.5f);
  }
}

TEST(OptimizeScene, SingleTrainingViewOverfits) {
  const SyntheticScene s = make_scene(SynthConfig{});
  std::vector<TrainingView> views{{s.scene.views[0].camera, s.scene.views[0].image}};
  OptimizeConfig config;
  config.planes = 4;
  const OptimizeResult result = optimize_scene(views, config);
  const RenderOutput out = render_novel_view(result.mpi, views[0].camera);
  EXPECT_GE(psnr(out.color, views[0].image), 30.0);
  EXPECT_EQ(result.log.size(), static_cast<std::size_t>(kDefaultIterations));
  EXPECT_LT(result.log.back().loss.total, result.log.front().loss.total);
}
