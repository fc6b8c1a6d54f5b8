#pragma once

#include "immpi/adam.hpp"
#include "immpi/generator.hpp"
#include "immpi/loss.hpp"
#include "immpi/mpi.hpp"
#include "immpi/parameterization.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace immpi {

inline constexpr int kDefaultIterations = 500;

struct TrainingView {
  Camera camera;
  Image image;
};

enum class DirectInit {
  constant,   // all pre-activations 0: color 0.5, sigma softplus(0)
  reference,  // every plane starts from the reference image colors
};

struct OptimizeConfig {
  int planes = kDefaultPlaneCount;
  int iterations = kDefaultIterations;  // passes over the training views
  ParameterMode mode = ParameterMode::direct;
  AdamConfig adam;
  LossWeights loss;
  int pyramid_levels = kDefaultPyramidLevels;
  GeneratorConfig generator;
  double direct_gain = kDefaultDirectGain;
  DirectInit direct_init = DirectInit::constant;
  double init_sigma = 0.5;  // used by DirectInit::reference
  std::uint64_t seed = 0;
  int reference = 0;  // index into the training views
  RenderOptions render;
};

/// Trainable parameters plus optimizer moments.
struct OptimizationState {
  Parameterization params;
  AdamState adam;
  AdamConfig config;
};

void adam_step(OptimizationState& state, std::span<const double> grad);

struct IterationLog {
  int iteration = 0;  // 1-based
  LossTerms loss;     // mean over the views of the iteration
  double wall_ms = 0.0;
};

struct OptimizeResult {
  MultiplaneImage mpi;
  OptimizationState state;
  std::vector<IterationLog> log;
};

/// Fits an MPI anchored at views[config.reference] to all views. Each
/// iteration renders every view in order and takes one Adam step per view.
/// Throws InvalidArgument for an empty view list and Divergence when the loss
/// becomes non-finite.
OptimizeResult optimize_scene(std::span<const TrainingView> views, const OptimizeConfig& config,
                              const std::function<void(const IterationLog&)>& on_iteration = {});

/// Builds the MultiplaneImage for a parameter state.
MultiplaneImage decode_mpi(const Parameterization& params, const Camera& reference,
                           const DepthSampling& sampling);

/// CSV header `iteration,total_loss,l1,ssim_loss,tv,wall_ms`.
void write_loss_log_header(std::ostream& out);
void write_loss_log_row(const IterationLog& row, std::ostream& out);

}  // namespace immpi
