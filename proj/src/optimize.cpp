#include "immpi/optimize.hpp"

#include "immpi/diff_render.hpp"
#include "immpi/errors.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace immpi {

void adam_step(OptimizationState& state, std::span<const double> grad) {
  adam_step(state.params.values(), grad, state.adam, state.config);
}

MultiplaneImage decode_mpi(const Parameterization& params, const Camera& reference,
                           const DepthSampling& sampling) {
  MultiplaneImage mpi;
  mpi.reference_camera = reference;
  mpi.sampling = sampling;
  mpi.planes = to_float_planes(params.decode());
  return mpi;
}

namespace {

Parameterization make_parameterization(const OptimizeConfig& config, const TrainingView& ref) {
  const int w = ref.image.width;
  const int h = ref.image.height;
  if (config.mode == ParameterMode::implicit) {
    return Parameterization::implicit(w, h, config.planes, config.generator, config.seed);
  }
  Parameterization p = Parameterization::direct(w, h, config.planes, config.direct_gain);
  if (config.direct_init == DirectInit::reference) p.initialize_from_image(ref.image, config.init_sigma);
  return p;
}

struct ViewContext {
  ViewRenderer renderer;
  std::vector<ImageD> target;
};

}  // namespace

OptimizeResult optimize_scene(std::span<const TrainingView> views, const OptimizeConfig& config,
                              const std::function<void(const IterationLog&)>& on_iteration) {
  if (views.empty()) throw InvalidArgument("optimize_scene: no training views");
  if (config.reference < 0 || config.reference >= static_cast<int>(views.size())) {
    throw InvalidArgument("optimize_scene: reference index out of range");
  }
  if (config.iterations < 0) throw InvalidArgument("optimize_scene: negative iteration count");
  config.loss.validate();
  for (const TrainingView& v : views) {
    v.camera.validate();
    if (v.image.channels != 3 || v.image.width != v.camera.intrinsics.width ||
        v.image.height != v.camera.intrinsics.height) {
      throw InvalidArgument("optimize_scene: view image does not match its camera");
    }
  }

  const TrainingView& ref = views[static_cast<std::size_t>(config.reference)];
  const DepthSampling sampling = sample_inverse_depths(ref.camera.depth_range.z_near,
                                                       ref.camera.depth_range.z_far, config.planes);

  OptimizationState state{make_parameterization(config, ref), AdamState{}, config.adam};
  state.adam = AdamState(state.params.values().size());

  std::vector<ViewContext> contexts;
  contexts.reserve(views.size());
  for (const TrainingView& v : views) {
    contexts.push_back({ViewRenderer(ref.camera, sampling, v.camera, config.render),
                        build_pyramid(image_cast<double>(v.image), config.pyramid_levels)});
  }

  const bool use_tv = state.params.mode() == ParameterMode::direct && config.loss.tv > 0.0;
  std::vector<IterationLog> log;
  log.reserve(static_cast<std::size_t>(config.iterations));
  for (int it = 1; it <= config.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    LossTerms sum;
    for (ViewContext& ctx : contexts) {
      Parameterization::Cache cache;
      const PlaneStack<double> planes = state.params.decode(&cache);
      const ImageD color = ctx.renderer.forward(planes);
      ImageLoss loss = scene_image_loss(color, ctx.target, config.loss);
      PlaneStack<double> grad_planes(planes.width, planes.height, planes.count);
      ctx.renderer.backward(loss.gradient, grad_planes);
      if (use_tv) {
        loss.terms.tv = sigma_total_variation(planes, config.loss.tv, &grad_planes);
        loss.terms.total += loss.terms.tv;
      }
      if (!std::isfinite(loss.terms.total)) {
        std::ostringstream msg;
        msg << "loss became non-finite at iteration " << it;
        throw Divergence(msg.str(), it);
      }
      const std::vector<double> grad = state.params.decode_backward(grad_planes, cache);
      try {
        adam_step(state, grad);
      } catch (const NonFiniteValue& e) {
        std::ostringstream msg;
        msg << "iteration " << it << ": " << e.what();
        throw Divergence(msg.str(), it);
      }
      sum.total += loss.terms.total;
      sum.l1 += loss.terms.l1;
      sum.ssim += loss.terms.ssim;
      sum.tv += loss.terms.tv;
    }
    const double n = static_cast<double>(contexts.size());
    IterationLog row;
    row.iteration = it;
    row.loss = {sum.total / n, sum.l1 / n, sum.ssim / n, sum.tv / n};
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (on_iteration) on_iteration(row);
    log.push_back(row);
  }

  MultiplaneImage mpi = decode_mpi(state.params, ref.camera, sampling);
  return {std::move(mpi), std::move(state), std::move(log)};
}

void write_loss_log_header(std::ostream& out) {
  out << "iteration,total_loss,l1,ssim_loss,tv,wall_ms\n";
}

void write_loss_log_row(const IterationLog& row, std::ostream& out) {
  const auto flags = out.flags();
  out << row.iteration << ',' << std::setprecision(10) << row.loss.total << ',' << row.loss.l1 << ','
      << row.loss.ssim << ',' << row.loss.tv << ',' << std::setprecision(6) << row.wall_ms << '\n';
  out.flags(flags);
}

}  // namespace immpi
