#include "commands.hpp"

#include "immpi/errors.hpp"
#include "immpi/metrics.hpp"
#include "immpi/mpi.hpp"
#include "immpi/optimize.hpp"
#include "immpi/parallel.hpp"
#include "immpi/png_io.hpp"
#include "immpi/scene_io.hpp"
#include "immpi/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace immpi::cli {

namespace fs = std::filesystem;

namespace {

// Bad paths and option combinations detected before any work starts.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  int threads = 0;
  bool deterministic = false;
};

struct SynthArgs {
  Common common;
  std::string out;
  bool force = false;
  SynthConfig synth;
};

struct OptimizeArgs {
  Common common;
  std::string scene;
  std::string out;
  bool force = false;
  int planes = kDefaultPlaneCount;
  int iterations = kDefaultIterations;
  double learning_rate = AdamConfig{}.learning_rate;
  std::string mode = "direct";
  double l1_weight = LossWeights{}.beta1;
  double ssim_weight = LossWeights{}.beta2;
  double tv_weight = LossWeights{}.tv;
  int pyramid_levels = kDefaultPyramidLevels;
  int frequencies = GeneratorConfig{}.frequencies;
  int hidden_layers = GeneratorConfig{}.hidden_layers;
  int hidden_width = GeneratorConfig{}.hidden_width;
  double gain = kDefaultDirectGain;
  std::string init = "constant";
  double init_sigma = OptimizeConfig{}.init_sigma;
  std::uint64_t seed = 0;
  int reference = -1;  // scene view index; -1 picks the first training view
  int log_every = 50;
};

struct RenderArgs {
  Common common;
  std::string mpi;
  std::string camera;
  std::string path;
  std::string out;
  bool depth = false;
  bool depth_only = false;
  int width = 0;
  int height = 0;
};

struct EvalArgs {
  Common common;
  std::string scene;
  std::string mpi;
  std::string out;
};

void add_common(CLI::App* sub, Common& common, std::string& config) {
  sub->add_option("--config", config, "key = value file; command-line flags take precedence");
  sub->add_option("--threads", common.threads, "worker threads (0 = all cores)")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_flag("--deterministic", common.deterministic, "single-threaded, bit-reproducible run");
}

void apply_common(const Common& common) { set_max_threads(common.deterministic ? 1 : common.threads); }

void require_directory(const std::string& path, const char* what) {
  if (!fs::is_directory(path)) throw UsageError(std::string(what) + " directory not found: " + path);
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " file not found: " + path);
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  std::string out(text.substr(first, last - first + 1));
  if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front()) {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

// Expands `--config FILE` into `--key=value` arguments for every key the
// command line does not already set, so flags win over the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string config_path;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const std::string key = a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2);
    given.insert(key);
    if (key == "config") {
      if (a.find('=') != std::string::npos) {
        config_path = a.substr(a.find('=') + 1);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }
  if (config_path.empty()) return args;
  if (!fs::is_regular_file(config_path)) throw UsageError("config file not found: " + config_path);

  std::vector<std::string> out = args;
  std::istringstream lines(read_text_file(config_path));
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError(config_path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty() || key == "config" || given.count(key) || value.empty()) continue;
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

void write_manifest(const CLI::App& sub, const fs::path& path, const std::string& extra = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file", path.string());
  out << "# immpi " << sub.get_name() << " run; pass back with --config to reproduce\n";
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value = opt->as<std::string>();
    if (opt->count() == 0) value = opt->get_default_str();
    if (value.empty() && opt->get_expected_min() == 0) value = "false";
    out << name << " = " << value << '\n';
  }
  out << extra;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::map<std::string, ParameterMode> kModes{{"direct", ParameterMode::direct},
                                                  {"implicit", ParameterMode::implicit}};
const std::map<std::string, DirectInit> kInits{{"constant", DirectInit::constant},
                                               {"reference", DirectInit::reference}};

int cmd_synth(const SynthArgs& args, const CLI::App& sub, std::ostream& out) {
  apply_common(args.common);
  const fs::path root(args.out);
  if (fs::exists(root) && !args.force) {
    throw UsageError("output directory exists (use --force to overwrite): " + args.out);
  }
  const SyntheticScene scene = make_scene(args.synth);
  if (args.force) {
    fs::remove_all(root / "images");
    fs::remove_all(root / "cams");
  }
  save_scene(scene.scene, root);
  save_mpi(scene.ground_truth, root / "gt.impi");
  write_manifest(sub, root / "manifest.txt");
  out << "wrote " << scene.scene.views.size() << " views (" << scene.scene.train.size() << " train, "
      << scene.scene.test.size() << " test) to " << root.string() << '\n';
  return kExitOk;
}

int cmd_optimize(const OptimizeArgs& args, const CLI::App& sub, std::ostream& out) {
  apply_common(args.common);
  require_directory(args.scene, "scene");
  const fs::path root(args.out);
  if (fs::exists(root / "mpi.impi") && !args.force) {
    throw UsageError("output already holds mpi.impi (use --force to overwrite): " + args.out);
  }
  const Scene scene = load_scene(args.scene);

  int reference = 0;
  if (args.reference >= 0) {
    const auto it = std::find(scene.train.begin(), scene.train.end(), args.reference);
    if (it == scene.train.end()) {
      throw UsageError("--reference " + std::to_string(args.reference) + " is not a training view");
    }
    reference = static_cast<int>(it - scene.train.begin());
  }

  std::vector<TrainingView> views;
  for (int idx : scene.train) {
    const View& v = scene.views[static_cast<std::size_t>(idx)];
    views.push_back({v.camera, v.image});
  }

  OptimizeConfig config;
  config.planes = args.planes;
  config.iterations = args.iterations;
  config.mode = kModes.at(args.mode);
  config.adam.learning_rate = args.learning_rate;
  config.loss.beta1 = args.l1_weight;
  config.loss.beta2 = args.ssim_weight;
  config.loss.tv = args.tv_weight;
  config.pyramid_levels = args.pyramid_levels;
  config.generator.frequencies = args.frequencies;
  config.generator.hidden_layers = args.hidden_layers;
  config.generator.hidden_width = args.hidden_width;
  config.direct_gain = args.gain;
  config.direct_init = kInits.at(args.init);
  config.init_sigma = args.init_sigma;
  config.seed = args.seed;
  config.reference = reference;

  fs::create_directories(root);
  std::ofstream log(root / "loss.csv", std::ios::binary);
  if (!log) throw IoError("cannot create file", (root / "loss.csv").string());
  write_loss_log_header(log);

  const auto start = std::chrono::steady_clock::now();
  const OptimizeResult result = optimize_scene(views, config, [&](const IterationLog& row) {
    write_loss_log_row(row, log);
    if (args.log_every > 0 && (row.iteration % args.log_every == 0 || row.iteration == config.iterations)) {
      out << "iteration " << row.iteration << "/" << config.iterations << "  loss " << row.loss.total << '\n';
    }
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_mpi(result.mpi, root / "mpi.impi");
  write_manifest(sub, root / "manifest.txt",
                 "# resolved reference view: " + std::to_string(scene.train[static_cast<std::size_t>(reference)]) +
                     "\n");
  out << "optimized " << config.planes << " planes over " << views.size() << " views in " << seconds
      << " s; wrote " << (root / "mpi.impi").string() << '\n';
  return kExitOk;
}

void write_depth(const RenderOutput& rendered, const DepthRange& range, const fs::path& png,
                 const fs::path& sidecar) {
  const Image& depth = rendered.depth;
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(depth.width) * depth.height);
  const double span = range.z_far - range.z_near;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = std::clamp((depth.data[i] - range.z_near) / span, 0.0, 1.0);
    samples[i] = static_cast<std::uint16_t>(std::lround(t * 65535.0));
  }
  write_png_gray16(samples, depth.width, depth.height, png);
  std::ofstream out(sidecar, std::ios::binary);
  if (!out) throw IoError("cannot create file", sidecar.string());
  out << "# depth = z_near + value / scale * (z_far - z_near); values clamped to [0, scale]\n"
      << "z_near = " << format_double(range.z_near) << '\n'
      << "z_far = " << format_double(range.z_far) << '\n'
      << "scale = 65535\n";
}

void render_one(const MultiplaneImage& mpi, const Camera& camera, const fs::path& root,
                const std::string& stem, bool color, bool depth) {
  const RenderOutput rendered = render_novel_view(mpi, camera);
  if (color) write_png_rgb(rendered.color, root / (stem + ".png"));
  if (depth) {
    write_depth(rendered, mpi.reference_camera.depth_range, root / (stem + "_depth.png"),
                root / (stem + "_depth.txt"));
  }
}

int cmd_render(const RenderArgs& args, std::ostream& out) {
  apply_common(args.common);
  require_file(args.mpi, "MPI");
  const bool from_path = !args.path.empty();
  require_file(from_path ? args.path : args.camera, from_path ? "camera path" : "camera");
  const MultiplaneImage mpi = load_mpi(args.mpi);
  const int w = args.width > 0 ? args.width : mpi.planes.width;
  const int h = args.height > 0 ? args.height : mpi.planes.height;
  const fs::path root(args.out);
  fs::create_directories(root);
  const bool color = !args.depth_only;
  const bool depth = args.depth || args.depth_only;

  const auto start = std::chrono::steady_clock::now();
  std::size_t frames = 0;
  if (from_path) {
    const std::vector<Camera> cams = parse_camera_path(read_text_file(args.path), w, h, args.path);
    for (std::size_t i = 0; i < cams.size(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "frame_%03zu", i);
      render_one(mpi, cams[i], root, stem, color, depth);
    }
    frames = cams.size();
  } else {
    render_one(mpi, read_camera_file(args.camera, w, h), root, "render", color, depth);
    frames = 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "rendered " << frames << " view(s) at " << w << "x" << h << " in " << seconds << " s to "
      << root.string() << '\n';
  return kExitOk;
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  apply_common(args.common);
  require_directory(args.scene, "scene");
  require_file(args.mpi, "MPI");
  const Scene scene = load_scene(args.scene);
  const MultiplaneImage mpi = load_mpi(args.mpi);
  const EvalReport report = evaluate(mpi, scene);
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    const fs::path path = fs::path(args.out) / "report.csv";
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot create file", path.string());
    write_report_csv(report, file);
  }
  write_report_csv(report, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiplane-image novel view synthesis from a few posed views", "immpi"};
  app.require_subcommand(1);

  std::string config;
  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "write a synthetic layered scene");
  add_common(s, synth.common, config);
  s->add_option("--out", synth.out, "scene directory to create")->required();
  s->add_flag("--force", synth.force, "overwrite an existing directory");
  s->add_option("--seed", synth.synth.seed, "scene seed")->capture_default_str();
  s->add_option("--width", synth.synth.width, "image width")->capture_default_str()->check(CLI::Range(2, 8192));
  s->add_option("--height", synth.synth.height, "image height")->capture_default_str()->check(CLI::Range(2, 8192));
  s->add_option("--planes", synth.synth.planes, "ground-truth layer count")->capture_default_str()->check(CLI::Range(1, 256));
  s->add_option("--views", synth.synth.views, "number of views")->capture_default_str()->check(CLI::Range(2, 1000));
  s->add_option("--train", synth.synth.train, "leading views used for training")->capture_default_str()->check(CLI::Range(1, 1000));

  OptimizeArgs opt;
  CLI::App* o = app.add_subcommand("optimize", "fit an MPI to the training views of a scene");
  add_common(o, opt.common, config);
  o->add_option("--scene", opt.scene, "scene directory")->required();
  o->add_option("--out", opt.out, "output directory")->required();
  o->add_flag("--force", opt.force, "overwrite existing outputs");
  o->add_option("--planes", opt.planes, "MPI plane count")->capture_default_str()->check(CLI::Range(1, 4096));
  o->add_option("--iters", opt.iterations, "passes over the training views")->capture_default_str()->check(CLI::NonNegativeNumber);
  o->add_option("--lr", opt.learning_rate, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  o->add_option("--mode", opt.mode, "plane parameterization")
      ->check(CLI::IsMember(kModes))->capture_default_str();
  o->add_option("--l1-weight", opt.l1_weight, "weight of the L1 term")->capture_default_str()->check(CLI::NonNegativeNumber);
  o->add_option("--ssim-weight", opt.ssim_weight, "weight of the 1 - SSIM term")->capture_default_str()->check(CLI::NonNegativeNumber);
  o->add_option("--tv", opt.tv_weight, "sigma total-variation weight (direct mode)")->capture_default_str()->check(CLI::NonNegativeNumber);
  o->add_option("--pyramid-levels", opt.pyramid_levels, "loss pyramid levels")->capture_default_str()->check(CLI::Range(1, 16));
  o->add_option("--frequencies", opt.frequencies, "depth embedding frequencies (implicit mode)")->capture_default_str()->check(CLI::Range(1, 32));
  o->add_option("--hidden-layers", opt.hidden_layers, "generator hidden layers")->capture_default_str()->check(CLI::Range(1, 64));
  o->add_option("--hidden-width", opt.hidden_width, "generator hidden width")->capture_default_str()->check(CLI::Range(1, 4096));
  o->add_option("--gain", opt.gain, "direct-mode parameter gain")->capture_default_str()->check(CLI::PositiveNumber);
  o->add_option("--init", opt.init, "direct-mode initialization")
      ->check(CLI::IsMember(kInits))->capture_default_str();
  o->add_option("--init-sigma", opt.init_sigma, "density for --init reference")->capture_default_str()->check(CLI::PositiveNumber);
  o->add_option("--seed", opt.seed, "initialization seed")->capture_default_str();
  o->add_option("--reference", opt.reference, "reference view index (default: first training view)")->capture_default_str();
  o->add_option("--log-every", opt.log_every, "progress line interval (0 = quiet)")->capture_default_str();

  RenderArgs render;
  CLI::App* r = app.add_subcommand("render", "render a novel view from an MPI");
  add_common(r, render.common, config);
  r->add_option("--mpi", render.mpi, "IMPI file")->required();
  r->add_option("--camera", render.camera, "camera file")->required();
  r->add_option("--out", render.out, "output directory")->required();
  r->add_flag("--depth", render.depth, "also write a 16-bit depth PNG");
  r->add_flag("--depth-only", render.depth_only, "write only the depth PNG");
  r->add_option("--width", render.width, "output width (default: MPI width)")->check(CLI::NonNegativeNumber);
  r->add_option("--height", render.height, "output height (default: MPI height)")->check(CLI::NonNegativeNumber);

  RenderArgs path;
  CLI::App* p = app.add_subcommand("render-path", "render every camera of a path file");
  add_common(p, path.common, config);
  p->add_option("--mpi", path.mpi, "IMPI file")->required();
  p->add_option("--path", path.path, "concatenated camera blocks")->required();
  p->add_option("--out", path.out, "output directory")->required();
  p->add_flag("--depth", path.depth, "also write depth PNGs");
  p->add_option("--width", path.width, "output width (default: MPI width)")->check(CLI::NonNegativeNumber);
  p->add_option("--height", path.height, "output height (default: MPI height)")->check(CLI::NonNegativeNumber);

  RenderArgs depth;
  depth.depth_only = true;
  CLI::App* d = app.add_subcommand("depth", "render only the depth map (render --depth-only)");
  add_common(d, depth.common, config);
  d->add_option("--mpi", depth.mpi, "IMPI file")->required();
  d->add_option("--camera", depth.camera, "camera file")->required();
  d->add_option("--out", depth.out, "output directory")->required();
  d->add_option("--width", depth.width, "output width (default: MPI width)")->check(CLI::NonNegativeNumber);
  d->add_option("--height", depth.height, "output height (default: MPI height)")->check(CLI::NonNegativeNumber);

  EvalArgs eval;
  CLI::App* e = app.add_subcommand("eval", "score an MPI against every view of a scene");
  add_common(e, eval.common, config);
  e->add_option("--scene", eval.scene, "scene directory")->required();
  e->add_option("--mpi", eval.mpi, "IMPI file")->required();
  e->add_option("--out", eval.out, "directory for report.csv");

  std::vector<std::string> storage{"immpi"};
  try {
    const std::vector<std::string> expanded = expand_config(args);
    storage.insert(storage.end(), expanded.begin(), expanded.end());
  } catch (const std::exception& bad_config) {
    err << "immpi: " << bad_config.what() << '\n';
    return kExitUsage;
  }
  std::vector<char*> argv;
  for (std::string& a : storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& parse_error) {
    const int code = app.exit(parse_error, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) {
      if (synth.synth.train > synth.synth.views) throw UsageError("--train cannot exceed --views");
      return cmd_synth(synth, *s, out);
    }
    if (o->parsed()) return cmd_optimize(opt, *o, out);
    if (r->parsed()) {
      if (render.depth && render.depth_only) throw UsageError("--depth and --depth-only are exclusive");
      return cmd_render(render, out);
    }
    if (p->parsed()) return cmd_render(path, out);
    if (d->parsed()) return cmd_render(depth, out);
    if (e->parsed()) return cmd_eval(eval, out);
  } catch (const UsageError& usage) {
    err << "immpi: " << usage.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& failure) {
    err << "immpi: " << failure.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace immpi::cli
