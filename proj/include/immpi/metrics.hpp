#pragma once

#include "immpi/image.hpp"
#include "immpi/scene.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace immpi {

struct MultiplaneImage;
struct RenderOptions;

inline constexpr double kPsnrCapDb = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// 10 log10(1 / MSE) for [0, 1] images; identical images report kPsnrCapDb.
double psnr(const Image& a, const Image& b);
double psnr(const ImageD& a, const ImageD& b);

/// Mean local SSIM over all fully-contained 11x11 Gaussian windows, averaged
/// over channels. Throws InvalidArgument for images smaller than the window.
double ssim(const Image& a, const Image& b);

/// SSIM of `a` against `b` and, when grad_a is non-null, d SSIM / d a.
double ssim_with_gradient(const ImageD& a, const ImageD& b, ImageD* grad_a);

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_kernel(int size, double sigma);

struct EvalRow {
  std::string view;
  Split split = Split::train;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct SplitMean {
  Split split = Split::train;
  double psnr_db = 0.0;
  double ssim = 0.0;
  int views = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<SplitMean> means;  // one entry per split that has rows

  const SplitMean* mean(Split split) const;
};

/// Renders every view of the scene through `mpi` and scores it against the
/// stored image. Splits come from the scene.
EvalReport evaluate(const MultiplaneImage& mpi, const Scene& scene, const RenderOptions& options);
EvalReport evaluate(const MultiplaneImage& mpi, const Scene& scene);

/// Header `view,split,psnr_db,ssim`, one row per view, then `mean_<split>` rows.
void write_report_csv(const EvalReport& report, std::ostream& out);

}  // namespace immpi
