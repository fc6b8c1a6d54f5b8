#include "immpi/metrics.hpp"

#include "immpi/errors.hpp"
#include "immpi/mpi.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace immpi {

namespace {

template <typename T>
double psnr_impl(const ImageT<T>& a, const ImageT<T>& b) {
  if (!a.same_shape(b)) throw InvalidArgument("psnr: image shapes differ");
  if (a.empty()) throw InvalidArgument("psnr: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.data.size());
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

}  // namespace

double psnr(const Image& a, const Image& b) { return psnr_impl(a, b); }
double psnr(const ImageD& a, const ImageD& b) { return psnr_impl(a, b); }

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double center = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

namespace {

// Single-channel row-major plane.
struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height, 0.0) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Separable valid-mode correlation: output is (w - k + 1) x (h - k + 1).
Plane filter_valid(const Plane& src, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  Plane tmp(src.w - n + 1, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int u = 0; u < n; ++u) s += k[u] * src.at(x + u, y);
      tmp.at(x, y) = s;
    }
  }
  Plane out(tmp.w, src.h - n + 1);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int u = 0; u < n; ++u) s += k[u] * tmp.at(x, y + u);
      out.at(x, y) = s;
    }
  }
  return out;
}

// Adjoint of filter_valid back onto a width x height plane.
Plane filter_valid_adjoint(const Plane& g, const std::vector<double>& k, int width, int height) {
  const int n = static_cast<int>(k.size());
  Plane tmp(g.w, height);
  for (int y = 0; y < g.h; ++y) {
    for (int x = 0; x < g.w; ++x) {
      const double v = g.at(x, y);
      for (int u = 0; u < n; ++u) tmp.at(x, y + u) += k[u] * v;
    }
  }
  Plane out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      const double v = tmp.at(x, y);
      for (int u = 0; u < n; ++u) out.at(x + u, y) += k[u] * v;
    }
  }
  return out;
}

Plane extract_channel(const ImageD& img, int c) {
  Plane p(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) p.at(x, y) = img.at(x, y, c);
  }
  return p;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.w, a.h);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

}  // namespace

double ssim_with_gradient(const ImageD& a, const ImageD& b, ImageD* grad_a) {
  if (!a.same_shape(b)) throw InvalidArgument("ssim: image shapes differ");
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw InvalidArgument("ssim: image smaller than the 11x11 window");
  }
  const std::vector<double> k = gaussian_kernel(kSsimWindow, kSsimSigma);
  const int positions = (a.width - kSsimWindow + 1) * (a.height - kSsimWindow + 1);
  const double norm = 1.0 / (static_cast<double>(positions) * a.channels);
  if (grad_a) *grad_a = ImageD(a.width, a.height, a.channels);

  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const Plane pa = extract_channel(a, c);
    const Plane pb = extract_channel(b, c);
    const Plane mu_a = filter_valid(pa, k);
    const Plane mu_b = filter_valid(pb, k);
    const Plane e_aa = filter_valid(product(pa, pa), k);
    const Plane e_bb = filter_valid(product(pb, pb), k);
    const Plane e_ab = filter_valid(product(pa, pb), k);

    Plane d_mu(mu_a.w, mu_a.h), d_eaa(mu_a.w, mu_a.h), d_eab(mu_a.w, mu_a.h);
    for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
      const double ma = mu_a.v[i];
      const double mb = mu_b.v[i];
      const double num1 = 2.0 * ma * mb + kSsimC1;
      const double num2 = 2.0 * (e_ab.v[i] - ma * mb) + kSsimC2;
      const double den1 = ma * ma + mb * mb + kSsimC1;
      const double den2 = (e_aa.v[i] - ma * ma) + (e_bb.v[i] - mb * mb) + kSsimC2;
      const double s = num1 * num2 / (den1 * den2);
      total += s;
      if (grad_a) {
        const double den = den1 * den2;
        d_mu.v[i] = norm * ((2.0 * mb * num2 - 2.0 * mb * num1) / den - s * 2.0 * ma / den1 +
                            s * 2.0 * ma / den2);
        d_eaa.v[i] = norm * (-s / den2);
        d_eab.v[i] = norm * (2.0 * num1 / den);
      }
    }
    if (grad_a) {
      const Plane g_mu = filter_valid_adjoint(d_mu, k, a.width, a.height);
      const Plane g_aa = filter_valid_adjoint(d_eaa, k, a.width, a.height);
      const Plane g_ab = filter_valid_adjoint(d_eab, k, a.width, a.height);
      for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
          grad_a->at(x, y, c) = g_mu.at(x, y) + 2.0 * pa.at(x, y) * g_aa.at(x, y) +
                                pb.at(x, y) * g_ab.at(x, y);
        }
      }
    }
  }
  return total * norm;
}

double ssim(const Image& a, const Image& b) {
  return ssim_with_gradient(image_cast<double>(a), image_cast<double>(b), nullptr);
}

const SplitMean* EvalReport::mean(Split split) const {
  for (const SplitMean& m : means) {
    if (m.split == split) return &m;
  }
  return nullptr;
}

EvalReport evaluate(const MultiplaneImage& mpi, const Scene& scene, const RenderOptions& options) {
  EvalReport report;
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    const View& view = scene.views[i];
    const RenderOutput out = render_novel_view(mpi, view.camera, options);
    EvalRow row;
    row.view = view.name;
    row.split = scene.split_of(static_cast<int>(i));
    row.psnr_db = psnr(out.color, view.image);
    row.ssim = ssim(out.color, view.image);
    report.rows.push_back(row);
  }
  for (Split split : {Split::train, Split::test}) {
    SplitMean m;
    m.split = split;
    for (const EvalRow& row : report.rows) {
      if (row.split != split) continue;
      m.psnr_db += row.psnr_db;
      m.ssim += row.ssim;
      ++m.views;
    }
    if (m.views == 0) continue;
    m.psnr_db /= m.views;
    m.ssim /= m.views;
    report.means.push_back(m);
  }
  return report;
}

EvalReport evaluate(const MultiplaneImage& mpi, const Scene& scene) {
  return evaluate(mpi, scene, RenderOptions{});
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  const auto flags = out.flags();
  out << "view,split,psnr_db,ssim\n" << std::setprecision(10);
  for (const EvalRow& row : report.rows) {
    out << row.view << ',' << to_string(row.split) << ',' << row.psnr_db << ',' << row.ssim << '\n';
  }
  for (const SplitMean& m : report.means) {
    out << "mean_" << to_string(m.split) << ',' << to_string(m.split) << ',' << m.psnr_db << ','
        << m.ssim << '\n';
  }
  out.flags(flags);
}

}  // namespace immpi
