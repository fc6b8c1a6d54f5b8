#include "immpi/scene_io.hpp"

#include "immpi/errors.hpp"
#include "immpi/png_io.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace immpi {

std::string_view to_string(Split split) { return split == Split::test ? "test" : "train"; }

Split Scene::split_of(int view_index) const {
  return std::find(test.begin(), test.end(), view_index) != test.end() ? Split::test : Split::train;
}

namespace {

struct Token {
  std::string_view text;
  int line;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      out.push_back({text.substr(start, i - start), line});
    }
  }
  return out;
}

class TokenReader {
 public:
  TokenReader(std::vector<Token> tokens, std::string source)
      : tokens_(std::move(tokens)), source_(std::move(source)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  int line() const { return done() ? (tokens_.empty() ? 1 : tokens_.back().line) : tokens_[pos_].line; }

  void expect(std::string_view keyword) {
    if (done()) fail("expected '" + std::string(keyword) + "' but reached end of file");
    if (tokens_[pos_].text != keyword) {
      fail("expected '" + std::string(keyword) + "', found '" + std::string(tokens_[pos_].text) + "'");
    }
    ++pos_;
  }

  double number() {
    if (done()) fail("expected a number but reached end of file");
    const Token& t = tokens_[pos_];
    double value = 0.0;
    const char* end = t.text.data() + t.text.size();
    const auto [ptr, ec] = std::from_chars(t.text.data(), end, value);
    if (ec != std::errc() || ptr != end) fail("malformed number '" + std::string(t.text) + "'");
    if (!std::isfinite(value)) fail("non-finite number '" + std::string(t.text) + "'");
    ++pos_;
    return value;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, source_, line()); }
  [[noreturn]] void fail_at(const std::string& what, int line) const {
    throw ParseError(what, source_, line);
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::string source_;
};

Camera read_camera_block(TokenReader& in, int width, int height) {
  in.expect("extrinsic");
  const int extrinsic_line = in.line();
  Eigen::Matrix4d e;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) e(r, c) = in.number();
  in.expect("intrinsic");
  const int intrinsic_line = in.line();
  Eigen::Matrix3d k;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) k(r, c) = in.number();
  in.expect("depth_range");
  const int range_line = in.line();
  const double z_near = in.number();
  const double z_far = in.number();

  if ((e.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 0.0) {
    in.fail_at("extrinsic bottom row must be 0 0 0 1", extrinsic_line);
  }
  Eigen::Matrix3d rot = e.block<3, 3>(0, 0);
  const double orth_err = (rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (orth_err > kCameraOrthonormalTolerance) {
    std::ostringstream msg;
    msg << "rotation is not orthonormal (max |R^T R - I| = " << orth_err << ")";
    in.fail_at(msg.str(), extrinsic_line);
  }
  if (rot.determinant() < 0.0) in.fail_at("rotation has determinant -1", extrinsic_line);
  // Small drift from printed decimals is projected back onto SO(3).
  if (orth_err > 1e-12) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixU() * svd.matrixV().transpose();
  }

  if (k(0, 1) != 0.0 || k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0) {
    in.fail_at("intrinsic matrix must be [fx 0 cx; 0 fy cy; 0 0 1]", intrinsic_line);
  }

  Camera cam;
  cam.intrinsics = {k(0, 0), k(1, 1), k(0, 2), k(1, 2), width, height};
  cam.world_to_camera = RigidTransform(rot, e.block<3, 1>(0, 3));
  cam.depth_range = {z_near, z_far};
  try {
    cam.intrinsics.validate();
  } catch (const InvalidCamera& err) {
    in.fail_at(err.what(), intrinsic_line);
  }
  if (!(z_near > 0.0) || !(z_near < z_far)) in.fail_at("depth range must satisfy 0 < z_near < z_far", range_line);
  return cam;
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

int view_number(const std::string& stem) {
  if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return -1;
  }
  int value = 0;
  std::from_chars(stem.data(), stem.data() + stem.size(), value);
  return value;
}

std::map<std::string, std::filesystem::path> list_files(const std::filesystem::path& dir,
                                                        const std::string& extension) {
  std::map<std::string, std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      out[entry.path().stem().string()] = entry.path();
    }
  }
  return out;
}

// Little-endian byte writer / reader for the IMPI format.
class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(bits >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<unsigned char> bytes;
};

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw TruncatedFile(std::string("truncated IMPI file while reading ") + what, source_);
    }
  }
  std::uint64_t raw(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    return static_cast<std::uint32_t>(raw(4));
  }
  double f64(const char* what) {
    need(8, what);
    return std::bit_cast<double>(raw(8));
  }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(raw(4))); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace

Camera parse_camera(std::string_view text, int width, int height, const std::string& source) {
  TokenReader in(tokenize(text), source);
  Camera cam = read_camera_block(in, width, height);
  if (!in.done()) in.fail("unexpected trailing content after camera block");
  return cam;
}

std::vector<Camera> parse_camera_path(std::string_view text, int width, int height,
                                      const std::string& source) {
  TokenReader in(tokenize(text), source);
  std::vector<Camera> out;
  while (!in.done()) out.push_back(read_camera_block(in, width, height));
  if (out.empty()) in.fail("camera path contains no cameras");
  return out;
}

std::string format_camera(const Camera& camera) {
  std::string out = "extrinsic\n";
  const Eigen::Matrix4d e = camera.world_to_camera.matrix();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (c) out += ' ';
      append_number(out, e(r, c));
    }
    out += '\n';
  }
  out += "\nintrinsic\n";
  const Eigen::Matrix3d k = camera.intrinsics.matrix();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (c) out += ' ';
      append_number(out, k(r, c));
    }
    out += '\n';
  }
  out += "\ndepth_range\n";
  append_number(out, camera.depth_range.z_near);
  out += ' ';
  append_number(out, camera.depth_range.z_far);
  out += '\n';
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Camera read_camera_file(const std::filesystem::path& path, int width, int height) {
  return parse_camera(read_text_file(path), width, height, path.string());
}

void write_camera_file(const Camera& camera, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file", path.string());
  out << format_camera(camera);
  if (!out) throw IoError("write failed", path.string());
}

void parse_split(std::string_view text, int views, std::vector<int>& train, std::vector<int>& test,
                 const std::string& source) {
  train.clear();
  test.clear();
  std::set<int> seen;
  bool have_train = false;
  bool have_test = false;
  int line_no = 0;
  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError("expected 'train:' or 'test:'", source, line_no);
    std::string key = line.substr(first, colon - first);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    std::vector<int>* target = nullptr;
    if (key == "train" && !have_train) {
      target = &train;
      have_train = true;
    } else if (key == "test" && !have_test) {
      target = &test;
      have_test = true;
    } else {
      throw ParseError("unexpected split key '" + key + "'", source, line_no);
    }
    std::istringstream items(line.substr(colon + 1));
    std::string item;
    while (items >> item) {
      const int idx = view_number(item);
      if (idx < 0) throw ParseError("malformed view index '" + item + "'", source, line_no);
      if (idx >= views) {
        throw ParseError("view index " + item + " out of range for " + std::to_string(views) + " views",
                         source, line_no);
      }
      if (!seen.insert(idx).second) {
        throw ParseError("view index " + item + " listed twice", source, line_no);
      }
      target->push_back(idx);
    }
  }
  if (!have_train) throw ParseError("split file has no 'train:' line", source, line_no);
  if (train.empty()) throw ParseError("train split is empty", source, line_no);
  for (int i = 0; i < views; ++i) {
    if (seen.count(i)) continue;
    if (have_test) throw ParseError("view " + std::to_string(i) + " is in neither split", source, line_no);
    test.push_back(i);
  }
}

std::string format_split(const std::vector<int>& train, const std::vector<int>& test) {
  std::string out = "train:";
  for (int i : train) out += ' ' + std::to_string(i);
  out += "\ntest:";
  for (int i : test) out += ' ' + std::to_string(i);
  out += '\n';
  return out;
}

Scene load_scene(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("scene directory does not exist", root.string());
  const fs::path image_dir = root / "images";
  const fs::path cam_dir = root / "cams";
  if (!fs::is_directory(image_dir) || !fs::is_directory(cam_dir)) {
    throw IoError("scene directory needs images/ and cams/ subdirectories", root.string());
  }
  const auto images = list_files(image_dir, ".png");
  const auto cams = list_files(cam_dir, ".txt");
  std::set<std::string> names;
  for (const auto& [name, p] : images) names.insert(name);
  for (const auto& [name, p] : cams) names.insert(name);
  if (names.empty()) throw IoError("scene contains no views", root.string());

  std::vector<std::pair<int, std::string>> ordered;
  for (const std::string& name : names) {
    const int number = view_number(name);
    if (number < 0) throw IoError("view '" + name + "' does not have a numeric name", root.string());
    if (!images.count(name)) throw IoError("view " + name + " has a camera but no image", root.string());
    if (!cams.count(name)) throw IoError("view " + name + " has an image but no camera", root.string());
    ordered.emplace_back(number, name);
  }
  std::sort(ordered.begin(), ordered.end());

  Scene scene;
  for (const auto& [number, name] : ordered) {
    View view;
    view.name = name;
    view.image = read_png_rgb(images.at(name));
    view.camera = read_camera_file(cams.at(name), view.image.width, view.image.height);
    const Intrinsics& k = view.camera.intrinsics;
    if (k.cx < -0.5 || k.cy < -0.5 || k.cx > k.width - 0.5 || k.cy > k.height - 0.5) {
      throw IoError("principal point of view " + name + " lies outside its " +
                        std::to_string(k.width) + "x" + std::to_string(k.height) + " image",
                    cams.at(name).string());
    }
    scene.views.push_back(std::move(view));
  }

  const int n = static_cast<int>(scene.views.size());
  const fs::path split_path = root / "split.txt";
  if (fs::exists(split_path)) {
    parse_split(read_text_file(split_path), n, scene.train, scene.test, split_path.string());
  } else {
    for (int i = 0; i < n; ++i) scene.train.push_back(i);
  }
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "images");
  fs::create_directories(root / "cams");
  for (const View& view : scene.views) {
    write_png_rgb(view.image, root / "images" / (view.name + ".png"));
    write_camera_file(view.camera, root / "cams" / (view.name + ".txt"));
  }
  std::ofstream out(root / "split.txt", std::ios::binary);
  if (!out) throw IoError("cannot create file", (root / "split.txt").string());
  out << format_split(scene.train, scene.test);
}

std::vector<unsigned char> encode_mpi(const MultiplaneImage& mpi) {
  mpi.validate();
  ByteWriter w;
  w.bytes = {'I', 'M', 'P', 'I'};
  w.u32(kMpiFormatVersion);
  w.u32(static_cast<std::uint32_t>(mpi.planes.width));
  w.u32(static_cast<std::uint32_t>(mpi.planes.height));
  w.u32(static_cast<std::uint32_t>(mpi.planes.count));
  const Eigen::Matrix3d k = mpi.reference_camera.intrinsics.matrix();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) w.f64(k(r, c));
  const Eigen::Matrix4d e = mpi.reference_camera.world_to_camera.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) w.f64(e(r, c));
  w.f64(mpi.reference_camera.depth_range.z_near);
  w.f64(mpi.reference_camera.depth_range.z_far);
  for (double d : mpi.sampling.depths) w.f64(d);
  w.bytes.reserve(w.bytes.size() + mpi.planes.values.size() * 4);
  for (float v : mpi.planes.values) w.f32(v);
  return std::move(w.bytes);
}

MultiplaneImage decode_mpi_bytes(const std::vector<unsigned char>& bytes, const std::string& source) {
  if (bytes.size() < 4) throw TruncatedFile("truncated IMPI file while reading magic", source);
  if (std::memcmp(bytes.data(), "IMPI", 4) != 0) throw BadMagic("not an IMPI file (bad magic)", source);
  ByteReader in(bytes, source);
  in.raw(4);
  const std::uint32_t version = in.u32("version");
  if (version != kMpiFormatVersion) {
    throw UnsupportedVersion("unsupported IMPI version " + std::to_string(version), source, version);
  }
  const std::uint32_t w = in.u32("width");
  const std::uint32_t h = in.u32("height");
  const std::uint32_t d = in.u32("plane count");
  if (w == 0 || h == 0 || d == 0 || w > (1u << 16) || h > (1u << 16) || d > (1u << 12)) {
    throw ParseError("IMPI header has invalid dimensions", source);
  }
  Eigen::Matrix3d k;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) k(r, c) = in.f64("intrinsics");
  Eigen::Matrix4d e;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) e(r, c) = in.f64("extrinsic");
  const double z_near = in.f64("depth range");
  const double z_far = in.f64("depth range");
  std::vector<double> depths(d);
  for (double& z : depths) z = in.f64("plane depths");
  const std::size_t payload = static_cast<std::size_t>(w) * h * d * kPlaneChannels;
  in.need(payload * 4, "plane payload");
  if (in.remaining() != payload * 4) throw ParseError("IMPI file has trailing bytes", source);

  MultiplaneImage mpi;
  try {
    if (k(0, 1) != 0.0 || k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0) {
      throw InvalidCamera("intrinsic matrix must be [fx 0 cx; 0 fy cy; 0 0 1]");
    }
    mpi.reference_camera.intrinsics = {k(0, 0), k(1, 1), k(0, 2), k(1, 2), static_cast<int>(w),
                                       static_cast<int>(h)};
    mpi.reference_camera.world_to_camera = RigidTransform::from_matrix(e);
    mpi.reference_camera.depth_range = {z_near, z_far};
    mpi.sampling.depths = std::move(depths);
    mpi.planes = PlaneStack<float>(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d));
    for (float& v : mpi.planes.values) v = in.f32();
    mpi.validate();
  } catch (const IoError&) {
    throw;
  } catch (const Error& err) {
    throw ParseError(std::string("invalid IMPI contents: ") + err.what(), source);
  }
  return mpi;
}

void save_mpi(const MultiplaneImage& mpi, const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_mpi(mpi);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

MultiplaneImage load_mpi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file", path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_mpi_bytes(bytes, path.string());
}

}  // namespace immpi
