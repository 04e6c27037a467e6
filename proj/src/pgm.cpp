#include "sparsekern/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace sparsekern {

namespace {

struct Header {
  char kind = 0;  // '2', '3', '5', '6'
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<std::string> comments;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  // Skips whitespace and '#' comments; collected comments are returned in the
  // header so callers can read metadata such as sum-scale.
  void skip_space(std::vector<std::string>* comments) {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        const auto eol = bytes_.find('\n', pos_);
        const auto end = eol == std::string::npos ? bytes_.size() : eol;
        if (comments) comments->push_back(bytes_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_int(std::vector<std::string>* comments, const char* what) {
    skip_space(comments);
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw Error(Errc::io, std::string("malformed PNM header: expected ") + what);
    return std::stoi(bytes_.substr(start, pos_ - start));
  }

  std::size_t pos_ = 0;
  std::string bytes_;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<Image> decode(const std::filesystem::path& path, Header& h) {
  Reader r(read_file(path));
  if (r.bytes_.size() < 2 || r.bytes_[0] != 'P') throw Error(Errc::io, "'" + path.string() + "' is not a PNM file");
  h.kind = r.bytes_[1];
  if (h.kind != '2' && h.kind != '3' && h.kind != '5' && h.kind != '6')
    throw Error(Errc::io, "unsupported PNM variant P" + std::string(1, h.kind));
  r.pos_ = 2;
  h.width = r.read_int(&h.comments, "width");
  h.height = r.read_int(&h.comments, "height");
  h.maxval = r.read_int(&h.comments, "maxval");
  if (h.width <= 0 || h.height <= 0) throw Error(Errc::io, "malformed PNM header: non-positive dimensions");
  if (h.maxval <= 0 || h.maxval > 65535) throw Error(Errc::io, "malformed PNM header: maxval out of range");

  const int channels = (h.kind == '3' || h.kind == '6') ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height * channels;
  std::vector<double> raw(count);
  if (h.kind == '2' || h.kind == '3') {
    for (std::size_t n = 0; n < count; ++n) raw[n] = r.read_int(nullptr, "sample");
  } else {
    // Exactly one whitespace byte separates maxval from the raster.
    if (r.pos_ >= r.bytes_.size()) throw Error(Errc::io, "truncated PNM file");
    ++r.pos_;
    const int bytes_per = h.maxval > 255 ? 2 : 1;
    if (r.bytes_.size() - r.pos_ < count * bytes_per) throw Error(Errc::io, "truncated PNM raster");
    const auto* p = reinterpret_cast<const unsigned char*>(r.bytes_.data() + r.pos_);
    for (std::size_t n = 0; n < count; ++n)
      raw[n] = bytes_per == 2 ? (p[2 * n] << 8) | p[2 * n + 1] : p[n];
  }

  std::vector<Image> out(channels, Image(h.width, h.height));
  for (std::size_t px = 0; px < static_cast<std::size_t>(h.width) * h.height; ++px) {
    for (int c = 0; c < channels; ++c) {
      const double v = raw[px * channels + c];
      if (v > h.maxval) throw Error(Errc::io, "PNM sample exceeds maxval");
      out[c].data()[px] = v / h.maxval;
    }
  }
  return out;
}

void write_binary(const std::filesystem::path& path, const std::vector<Image>& channels,
                  const std::vector<std::string>& comments, const std::vector<std::uint16_t>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
  out << (channels.size() == 3 ? "P6" : "P5") << '\n';
  for (const auto& c : comments) out << "# " << c << '\n';
  out << channels.front().width() << ' ' << channels.front().height() << '\n' << 65535 << '\n';
  std::string buf;
  buf.reserve(samples.size() * 2);
  for (std::uint16_t s : samples) {
    buf.push_back(static_cast<char>(s >> 8));
    buf.push_back(static_cast<char>(s & 0xff));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(Errc::io, "failed writing '" + path.string() + "'");
}

std::uint16_t quantize(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

}  // namespace

std::vector<Image> load_image_channels(const std::filesystem::path& path) {
  Header h;
  return decode(path, h);
}

Image load_image(const std::filesystem::path& path) {
  auto channels = load_image_channels(path);
  if (channels.size() == 1) return std::move(channels.front());
  Image out(channels[0].width(), channels[0].height());
  for (std::size_t n = 0; n < out.pixel_count(); ++n) {
    double s = 0.0;
    for (const auto& c : channels) s += c.data()[n];
    out.data()[n] = s / static_cast<double>(channels.size());
  }
  return out;
}

void save_image(const std::filesystem::path& path, const std::vector<Image>& channels) {
  if (channels.size() != 1 && channels.size() != 3) throw Error(Errc::dimension, "images must have 1 or 3 channels");
  for (const auto& c : channels)
    if (!c.same_shape(channels.front())) throw Error(Errc::dimension, "channel dimensions differ");
  std::vector<std::uint16_t> samples;
  samples.reserve(channels.front().pixel_count() * channels.size());
  for (std::size_t px = 0; px < channels.front().pixel_count(); ++px)
    for (const auto& c : channels) samples.push_back(quantize(c.data()[px]));
  write_binary(path, channels, {}, samples);
}

void save_image(const std::filesystem::path& path, const Image& img) { save_image(path, std::vector<Image>{img}); }

void save_kernel_image(const DenseKernel& kernel, const std::filesystem::path& path) {
  const double peak = kernel.peak();
  if (!(peak > 0.0)) throw Error(Errc::degenerate, "kernel has empty support");
  for (double w : kernel.weights())
    if (w < 0.0) throw Error(Errc::parameter, "kernel files store non-negative weights only");
  std::vector<std::uint16_t> samples;
  samples.reserve(kernel.weights().size());
  for (double w : kernel.weights()) samples.push_back(quantize(w / peak));
  std::ostringstream scale;
  scale.precision(17);
  scale << "sum-scale " << peak / 65535.0;
  const std::vector<Image> shape{Image(kernel.size(), kernel.size())};
  write_binary(path, shape, {scale.str()}, samples);
}

DenseKernel load_kernel_image(const std::filesystem::path& path) {
  Header h;
  auto channels = decode(path, h);
  if (channels.size() != 1) throw Error(Errc::io, "kernel files must be grayscale PGM");
  if (h.width != h.height) throw Error(Errc::dimension, "kernel image must be square");
  if (h.width % 2 == 0) throw Error(Errc::dimension, "kernel image must have odd dimensions");

  double scale = 1.0 / 65535.0;
  for (const auto& c : h.comments) {
    std::istringstream is(c);
    std::string key;
    double s = 0.0;
    if (is >> key >> s && key == "sum-scale" && s > 0.0) scale = s;
  }
  // Samples were divided by maxval on decode; undo that before applying the
  // recorded scale so the stored magnitudes are reproduced before normalizing.
  std::vector<double> w = std::move(channels.front().data());
  for (double& v : w) v = v * h.maxval * scale;
  DenseKernel k(h.width, std::move(w));
  k.normalize();
  return k;
}

}  // namespace sparsekern
