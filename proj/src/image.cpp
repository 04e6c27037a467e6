#include "sparsekern/image.hpp"

#include <algorithm>
#include <cmath>

namespace sparsekern {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parameter: return "parameter error";
    case Errc::io: return "I/O error";
    case Errc::dimension: return "dimension error";
    case Errc::truncation: return "truncation error";
    case Errc::numeric: return "numeric error";
    case Errc::degenerate: return "degenerate input";
  }
  return "unknown error";
}

namespace {

void require_finite(const std::vector<double>& values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw Error(Errc::numeric, std::string(what) + " contains a non-finite value");
}

}  // namespace

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(Errc::dimension, "negative image dimensions");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0) throw Error(Errc::dimension, "negative image dimensions");
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw Error(Errc::dimension, "image data length does not match width*height");
  require_finite(data_, "image");
}

DenseKernel::DenseKernel(int size) : size_(size) {
  if (size < 1 || size % 2 == 0) throw Error(Errc::parameter, "kernel size must be a positive odd integer");
  weights_.assign(static_cast<std::size_t>(size) * size, 0.0);
}

DenseKernel::DenseKernel(int size, std::vector<double> weights) : size_(size), weights_(std::move(weights)) {
  if (size < 1 || size % 2 == 0) throw Error(Errc::parameter, "kernel size must be a positive odd integer");
  if (weights_.size() != static_cast<std::size_t>(size) * size)
    throw Error(Errc::dimension, "kernel weight count does not match size*size");
  require_finite(weights_, "kernel");
}

double DenseKernel::sum() const noexcept {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

double DenseKernel::peak() const noexcept {
  double p = 0.0;
  for (double w : weights_) p = std::max(p, std::abs(w));
  return p;
}

void DenseKernel::normalize() {
  const double s = sum();
  if (!(std::abs(s) > 0.0)) throw Error(Errc::degenerate, "kernel has empty support");
  for (double& w : weights_) w /= s;
}

DenseKernel DenseKernel::embedded(int canvas) const {
  if (canvas < size_ || canvas % 2 == 0)
    throw Error(Errc::dimension, "embedding canvas must be odd and at least the kernel size");
  DenseKernel out(canvas);
  const int r = radius();
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) out.at(i, j) = at(i, j);
  return out;
}

Image DenseKernel::to_image() const { return Image(size_, size_, weights_); }

DenseKernel DenseKernel::from_image(const Image& img) {
  if (img.width() != img.height()) throw Error(Errc::dimension, "kernel image must be square");
  if (img.width() % 2 == 0) throw Error(Errc::dimension, "kernel image must have odd dimensions");
  return DenseKernel(img.width(), img.data());
}

}  // namespace sparsekern
