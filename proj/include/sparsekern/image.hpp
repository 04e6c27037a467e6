#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsekern {

enum class Errc {
  parameter,
  io,
  dimension,
  truncation,
  numeric,
  degenerate,
};

const char* to_string(Errc code) noexcept;

/// Exception type used throughout the core library. The C API maps `code()`
/// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Single-channel image, row-major, 64-bit samples. (x, y) = (column, row).
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return data_.size(); }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  /// Zero outside the image.
  double get(int x, int y) const noexcept {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0;
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<double> row(int y) { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const double> row(int y) const { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Odd-sized square weight grid centered at (0, 0). at(i, j) takes centered
/// coordinates, i along x and j along y, both in [-radius, radius].
class DenseKernel {
 public:
  DenseKernel() = default;
  explicit DenseKernel(int size);
  DenseKernel(int size, std::vector<double> weights);

  int size() const noexcept { return size_; }
  int radius() const noexcept { return size_ / 2; }

  double& at(int i, int j) { return weights_[index(i, j)]; }
  double at(int i, int j) const { return weights_[index(i, j)]; }
  /// Zero outside the grid.
  double get(int i, int j) const noexcept {
    const int r = radius();
    if (i < -r || i > r || j < -r || j > r) return 0.0;
    return weights_[index(i, j)];
  }

  std::vector<double>& weights() noexcept { return weights_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double sum() const noexcept;
  double peak() const noexcept;
  /// Divides by the weight sum. Throws Errc::degenerate on an empty kernel.
  void normalize();

  /// Copy centered on a larger (or equal) odd canvas.
  DenseKernel embedded(int canvas) const;
  Image to_image() const;
  static DenseKernel from_image(const Image& img);

  friend bool operator==(const DenseKernel&, const DenseKernel&) = default;

 private:
  std::size_t index(int i, int j) const noexcept {
    const int r = radius();
    return static_cast<std::size_t>(j + r) * size_ + static_cast<std::size_t>(i + r);
  }

  int size_ = 0;
  std::vector<double> weights_;
};

}  // namespace sparsekern
