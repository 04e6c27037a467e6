#pragma once

#include <filesystem>
#include <vector>

#include "sparsekern/image.hpp"

namespace sparsekern {

/// Reads a PGM (P2/P5) or PPM (P3/P6) file. Samples are scaled to [0, 1];
/// PPM yields three channels.
std::vector<Image> load_image_channels(const std::filesystem::path& path);

/// Single-channel convenience: PPM channels are averaged.
Image load_image(const std::filesystem::path& path);

/// Writes 16-bit binary PGM (one channel) or PPM (three channels). Values are
/// clamped to [0, 1].
void save_image(const std::filesystem::path& path, const std::vector<Image>& channels);
void save_image(const std::filesystem::path& path, const Image& img);

/// Kernel files: peak scaled to 65535, with a `# sum-scale <s>` comment such
/// that weight = value * s.
void save_kernel_image(const DenseKernel& kernel, const std::filesystem::path& path);

/// Loads and normalizes to sum 1. Rejects non-square, even-sized and
/// all-zero images.
DenseKernel load_kernel_image(const std::filesystem::path& path);

}  // namespace sparsekern
