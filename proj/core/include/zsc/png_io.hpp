#pragma once

#include <filesystem>
#include <vector>

#include "zsc/image.hpp"

namespace zsc {

Image load_png(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& img);

// Single-channel 8-bit export, values clamped to [0, 1].
void save_png_gray(const std::filesystem::path& path, const Grid& g);

// Min-max normalized grayscale export; constant grids come out black.
void save_png_gray_normalized(const std::filesystem::path& path, const Grid& g);

// Binary mask export (0 / 255).
void save_png_mask(const std::filesystem::path& path, int h, int w,
                   const std::vector<uint8_t>& mask);

}  // namespace zsc
