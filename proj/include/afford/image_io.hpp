#pragma once

#include <filesystem>
#include <string>

#include "afford/dense_map.hpp"
#include "afford/image.hpp"

namespace afford {

/// Loads a PNG or JPEG image as RGB in [0, 1] (grayscale replicated).
ImageRGB load_image(const std::filesystem::path& path);

/// Loads a single-channel PNG (8- or 16-bit). Multi-channel input is an error.
ImageGray load_gray_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG.
void save_image_png(const ImageRGB& img, const std::filesystem::path& path);

// Dense-map serialization. PNG: single-channel 16-bit, minmax-normalized on
// save, rescaled to [0,1] on load (lossy). AFMP sidecar: 8-byte header
// (magic "AFMP", u16 height, u16 width) + raw little-endian f32 values,
// lossless within f32 — used wherever exact round-trip matters.

void save_map_png(const DenseMap& map, const std::filesystem::path& path);
DenseMap load_map_png(const std::filesystem::path& path);

void save_map_sidecar(const DenseMap& map, const std::filesystem::path& path);
DenseMap load_map_sidecar(const std::filesystem::path& path);

/// Loads a prediction/GT map from either format, keyed by extension
/// (".afmp" sidecar, ".png" 16-bit map).
DenseMap load_map_any(const std::filesystem::path& path);

}  // namespace afford
