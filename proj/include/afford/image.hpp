#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace afford {

/// H x W x 3 float image, values in [0, 1], row-major, channel-interleaved.
struct ImageRGB {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;  // size = height * width * 3

    ImageRGB() = default;
    ImageRGB(int h, int w, float fill = 0.0f)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {}

    float& at(int r, int c, int ch) {
        return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }
    float at(int r, int c, int ch) const {
        return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }
};

/// Single-channel float image in [0, 1] (depth maps, raw grayscale).
struct ImageGray {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    ImageGray() = default;
    ImageGray(int h, int w, float fill = 0.0f)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

    float& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    float at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

/// Model-input preprocessing resize: bicubic (Catmull-Rom), align-corners,
/// result clamped to [0, 1].
ImageRGB resize_image(const ImageRGB& img, int out_h, int out_w);
ImageGray resize_image(const ImageGray& img, int out_h, int out_w);

/// Depth maps enter the shared encoder as 3-channel images.
ImageRGB replicate3(const ImageGray& depth);

}  // namespace afford
