#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast {

/// Row-major raster of intensities in [0, 1], 1 (gray) or 3 (RGB) channels.
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data; // size = width * height * channels

    Frame() = default;
    Frame(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {
        require(w > 0 && h > 0 && (c == 1 || c == 3), "Frame: bad dimensions");
    }

    size_t index(int x, int y, int c = 0) const {
        return (static_cast<size_t>(y) * width + x) * channels + c;
    }
    float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    bool same_shape(const Frame& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    /// Throws unless every value is finite and in [0, 1].
    void validate() const;
};

/// Per-pixel boolean raster.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;

    Mask() = default;
    Mask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<size_t>(w) * h, fill ? 1 : 0) {
        require(w > 0 && h > 0, "Mask: bad dimensions");
    }

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    bool at(int x, int y) const { return bits[index(x, y)] != 0; }
    void set(int x, int y, bool v) { bits[index(x, y)] = v ? 1 : 0; }

    bool same_shape(const Mask& o) const { return width == o.width && height == o.height; }
    bool same_shape_as_frame(int w, int h) const { return width == w && height == h; }

    /// Number of set pixels.
    size_t count() const;
    bool empty_mask() const { return count() == 0; }
};

Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_not(const Mask& a);

} // namespace flowcast
