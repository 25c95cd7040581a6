#pragma once

#include <vector>

#include "flowcast/common.hpp"

namespace flowcast {

/// Per-pixel displacement field in pixels, interleaved (dx, dy) row-major.
/// The grid lives on frame `from`; p + at(p) lands in frame `to` coordinates.
/// `from`/`to` are -1 when the field is not attached to a sequence (e.g. a
/// bare .flo file). A consecutive forward flow has to == from + 1; a backward
/// flow used for warping a later frame from an earlier one has to < from.
struct FlowField {
    int width = 0;
    int height = 0;
    int from = -1;
    int to = -1;
    std::vector<float> v; // size = width * height * 2

    FlowField() = default;
    FlowField(int w, int h, float fill_dx = 0.0f, float fill_dy = 0.0f)
        : width(w), height(h), v(static_cast<size_t>(w) * h * 2, 0.0f) {
        require(w > 0 && h > 0, "FlowField: bad dimensions");
        if (fill_dx != 0.0f || fill_dy != 0.0f) {
            for (size_t i = 0; i < v.size(); i += 2) {
                v[i] = fill_dx;
                v[i + 1] = fill_dy;
            }
        }
    }

    size_t index(int x, int y) const { return (static_cast<size_t>(y) * width + x) * 2; }
    float dx(int x, int y) const { return v[index(x, y)]; }
    float dy(int x, int y) const { return v[index(x, y) + 1]; }
    void set(int x, int y, float fx, float fy) {
        const size_t i = index(x, y);
        v[i] = fx;
        v[i + 1] = fy;
    }

    bool same_shape(const FlowField& o) const { return width == o.width && height == o.height; }

    /// Throws unless every component is finite.
    void validate() const;
};

} // namespace flowcast
