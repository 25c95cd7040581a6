#pragma once

#include <vector>

#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"

namespace flowcast {

/// Forward-difference gradients per channel; the last column (gx) and last
/// row (gy) are zero. Values may be negative, so they are not Frames.
struct Gradients {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> gx;
    std::vector<float> gy;

    size_t index(int x, int y, int c = 0) const {
        return (static_cast<size_t>(y) * width + x) * channels + c;
    }
};

struct WarpResult {
    Frame image;
    Mask valid; // footprint of the sample lay fully inside the source
};

/// Bilinear sample at (x, y) with clamp-to-edge borders; writes one value per
/// channel into `out`. Returns true when (x, y) lies in [0, W-1] x [0, H-1],
/// i.e. the sampling footprint needed no clamping. Throws on non-finite
/// coordinates.
bool bilinear_sample(const Frame& frame, double x, double y, float* out);

/// Convenience wrapper for single-channel frames.
float bilinear_sample1(const Frame& frame, double x, double y);

/// output(p) = sample(source, p + flow(p)). The mask marks pixels whose
/// sample stayed in bounds.
WarpResult backward_warp(const Frame& source, const FlowField& flow);

Gradients spatial_gradient(const Frame& frame);

/// 5-tap binomial blur ({1,4,6,4,1}/16, clamped borders), both axes.
Frame binomial_blur5(const Frame& frame);

/// Keeps even rows/columns; output is ceil(W/2) x ceil(H/2).
Frame decimate2(const Frame& frame);

/// Level 0 is the input; each next level is binomial_blur5 then decimate2.
/// Requires levels >= 1 and min(W, H) / 2^(levels-1) >= 8.
std::vector<Frame> gaussian_pyramid(const Frame& frame, int levels);

} // namespace flowcast
