#include "flowcast/image_ops.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/parallel.hpp"

namespace flowcast {

bool bilinear_sample(const Frame& frame, double x, double y, float* out) {
    require(std::isfinite(x) && std::isfinite(y), "bilinear_sample: non-finite coordinate");
    const int w = frame.width, h = frame.height;
    const bool inside = x >= 0.0 && x <= w - 1.0 && y >= 0.0 && y <= h - 1.0;
    const double cx = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(cx), w - 2 >= 0 ? w - 2 : 0);
    const int y0 = std::min(static_cast<int>(cy), h - 2 >= 0 ? h - 2 : 0);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = cx - x0, fy = cy - y0;
    const double w00 = (1.0 - fx) * (1.0 - fy), w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy, w11 = fx * fy;
    for (int c = 0; c < frame.channels; ++c) {
        out[c] = static_cast<float>(w00 * frame.at(x0, y0, c) + w10 * frame.at(x1, y0, c) +
                                    w01 * frame.at(x0, y1, c) + w11 * frame.at(x1, y1, c));
    }
    return inside;
}

float bilinear_sample1(const Frame& frame, double x, double y) {
    require(frame.channels == 1, "bilinear_sample1: frame must be single-channel");
    float v = 0.0f;
    bilinear_sample(frame, x, y, &v);
    return v;
}

WarpResult backward_warp(const Frame& source, const FlowField& flow) {
    require(source.width == flow.width && source.height == flow.height,
            "backward_warp: flow/source shape mismatch");
    WarpResult r{Frame(source.width, source.height, source.channels),
                 Mask(source.width, source.height)};
    parallel_rows(source.height, [&](int y) {
        float px[3];
        for (int x = 0; x < source.width; ++x) {
            const double sx = x + flow.dx(x, y);
            const double sy = y + flow.dy(x, y);
            const bool ok = bilinear_sample(source, sx, sy, px);
            for (int c = 0; c < source.channels; ++c) r.image.at(x, y, c) = px[c];
            r.valid.set(x, y, ok);
        }
    });
    return r;
}

Gradients spatial_gradient(const Frame& frame) {
    Gradients g;
    g.width = frame.width;
    g.height = frame.height;
    g.channels = frame.channels;
    g.gx.assign(frame.data.size(), 0.0f);
    g.gy.assign(frame.data.size(), 0.0f);
    parallel_rows(frame.height, [&](int y) {
        for (int x = 0; x < frame.width; ++x) {
            for (int c = 0; c < frame.channels; ++c) {
                const size_t i = g.index(x, y, c);
                if (x + 1 < frame.width) g.gx[i] = frame.at(x + 1, y, c) - frame.at(x, y, c);
                if (y + 1 < frame.height) g.gy[i] = frame.at(x, y + 1, c) - frame.at(x, y, c);
            }
        }
    });
    return g;
}

Frame binomial_blur5(const Frame& frame) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    const int w = frame.width, h = frame.height, ch = frame.channels;
    Frame tmp(w, h, ch);
    parallel_rows(h, [&](int y) { // horizontal pass
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int t = -2; t <= 2; ++t)
                    acc += k[t + 2] * frame.at(std::clamp(x + t, 0, w - 1), y, c);
                tmp.at(x, y, c) = static_cast<float>(acc);
            }
        }
    });
    Frame out(w, h, ch);
    parallel_rows(h, [&](int y) { // vertical pass
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int t = -2; t <= 2; ++t)
                    acc += k[t + 2] * tmp.at(x, std::clamp(y + t, 0, h - 1), c);
                out.at(x, y, c) = static_cast<float>(acc);
            }
        }
    });
    return out;
}

Frame decimate2(const Frame& frame) {
    const int ow = (frame.width + 1) / 2, oh = (frame.height + 1) / 2;
    Frame out(ow, oh, frame.channels);
    parallel_rows(oh, [&](int y) {
        for (int x = 0; x < ow; ++x)
            for (int c = 0; c < frame.channels; ++c)
                out.at(x, y, c) = frame.at(2 * x, 2 * y, c);
    });
    return out;
}

std::vector<Frame> gaussian_pyramid(const Frame& frame, int levels) {
    require(levels >= 1, "gaussian_pyramid: levels must be >= 1");
    require(std::min(frame.width, frame.height) >> (levels - 1) >= 8,
            "gaussian_pyramid: image too small for requested levels");
    std::vector<Frame> pyr;
    pyr.reserve(static_cast<size_t>(levels));
    pyr.push_back(frame);
    for (int l = 1; l < levels; ++l) pyr.push_back(decimate2(binomial_blur5(pyr.back())));
    return pyr;
}

} // namespace flowcast
