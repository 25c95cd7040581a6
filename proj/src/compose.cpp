#include "flowcast/compose.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/image_ops.hpp"
#include "flowcast/parallel.hpp"

namespace flowcast::compose {

CompositeFrame::CompositeFrame(int w, int h, int c)
    : image(w, h, c),
      hole(w, h, true),
      tags(static_cast<size_t>(w) * h, Provenance::Hole),
      object_ids(static_cast<size_t>(w) * h, -1) {}

std::vector<size_t> depth_order(const std::vector<PlacedObject>& objects) {
    std::vector<size_t> order(objects.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t l, size_t r) {
        const PlacedObject& a = objects[l];
        const PlacedObject& b = objects[r];
        if (a.bottom_y != b.bottom_y) return a.bottom_y < b.bottom_y;
        if (a.area != b.area) return a.area < b.area;
        return a.id < b.id;
    });
    return order;
}

CompositeFrame paste(const Frame& background, const Mask& bg_valid,
                     const std::vector<PlacedObject>& objects) {
    background.validate();
    require(bg_valid.same_shape_as_frame(background.width, background.height),
            "paste: validity mask shape mismatch");
    CompositeFrame out(background.width, background.height, background.channels);
    out.image = background;
    parallel_rows(background.height, [&](int y) {
        for (int x = 0; x < background.width; ++x) {
            const size_t i = bg_valid.index(x, y);
            if (bg_valid.bits[i]) {
                out.hole.bits[i] = 0;
                out.tags[i] = Provenance::Background;
            }
        }
    });
    for (size_t idx : depth_order(objects)) {
        const PlacedObject& obj = objects[idx];
        require(obj.crop.same_shape(background) &&
                    obj.mask.same_shape_as_frame(background.width, background.height),
                "paste: object shape mismatch");
        parallel_rows(background.height, [&](int y) {
            for (int x = 0; x < background.width; ++x) {
                const size_t i = obj.mask.index(x, y);
                if (!obj.mask.bits[i]) continue;
                for (int c = 0; c < background.channels; ++c)
                    out.image.at(x, y, c) = obj.crop.at(x, y, c);
                out.hole.bits[i] = 0;
                out.tags[i] = Provenance::Object;
                out.object_ids[i] = static_cast<int16_t>(obj.id);
            }
        });
    }
    return out;
}

namespace {

// Bilinear flow lookup with clamp-to-edge, mirroring image sampling.
void sample_flow(const FlowField& f, double x, double y, double& dx, double& dy) {
    const double cx = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
    const int x0 = std::min(static_cast<int>(cx), f.width - 2 < 0 ? 0 : f.width - 2);
    const int y0 = std::min(static_cast<int>(cy), f.height - 2 < 0 ? 0 : f.height - 2);
    const int x1 = std::min(x0 + 1, f.width - 1);
    const int y1 = std::min(y0 + 1, f.height - 1);
    const double fx = cx - x0, fy = cy - y0;
    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
    const double w01 = (1 - fx) * fy, w11 = fx * fy;
    dx = w00 * f.dx(x0, y0) + w10 * f.dx(x1, y0) + w01 * f.dx(x0, y1) + w11 * f.dx(x1, y1);
    dy = w00 * f.dy(x0, y0) + w10 * f.dy(x1, y0) + w01 * f.dy(x0, y1) + w11 * f.dy(x1, y1);
}

// Copy hole pixels of `dst` from `src` along `flow` (on dst's grid), gated by
// forward-backward consistency against `reverse`. Returns pixels filled.
size_t propagate(CompositeFrame& dst, const CompositeFrame& src, const FlowField& flow,
                 const FlowField& reverse, double a, double b) {
    const int w = dst.image.width, h = dst.image.height, ch = dst.image.channels;
    std::vector<size_t> filled_in_row(static_cast<size_t>(h), 0);
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = dst.hole.index(x, y);
            if (!dst.hole.bits[i]) continue;
            const double fx = flow.dx(x, y), fy = flow.dy(x, y);
            const double px = x + fx, py = y + fy;
            if (px < 0.0 || py < 0.0 || px > w - 1.0 || py > h - 1.0) continue;
            double bx, by;
            sample_flow(reverse, px, py, bx, by);
            const double ex = x - (px + bx), ey = y - (py + by);
            const double thr = std::max(a, b * std::sqrt(fx * fx + fy * fy));
            if (std::sqrt(ex * ex + ey * ey) >= thr) continue;
            // The whole bilinear footprint must carry evidence.
            const int x0 = std::min(static_cast<int>(px), w - 2 < 0 ? 0 : w - 2);
            const int y0 = std::min(static_cast<int>(py), h - 2 < 0 ? 0 : h - 2);
            const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            if (src.hole.at(x0, y0) || src.hole.at(x1, y0) || src.hole.at(x0, y1) ||
                src.hole.at(x1, y1))
                continue;
            const double wx = px - x0, wy = py - y0;
            for (int c = 0; c < ch; ++c) {
                const double v00 = src.image.at(x0, y0, c), v10 = src.image.at(x1, y0, c);
                const double v01 = src.image.at(x0, y1, c), v11 = src.image.at(x1, y1, c);
                const double top = v00 + wx * (v10 - v00);
                const double bot = v01 + wx * (v11 - v01);
                dst.image.at(x, y, c) = static_cast<float>(top + wy * (bot - top));
            }
            dst.hole.bits[i] = 0;
            dst.tags[i] = Provenance::Propagated;
            ++filled_in_row[static_cast<size_t>(y)];
        }
    });
    size_t filled = 0;
    for (size_t n : filled_in_row) filled += n;
    return filled;
}

size_t total_holes(const std::vector<CompositeFrame>& frames) {
    size_t n = 0;
    for (const CompositeFrame& f : frames) n += f.hole.count();
    return n;
}

} // namespace

InpaintStats video_inpaint(std::vector<CompositeFrame>& frames,
                           const std::vector<FlowField>& flows_fwd,
                           const std::vector<FlowField>& flows_bwd,
                           double a, double b) {
    require(!frames.empty(), "video_inpaint: no frames");
    require(flows_fwd.size() + 1 == frames.size() && flows_bwd.size() + 1 == frames.size(),
            "video_inpaint: need one flow pair per consecutive frame pair");
    require(a > 0.0 && b >= 0.0, "video_inpaint: bad consistency thresholds");
    const int w = frames.front().image.width, h = frames.front().image.height;
    for (const CompositeFrame& f : frames)
        require(f.image.width == w && f.image.height == h, "video_inpaint: frame shape mismatch");
    for (size_t i = 0; i + 1 < frames.size(); ++i)
        require(flows_fwd[i].width == w && flows_fwd[i].height == h &&
                    flows_bwd[i].width == w && flows_bwd[i].height == h,
                "video_inpaint: flow shape mismatch");

    InpaintStats stats;
    size_t prev = total_holes(frames);
    for (size_t sweep = 0; sweep < frames.size(); ++sweep) {
        // Forward: pull values from the previous frame (grid flow i -> i-1
        // is the backward flow, checked against the forward one).
        for (size_t i = 1; i < frames.size(); ++i)
            propagate(frames[i], frames[i - 1], flows_bwd[i - 1], flows_fwd[i - 1], a, b);
        // Backward: pull values from the next frame.
        for (size_t i = frames.size() - 1; i-- > 0;)
            propagate(frames[i], frames[i + 1], flows_fwd[i], flows_bwd[i], a, b);
        const size_t now = total_holes(frames);
        stats.hole_areas.push_back(now);
        if (now == prev || now == 0) break;
        prev = now;
    }
    return stats;
}

void final_fill(CompositeFrame& frame) {
    if (frame.hole.count() == 0) return;
    const Mask holes = frame.hole;
    frame.image = decompose::inpaint_background(frame.image, holes);
    parallel_rows(frame.image.height, [&](int y) {
        for (int x = 0; x < frame.image.width; ++x) {
            const size_t i = holes.index(x, y);
            if (!holes.bits[i]) continue;
            frame.hole.bits[i] = 0;
            frame.tags[i] = Provenance::Diffused;
        }
    });
}

namespace {

void hsv_to_rgb(double hue, double sat, double val, float* rgb) {
    const double h = (hue - std::floor(hue)) * 6.0;
    const int i = static_cast<int>(h);
    const double f = h - i;
    const double p = val * (1.0 - sat);
    const double q = val * (1.0 - sat * f);
    const double t = val * (1.0 - sat * (1.0 - f));
    double r = 0, g = 0, bl = 0;
    switch (i % 6) {
        case 0: r = val, g = t, bl = p; break;
        case 1: r = q, g = val, bl = p; break;
        case 2: r = p, g = val, bl = t; break;
        case 3: r = p, g = q, bl = val; break;
        case 4: r = t, g = p, bl = val; break;
        default: r = val, g = p, bl = q; break;
    }
    rgb[0] = static_cast<float>(r);
    rgb[1] = static_cast<float>(g);
    rgb[2] = static_cast<float>(bl);
}

} // namespace

Frame provenance_image(const CompositeFrame& frame) {
    const int w = frame.image.width, h = frame.image.height;
    require(w > 0 && h > 0, "provenance_image: empty frame");
    Frame out(w, h, 3);
    parallel_rows(h, [&](int y) {
        float rgb[3];
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            switch (frame.tags[i]) {
                case Provenance::Background:
                    rgb[0] = rgb[1] = rgb[2] = 0.5f;
                    break;
                case Provenance::Object:
                    // Golden-ratio hue walk keeps adjacent ids distinct.
                    hsv_to_rgb(0.618034 * (frame.object_ids[i] + 1), 0.8, 0.9, rgb);
                    break;
                case Provenance::Propagated:
                    rgb[0] = 0.1f, rgb[1] = 0.8f, rgb[2] = 0.2f;
                    break;
                case Provenance::Diffused:
                    rgb[0] = 0.85f, rgb[1] = 0.1f, rgb[2] = 0.85f;
                    break;
                default:
                    rgb[0] = rgb[1] = rgb[2] = 0.0f;
                    break;
            }
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = rgb[c];
        }
    });
    return out;
}

} // namespace flowcast::compose
