#include "flowcast/decompose.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "flowcast/image_ops.hpp"
#include "flowcast/metrics.hpp"
#include "flowcast/parallel.hpp"

namespace flowcast::decompose {

void DecomposeParams::validate() const {
    require(tau_move > 0.0, "DecomposeParams: tau_move must be positive");
    require(reweight_rounds >= 0, "DecomposeParams: reweight_rounds must be >= 0");
    require(inlier_radius > 0.0, "DecomposeParams: inlier_radius must be positive");
    require(min_area >= 1, "DecomposeParams: min_area must be >= 1");
    require(track_ssim >= -1.0 && track_ssim <= 1.0, "DecomposeParams: track_ssim out of range");
}

namespace {

Mask dilate_n(Mask m, int n) {
    for (int i = 0; i < n; ++i) m = dilate3(m);
    return m;
}

double det3(const std::array<double, 9>& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

// Cramer solve of G c = b. Column replacement keeps the solve exact when b
// coincides with a column of G (a zero flow field then yields the identity
// fit bit-for-bit, which downstream warps preserve).
std::array<double, 3> solve3(const std::array<double, 9>& g, const std::array<double, 3>& b) {
    const double d = det3(g);
    const double scale = std::max({1.0, std::abs(g[0]), std::abs(g[4]), std::abs(g[8])});
    require(std::isfinite(d) && std::abs(d) > 1e-10 * scale * scale * scale,
            "fit_flow_affine: degenerate support (singular normal equations)");
    std::array<double, 3> c{};
    for (int k = 0; k < 3; ++k) {
        std::array<double, 9> m = g;
        for (int r = 0; r < 3; ++r) m[r * 3 + k] = b[r];
        c[k] = det3(m) / d;
    }
    return c;
}

// Normal equations over the monomials (x, y, 1), shared by both coordinates.
Affine2 lsq_fit(const FlowField& flow, const std::vector<uint8_t>& use, size_t min_support) {
    std::array<double, 9> g{};
    std::array<double, 3> bx{};
    std::array<double, 3> by{};
    size_t n = 0;
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            if (!use[flow.index(x, y) / 2]) continue;
            const double px = x, py = y;
            const double qx = px + flow.dx(x, y);
            const double qy = py + flow.dy(x, y);
            g[0] += px * px;
            g[1] += px * py;
            g[2] += px;
            g[4] += py * py;
            g[5] += py;
            bx[0] += qx * px;
            bx[1] += qx * py;
            bx[2] += qx;
            by[0] += qy * px;
            by[1] += qy * py;
            by[2] += qy;
            ++n;
        }
    }
    require(n >= min_support, "fit_flow_affine: not enough support pixels");
    g[3] = g[1];
    g[6] = g[2];
    g[7] = g[5];
    g[8] = static_cast<double>(n);
    const auto cx = solve3(g, bx);
    const auto cy = solve3(g, by);
    Affine2 fit{{cx[0], cx[1], cx[2], cy[0], cy[1], cy[2]}};
    require(fit.finite(), "fit_flow_affine: non-finite solution");
    return fit;
}

} // namespace

Affine2 fit_flow_affine(const FlowField& flow, const Mask& support, size_t min_support) {
    require(flow.width > 0 && flow.height > 0, "fit_flow_affine: empty flow");
    flow.validate();
    const size_t n = static_cast<size_t>(flow.width) * flow.height;
    std::vector<uint8_t> use(n, 1);
    if (support.width != 0) {
        require(support.same_shape_as_frame(flow.width, flow.height),
                "fit_flow_affine: support shape mismatch");
        use = support.bits;
    }
    return lsq_fit(flow, use, min_support);
}

Affine2 fit_global_motion(const FlowField& flow, const Mask& exclude,
                          const DecomposeParams& params) {
    params.validate();
    require(flow.width > 0 && flow.height > 0, "fit_global_motion: empty flow");
    flow.validate();
    const size_t n = static_cast<size_t>(flow.width) * flow.height;
    std::vector<uint8_t> use(n, 1);
    if (exclude.width != 0) {
        require(exclude.same_shape_as_frame(flow.width, flow.height),
                "fit_global_motion: exclude shape mismatch");
        for (size_t i = 0; i < n; ++i) use[i] = exclude.bits[i] ? 0 : 1;
    }
    Affine2 g = lsq_fit(flow, use, 6);
    for (int round = 0; round < params.reweight_rounds; ++round) {
        std::vector<uint8_t> inlier(n, 0);
        size_t kept = 0;
        for (int y = 0; y < flow.height; ++y) {
            for (int x = 0; x < flow.width; ++x) {
                const size_t i = flow.index(x, y) / 2;
                if (!use[i]) continue;
                const Vec2 q = g.apply(x, y);
                const double rx = x + flow.dx(x, y) - q.x;
                const double ry = y + flow.dy(x, y) - q.y;
                if (std::sqrt(rx * rx + ry * ry) < params.inlier_radius) {
                    inlier[i] = 1;
                    ++kept;
                }
            }
        }
        if (kept < 6) break; // keep the last usable fit
        g = lsq_fit(flow, inlier, 6);
    }
    return g;
}

std::vector<float> motion_residual(const FlowField& flow, const Affine2& g) {
    require(flow.width > 0 && flow.height > 0, "motion_residual: empty flow");
    std::vector<float> res(static_cast<size_t>(flow.width) * flow.height, 0.0f);
    parallel_rows(flow.height, [&](int y) {
        for (int x = 0; x < flow.width; ++x) {
            const Vec2 q = g.apply(x, y);
            const double rx = x + flow.dx(x, y) - q.x;
            const double ry = y + flow.dy(x, y) - q.y;
            res[flow.index(x, y) / 2] = static_cast<float>(std::sqrt(rx * rx + ry * ry));
        }
    });
    return res;
}

namespace {

Mask threshold_residual(const std::vector<float>& res, int w, int h, double tau) {
    Mask m(w, h);
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x)
            m.bits[m.index(x, y)] = res[static_cast<size_t>(y) * w + x] > tau ? 1 : 0;
    });
    return m;
}

std::vector<Mask> raw_moving(const SceneSequence& scene, const std::vector<Affine2>& global,
                             const DecomposeParams& params) {
    std::vector<Mask> raw;
    raw.reserve(global.size());
    for (size_t i = 0; i < global.size(); ++i) {
        const FlowField& f = scene.flows_fwd[i];
        const auto res = motion_residual(f, global[i]);
        Mask m = threshold_residual(res, f.width, f.height, params.tau_move);
        raw.push_back(morph_close(morph_open(m)));
    }
    return raw;
}

} // namespace

std::vector<Mask> detect_moving(const SceneSequence& scene, const std::vector<Affine2>& global,
                                const DecomposeParams& params) {
    params.validate();
    const int t = scene.manifest.input_count;
    require(t >= 2, "detect_moving: need at least two input frames");
    require(scene.flows_fwd.size() >= static_cast<size_t>(t - 1) &&
                global.size() == static_cast<size_t>(t - 1),
            "detect_moving: need one flow and one global motion per input pair");

    const auto raw = raw_moving(scene, global, params);
    std::vector<Mask> moving(static_cast<size_t>(t));

    // Frames with an outgoing flow: evidence there must be corroborated by
    // the neighboring frame (next when available, else previous).
    for (int i = 0; i + 1 < t; ++i) {
        if (i + 2 < t) {
            const Mask next_here = warp_mask_backward(raw[i + 1], scene.flows_fwd[i]);
            moving[i] = mask_and(raw[i], dilate3(next_here));
        } else if (i > 0) {
            const Mask prev_here = splat_mask_forward(raw[i - 1], scene.flows_fwd[i - 1]);
            moving[i] = mask_and(raw[i], dilate3(prev_here));
        } else {
            moving[i] = raw[i]; // two-frame clip: single-frame evidence
        }
    }
    // Last frame has no outgoing flow; carry the previous frame's evidence
    // forward and clean up splat speckle.
    moving[t - 1] = morph_open(morph_close(splat_mask_forward(raw[t - 2], scene.flows_fwd[t - 2])));
    return moving;
}

double Track::diagonal() const {
    return std::sqrt(static_cast<double>(box_w) * box_w + static_cast<double>(box_h) * box_h);
}

Vec2 Track::center() const {
    return centroids.empty() ? Vec2{} : centroids.back();
}

namespace {

Vec2 mask_centroid(const Mask& m) {
    double sx = 0.0, sy = 0.0;
    size_t n = 0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                sx += x;
                sy += y;
                ++n;
            }
    if (n == 0) return {};
    return {sx / n, sy / n};
}

Frame crop_frame(const Frame& f, int x0, int y0, int w, int h) {
    Frame out(w, h, f.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < f.channels; ++c) out.at(x, y, c) = f.at(x0 + x, y0 + y, c);
    return out;
}

// Crop `f` at the given box and resample to (tw, th).
Frame resample_box(const Frame& f, int x0, int y0, int w, int h, int tw, int th) {
    Frame out(tw, th, f.channels);
    std::vector<float> px(static_cast<size_t>(f.channels));
    for (int y = 0; y < th; ++y) {
        const double sy = y0 + (y + 0.5) * h / th - 0.5;
        for (int x = 0; x < tw; ++x) {
            const double sx = x0 + (x + 0.5) * w / tw - 0.5;
            bilinear_sample(f, sx, sy, px.data());
            for (int c = 0; c < f.channels; ++c) out.at(x, y, c) = px[c];
        }
    }
    return out;
}

struct Box {
    int x0 = 0, y0 = 0, w = 0, h = 0;
};

bool mask_bbox(const Mask& m, Box& box) {
    int minx = m.width, miny = m.height, maxx = -1, maxy = -1;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                minx = std::min(minx, x);
                miny = std::min(miny, y);
                maxx = std::max(maxx, x);
                maxy = std::max(maxy, y);
            }
    if (maxx < 0) return false;
    box = {minx, miny, maxx - minx + 1, maxy - miny + 1};
    return true;
}

} // namespace

std::vector<Track> extract_tracks(const SceneSequence& scene, const std::vector<Mask>& moving,
                                  const DecomposeParams& params) {
    params.validate();
    const int t = scene.manifest.input_count;
    require(t >= 2 && moving.size() == static_cast<size_t>(t),
            "extract_tracks: need one moving mask per input frame");
    require(scene.flows_fwd.size() >= static_cast<size_t>(t - 1),
            "extract_tracks: missing input flows");

    const ComponentMap cm = connected_components(moving.back(), params.min_area);
    std::vector<Track> tracks;
    tracks.reserve(cm.components.size());
    for (const Component& comp : cm.components) {
        Track tr;
        tr.id = static_cast<int>(tracks.size());
        tr.masks.resize(static_cast<size_t>(t));
        tr.masks[t - 1] = cm.component_mask(comp.label);
        // Gate the propagated mask with the frame's own moving evidence:
        // backward warping alone bleeds into disoccluded background, whose
        // zero flow would otherwise pollute crops and motion fits.
        for (int i = t - 2; i >= 0; --i)
            tr.masks[i] = mask_and(warp_mask_backward(tr.masks[i + 1], scene.flows_fwd[i]),
                                   moving[i]);
        tr.centroids.resize(static_cast<size_t>(t));
        for (int i = 0; i < t; ++i) tr.centroids[i] = mask_centroid(tr.masks[i]);
        tr.box_x = comp.min_x;
        tr.box_y = comp.min_y;
        tr.box_w = comp.max_x - comp.min_x + 1;
        tr.box_h = comp.max_y - comp.min_y + 1;
        tr.appearance = crop_frame(scene.frames[t - 1], tr.box_x, tr.box_y, tr.box_w, tr.box_h);
        tr.bottom_y = comp.max_y;
        tr.area = comp.area;
        tracks.push_back(std::move(tr));
    }
    return tracks;
}

bool track_check(const Track& track, const std::vector<Frame>& frames, double threshold) {
    require(!track.masks.empty() && track.masks.size() <= frames.size(),
            "track_check: mask/frame count mismatch");
    require(track.box_w > 0 && track.box_h > 0, "track_check: empty seed box");
    for (size_t i = 0; i + 1 < track.masks.size(); ++i) {
        Box box;
        if (!mask_bbox(track.masks[i], box)) continue; // lost frames pass vacuously
        const Frame earlier =
            resample_box(frames[i], box.x0, box.y0, box.w, box.h, track.box_w, track.box_h);
        if (metrics::ssim(track.appearance, earlier) < threshold) return false;
    }
    return true;
}

Frame inpaint_background(const Frame& frame, const Mask& holes) {
    frame.validate();
    require(holes.same_shape_as_frame(frame.width, frame.height),
            "inpaint_background: mask shape mismatch");
    size_t remaining = holes.count();
    if (remaining == 0) return frame;
    require(remaining < frame.pixel_count(), "inpaint_background: every pixel is a hole");

    Frame out = frame;
    std::vector<uint8_t> filled(frame.pixel_count());
    for (size_t i = 0; i < filled.size(); ++i) filled[i] = holes.bits[i] ? 0 : 1;

    // Jacobi sweeps: each sweep fills hole pixels adjacent to the previous
    // sweep's filled set from that state only, so results are order-free.
    while (remaining > 0) {
        const Frame prev = out;
        std::vector<uint8_t> newly(frame.pixel_count(), 0);
        parallel_rows(frame.height, [&](int y) {
            for (int x = 0; x < frame.width; ++x) {
                const size_t i = static_cast<size_t>(y) * frame.width + x;
                if (filled[i]) continue;
                double sum[3] = {0.0, 0.0, 0.0};
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= frame.width || ny >= frame.height) continue;
                        if (!filled[static_cast<size_t>(ny) * frame.width + nx]) continue;
                        for (int c = 0; c < frame.channels; ++c) sum[c] += prev.at(nx, ny, c);
                        ++n;
                    }
                if (n == 0) continue;
                for (int c = 0; c < frame.channels; ++c)
                    out.at(x, y, c) = static_cast<float>(sum[c] / n);
                newly[i] = 1;
            }
        });
        size_t progress = 0;
        for (size_t i = 0; i < newly.size(); ++i)
            if (newly[i]) {
                filled[i] = 1;
                ++progress;
            }
        require(progress > 0, "inpaint_background: no fillable pixels left");
        remaining -= progress;
    }
    return out;
}

Frame static_background(const SceneSequence& scene, const std::vector<Mask>& moving,
                        const std::vector<Affine2>& global) {
    const int t = scene.manifest.input_count;
    require(t >= 2 && moving.size() == static_cast<size_t>(t) &&
                global.size() == static_cast<size_t>(t - 1),
            "static_background: inconsistent inputs");
    const int w = scene.width(), h = scene.height();
    for (const Mask& m : moving)
        require(m.same_shape_as_frame(w, h), "static_background: mask shape mismatch");

    // Soft object edges bleed past the detected support, so remove a margin
    // around it and demand a wider berth when borrowing from history.
    Frame out = scene.frames[t - 1];
    Mask hole = dilate_n(moving[t - 1], 4);

    Affine2 inv = Affine2::identity(); // frame (t-1) -> frame i coordinates
    for (int i = t - 2; i >= 0 && hole.count() > 0; --i) {
        inv = concat(global[i].inverse(), inv);
        const Mask excl = dilate_n(moving[i], 5);
        const Frame& src = scene.frames[i];
        parallel_rows(h, [&](int y) {
            std::vector<float> px(static_cast<size_t>(out.channels));
            for (int x = 0; x < w; ++x) {
                if (!hole.at(x, y)) continue;
                const Vec2 s = inv.apply(x, y);
                if (s.x < 0.0 || s.y < 0.0 || s.x > w - 1.0 || s.y > h - 1.0) continue;
                const int nx = static_cast<int>(std::lround(s.x));
                const int ny = static_cast<int>(std::lround(s.y));
                if (excl.at(std::clamp(nx, 0, w - 1), std::clamp(ny, 0, h - 1))) continue;
                bilinear_sample(src, s.x, s.y, px.data());
                for (int c = 0; c < out.channels; ++c) out.at(x, y, c) = px[c];
                hole.set(x, y, false);
            }
        });
    }
    return inpaint_background(out, hole);
}

Decomposition decompose(const SceneSequence& scene, const DecomposeParams& params) {
    params.validate();
    scene.validate(false);
    const int t = scene.manifest.input_count;
    require(scene.flows_fwd.size() >= static_cast<size_t>(t - 1),
            "decompose: missing input flows");

    // Two passes: a first fit over everything finds approximate outliers,
    // the refit excludes them so slow-moving objects cannot bias the camera.
    const size_t nf = static_cast<size_t>(t - 1);
    std::vector<Affine2> global(nf);
    for (size_t i = 0; i < nf; ++i)
        global[i] = fit_global_motion(scene.flows_fwd[i], Mask{}, params);
    const auto raw = raw_moving(scene, global, params);
    for (size_t i = 0; i < nf; ++i)
        global[i] = fit_global_motion(scene.flows_fwd[i], dilate3(raw[i]), params);

    Decomposition d;
    d.global = global;
    d.moving = detect_moving(scene, global, params);

    std::vector<Track> tracks = extract_tracks(scene, d.moving, params);
    for (Track& tr : tracks) {
        if (!track_check(tr, scene.frames, params.track_ssim)) continue;
        tr.id = static_cast<int>(d.tracks.size());
        d.tracks.push_back(std::move(tr));
    }
    d.static_bg = static_background(scene, d.moving, d.global);
    return d;
}

} // namespace flowcast::decompose
