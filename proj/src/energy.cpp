#include "flowcast/energy.hpp"

#include <cmath>

#include "flowcast/image_ops.hpp"
#include "flowcast/parallel.hpp"

namespace flowcast::energy {

void EnergyWeights::validate() const {
    require(lambda_data >= 0.0 && lambda_perc >= 0.0 && lambda_smooth >= 0.0 &&
                lambda_cons >= 0.0,
            "EnergyWeights: weights must be nonnegative");
    require(a > 0.0 && b >= 0.0, "EnergyWeights: need a > 0 and b >= 0");
}

double data_term(const FlowField& pred, const FlowField& ref, const Mask& confidence) {
    require(pred.same_shape(ref), "data_term: flow shape mismatch");
    require(confidence.width == pred.width && confidence.height == pred.height,
            "data_term: confidence shape mismatch");
    const double sum = sum_rows(pred.height, [&](int y) {
        double s = 0.0;
        for (int x = 0; x < pred.width; ++x)
            if (confidence.at(x, y))
                s += std::abs(static_cast<double>(pred.dx(x, y)) - ref.dx(x, y)) +
                     std::abs(static_cast<double>(pred.dy(x, y)) - ref.dy(x, y));
        return s;
    });
    const size_t n = confidence.count();
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double perceptual_term(const Frame& warped, const Frame& target) {
    require(warped.same_shape(target), "perceptual_term: shape mismatch");
    const auto pa = gaussian_pyramid(warped, 3);
    const auto pb = gaussian_pyramid(target, 3);
    double total = 0.0;
    for (int l = 0; l < 3; ++l) {
        const Frame& a = pa[static_cast<size_t>(l)];
        const Frame& b = pb[static_cast<size_t>(l)];
        const Gradients ga = spatial_gradient(a);
        const Gradients gb = spatial_gradient(b);
        const double sum = sum_rows(a.height, [&](int y) {
            double s = 0.0;
            for (int x = 0; x < a.width; ++x)
                for (int c = 0; c < a.channels; ++c) {
                    const size_t i = a.index(x, y, c);
                    s += std::abs(static_cast<double>(a.data[i]) - b.data[i]) +
                         std::abs(static_cast<double>(ga.gx[i]) - gb.gx[i]) +
                         std::abs(static_cast<double>(ga.gy[i]) - gb.gy[i]);
                }
            return s;
        });
        total += sum / static_cast<double>(a.data.size());
    }
    return total;
}

double smoothness_term(const FlowField& flow, const Frame& image) {
    require(flow.width == image.width && flow.height == image.height,
            "smoothness_term: shape mismatch");
    const Gradients g = spatial_gradient(image);
    const double sum = sum_rows(flow.height, [&](int y) {
        double s = 0.0;
        for (int x = 0; x < flow.width; ++x) {
            double fgrad = 0.0;
            if (x + 1 < flow.width) {
                fgrad += std::abs(static_cast<double>(flow.dx(x + 1, y)) - flow.dx(x, y)) +
                         std::abs(static_cast<double>(flow.dy(x + 1, y)) - flow.dy(x, y));
            }
            if (y + 1 < flow.height) {
                fgrad += std::abs(static_cast<double>(flow.dx(x, y + 1)) - flow.dx(x, y)) +
                         std::abs(static_cast<double>(flow.dy(x, y + 1)) - flow.dy(x, y));
            }
            double igrad = 0.0;
            for (int c = 0; c < image.channels; ++c) {
                const size_t i = g.index(x, y, c);
                igrad += std::abs(static_cast<double>(g.gx[i])) +
                         std::abs(static_cast<double>(g.gy[i]));
            }
            s += fgrad * std::exp(-igrad);
        }
        return s;
    });
    return sum / static_cast<double>(flow.width) / static_cast<double>(flow.height);
}

ConsistencyResult fb_consistency(const FlowField& forward, const FlowField& backward,
                                 double a, double b) {
    require(forward.same_shape(backward), "fb_consistency: shape mismatch");
    require(a > 0.0 && b >= 0.0, "fb_consistency: need a > 0 and b >= 0");
    ConsistencyResult r;
    r.width = forward.width;
    r.height = forward.height;
    r.residual.assign(forward.v.size(), 0.0f);
    r.valid = Mask(forward.width, forward.height);

    // The backward field's two components as frames, for bilinear sampling.
    Frame bx(backward.width, backward.height, 1), by(backward.width, backward.height, 1);
    parallel_rows(backward.height, [&](int y) {
        for (int x = 0; x < backward.width; ++x) {
            bx.data[bx.index(x, y)] = backward.dx(x, y);
            by.data[by.index(x, y)] = backward.dy(x, y);
        }
    });

    const double total = sum_rows(forward.height, [&](int y) {
        double s = 0.0;
        for (int x = 0; x < forward.width; ++x) {
            const double fx = forward.dx(x, y), fy = forward.dy(x, y);
            const double px = x + fx, py = y + fy;
            float bdx = 0.0f, bdy = 0.0f;
            bilinear_sample(bx, px, py, &bdx);
            bilinear_sample(by, px, py, &bdy);
            const double rx = x - (px + bdx);
            const double ry = y - (py + bdy);
            const size_t i = (static_cast<size_t>(y) * r.width + x) * 2;
            r.residual[i] = static_cast<float>(rx);
            r.residual[i + 1] = static_cast<float>(ry);
            const double mag = std::hypot(rx, ry);
            const bool ok = mag < std::max(a, b * std::hypot(fx, fy));
            r.valid.set(x, y, ok);
            if (ok) s += std::abs(rx) + std::abs(ry);
        }
        return s;
    });
    r.energy = total / static_cast<double>(forward.width) / static_cast<double>(forward.height);
    return r;
}

namespace {

FrameEnergy weighted(const EnergyWeights& w, double d, double p, double s, double c,
                     double valid_frac) {
    FrameEnergy e;
    e.data = d;
    e.perc = p;
    e.smooth = s;
    e.cons = c;
    e.valid_frac = valid_frac;
    e.total = w.lambda_data * d + w.lambda_perc * p + w.lambda_smooth * s + w.lambda_cons * c;
    return e;
}

EnergyReport finish(std::vector<FrameEnergy> frames) {
    EnergyReport rep;
    rep.frames = std::move(frames);
    for (const FrameEnergy& f : rep.frames) {
        rep.totals.data += f.data;
        rep.totals.perc += f.perc;
        rep.totals.smooth += f.smooth;
        rep.totals.cons += f.cons;
        rep.totals.total += f.total;
        rep.totals.valid_frac += f.valid_frac;
    }
    if (!rep.frames.empty())
        rep.totals.valid_frac /= static_cast<double>(rep.frames.size());
    else
        rep.totals.valid_frac = 1.0;
    return rep;
}

} // namespace

EnergyReport total_energy(const std::vector<FlowField>& pred_back,
                          const std::vector<FlowField>& pred_fwd,
                          const SceneSequence& scene, const EnergyWeights& weights) {
    weights.validate();
    scene.validate(true);
    const int horizon = scene.horizon();
    require(static_cast<int>(pred_back.size()) == horizon,
            "total_energy: one backward flow per future frame required");
    require(pred_fwd.size() == pred_back.size(),
            "total_energy: forward/backward flow count mismatch");
    const int t = scene.manifest.input_count - 1;
    const Frame& last = scene.frames[static_cast<size_t>(t)];

    std::vector<FrameEnergy> frames;
    for (int k = 0; k < horizon; ++k) {
        const FlowField& back = pred_back[static_cast<size_t>(k)];
        const FlowField& fwd = pred_fwd[static_cast<size_t>(k)];
        require(back.width == scene.width() && back.height == scene.height() &&
                    fwd.width == scene.width() && fwd.height == scene.height(),
                "total_energy: flow shape mismatch");
        const Frame& target = scene.frames[static_cast<size_t>(t + 1 + k)];
        const ConsistencyResult cons = fb_consistency(fwd, back, weights.a, weights.b);

        double d = 0.0;
        if (!scene.ref_back_flows.empty()) {
            const Mask& conf = scene.ref_confidence.empty()
                                   ? cons.valid
                                   : scene.ref_confidence[static_cast<size_t>(k)];
            d = data_term(back, scene.ref_back_flows[static_cast<size_t>(k)], conf);
        }
        const WarpResult warped = backward_warp(last, back);
        const double p = perceptual_term(warped.image, target);
        const double s = smoothness_term(back, target);
        const double vf = static_cast<double>(cons.valid.count()) /
                          static_cast<double>(cons.valid.bits.size());
        frames.push_back(weighted(weights, d, p, s, cons.energy, vf));
    }
    return finish(std::move(frames));
}

EnergyReport prediction_energy(const std::vector<FlowField>& pred_back,
                               const std::vector<FlowField>& pred_fwd,
                               const std::vector<Frame>& predicted_frames,
                               const EnergyWeights& weights) {
    weights.validate();
    require(pred_back.size() == pred_fwd.size() &&
                pred_back.size() == predicted_frames.size(),
            "prediction_energy: count mismatch");
    std::vector<FrameEnergy> frames;
    for (size_t k = 0; k < pred_back.size(); ++k) {
        const ConsistencyResult cons =
            fb_consistency(pred_fwd[k], pred_back[k], weights.a, weights.b);
        const double s = smoothness_term(pred_back[k], predicted_frames[k]);
        const double vf = static_cast<double>(cons.valid.count()) /
                          static_cast<double>(cons.valid.bits.size());
        frames.push_back(weighted(weights, 0.0, 0.0, s, cons.energy, vf));
    }
    return finish(std::move(frames));
}

} // namespace flowcast::energy
