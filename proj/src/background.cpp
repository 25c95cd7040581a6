#include "flowcast/background.hpp"

#include <cmath>

#include "flowcast/common.hpp"
#include "flowcast/parallel.hpp"

namespace flowcast::background {

std::vector<Affine2> extrapolate_global(const MotionHistory& history, int horizon) {
    require(!history.steps.empty(), "extrapolate_global: empty history");
    require(horizon >= 0, "extrapolate_global: negative horizon");
    for (const Affine2& g : history.steps)
        require(g.finite(), "extrapolate_global: non-finite history");

    const Affine2& last = history.steps.back();
    std::vector<Affine2> future(static_cast<size_t>(horizon), last);
    if (horizon == 0) return future;

    std::array<double, 6> diff{};
    if (history.order == ModelOrder::Linear && history.steps.size() >= 2) {
        const size_t n = history.steps.size() - 1;
        for (size_t i = 0; i + 1 < history.steps.size(); ++i)
            for (int j = 0; j < 6; ++j)
                diff[j] += (history.steps[i + 1].a[j] - history.steps[i].a[j]) / n;
    }

    const auto build = [&](int k, double scale) {
        Affine2 f = last;
        for (int j = 0; j < 6; ++j) f.a[j] += (k + 1) * scale * diff[j];
        return f;
    };
    // Scale the per-parameter increments back until no extrapolated step
    // degenerates (linear-block determinant must stay above 0.1).
    double scale = 1.0;
    for (int tries = 0; tries < 60; ++tries) {
        bool ok = true;
        for (int k = 0; k < horizon && ok; ++k) ok = build(k, scale).det() > 0.1;
        if (ok) break;
        scale = (tries == 58) ? 0.0 : scale * 0.5;
    }
    for (int k = 0; k < horizon; ++k) future[static_cast<size_t>(k)] = build(k, scale);
    return future;
}

FlowField affine_to_flow(const Affine2& g, int width, int height, int from, int to) {
    require(width > 0 && height > 0, "affine_to_flow: bad dimensions");
    require(g.finite(), "affine_to_flow: non-finite map");
    FlowField f(width, height);
    f.from = from;
    f.to = to;
    parallel_rows(height, [&](int y) {
        for (int x = 0; x < width; ++x) {
            const Vec2 q = g.apply(x, y);
            f.set(x, y, static_cast<float>(q.x - x), static_cast<float>(q.y - y));
        }
    });
    return f;
}

BackgroundFlows future_backward_flows(const std::vector<Affine2>& future_steps,
                                      int width, int height) {
    require(width > 0 && height > 0, "future_backward_flows: bad dimensions");
    BackgroundFlows out;
    out.back.reserve(future_steps.size());
    out.fwd.reserve(future_steps.size());
    Affine2 comp = Affine2::identity(); // frame t -> frame t+k+1
    for (const Affine2& step : future_steps) {
        require(step.finite(), "future_backward_flows: non-finite step");
        comp = concat(step, comp);
        out.back.push_back(affine_to_flow(comp.inverse(), width, height));
        out.fwd.push_back(affine_to_flow(comp, width, height));
    }
    return out;
}

std::vector<WarpResult> predict_background(const Frame& static_bg,
                                           const std::vector<FlowField>& back_flows) {
    static_bg.validate();
    std::vector<WarpResult> out;
    out.reserve(back_flows.size());
    for (const FlowField& f : back_flows) {
        require(f.width == static_bg.width && f.height == static_bg.height,
                "predict_background: flow shape mismatch");
        out.push_back(backward_warp(static_bg, f));
    }
    return out;
}

} // namespace flowcast::background
