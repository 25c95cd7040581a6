#pragma once

#include <vector>

#include "flowcast/affine.hpp"
#include "flowcast/flow.hpp"
#include "flowcast/image_ops.hpp"

namespace flowcast::background {

enum class ModelOrder { Constant, Linear };

/// History of fitted per-step global motions, steps[k]: frame k -> k+1.
struct MotionHistory {
    std::vector<Affine2> steps;
    ModelOrder order = ModelOrder::Linear;
};

/// Per-step future motions B_t, B_{t+1}, ... The constant model repeats the
/// last step; the linear model advances every parameter by its mean first
/// difference, with the linear-block determinant clamped above 0.1 by
/// scaling the increments back. Throws on an empty history.
std::vector<Affine2> extrapolate_global(const MotionHistory& history, int horizon);

/// Rasterize an affine point map g as the displacement field g(p) - p.
FlowField affine_to_flow(const Affine2& g, int width, int height, int from = -1, int to = -1);

struct BackgroundFlows {
    std::vector<FlowField> back; // back[k]: frame (t+k+1) -> t, future grid
    std::vector<FlowField> fwd;  // fwd[k]:  frame t -> (t+k+1), frame-t grid
};

/// Batch backward/forward flows for every horizon: with composite
/// C_k = B_{t+k-1} o ... o B_t, the backward flow is C_k^{-1}(p) - p and the
/// forward flow C_k(p) - p. No recursive image resampling is involved, so
/// later horizons carry no accumulated interpolation error. Throws when a
/// composite is not invertible.
BackgroundFlows future_backward_flows(const std::vector<Affine2>& future_steps,
                                      int width, int height);

/// Warp the static background to each future frame with the predicted
/// backward flows; the mask marks pixels whose source stayed in bounds.
std::vector<WarpResult> predict_background(const Frame& static_bg,
                                           const std::vector<FlowField>& back_flows);

} // namespace flowcast::background
