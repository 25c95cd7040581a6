#pragma once

#include <vector>

#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"

namespace flowcast {

/// Clip metadata. `input_count` is the number of observed frames (frames
/// 1..t) and `total_count` the number of frames covered by the clip
/// including the prediction span (frames 1..T).
struct SceneManifest {
    double fps = 17.0;
    int input_count = 0; // t
    int total_count = 0; // T
};

/// Frames plus consecutive forward flows for one clip, with optional ground
/// truth extras used by evaluation: per-frame moving-object masks, and
/// analytic backward flows (future frame -> last input) with confidence maps.
struct SceneSequence {
    std::vector<Frame> frames;
    std::vector<FlowField> flows_fwd; // flows_fwd[k]: frame k -> k+1
    std::vector<Mask> gt_masks;       // optional, per frame: union of moving objects

    // Optional evaluation references. ref_back_flows[j] maps future frame
    // (input_count + j) to the last input frame; ref_confidence[j] marks
    // pixels whose reference correspondence is valid (no occlusion).
    std::vector<FlowField> ref_back_flows;
    std::vector<Mask> ref_confidence;

    SceneManifest manifest;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    int horizon() const { return manifest.total_count - manifest.input_count; }

    /// `require_future`: frames must cover the full clip (evaluation scenes).
    /// Otherwise only the input span is required (prediction inputs).
    void validate(bool require_future) const;

    /// Copy of the observed part only: input_count frames, their flows, and
    /// ground-truth masks when present. Reference fields are dropped.
    SceneSequence inputs_only() const;
};

} // namespace flowcast
