#include "flowcast/scene.hpp"

namespace flowcast {

void SceneSequence::validate(bool require_future) const {
    require(manifest.input_count >= 2, "SceneSequence: need at least 2 input frames");
    require(manifest.total_count >= manifest.input_count,
            "SceneSequence: total_count < input_count");
    require(manifest.fps > 0.0, "SceneSequence: fps must be positive");
    const int need = require_future ? manifest.total_count : manifest.input_count;
    require(static_cast<int>(frames.size()) >= need, "SceneSequence: missing frames");
    require(static_cast<int>(flows_fwd.size()) >= manifest.input_count - 1,
            "SceneSequence: missing forward flows");
    for (const Frame& f : frames) {
        f.validate();
        require(f.width == width() && f.height == height() &&
                    f.channels == frames.front().channels,
                "SceneSequence: frame shape mismatch");
    }
    for (const FlowField& fl : flows_fwd) {
        fl.validate();
        require(fl.width == width() && fl.height == height(),
                "SceneSequence: flow shape mismatch");
    }
    if (!gt_masks.empty()) {
        require(gt_masks.size() == frames.size(), "SceneSequence: gt mask count mismatch");
        for (const Mask& m : gt_masks)
            require(m.width == width() && m.height == height(),
                    "SceneSequence: gt mask shape mismatch");
    }
    if (!ref_back_flows.empty()) {
        require(static_cast<int>(ref_back_flows.size()) ==
                    manifest.total_count - manifest.input_count,
                "SceneSequence: ref flow count mismatch");
        for (const FlowField& fl : ref_back_flows) {
            fl.validate();
            require(fl.width == width() && fl.height == height(),
                    "SceneSequence: ref flow shape mismatch");
        }
        require(ref_confidence.size() == ref_back_flows.size(),
                "SceneSequence: ref confidence count mismatch");
        for (const Mask& m : ref_confidence)
            require(m.width == width() && m.height == height(),
                    "SceneSequence: ref confidence shape mismatch");
    }
}

SceneSequence SceneSequence::inputs_only() const {
    SceneSequence s;
    s.manifest = manifest;
    const size_t t = static_cast<size_t>(manifest.input_count);
    s.frames.assign(frames.begin(), frames.begin() + std::min(t, frames.size()));
    s.flows_fwd.assign(flows_fwd.begin(),
                       flows_fwd.begin() + std::min(t - 1, flows_fwd.size()));
    if (!gt_masks.empty())
        s.gt_masks.assign(gt_masks.begin(), gt_masks.begin() + std::min(t, gt_masks.size()));
    return s;
}

} // namespace flowcast
