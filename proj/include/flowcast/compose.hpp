#pragma once

#include <cstdint>
#include <vector>

#include "flowcast/decompose.hpp"
#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"
#include "flowcast/objects.hpp"

namespace flowcast::compose {

/// Per-pixel source tag of a composited frame.
enum class Provenance : int8_t {
    Hole = 0,       // no valid source yet
    Background = 1, // warped static background
    Object = 2,     // pasted object (id recorded separately)
    Propagated = 3, // copied along flow from a neighboring frame
    Diffused = 4,   // residual diffusion fill
};

struct CompositeFrame {
    Frame image;
    Mask hole;                        // pixels still lacking evidence
    std::vector<Provenance> tags;     // one per pixel
    std::vector<int16_t> object_ids;  // valid where tags == Object, else -1

    CompositeFrame() = default;
    CompositeFrame(int w, int h, int c);
};

/// One object prepared for pasting into a specific future frame.
struct PlacedObject {
    int id = 0;
    Frame crop;       // full-frame render of the object at its predicted pose
    Mask mask;
    double bottom_y = 0.0; // depth proxy of its track
    size_t area = 0;
};

/// Paste order, far to near: higher bottom_y pastes later (nearer), ties by
/// larger area later, then by id. Returns indices into `objects`.
std::vector<size_t> depth_order(const std::vector<PlacedObject>& objects);

/// Far-to-near overwrite of the objects onto the predicted background.
/// Pixels invalid in the background and covered by no object become holes.
CompositeFrame paste(const Frame& background, const Mask& bg_valid,
                     const std::vector<PlacedObject>& objects);

/// Ordered hole-area record; one entry per propagation sweep.
struct InpaintStats {
    std::vector<size_t> hole_areas;
};

/// Bidirectional flow-guided propagation: each sweep chases hole pixels into
/// the neighboring frames along the consecutive flows (forward then backward
/// alternating), gated by forward-backward consistency with thresholds
/// (a, b), and copies the first non-hole value found (bilinear). Sweeps
/// repeat until no hole shrinks, at most frames.size() times. Non-hole
/// pixels are never modified. flows_fwd[i] maps frame i -> i+1,
/// flows_bwd[i] maps frame i+1 -> i.
InpaintStats video_inpaint(std::vector<CompositeFrame>& frames,
                           const std::vector<FlowField>& flows_fwd,
                           const std::vector<FlowField>& flows_bwd,
                           double a = 3.0, double b = 0.05);

/// Diffuse any remaining holes from their neighbors (inpaint_background).
/// After this no pixel is a hole. Throws when the whole frame is a hole.
void final_fill(CompositeFrame& frame);

/// Color-coded provenance visualization (background gray, objects by id,
/// propagated green, diffused magenta).
Frame provenance_image(const CompositeFrame& frame);

} // namespace flowcast::compose
