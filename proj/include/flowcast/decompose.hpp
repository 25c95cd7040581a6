#pragma once

#include <vector>

#include "flowcast/affine.hpp"
#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"
#include "flowcast/mask_ops.hpp"
#include "flowcast/scene.hpp"

namespace flowcast::decompose {

struct DecomposeParams {
    double tau_move = 1.5;      // residual (px) separating object from camera motion
    int reweight_rounds = 2;    // inlier re-fits after the initial LS solve
    double inlier_radius = 3.0; // px
    size_t min_area = 16;       // components smaller than this are dropped
    double track_ssim = 0.4;    // identity-check threshold for tracks

    void validate() const;
};

/// Plain least-squares affine fit q = G(p) to q = p + flow(p) over the
/// support mask. Throws when fewer than `min_support` pixels are set or the
/// normal equations are singular.
Affine2 fit_flow_affine(const FlowField& flow, const Mask& support, size_t min_support = 6);

/// fit_flow_affine over non-excluded pixels (pass an empty mask to use every
/// pixel), refined by `reweight_rounds` re-fits restricted to inliers
/// (residual < inlier_radius). Throws when fewer than 6 pixels are usable
/// or the normal equations are singular.
Affine2 fit_global_motion(const FlowField& flow, const Mask& exclude,
                          const DecomposeParams& params);

/// Per-pixel residual ||p + flow(p) - G(p)||_2.
std::vector<float> motion_residual(const FlowField& flow, const Affine2& g);

/// Per input frame: pixels whose residual against the dominant motion
/// exceeds tau_move, cleaned by a radius-1 open + close, then intersected
/// with the temporally adjacent frame's evidence (warped into this frame).
/// The last input frame, which has no outgoing flow, inherits forward-
/// splatted evidence from its predecessor.
std::vector<Mask> detect_moving(const SceneSequence& scene, const std::vector<Affine2>& global,
                                const DecomposeParams& params);

/// One moving object across the input frames.
struct Track {
    int id = 0;
    std::vector<Mask> masks;    // per input frame; masks.back() is the seed
    std::vector<Vec2> centroids;
    Frame appearance;           // bbox crop of the last input frame
    int box_x = 0, box_y = 0;   // bbox of the seed mask
    int box_w = 0, box_h = 0;
    double bottom_y = 0.0;      // depth proxy: lower in the image = nearer
    size_t area = 0;

    double diagonal() const;    // bbox diagonal, the translation unit
    Vec2 center() const;        // seed centroid
};

/// Seeds one track per connected component of the last frame's moving mask
/// (area >= min_area) and propagates each mask to earlier frames by
/// backward-warping through the consecutive flows, gated by each frame's
/// moving mask. Frames where the object was not detected get empty masks.
std::vector<Track> extract_tracks(const SceneSequence& scene, const std::vector<Mask>& moving,
                                  const DecomposeParams& params);

/// Identity check: SSIM between the seed-frame crop and each earlier crop
/// (resampled to the seed box). Rejects when the minimum falls below
/// `threshold`; frames with an empty mask are skipped, so single-frame
/// tracks pass vacuously.
bool track_check(const Track& track, const std::vector<Frame>& frames, double threshold);

/// Iterative 8-neighbor mean diffusion: hole pixels are repeatedly replaced
/// by the mean of their non-hole neighbors until every hole is filled.
/// Non-hole pixels are never modified. Throws when everything is a hole.
Frame inpaint_background(const Frame& frame, const Mask& holes);

/// The last input frame with moving objects removed. Hole pixels are first
/// filled from earlier frames (chased through the inverses of the global
/// motions onto static background), the remainder by inpaint_background.
Frame static_background(const SceneSequence& scene, const std::vector<Mask>& moving,
                        const std::vector<Affine2>& global);

struct Decomposition {
    std::vector<Affine2> global; // global[i]: frame i -> frame i+1 pixel motion
    std::vector<Mask> moving;    // per input frame
    std::vector<Track> tracks;   // accepted tracks, seeded on the last input
    Frame static_bg;             // last input, objects removed and filled
};

/// Full decomposition of the observed frames.
Decomposition decompose(const SceneSequence& scene, const DecomposeParams& params);

} // namespace flowcast::decompose
