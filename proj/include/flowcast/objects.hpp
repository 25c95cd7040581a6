#pragma once

#include <array>
#include <utility>
#include <vector>

#include "flowcast/affine.hpp"
#include "flowcast/decompose.hpp"
#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"

namespace flowcast::objects {

struct TrajectoryObjective {
    double lambda_fit = 1.0;    // attachment to the constant-velocity anchor
    double lambda_reg = 1.0;    // pull toward the identity pose
    double lambda_smooth = 2.0; // second-difference penalty
    int iterations = 200;
    double step = 1e-2;
    double huber_delta = 1e-3;  // smoothing of the L1/norm terms
    double min_det = 0.1;       // projection bound on the linear block

    void validate() const;
};

/// Object pose relative to the last observed frame: a pixel p of the object
/// on frame t maps to c + L * (p - c) + tau on the target frame, where
/// c is the object's frame-t centroid. Parameters are ordered
/// (a11, a12, tx, a21, a22, ty); the pose at frame t itself is the identity.
struct CenteredAffine {
    std::array<double, 6> p{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

    static CenteredAffine identity() { return {}; }
    /// Equivalent pixel-coordinate map for a given center.
    Affine2 to_pixel(const Vec2& c) const;
    static CenteredAffine from_pixel(const Affine2& g, const Vec2& c);
};

/// Per past frame i, the pose A_i mapping the object's frame-t geometry to
/// frame i; A_{t} is the identity. Estimated by fitting one affine per
/// consecutive flow over the object's mask, then composing and inverting
/// (exact for rigid affine motion). Steps without enough usable pixels
/// (object invisible or degenerate support) borrow the nearest later fit;
/// throws only when no step can be fitted at all.
std::vector<CenteredAffine> fit_past_affines(const decompose::Track& track,
                                             const std::vector<FlowField>& flows);

/// Sum over the sequence of the Frobenius norm of (A - I), translations
/// measured in units of `diag` so all six parameters are commensurate.
double reg_term(const std::vector<CenteredAffine>& affines, double diag);

/// Sum of L1 norms of second differences of the parameter 6-vectors
/// (translations scaled by 1/diag). Requires >= 3 entries; the caller
/// supplies the identity anchor A_t as the first element.
double smooth_term(const std::vector<CenteredAffine>& affines, double diag);

/// Appearance loss (evaluation only): sum over frames of the mean L1
/// difference, inside the transformed mask, between the object warped from
/// frame t by each pose and the corresponding target frame.
double rgb_term(const Frame& frame_t, const Mask& mask_t, const Vec2& center,
                const std::vector<CenteredAffine>& affines,
                const std::vector<Frame>& targets);

/// Constant-velocity extrapolation of the pose parameters: the anchor path
/// the optimizer is attached to.
std::vector<CenteredAffine> constant_velocity_anchor(const std::vector<CenteredAffine>& past,
                                                     int horizon);

/// Objective for a candidate future path (Huberized reg/smooth plus the
/// squared anchor-fit term). Exposed so tests can assert monotone descent.
double trajectory_energy(const std::vector<CenteredAffine>& future,
                         const std::vector<CenteredAffine>& anchor, const Vec2& center,
                         double diag, const TrajectoryObjective& obj);

/// Predict `horizon` future poses from the fitted past ones. Initialized at
/// the constant-velocity anchor, then refined by projected gradient descent
/// (numeric gradients, fixed iteration count, backtracking so the objective
/// never increases). The projection clamps the linear determinant and pulls
/// the translation back whenever the predicted centroid leaves the frame.
std::vector<CenteredAffine> extrapolate_trajectory(const std::vector<CenteredAffine>& past,
                                                   int horizon, const TrajectoryObjective& obj,
                                                   const Vec2& center, double diag,
                                                   int width, int height);

/// Warp the object's frame-t appearance and mask by one pose (backward
/// sampling through the inverse map). The mask is binarized at 0.5.
/// Throws on a non-invertible pose.
std::pair<Frame, Mask> render_object(const Frame& frame_t, const Mask& mask_t,
                                     const Vec2& center, const CenteredAffine& pose);

} // namespace flowcast::objects
