#pragma once

#include <vector>

#include "flowcast/flow.hpp"
#include "flowcast/image.hpp"
#include "flowcast/scene.hpp"

namespace flowcast::energy {

/// Term weights for flow evaluation plus the consistency thresholds:
/// a residual is accepted when ||delta||_2 < max(a, b * ||flow||_2).
struct EnergyWeights {
    double lambda_data = 1.0;
    double lambda_perc = 15.0;
    double lambda_smooth = 1.0;
    double lambda_cons = 1.0;
    double a = 3.0;  // pixels
    double b = 0.05; // dimensionless

    void validate() const;
};

struct FrameEnergy {
    double data = 0.0;
    double perc = 0.0;
    double smooth = 0.0;
    double cons = 0.0;
    double total = 0.0;
    double valid_frac = 1.0;
};

/// Per-future-frame terms plus a totals block (term sums over frames,
/// valid_frac averaged).
struct EnergyReport {
    std::vector<FrameEnergy> frames;
    FrameEnergy totals;
};

/// Mean over confident pixels of |pred - ref|_1 (both components); 0 when no
/// pixel is confident.
double data_term(const FlowField& pred, const FlowField& ref, const Mask& confidence);

/// Feature distance between two frames under a fixed, parameter-free feature
/// stack: the 3 levels of a Gaussian pyramid together with their forward
/// gradients. Each level contributes (|dL|_1 + |d grad L|_1) / N_level.
double perceptual_term(const Frame& warped, const Frame& target);

/// Mean over pixels of |grad flow|_1 * exp(-|grad image|_1), forward
/// differences, channel gradients summed inside the exponent.
double smoothness_term(const FlowField& flow, const Frame& image);

struct ConsistencyResult {
    int width = 0;
    int height = 0;
    std::vector<float> residual; // interleaved (dx, dy)
    Mask valid;                  // the delta(p) gate
    double energy = 0.0;         // mean over all pixels of delta * |residual|_1
};

/// Forward-backward check. `forward` maps i->t on frame i's grid, `backward`
/// maps t->i on frame t's grid (same dimensions). The backward field is
/// sampled bilinearly at p' = p + forward(p) with clamp-to-edge borders;
/// residual(p) = p - (p' + backward(p')), delta(p) = 1 iff
/// ||residual||_2 < max(a, b * ||forward(p)||_2), and the energy is the mean
/// over all pixels of delta * |residual|_1.
ConsistencyResult fb_consistency(const FlowField& forward, const FlowField& backward,
                                 double a, double b);

/// Full report for a batch of predicted flows. pred_back[j] maps future
/// frame (t + j) to the last input; pred_fwd[j] is the opposite direction,
/// used by the consistency term. The scene must include the future frames.
/// The data term uses scene.ref_back_flows when present (confidence from
/// scene.ref_confidence, else from the consistency gate) and is 0 otherwise.
EnergyReport total_energy(const std::vector<FlowField>& pred_back,
                          const std::vector<FlowField>& pred_fwd,
                          const SceneSequence& scene, const EnergyWeights& weights);

/// Terms computable without ground truth: smoothness against the synthesized
/// frames and forward-backward consistency. data/perc are zero.
EnergyReport prediction_energy(const std::vector<FlowField>& pred_back,
                               const std::vector<FlowField>& pred_fwd,
                               const std::vector<Frame>& predicted_frames,
                               const EnergyWeights& weights);

} // namespace flowcast::energy
