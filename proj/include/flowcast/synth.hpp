#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowcast/affine.hpp"
#include "flowcast/scene.hpp"

namespace flowcast::synth {

enum class TextureKind { Checker, Noise, Gradient };
enum class SpriteShape { Rect, Ellipse };

/// Procedural texture sampled in a layer's local coordinates. All three
/// kinds are smooth at the pixel scale, so bilinear resampling reproduces
/// them closely.
struct Texture {
    TextureKind kind = TextureKind::Checker;
    double scale = 24.0;   // feature size in pixels
    double softness = 3.0; // checker edge half-width, in pixels
    uint32_t seed = 1;     // lattice noise
    float color_a[3] = {0.25f, 0.30f, 0.55f};
    float color_b[3] = {0.85f, 0.80f, 0.40f};

    void sample(double x, double y, float* rgb) const;
};

/// One rigid moving object. Its pose at frame i (local -> frame-i pixels) is
/// step applied i times to start, so every pose parameter follows the orbit
/// of a fixed affine map and consecutive poses differ by the same step.
struct Sprite {
    SpriteShape shape = SpriteShape::Rect;
    double half_w = 20.0; // local half-extents, px
    double half_h = 14.0;
    double edge_soft = 3.0; // alpha ramp half-width (render only; masks stay hard)
    Texture texture;
    Affine2 start; // local -> world at frame 0
    Affine2 step;  // world -> world between consecutive frames

    Affine2 pose(int frame) const; // local -> world at frame i
    bool inside(double lx, double ly) const;    // occupancy (coverage >= 0.5)
    double coverage(double lx, double ly) const; // smooth alpha in [0, 1]
};

/// World -> frame-i pixels is camera_step applied i times (identity at
/// frame 0). Pure background pixels move by one global affine per step.
struct SceneSpec {
    int width = 192;
    int height = 128;
    int input_count = 4;
    int total_count = 9; // inputs + horizon
    double fps = 17.0;
    uint32_t seed = 7;
    Texture background;
    Affine2 camera_step;
    std::vector<Sprite> sprites;

    void validate() const;
};

/// Scene plus the generator's ground truth that does not fit SceneSequence:
/// per-sprite per-frame masks and the exact per-step affines.
struct GeneratedScene {
    SceneSequence scene;                        // incl. union masks + ref flows
    std::vector<std::vector<Mask>> sprite_masks; // [sprite][frame]
    SceneSpec spec;
};

/// Named presets for the command line: "static", "pan", "zoom", "orbit",
/// "mixed". Unknown names throw InvalidArgument.
SceneSpec preset(const std::string& name, uint32_t seed);

/// Deterministic rendering of the spec: frames 0..total_count-1, analytic
/// forward flows (the visible layer's motion wins at overlaps), per-sprite
/// masks, exact backward flows (t+k) -> t for every future frame, and
/// confidence masks that are unset where the correspondence crosses a layer
/// change (occlusion / disocclusion).
GeneratedScene generate(const SceneSpec& spec);

/// Index of the nearest sprite whose occupancy covers the pixel, -1 for
/// background. Later sprites occlude earlier ones.
int layer_at(const SceneSpec& spec, int frame, double x, double y);

/// Exact flow `from` -> `to`: each pixel moves with the layer visible at it.
FlowField analytic_flow(const SceneSpec& spec, int from, int to);

/// Set where the correspondence of analytic_flow lands in bounds on the
/// same layer it started from (no occlusion or disocclusion).
Mask analytic_confidence(const SceneSpec& spec, int from, int to);

/// Adds seeded Gaussian noise (sigma in px) to every flow component;
/// sigma = 0 returns the inputs unchanged.
std::vector<FlowField> perturb_flows(const std::vector<FlowField>& flows, double sigma,
                                     uint32_t seed);

std::string spec_to_json(const SceneSpec& spec);
SceneSpec spec_from_json(const std::string& text);

} // namespace flowcast::synth
