#include <doctest.h>

#include <array>
#include <cmath>

#include "flowcast/background.hpp"
#include "flowcast/synth.hpp"
#include "helpers.hpp"

using namespace flowcast;
using namespace flowcast::background;

namespace {

Affine2 scaling(double s) {
    return Affine2{{s, 0.0, 0.0, 0.0, s, 0.0}};
}

// Independent 3x3 homogeneous composition/inversion for oracle checks.
std::array<double, 6> mat_compose(const std::array<double, 6>& f,
                                  const std::array<double, 6>& g) {
    return {f[0] * g[0] + f[1] * g[3], f[0] * g[1] + f[1] * g[4],
            f[0] * g[2] + f[1] * g[5] + f[2], f[3] * g[0] + f[4] * g[3],
            f[3] * g[1] + f[4] * g[4], f[3] * g[2] + f[4] * g[5] + f[5]};
}

std::array<double, 6> mat_inverse(const std::array<double, 6>& m) {
    const double d = m[0] * m[4] - m[1] * m[3];
    const double i0 = m[4] / d, i1 = -m[1] / d, i3 = -m[3] / d, i4 = m[0] / d;
    return {i0, i1, -(i0 * m[2] + i1 * m[5]), i3, i4, -(i3 * m[2] + i4 * m[5])};
}

} // namespace

TEST_CASE("extrapolate_global: constant model repeats the last step") {
    MotionHistory h;
    h.steps = {Affine2::translation(1.0, 0.0), Affine2::translation(2.0, 0.0)};
    h.order = ModelOrder::Constant;
    const auto future = extrapolate_global(h, 3);
    REQUIRE_EQ(future.size(), 3);
    for (const Affine2& g : future) CHECK_EQ(max_abs_diff(g, h.steps.back()), 0.0);
}

TEST_CASE("extrapolate_global: linear model advances by the mean difference") {
    MotionHistory h;
    h.steps = {Affine2::translation(1.0, 0.0), Affine2::translation(2.0, 0.0),
               Affine2::translation(3.0, 0.0)};
    const auto future = extrapolate_global(h, 2);
    REQUIRE_EQ(future.size(), 2);
    CHECK_LT(max_abs_diff(future[0], Affine2::translation(4.0, 0.0)), 1e-12);
    CHECK_LT(max_abs_diff(future[1], Affine2::translation(5.0, 0.0)), 1e-12);

    // A single observed step has no difference to advance by.
    MotionHistory one;
    one.steps = {Affine2::translation(-0.5, 0.25)};
    const auto rep = extrapolate_global(one, 2);
    CHECK_EQ(max_abs_diff(rep[0], one.steps[0]), 0.0);
    CHECK_EQ(max_abs_diff(rep[1], one.steps[0]), 0.0);
}

TEST_CASE("extrapolate_global clamps collapsing zooms by halving the increment") {
    MotionHistory h;
    h.steps = {scaling(1.0), scaling(0.95)};
    const auto future = extrapolate_global(h, 16);
    REQUIRE_EQ(future.size(), 16);
    for (const Affine2& g : future) CHECK_GT(g.det(), 0.1);
    // Unclamped, the 16th step would reach s = 0.15 (det 0.0225): the first
    // halving (scale 0.5) already keeps every det above 0.1, so the first
    // step must advance by exactly half the observed difference.
    CHECK_LT(max_abs_diff(future[0], scaling(0.925)), 1e-12);
    CHECK_LT(max_abs_diff(future[15], scaling(0.95 - 0.025 * 16)), 1e-12);

    // If the last observed step is already degenerate, it is kept as-is.
    MotionHistory bad;
    bad.steps = {scaling(0.35), scaling(0.3)};
    const auto kept = extrapolate_global(bad, 2);
    CHECK_EQ(max_abs_diff(kept[0], scaling(0.3)), 0.0);
    CHECK_EQ(max_abs_diff(kept[1], scaling(0.3)), 0.0);
}

TEST_CASE("extrapolate_global rejects bad input") {
    CHECK_THROWS_AS(extrapolate_global(MotionHistory{}, 1), InvalidArgument);
    MotionHistory h;
    h.steps = {Affine2::identity()};
    CHECK_THROWS_AS(extrapolate_global(h, -1), InvalidArgument);
    CHECK(extrapolate_global(h, 0).empty());
}

TEST_CASE("affine_to_flow rasterizes the displacement field") {
    const FlowField zero = affine_to_flow(Affine2::identity(), 8, 6);
    for (float v : zero.v) CHECK_EQ(v, 0.0f);
    CHECK_EQ(zero.from, -1);
    CHECK_EQ(zero.to, -1);

    const FlowField t = affine_to_flow(Affine2::translation(0.5, -1.0), 8, 6, 2, 5);
    CHECK_EQ(t.from, 2);
    CHECK_EQ(t.to, 5);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) {
            CHECK_EQ(t.dx(x, y), 0.5f);
            CHECK_EQ(t.dy(x, y), -1.0f);
        }

    const Affine2 g{{1.01, -0.02, 0.3, 0.015, 0.99, -0.7}};
    const FlowField f = affine_to_flow(g, 16, 12);
    const Vec2 q = g.apply(7, 5);
    CHECK_EQ(f.dx(7, 5), doctest::Approx(q.x - 7.0).epsilon(1e-6));
    CHECK_EQ(f.dy(7, 5), doctest::Approx(q.y - 5.0).epsilon(1e-6));
}

TEST_CASE("future_backward_flows composes translations exactly") {
    const std::vector<Affine2> one_px(3, Affine2::translation(1.0, 0.0));
    const BackgroundFlows bf = future_backward_flows(one_px, 10, 8);
    REQUIRE_EQ(bf.back.size(), 3);
    REQUIRE_EQ(bf.fwd.size(), 3);
    for (int k = 0; k < 3; ++k) {
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 10; ++x) {
                CHECK_EQ(bf.back[static_cast<size_t>(k)].dx(x, y), -static_cast<float>(k + 1));
                CHECK_EQ(bf.back[static_cast<size_t>(k)].dy(x, y), 0.0f);
                CHECK_EQ(bf.fwd[static_cast<size_t>(k)].dx(x, y), static_cast<float>(k + 1));
            }
    }

    const BackgroundFlows still =
        future_backward_flows(std::vector<Affine2>(2, Affine2::identity()), 6, 6);
    for (const FlowField& f : still.back)
        for (float v : f.v) CHECK_EQ(v, 0.0f);
    for (const FlowField& f : still.fwd)
        for (float v : f.v) CHECK_EQ(v, 0.0f);
}

TEST_CASE("future_backward_flows matches an explicit matrix oracle") {
    const std::vector<Affine2> steps = {
        Affine2{{1.02, 0.01, -0.8, -0.005, 0.99, 0.4}},
        Affine2{{0.995, -0.02, 0.6, 0.01, 1.01, -0.3}},
        Affine2{{1.0, 0.0, 1.2, 0.0, 1.0, 0.9}},
    };
    const int w = 20, h = 14;
    const BackgroundFlows bf = future_backward_flows(steps, w, h);
    std::array<double, 6> comp{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    for (size_t k = 0; k < steps.size(); ++k) {
        comp = mat_compose(steps[k].a, comp);
        const auto inv = mat_inverse(comp);
        for (int y = 0; y < h; y += 3)
            for (int x = 0; x < w; x += 4) {
                const double fx = comp[0] * x + comp[1] * y + comp[2] - x;
                const double fy = comp[3] * x + comp[4] * y + comp[5] - y;
                CHECK_EQ(bf.fwd[k].dx(x, y), doctest::Approx(fx).epsilon(1e-5).scale(1.0));
                CHECK_EQ(bf.fwd[k].dy(x, y), doctest::Approx(fy).epsilon(1e-5).scale(1.0));
                const double bx = inv[0] * x + inv[1] * y + inv[2] - x;
                const double by = inv[3] * x + inv[4] * y + inv[5] - y;
                CHECK_EQ(bf.back[k].dx(x, y), doctest::Approx(bx).epsilon(1e-5).scale(1.0));
                CHECK_EQ(bf.back[k].dy(x, y), doctest::Approx(by).epsilon(1e-5).scale(1.0));
            }
    }

    const std::vector<Affine2> singular = {Affine2{{0.0, 0.0, 1.0, 0.0, 0.0, 1.0}}};
    CHECK_THROWS_AS(future_backward_flows(singular, 4, 4), InvalidArgument);
}

TEST_CASE("predict_background: zero flow reproduces the background bitwise") {
    testutil::Rng rng(51);
    const Frame bg = testutil::random_frame(rng, 24, 18, 3);
    const auto preds = predict_background(bg, {FlowField(24, 18)});
    REQUIRE_EQ(preds.size(), 1);
    CHECK_EQ(testutil::max_abs_diff(preds[0].image, bg), 0.0);
    CHECK_EQ(preds[0].valid.count(), static_cast<size_t>(24 * 18));
}

TEST_CASE("predict_background matches the generator on a pure pan") {
    synth::SceneSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.input_count = 2;
    spec.total_count = 4;
    spec.camera_step = Affine2::translation(-1.5, 0.75);
    spec.background.kind = synth::TextureKind::Gradient; // near-linear ramp
    spec.background.scale = 48.0; // long period: bilinear error << 1e-4
    const synth::GeneratedScene g = synth::generate(spec);

    const std::vector<Affine2> future(2, spec.camera_step);
    const BackgroundFlows bf = future_backward_flows(future, 64, 64);
    const auto preds = predict_background(g.scene.frames[1], bf.back);
    REQUIRE_EQ(preds.size(), 2);
    for (int k = 0; k < 2; ++k) {
        const Frame& truth = g.scene.frames[static_cast<size_t>(2 + k)];
        const Mask& valid = preds[static_cast<size_t>(k)].valid;
        CHECK_GT(valid.count(), static_cast<size_t>(64 * 64) / 2);
        double worst = 0.0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                if (!valid.at(x, y)) continue;
                for (int c = 0; c < 3; ++c)
                    worst = std::max(worst,
                                     std::abs(static_cast<double>(
                                                  preds[static_cast<size_t>(k)].image.at(x, y, c)) -
                                              truth.at(x, y, c)));
            }
        CHECK_LT(worst, 1e-4);
    }

    // A step larger than the frame leaves nothing valid.
    const BackgroundFlows far =
        future_backward_flows({Affine2::translation(70.0, 0.0)}, 64, 64);
    const auto gone = predict_background(g.scene.frames[1], far.back);
    CHECK_EQ(gone[0].valid.count(), 0);
}
