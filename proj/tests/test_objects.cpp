#include <doctest.h>

#include <cmath>

#include "flowcast/decompose.hpp"
#include "flowcast/objects.hpp"
#include "flowcast/synth.hpp"
#include "helpers.hpp"

using namespace flowcast;
using namespace flowcast::objects;

namespace {

constexpr double kPi = 3.14159265358979323846;

Affine2 rotation_about(double cx, double cy, double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    return Affine2{{c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy}};
}

Vec2 mask_centroid(const Mask& m) {
    double sx = 0.0, sy = 0.0, n = 0.0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                sx += x;
                sy += y;
                n += 1.0;
            }
    return {sx / n, sy / n};
}

CenteredAffine pose_with(double a11, double a22, double tx, double ty) {
    CenteredAffine p;
    p.p = {a11, 0.0, tx, 0.0, a22, ty};
    return p;
}

} // namespace

TEST_CASE("CenteredAffine round-trips through pixel coordinates") {
    const Vec2 c{17.5, 9.25};
    CenteredAffine a;
    a.p = {1.03, -0.12, 4.5, 0.08, 0.97, -2.25};
    const Affine2 g = a.to_pixel(c);
    const CenteredAffine back = CenteredAffine::from_pixel(g, c);
    for (int j = 0; j < 6; ++j)
        CHECK_EQ(back.p[j], doctest::Approx(a.p[j]).epsilon(1e-12).scale(1.0));

    // The identity pose is the identity map for any center.
    CHECK_EQ(max_abs_diff(CenteredAffine::identity().to_pixel(c), Affine2::identity()), 0.0);
    // A pure translation pose translates pixels regardless of the center.
    CenteredAffine t;
    t.p[2] = 3.0;
    t.p[5] = -1.5;
    CHECK_LT(max_abs_diff(t.to_pixel(c), Affine2::translation(3.0, -1.5)), 1e-12);
}

namespace {

synth::GeneratedScene tracked_scene(const synth::Sprite& sprite) {
    synth::SceneSpec spec;
    spec.width = 96;
    spec.height = 64;
    spec.input_count = 4;
    spec.total_count = 6;
    spec.sprites.push_back(sprite);
    return synth::generate(spec);
}

decompose::Track track_from(const synth::GeneratedScene& g) {
    std::vector<Mask> moving(g.scene.gt_masks.begin(), g.scene.gt_masks.begin() + 4);
    auto tracks = decompose::extract_tracks(g.scene, moving, decompose::DecomposeParams{});
    REQUIRE_EQ(tracks.size(), 1);
    return tracks[0];
}

} // namespace

TEST_CASE("fit_past_affines: static object gives identity poses") {
    synth::Sprite sp;
    sp.half_w = 9.0;
    sp.half_h = 6.0;
    sp.start = Affine2::translation(40.0, 30.0);
    const synth::GeneratedScene g = tracked_scene(sp);
    const auto poses = fit_past_affines(track_from(g), g.scene.flows_fwd);
    REQUIRE_EQ(poses.size(), 4);
    for (const CenteredAffine& p : poses)
        for (int j = 0; j < 6; ++j)
            CHECK_EQ(p.p[j], doctest::Approx(CenteredAffine::identity().p[j])
                                 .epsilon(1e-9)
                                 .scale(1.0));
}

TEST_CASE("fit_past_affines: uniform translation accumulates exactly") {
    synth::Sprite sp;
    sp.half_w = 10.0;
    sp.half_h = 7.0;
    sp.start = Affine2::translation(26.0, 32.0);
    sp.step = Affine2::translation(3.0, 0.0);
    const synth::GeneratedScene g = tracked_scene(sp);
    const decompose::Track tr = track_from(g);
    const auto poses = fit_past_affines(tr, g.scene.flows_fwd);
    REQUIRE_EQ(poses.size(), 4);
    for (int i = 0; i < 4; ++i) {
        CHECK_EQ(poses[static_cast<size_t>(i)].p[2],
                 doctest::Approx(-3.0 * (3 - i)).epsilon(1e-9).scale(1.0));
        CHECK_EQ(poses[static_cast<size_t>(i)].p[5],
                 doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
        CHECK_EQ(poses[static_cast<size_t>(i)].p[0],
                 doctest::Approx(1.0).epsilon(1e-9).scale(1.0));
        CHECK_EQ(poses[static_cast<size_t>(i)].p[1],
                 doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("fit_past_affines: rotation matches the generator poses") {
    const double step_rad = 5.0 * kPi / 180.0;
    synth::Sprite sp;
    sp.half_w = 12.0;
    sp.half_h = 8.0;
    sp.start = Affine2::translation(48.0, 32.0);
    sp.step = rotation_about(48.0, 32.0, step_rad);
    const synth::GeneratedScene g = tracked_scene(sp);
    const decompose::Track tr = track_from(g);
    const auto poses = fit_past_affines(tr, g.scene.flows_fwd);
    REQUIRE_EQ(poses.size(), 4);

    const Affine2 back_step = rotation_about(48.0, 32.0, -step_rad);
    Affine2 expect = Affine2::identity();
    for (int i = 3; i >= 0; --i) {
        CHECK_LT(max_abs_diff(poses[static_cast<size_t>(i)].to_pixel(tr.center()), expect),
                 1e-4);
        expect = concat(back_step, expect);
    }
}

TEST_CASE("fit_past_affines borrows steps the object was invisible on") {
    synth::Sprite sp;
    sp.half_w = 10.0;
    sp.half_h = 7.0;
    sp.start = Affine2::translation(26.0, 32.0);
    sp.step = Affine2::translation(3.0, 0.0);
    const synth::GeneratedScene g = tracked_scene(sp);
    decompose::Track tr = track_from(g);

    tr.masks[0] = Mask(96, 64); // never detected on the first frame
    const auto poses = fit_past_affines(tr, g.scene.flows_fwd);
    CHECK_EQ(poses[0].p[2], doctest::Approx(-9.0).epsilon(1e-9).scale(1.0));
    CHECK_EQ(poses[1].p[2], doctest::Approx(-6.0).epsilon(1e-9).scale(1.0));

    for (int i = 0; i < 3; ++i) tr.masks[static_cast<size_t>(i)] = Mask(96, 64);
    CHECK_THROWS_AS(fit_past_affines(tr, g.scene.flows_fwd), InvalidArgument);
}

TEST_CASE("reg_term and smooth_term expose the exact norms") {
    const double diag = 20.0;
    CHECK_EQ(reg_term({CenteredAffine::identity()}, diag), 0.0);
    CHECK_EQ(reg_term({pose_with(1.0, 1.0, diag, 0.0)}, diag), doctest::Approx(1.0).epsilon(1e-12));

    // Arithmetic progressions have vanishing second differences.
    std::vector<CenteredAffine> prog = {pose_with(1.0, 1.0, 0.0, 0.0),
                                        pose_with(1.1, 1.0, 5.0, 0.0),
                                        pose_with(1.2, 1.0, 10.0, 0.0)};
    CHECK_EQ(smooth_term(prog, diag), doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

    std::vector<CenteredAffine> bent = {pose_with(1.0, 1.0, 0.0, 0.0),
                                        pose_with(1.0, 1.0, diag, 0.0),
                                        pose_with(1.0, 1.0, 3.0 * diag, 0.0)};
    CHECK_EQ(smooth_term(bent, diag), doctest::Approx(1.0).epsilon(1e-12));

    testutil::Rng rng(3);
    std::vector<CenteredAffine> rnd(4);
    for (auto& a : rnd)
        for (int j = 0; j < 6; ++j) a.p[j] += rng.range(-0.5, 0.5);
    double reg = 0.0;
    for (const auto& a : rnd) {
        double s = 0.0;
        for (int j = 0; j < 6; ++j) {
            const double scale = (j == 2 || j == 5) ? diag : 1.0;
            const double d = a.p[j] / scale - ((j == 0 || j == 4) ? 1.0 : 0.0);
            s += d * d;
        }
        reg += std::sqrt(s);
    }
    CHECK_EQ(reg_term(rnd, diag), doctest::Approx(reg).epsilon(1e-12));
    double sm = 0.0;
    for (size_t k = 1; k + 1 < rnd.size(); ++k)
        for (int j = 0; j < 6; ++j) {
            const double scale = (j == 2 || j == 5) ? diag : 1.0;
            sm += std::abs(rnd[k + 1].p[j] / scale - 2.0 * rnd[k].p[j] / scale +
                           rnd[k - 1].p[j] / scale);
        }
    CHECK_EQ(smooth_term(rnd, diag), doctest::Approx(sm).epsilon(1e-12));

    CHECK_THROWS_AS(reg_term({}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(smooth_term(prog, -1.0), InvalidArgument);
    CHECK_THROWS_AS(smooth_term({prog[0], prog[1]}, diag), InvalidArgument);
}

TEST_CASE("rgb_term measures masked appearance error") {
    testutil::Rng rng(11);
    const Frame f = testutil::random_frame(rng, 20, 16, 3);
    Mask m(20, 16);
    for (int y = 5; y < 11; ++y)
        for (int x = 6; x < 14; ++x) m.set(x, y, true);
    const Vec2 c = mask_centroid(m);

    CHECK_EQ(rgb_term(f, m, c, {CenteredAffine::identity()}, {f}), 0.0);

    const Frame a(20, 16, 3, 0.3f);
    const Frame b(20, 16, 3, 0.8f);
    const double e = rgb_term(a, m, c,
                              {CenteredAffine::identity(), CenteredAffine::identity()},
                              {b, b});
    CHECK_EQ(e, doctest::Approx(1.0).epsilon(1e-6)); // 0.5 per frame, two frames

    CHECK_THROWS_AS(rgb_term(f, m, c, {CenteredAffine::identity()}, {}), InvalidArgument);
}

TEST_CASE("constant_velocity_anchor extends the mean parameter velocity") {
    std::vector<CenteredAffine> past = {pose_with(1.0, 1.0, 0.0, 0.0),
                                        pose_with(1.0, 1.0, 2.0, 0.0)};
    const auto anchor = constant_velocity_anchor(past, 3);
    REQUIRE_EQ(anchor.size(), 3);
    CHECK_EQ(anchor[0].p[2], doctest::Approx(4.0).epsilon(1e-12));
    CHECK_EQ(anchor[1].p[2], doctest::Approx(6.0).epsilon(1e-12));
    CHECK_EQ(anchor[2].p[2], doctest::Approx(8.0).epsilon(1e-12));

    // A single pose extrapolates as a constant.
    const auto rep = constant_velocity_anchor({pose_with(1.0, 1.0, 1.5, -0.5)}, 2);
    CHECK_EQ(rep[1].p[2], doctest::Approx(1.5).epsilon(1e-12));
    CHECK_EQ(rep[1].p[5], doctest::Approx(-0.5).epsilon(1e-12));

    CHECK_THROWS_AS(constant_velocity_anchor({}, 1), InvalidArgument);
    CHECK(constant_velocity_anchor(past, 0).empty());
}

TEST_CASE("trajectory_energy: zero at the resting identity, exact decomposition") {
    const TrajectoryObjective obj;
    const Vec2 c{50.0, 40.0};
    const std::vector<CenteredAffine> ids(3);
    CHECK_EQ(trajectory_energy(ids, ids, c, 25.0, obj), 0.0);

    testutil::Rng rng(4);
    const double diag = 25.0;
    std::vector<CenteredAffine> future(3), anchor(3);
    for (auto& a : future)
        for (int j = 0; j < 6; ++j) a.p[j] += rng.range(-0.2, 0.2);
    for (auto& a : anchor)
        for (int j = 0; j < 6; ++j) a.p[j] += rng.range(-0.2, 0.2);

    const auto scl = [&](const CenteredAffine& a, int j) {
        return (j == 2 || j == 5) ? a.p[j] / diag : a.p[j];
    };
    const auto huber = [&](double r) {
        const double m = std::abs(r);
        return m <= obj.huber_delta ? 0.5 * m * m : obj.huber_delta * (m - 0.5 * obj.huber_delta);
    };
    double fit = 0.0, reg = 0.0, smooth = 0.0;
    for (size_t k = 0; k < future.size(); ++k) {
        double n = 0.0;
        for (int j = 0; j < 6; ++j) {
            const double d = scl(future[k], j) - scl(anchor[k], j);
            fit += d * d;
            const double idj = (j == 0 || j == 4) ? 1.0 : 0.0;
            n += (scl(future[k], j) - idj) * (scl(future[k], j) - idj);
        }
        reg += huber(std::sqrt(n));
    }
    CenteredAffine id0;
    std::vector<CenteredAffine> chain = {id0, future[0], future[1], future[2]};
    for (size_t k = 1; k + 1 < chain.size(); ++k)
        for (int j = 0; j < 6; ++j)
            smooth += huber(scl(chain[k + 1], j) - 2.0 * scl(chain[k], j) + scl(chain[k - 1], j));
    const double want = obj.lambda_fit * fit + obj.lambda_reg * reg + obj.lambda_smooth * smooth;
    CHECK_EQ(trajectory_energy(future, anchor, c, diag, obj),
             doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("extrapolate_trajectory: identity history stays put") {
    const TrajectoryObjective obj;
    const auto res = extrapolate_trajectory(std::vector<CenteredAffine>(3), 4, obj,
                                            {60.0, 40.0}, 20.0, 120, 80);
    REQUIRE_EQ(res.size(), 4);
    for (const auto& a : res)
        for (int j = 0; j < 6; ++j)
            CHECK_EQ(a.p[j], doctest::Approx(CenteredAffine::identity().p[j])
                                 .epsilon(1e-9)
                                 .scale(1.0));
    CHECK(extrapolate_trajectory(std::vector<CenteredAffine>(3), 0, obj, {60.0, 40.0}, 20.0,
                                 120, 80)
              .empty());
}

TEST_CASE("extrapolate_trajectory tracks a constant velocity closely") {
    const TrajectoryObjective obj;
    const double diag = 20.0;
    const Vec2 c{100.0, 100.0};
    std::vector<CenteredAffine> past = {pose_with(1.0, 1.0, -6.0, 0.0),
                                        pose_with(1.0, 1.0, -3.0, 0.0),
                                        CenteredAffine::identity()};
    const auto anchor = constant_velocity_anchor(past, 3);
    const auto res = extrapolate_trajectory(past, 3, obj, c, diag, 200, 200);
    REQUIRE_EQ(res.size(), 3);
    for (size_t k = 0; k < 3; ++k)
        for (int j = 0; j < 6; ++j) {
            const double scale = (j == 2 || j == 5) ? diag : 1.0;
            CHECK_LT(std::abs(res[k].p[j] - anchor[k].p[j]) / scale, 1e-3);
        }
    // Monotone descent: never worse than the (projected) starting anchor.
    CHECK_LE(trajectory_energy(res, anchor, c, diag, obj),
             trajectory_energy(anchor, anchor, c, diag, obj) + 1e-12);
}

TEST_CASE("extrapolate_trajectory projects escaping and collapsing poses") {
    const TrajectoryObjective obj;
    const double diag = 12.0;
    const Vec2 c{28.0, 16.0};
    std::vector<CenteredAffine> fast = {pose_with(1.0, 1.0, -8.0, 0.0),
                                        pose_with(1.0, 1.0, -4.0, 0.0),
                                        CenteredAffine::identity()};
    const auto res = extrapolate_trajectory(fast, 3, obj, c, diag, 32, 32);
    for (const auto& a : res) {
        CHECK_LE(c.x + a.p[2], 31.0 + 1e-9); // centroid clamped inside
        CHECK_GE(c.x + a.p[2], -1e-9);
    }

    std::vector<CenteredAffine> shrink = {pose_with(1.6, 1.6, 0.0, 0.0),
                                          pose_with(1.3, 1.3, 0.0, 0.0),
                                          CenteredAffine::identity()};
    const auto sres = extrapolate_trajectory(shrink, 4, obj, {16.0, 16.0}, diag, 32, 32);
    for (const auto& a : sres)
        CHECK_GE(a.p[0] * a.p[4] - a.p[1] * a.p[3], obj.min_det - 1e-9);
}

TEST_CASE("render_object: identity, integer shift, quarter turn") {
    testutil::Rng rng(23);
    const Frame f = testutil::random_frame(rng, 24, 20, 3);
    Mask m(24, 20);
    for (int y = 7; y < 13; ++y)
        for (int x = 8; x < 16; ++x) m.set(x, y, true);
    const Vec2 c = mask_centroid(m);

    const auto [img0, m0] = render_object(f, m, c, CenteredAffine::identity());
    CHECK(testutil::same_bits(m0, m));
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x)
            if (m0.at(x, y))
                for (int ch = 0; ch < 3; ++ch) CHECK_EQ(img0.at(x, y, ch), f.at(x, y, ch));

    CenteredAffine shift;
    shift.p[2] = 4.0;
    const auto [img1, m1] = render_object(f, m, c, shift);
    CHECK_EQ(m1.count(), m.count());
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x) {
            CHECK_EQ(m1.at(x, y), (x >= 4 && m.at(x - 4, y)));
            if (m1.at(x, y))
                for (int ch = 0; ch < 3; ++ch) CHECK_EQ(img1.at(x, y, ch), f.at(x - 4, y, ch));
        }

    CenteredAffine quarter;
    quarter.p = {0.0, -1.0, 0.0, 1.0, 0.0, 0.0};
    const auto [img2, m2] = render_object(f, m, c, quarter);
    (void)img2;
    CHECK_EQ(m2.count(), m.count()); // integer-centered 90-degree turn is exact

    CenteredAffine flat;
    flat.p = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(render_object(f, m, c, flat), InvalidArgument);
}
