#include "flowcast/synth.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "flowcast/parallel.hpp"

using nlohmann::json;

namespace flowcast::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// splitmix64: portable seeded hashing for lattice noise.
uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double lattice_value(uint32_t seed, int64_t ix, int64_t iy) {
    const uint64_t h = mix64((static_cast<uint64_t>(seed) << 32) ^
                             (static_cast<uint64_t>(ix) * 0x632be59bd9b4e019ULL) ^
                             (static_cast<uint64_t>(iy) + 0x9e3779b97f4a7c15ULL));
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0); // 53-bit [0,1)
}

double smootherstep(double u) {
    u = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
    return u * u * u * (u * (u * 6.0 - 15.0) + 10.0);
}

double value_noise(uint32_t seed, double x, double y) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy);
    const double ux = smootherstep(x - fx), uy = smootherstep(y - fy);
    const double v00 = lattice_value(seed, ix, iy), v10 = lattice_value(seed, ix + 1, iy);
    const double v01 = lattice_value(seed, ix, iy + 1), v11 = lattice_value(seed, ix + 1, iy + 1);
    return (v00 * (1 - ux) + v10 * ux) * (1 - uy) + (v01 * (1 - ux) + v11 * ux) * uy;
}

Affine2 affine_power(const Affine2& step, int n) {
    Affine2 acc = Affine2::identity();
    for (int i = 0; i < n; ++i) acc = concat(step, acc);
    return acc;
}

// Deterministic uniform helpers on top of splitmix64 streams.
struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed) {}
    double uniform() { return static_cast<double>(mix64(state++) >> 11) * (1.0 / 9007199254740992.0); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1 - 1e-12));
    }
};

} // namespace

void Texture::sample(double x, double y, float* rgb) const {
    double m = 0.5;
    switch (kind) {
        case TextureKind::Checker: {
            // Smooth sigmoid of a sine product: soft-edged checkerboard.
            const double s = std::sin(kPi * x / scale) * std::sin(kPi * y / scale);
            m = 0.5 + 0.5 * std::tanh(s * scale / (kPi * softness));
            break;
        }
        case TextureKind::Noise:
            m = value_noise(seed, x / scale, y / scale);
            break;
        case TextureKind::Gradient: {
            // Smooth directional ramp; the angle comes from the seed.
            const double ang = lattice_value(seed, 17, 29) * 2.0 * kPi;
            const double u = (x * std::cos(ang) + y * std::sin(ang)) / (4.0 * scale);
            m = 0.5 + 0.5 * std::sin(u * kPi);
            break;
        }
    }
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<float>(m * color_a[c] + (1.0 - m) * color_b[c]);
}

Affine2 Sprite::pose(int frame) const { return concat(affine_power(step, frame), start); }

namespace {

// Signed distance to the sprite boundary in local coordinates (positive
// inside), approximate for ellipses.
double signed_dist(const Sprite& s, double lx, double ly) {
    if (s.shape == SpriteShape::Rect)
        return std::min(s.half_w - std::abs(lx), s.half_h - std::abs(ly));
    const double r = std::sqrt((lx / s.half_w) * (lx / s.half_w) +
                               (ly / s.half_h) * (ly / s.half_h));
    return (1.0 - r) * std::min(s.half_w, s.half_h);
}

} // namespace

bool Sprite::inside(double lx, double ly) const { return signed_dist(*this, lx, ly) >= 0.0; }

double Sprite::coverage(double lx, double ly) const {
    const double d = signed_dist(*this, lx, ly);
    return smootherstep((d + edge_soft) / (2.0 * edge_soft));
}

void SceneSpec::validate() const {
    require(width >= 64 && height >= 64, "SceneSpec: resolution must be at least 64x64");
    require(input_count >= 2, "SceneSpec: need at least 2 input frames");
    require(total_count >= input_count, "SceneSpec: total_count < input_count");
    require(fps > 0.0, "SceneSpec: fps must be positive");
    const double cd = camera_step.det();
    require(cd >= 0.8 && cd <= 1.25, "SceneSpec: camera step determinant outside [0.8, 1.25]");
    require(camera_step.finite(), "SceneSpec: camera step not finite");
    for (const Sprite& s : sprites) {
        require(s.half_w >= 4.0 && s.half_h >= 4.0, "SceneSpec: sprite smaller than 8 px");
        require(s.edge_soft > 0.0, "SceneSpec: sprite edge width must be positive");
        const double sd = s.step.det();
        require(sd >= 0.8 && sd <= 1.25, "SceneSpec: sprite step determinant outside [0.8, 1.25]");
        require(s.start.finite() && s.step.finite(), "SceneSpec: sprite affines not finite");
    }
}

namespace {

// local -> frame pixels for every layer and frame, precomputed.
struct Placement {
    std::vector<Affine2> cam;          // world -> frame i
    std::vector<Affine2> cam_inv;
    std::vector<std::vector<Affine2>> spr;     // [sprite][frame] local -> pixels
    std::vector<std::vector<Affine2>> spr_inv;

    Placement(const SceneSpec& spec) {
        const int n = spec.total_count;
        cam.resize(static_cast<size_t>(n));
        cam_inv.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            cam[static_cast<size_t>(i)] = affine_power(spec.camera_step, i);
            cam_inv[static_cast<size_t>(i)] = cam[static_cast<size_t>(i)].inverse();
        }
        spr.resize(spec.sprites.size());
        spr_inv.resize(spec.sprites.size());
        for (size_t s = 0; s < spec.sprites.size(); ++s) {
            spr[s].resize(static_cast<size_t>(n));
            spr_inv[s].resize(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                spr[s][static_cast<size_t>(i)] =
                    concat(cam[static_cast<size_t>(i)], spec.sprites[s].pose(i));
                spr_inv[s][static_cast<size_t>(i)] = spr[s][static_cast<size_t>(i)].inverse();
            }
        }
    }
};

int layer_at_placed(const SceneSpec& spec, const Placement& pl, int frame, double x, double y) {
    for (int s = static_cast<int>(spec.sprites.size()) - 1; s >= 0; --s) {
        const Vec2 l = pl.spr_inv[static_cast<size_t>(s)][static_cast<size_t>(frame)].apply(x, y);
        if (spec.sprites[static_cast<size_t>(s)].inside(l.x, l.y)) return s;
    }
    return -1;
}

// Pixel map of `layer` from frame a to frame b.
Affine2 layer_map(const Placement& pl, int layer, int a, int b) {
    if (layer < 0)
        return concat(pl.cam[static_cast<size_t>(b)], pl.cam_inv[static_cast<size_t>(a)]);
    return concat(pl.spr[static_cast<size_t>(layer)][static_cast<size_t>(b)],
                   pl.spr_inv[static_cast<size_t>(layer)][static_cast<size_t>(a)]);
}

Frame render_frame(const SceneSpec& spec, const Placement& pl, int frame) {
    Frame f(spec.width, spec.height, 3);
    parallel_rows(spec.height, [&](int y) {
        float rgb[3];
        for (int x = 0; x < spec.width; ++x) {
            const Vec2 w = pl.cam_inv[static_cast<size_t>(frame)].apply(x, y);
            spec.background.sample(w.x, w.y, rgb);
            double r = rgb[0], g = rgb[1], b = rgb[2];
            for (size_t s = 0; s < spec.sprites.size(); ++s) { // far to near
                const Vec2 l = pl.spr_inv[s][static_cast<size_t>(frame)].apply(x, y);
                const double a = spec.sprites[s].coverage(l.x, l.y);
                if (a <= 0.0) continue;
                spec.sprites[s].texture.sample(l.x, l.y, rgb);
                r = (1.0 - a) * r + a * rgb[0];
                g = (1.0 - a) * g + a * rgb[1];
                b = (1.0 - a) * b + a * rgb[2];
            }
            f.at(x, y, 0) = static_cast<float>(r);
            f.at(x, y, 1) = static_cast<float>(g);
            f.at(x, y, 2) = static_cast<float>(b);
        }
    });
    return f;
}

FlowField analytic_flow_placed(const SceneSpec& spec, const Placement& pl, int from, int to) {
    FlowField f(spec.width, spec.height);
    f.from = from;
    f.to = to;
    parallel_rows(spec.height, [&](int y) {
        for (int x = 0; x < spec.width; ++x) {
            const int layer = layer_at_placed(spec, pl, from, x, y);
            const Vec2 q = layer_map(pl, layer, from, to).apply(x, y);
            f.set(x, y, static_cast<float>(q.x - x), static_cast<float>(q.y - y));
        }
    });
    return f;
}

Mask analytic_conf_placed(const SceneSpec& spec, const Placement& pl, int from, int to) {
    Mask m(spec.width, spec.height);
    parallel_rows(spec.height, [&](int y) {
        for (int x = 0; x < spec.width; ++x) {
            const int layer = layer_at_placed(spec, pl, from, x, y);
            const Vec2 q = layer_map(pl, layer, from, to).apply(x, y);
            const bool in = q.x >= 0.0 && q.x <= spec.width - 1.0 && q.y >= 0.0 &&
                            q.y <= spec.height - 1.0;
            m.set(x, y, in && layer_at_placed(spec, pl, to, q.x, q.y) == layer);
        }
    });
    return m;
}

Mask sprite_mask(const SceneSpec& spec, const Placement& pl, size_t sprite, int frame) {
    Mask m(spec.width, spec.height);
    parallel_rows(spec.height, [&](int y) {
        for (int x = 0; x < spec.width; ++x)
            m.set(x, y,
                  layer_at_placed(spec, pl, frame, x, y) == static_cast<int>(sprite));
    });
    return m;
}

} // namespace

int layer_at(const SceneSpec& spec, int frame, double x, double y) {
    require(frame >= 0 && frame < spec.total_count, "layer_at: frame out of range");
    return layer_at_placed(spec, Placement(spec), frame, x, y);
}

FlowField analytic_flow(const SceneSpec& spec, int from, int to) {
    require(from >= 0 && from < spec.total_count && to >= 0 && to < spec.total_count,
            "analytic_flow: frame out of range");
    return analytic_flow_placed(spec, Placement(spec), from, to);
}

Mask analytic_confidence(const SceneSpec& spec, int from, int to) {
    require(from >= 0 && from < spec.total_count && to >= 0 && to < spec.total_count,
            "analytic_confidence: frame out of range");
    return analytic_conf_placed(spec, Placement(spec), from, to);
}

GeneratedScene generate(const SceneSpec& spec) {
    spec.validate();
    const Placement pl(spec);
    GeneratedScene g;
    g.spec = spec;
    g.scene.manifest.fps = spec.fps;
    g.scene.manifest.input_count = spec.input_count;
    g.scene.manifest.total_count = spec.total_count;

    for (int i = 0; i < spec.total_count; ++i)
        g.scene.frames.push_back(render_frame(spec, pl, i));
    for (int i = 0; i + 1 < spec.total_count; ++i)
        g.scene.flows_fwd.push_back(analytic_flow_placed(spec, pl, i, i + 1));

    g.sprite_masks.resize(spec.sprites.size());
    for (size_t s = 0; s < spec.sprites.size(); ++s)
        for (int i = 0; i < spec.total_count; ++i)
            g.sprite_masks[s].push_back(sprite_mask(spec, pl, s, i));
    for (int i = 0; i < spec.total_count; ++i) {
        Mask u(spec.width, spec.height);
        for (size_t s = 0; s < spec.sprites.size(); ++s)
            u = mask_or(u, g.sprite_masks[s][static_cast<size_t>(i)]);
        g.scene.gt_masks.push_back(std::move(u));
    }

    const int t = spec.input_count - 1;
    for (int abs = spec.input_count; abs < spec.total_count; ++abs) {
        g.scene.ref_back_flows.push_back(analytic_flow_placed(spec, pl, abs, t));
        g.scene.ref_confidence.push_back(analytic_conf_placed(spec, pl, abs, t));
    }

    g.scene.validate(true);
    return g;
}

std::vector<FlowField> perturb_flows(const std::vector<FlowField>& flows, double sigma,
                                     uint32_t seed) {
    require(sigma >= 0.0, "perturb_flows: sigma must be nonnegative");
    if (sigma == 0.0) return flows;
    std::vector<FlowField> out = flows;
    Rng rng(mix64(seed));
    for (FlowField& f : out) {
        for (size_t i = 0; i < f.v.size(); i += 2) {
            // Box-Muller from two portable uniforms.
            const double u1 = std::max(rng.uniform(), 1e-300);
            const double u2 = rng.uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            f.v[i] += static_cast<float>(sigma * r * std::cos(2.0 * kPi * u2));
            f.v[i + 1] += static_cast<float>(sigma * r * std::sin(2.0 * kPi * u2));
        }
    }
    return out;
}

namespace {

json affine_to_json(const Affine2& a) { return json(a.a); }

Affine2 affine_from_json(const json& j) {
    Affine2 a;
    for (int i = 0; i < 6; ++i) a.a[static_cast<size_t>(i)] = j.at(static_cast<size_t>(i)).get<double>();
    return a;
}

json texture_to_json(const Texture& t) {
    json j;
    j["kind"] = t.kind == TextureKind::Checker ? "checker"
                : t.kind == TextureKind::Noise ? "noise"
                                               : "gradient";
    j["scale"] = t.scale;
    j["softness"] = t.softness;
    j["seed"] = t.seed;
    j["color_a"] = {t.color_a[0], t.color_a[1], t.color_a[2]};
    j["color_b"] = {t.color_b[0], t.color_b[1], t.color_b[2]};
    return j;
}

Texture texture_from_json(const json& j) {
    Texture t;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "checker")
        t.kind = TextureKind::Checker;
    else if (kind == "noise")
        t.kind = TextureKind::Noise;
    else if (kind == "gradient")
        t.kind = TextureKind::Gradient;
    else
        throw InvalidArgument("texture kind must be checker, noise, or gradient");
    t.scale = j.at("scale").get<double>();
    t.softness = j.at("softness").get<double>();
    t.seed = j.at("seed").get<uint32_t>();
    for (int c = 0; c < 3; ++c) {
        t.color_a[c] = j.at("color_a").at(static_cast<size_t>(c)).get<float>();
        t.color_b[c] = j.at("color_b").at(static_cast<size_t>(c)).get<float>();
    }
    return t;
}

} // namespace

std::string spec_to_json(const SceneSpec& spec) {
    json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["input_count"] = spec.input_count;
    j["total_count"] = spec.total_count;
    j["fps"] = spec.fps;
    j["seed"] = spec.seed;
    j["background"] = texture_to_json(spec.background);
    j["camera_step"] = affine_to_json(spec.camera_step);
    j["sprites"] = json::array();
    for (const Sprite& s : spec.sprites) {
        json e;
        e["shape"] = s.shape == SpriteShape::Rect ? "rect" : "ellipse";
        e["half_w"] = s.half_w;
        e["half_h"] = s.half_h;
        e["edge_soft"] = s.edge_soft;
        e["texture"] = texture_to_json(s.texture);
        e["start"] = affine_to_json(s.start);
        e["step"] = affine_to_json(s.step);
        j["sprites"].push_back(e);
    }
    return j.dump(2) + "\n";
}

SceneSpec spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("scene spec: ") + e.what());
    }
    SceneSpec spec;
    try {
        spec.width = j.at("width").get<int>();
        spec.height = j.at("height").get<int>();
        spec.input_count = j.at("input_count").get<int>();
        spec.total_count = j.at("total_count").get<int>();
        if (j.contains("fps")) spec.fps = j.at("fps").get<double>();
        if (j.contains("seed")) spec.seed = j.at("seed").get<uint32_t>();
        spec.background = texture_from_json(j.at("background"));
        spec.camera_step = affine_from_json(j.at("camera_step"));
        for (const json& e : j.at("sprites")) {
            Sprite s;
            const std::string shape = e.at("shape").get<std::string>();
            if (shape == "rect")
                s.shape = SpriteShape::Rect;
            else if (shape == "ellipse")
                s.shape = SpriteShape::Ellipse;
            else
                throw InvalidArgument("sprite shape must be rect or ellipse");
            s.half_w = e.at("half_w").get<double>();
            s.half_h = e.at("half_h").get<double>();
            if (e.contains("edge_soft")) s.edge_soft = e.at("edge_soft").get<double>();
            s.texture = texture_from_json(e.at("texture"));
            s.start = affine_from_json(e.at("start"));
            s.step = affine_from_json(e.at("step"));
            spec.sprites.push_back(s);
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("scene spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

namespace {

Affine2 scale_about(double s, double cx, double cy) {
    return Affine2{{s, 0.0, cx * (1.0 - s), 0.0, s, cy * (1.0 - s)}};
}

Affine2 rotation_about(double rad, double cx, double cy) {
    const double c = std::cos(rad), s = std::sin(rad);
    return Affine2{{c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy}};
}

Texture make_texture(Rng& rng, TextureKind kind, double scale) {
    Texture t;
    t.kind = kind;
    t.scale = scale;
    t.softness = 3.0 + rng.uniform(0.0, 2.0);
    t.seed = static_cast<uint32_t>(rng.uniform(1.0, 1e9));
    const double base[3] = {rng.uniform(0.15, 0.45), rng.uniform(0.15, 0.45),
                            rng.uniform(0.15, 0.45)};
    for (int c = 0; c < 3; ++c) {
        t.color_a[c] = static_cast<float>(base[c]);
        t.color_b[c] = static_cast<float>(base[c] + rng.uniform(0.25, 0.45));
    }
    return t;
}

Sprite make_sprite(Rng& rng, const SceneSpec& spec, double cx, double cy, double vx, double vy,
                   double rot_deg) {
    Sprite s;
    s.shape = rng.uniform() < 0.5 ? SpriteShape::Rect : SpriteShape::Ellipse;
    s.half_w = rng.uniform(18.0, 26.0);
    s.half_h = rng.uniform(13.0, 19.0);
    s.edge_soft = 3.0;
    s.texture = make_texture(rng, rng.uniform() < 0.5 ? TextureKind::Noise : TextureKind::Checker,
                             rng.uniform(14.0, 22.0));
    s.start = Affine2::translation(cx, cy);
    Affine2 step = Affine2::translation(vx, vy);
    if (rot_deg != 0.0) {
        // Rotate about the sprite's own (moving) center; compose with the push.
        const Vec2 c0{cx, cy};
        step = concat(Affine2::translation(vx, vy), rotation_about(rot_deg * kPi / 180.0, c0.x, c0.y));
    }
    s.step = step;
    (void)spec;
    return s;
}

} // namespace

SceneSpec preset(const std::string& name, uint32_t seed) {
    SceneSpec spec;
    spec.seed = seed;
    Rng rng(mix64(static_cast<uint64_t>(seed) * 1315423911ULL + 17));
    spec.background = make_texture(
        rng, rng.uniform() < 0.5 ? TextureKind::Noise : TextureKind::Gradient,
        rng.uniform(26.0, 40.0));
    const double cx = spec.width / 2.0, cy = spec.height / 2.0;

    if (name == "static") {
        spec.sprites.push_back(make_sprite(rng, spec, spec.width * 0.3, spec.height * 0.62,
                                           0.0, 0.0, 0.0));
    } else if (name == "pan") {
        spec.camera_step = Affine2::translation(rng.uniform(-0.8, -0.4), rng.uniform(-0.25, 0.25));
        spec.sprites.push_back(make_sprite(rng, spec, spec.width * 0.32, spec.height * 0.6,
                                           rng.uniform(3.6, 4.4), rng.uniform(-0.4, 0.4), 0.0));
    } else if (name == "zoom") {
        spec.camera_step = scale_about(1.0 + rng.uniform(0.002, 0.005), cx, cy);
        spec.sprites.push_back(make_sprite(rng, spec, spec.width * 0.34, spec.height * 0.42,
                                           rng.uniform(3.6, 4.2), rng.uniform(0.2, 0.6), 0.0));
    } else if (name == "orbit") {
        spec.sprites.push_back(make_sprite(rng, spec, spec.width * 0.3, spec.height * 0.38,
                                           rng.uniform(3.8, 4.4), rng.uniform(0.3, 0.8),
                                           rng.uniform(0.8, 1.2)));
    } else if (name == "mixed") {
        spec.camera_step = concat(Affine2::translation(rng.uniform(-0.6, -0.3), 0.0),
                                   scale_about(1.0 + rng.uniform(0.001, 0.003), cx, cy));
        spec.sprites.push_back(make_sprite(rng, spec, spec.width * 0.28, spec.height * 0.36,
                                           rng.uniform(3.8, 4.4), rng.uniform(0.2, 0.6), 0.0));
        spec.sprites.push_back(make_sprite(rng, spec, spec.width * 0.62, spec.height * 0.68,
                                           rng.uniform(-4.4, -3.8), rng.uniform(-0.5, -0.1), 0.0));
    } else {
        throw InvalidArgument("unknown preset (use static, pan, zoom, orbit, or mixed)");
    }
    return spec;
}

} // namespace flowcast::synth
