#include "flowcast/objects.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/image_ops.hpp"
#include "flowcast/mask_ops.hpp"
#include "flowcast/parallel.hpp"

namespace flowcast::objects {

void TrajectoryObjective::validate() const {
    require(lambda_fit >= 0.0 && lambda_reg >= 0.0 && lambda_smooth >= 0.0,
            "TrajectoryObjective: negative weight");
    require(iterations >= 0, "TrajectoryObjective: negative iteration count");
    require(step > 0.0, "TrajectoryObjective: step must be positive");
    require(huber_delta > 0.0, "TrajectoryObjective: huber_delta must be positive");
    require(min_det > 0.0 && min_det <= 1.0, "TrajectoryObjective: min_det out of range");
}

Affine2 CenteredAffine::to_pixel(const Vec2& c) const {
    return Affine2{{p[0], p[1], c.x - p[0] * c.x - p[1] * c.y + p[2],
                    p[3], p[4], c.y - p[3] * c.x - p[4] * c.y + p[5]}};
}

CenteredAffine CenteredAffine::from_pixel(const Affine2& g, const Vec2& c) {
    const Vec2 q = g.apply(c);
    CenteredAffine out;
    out.p = {g.a[0], g.a[1], q.x - c.x, g.a[3], g.a[4], q.y - c.y};
    return out;
}

std::vector<CenteredAffine> fit_past_affines(const decompose::Track& track,
                                             const std::vector<FlowField>& flows) {
    const size_t t = track.masks.size();
    require(t >= 1, "fit_past_affines: track has no frames");
    require(flows.size() + 1 >= t, "fit_past_affines: missing flows");

    // One affine per consecutive step, fitted over the object's pixels whose
    // correspondence lands inside the next frame's (dilated) footprint.
    std::vector<Affine2> step(t >= 2 ? t - 1 : 0);
    std::vector<char> fitted(step.size(), 0);
    for (size_t i = 0; i + 1 < t; ++i) {
        const FlowField& f = flows[i];
        require(track.masks[i].same_shape_as_frame(f.width, f.height),
                "fit_past_affines: mask/flow shape mismatch");
        const Mask next = dilate3(track.masks[i + 1]);
        const auto usable = [&](const Mask& src) {
            Mask support(f.width, f.height);
            for (int y = 0; y < f.height; ++y)
                for (int x = 0; x < f.width; ++x) {
                    if (!src.at(x, y)) continue;
                    const int qx = static_cast<int>(std::lround(x + f.dx(x, y)));
                    const int qy = static_cast<int>(std::lround(y + f.dy(x, y)));
                    if (qx < 0 || qy < 0 || qx >= f.width || qy >= f.height) continue;
                    if (next.at(qx, qy)) support.set(x, y, true);
                }
            return support;
        };
        Mask support = usable(erode3(track.masks[i]));
        if (support.count() < 3) support = usable(track.masks[i]); // tiny masks
        if (support.count() < 3) continue; // object not visible on this step
        try {
            step[i] = decompose::fit_flow_affine(f, support, 3);
            fitted[i] = 1;
        } catch (const InvalidArgument&) {
            // degenerate support (e.g. collinear pixels); borrow below
        }
    }

    // Steps the object was invisible (or degenerate) on borrow the nearest
    // later fitted step, so early frames of a track that entered the view
    // recently continue its observed motion; gaps after the last fit carry
    // it forward. A track with no fittable step at all is unusable.
    if (!step.empty()) {
        size_t last_fitted = step.size();
        for (size_t i = 0; i < step.size(); ++i)
            if (fitted[i]) last_fitted = i;
        require(last_fitted != step.size(), "fit_past_affines: no step has usable support");
        size_t next = step.size();
        for (size_t i = step.size(); i-- > 0;) {
            if (fitted[i]) next = i;
            else step[i] = step[next != step.size() ? next : last_fitted];
        }
    }

    // Accumulate poses relative to the last frame: A_i = S_i^-1 o A_{i+1}.
    std::vector<CenteredAffine> poses(t);
    const Vec2 c = track.center();
    poses[t - 1] = CenteredAffine::identity();
    Affine2 acc = Affine2::identity();
    for (size_t i = t - 1; i-- > 0;) {
        acc = concat(step[i].inverse(), acc);
        poses[i] = CenteredAffine::from_pixel(acc, c);
    }
    return poses;
}

namespace {

// Commensurate parameter vector: translations measured in diagonals.
std::array<double, 6> scaled(const CenteredAffine& a, double diag) {
    return {a.p[0], a.p[1], a.p[2] / diag, a.p[3], a.p[4], a.p[5] / diag};
}

double huber(double r, double delta) {
    const double m = std::abs(r);
    return m <= delta ? 0.5 * m * m : delta * (m - 0.5 * delta);
}

constexpr std::array<double, 6> kIdentity{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

double norm_from_identity(const std::array<double, 6>& u) {
    double s = 0.0;
    for (int j = 0; j < 6; ++j) {
        const double d = u[j] - kIdentity[j];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

double reg_term(const std::vector<CenteredAffine>& affines, double diag) {
    require(diag > 0.0, "reg_term: diagonal must be positive");
    double e = 0.0;
    for (const CenteredAffine& a : affines) e += norm_from_identity(scaled(a, diag));
    return e;
}

double smooth_term(const std::vector<CenteredAffine>& affines, double diag) {
    require(diag > 0.0, "smooth_term: diagonal must be positive");
    require(affines.size() >= 3, "smooth_term: need at least three poses");
    double e = 0.0;
    for (size_t k = 1; k + 1 < affines.size(); ++k) {
        const auto a = scaled(affines[k - 1], diag);
        const auto b = scaled(affines[k], diag);
        const auto c = scaled(affines[k + 1], diag);
        for (int j = 0; j < 6; ++j) e += std::abs(c[j] - 2.0 * b[j] + a[j]);
    }
    return e;
}

double rgb_term(const Frame& frame_t, const Mask& mask_t, const Vec2& center,
                const std::vector<CenteredAffine>& affines,
                const std::vector<Frame>& targets) {
    require(affines.size() == targets.size(), "rgb_term: pose/target count mismatch");
    double e = 0.0;
    for (size_t k = 0; k < affines.size(); ++k) {
        const auto [img, mask] = render_object(frame_t, mask_t, center, affines[k]);
        const Frame& ref = targets[k];
        require(ref.same_shape(img), "rgb_term: target shape mismatch");
        double sum = 0.0;
        size_t n = 0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                if (!mask.at(x, y)) continue;
                for (int c = 0; c < img.channels; ++c)
                    sum += std::abs(img.at(x, y, c) - ref.at(x, y, c));
                ++n;
            }
        if (n > 0) e += sum / (static_cast<double>(n) * img.channels);
    }
    return e;
}

std::vector<CenteredAffine> constant_velocity_anchor(const std::vector<CenteredAffine>& past,
                                                     int horizon) {
    require(!past.empty(), "constant_velocity_anchor: empty history");
    require(horizon >= 0, "constant_velocity_anchor: negative horizon");
    std::array<double, 6> diff{};
    if (past.size() >= 2) {
        const size_t n = past.size() - 1;
        for (size_t i = 0; i + 1 < past.size(); ++i)
            for (int j = 0; j < 6; ++j) diff[j] += (past[i + 1].p[j] - past[i].p[j]) / n;
    }
    std::vector<CenteredAffine> anchor(static_cast<size_t>(horizon));
    for (int k = 0; k < horizon; ++k)
        for (int j = 0; j < 6; ++j)
            anchor[static_cast<size_t>(k)].p[j] = past.back().p[j] + (k + 1) * diff[j];
    return anchor;
}

double trajectory_energy(const std::vector<CenteredAffine>& future,
                         const std::vector<CenteredAffine>& anchor, const Vec2& center,
                         double diag, const TrajectoryObjective& obj) {
    (void)center;
    obj.validate();
    require(future.size() == anchor.size(), "trajectory_energy: anchor size mismatch");
    require(diag > 0.0, "trajectory_energy: diagonal must be positive");

    double fit = 0.0, reg = 0.0, smooth = 0.0;
    for (size_t k = 0; k < future.size(); ++k) {
        const auto u = scaled(future[k], diag);
        const auto v = scaled(anchor[k], diag);
        for (int j = 0; j < 6; ++j) fit += (u[j] - v[j]) * (u[j] - v[j]);
        reg += huber(norm_from_identity(u), obj.huber_delta);
    }
    // Second differences over [pose at the last observed frame = identity,
    // future...]; Huberized per component.
    if (future.size() >= 2) {
        std::array<double, 6> prev2 = kIdentity;
        auto prev1 = scaled(future[0], diag);
        for (size_t k = 1; k < future.size(); ++k) {
            const auto cur = scaled(future[k], diag);
            for (int j = 0; j < 6; ++j)
                smooth += huber(cur[j] - 2.0 * prev1[j] + prev2[j], obj.huber_delta);
            prev2 = prev1;
            prev1 = cur;
        }
    }
    return obj.lambda_fit * fit + obj.lambda_reg * reg + obj.lambda_smooth * smooth;
}

namespace {

// Pull a pose back into the feasible set: linear determinant above min_det
// (blend toward identity) and predicted centroid inside the frame.
CenteredAffine project_pose(CenteredAffine a, const Vec2& center, double min_det,
                            int width, int height) {
    const auto det_at = [&](double alpha) {
        const double l0 = a.p[0] + alpha * (1.0 - a.p[0]);
        const double l1 = a.p[1] * (1.0 - alpha);
        const double l3 = a.p[3] * (1.0 - alpha);
        const double l4 = a.p[4] + alpha * (1.0 - a.p[4]);
        return l0 * l4 - l1 * l3;
    };
    if (det_at(0.0) < min_det) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            (det_at(mid) >= min_det ? hi : lo) = mid;
        }
        a.p[0] += hi * (1.0 - a.p[0]);
        a.p[1] *= 1.0 - hi;
        a.p[3] *= 1.0 - hi;
        a.p[4] += hi * (1.0 - a.p[4]);
    }
    const double qx = std::clamp(center.x + a.p[2], 0.0, width - 1.0);
    const double qy = std::clamp(center.y + a.p[5], 0.0, height - 1.0);
    a.p[2] = qx - center.x;
    a.p[5] = qy - center.y;
    return a;
}

} // namespace

std::vector<CenteredAffine> extrapolate_trajectory(const std::vector<CenteredAffine>& past,
                                                   int horizon, const TrajectoryObjective& obj,
                                                   const Vec2& center, double diag,
                                                   int width, int height) {
    obj.validate();
    require(diag > 0.0, "extrapolate_trajectory: diagonal must be positive");
    require(width > 0 && height > 0, "extrapolate_trajectory: bad frame size");
    if (horizon == 0) return {};

    const std::vector<CenteredAffine> anchor = constant_velocity_anchor(past, horizon);
    const size_t K = anchor.size();

    // Optimize in the commensurate space (translations / diag).
    const auto decode = [&](const std::vector<double>& th) {
        std::vector<CenteredAffine> poses(K);
        for (size_t k = 0; k < K; ++k) {
            for (int j = 0; j < 6; ++j) poses[k].p[j] = th[k * 6 + j];
            poses[k].p[2] *= diag;
            poses[k].p[5] *= diag;
            poses[k] = project_pose(poses[k], center, obj.min_det, width, height);
        }
        return poses;
    };
    const auto encode = [&](const std::vector<CenteredAffine>& poses) {
        std::vector<double> th(K * 6);
        for (size_t k = 0; k < K; ++k) {
            const auto u = scaled(poses[k], diag);
            for (int j = 0; j < 6; ++j) th[k * 6 + j] = u[j];
        }
        return th;
    };
    const auto energy = [&](const std::vector<double>& th) {
        return trajectory_energy(decode(th), anchor, center, diag, obj);
    };

    std::vector<double> theta = encode(decode(encode(anchor))); // projected start
    double e = energy(theta);

    const double h = 1e-6;
    std::vector<double> grad(theta.size());
    for (int it = 0; it < obj.iterations; ++it) {
        for (size_t j = 0; j < theta.size(); ++j) {
            std::vector<double> probe = theta;
            probe[j] += h;
            const double ep = energy(probe);
            probe[j] = theta[j] - h;
            const double em = energy(probe);
            grad[j] = (ep - em) / (2.0 * h);
        }
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < 1e-12) break;

        // Backtracking keeps the objective non-increasing.
        double s = obj.step;
        bool moved = false;
        for (int bt = 0; bt < 24; ++bt) {
            std::vector<double> cand = theta;
            for (size_t j = 0; j < cand.size(); ++j) cand[j] -= s * grad[j];
            cand = encode(decode(cand)); // project
            const double ec = energy(cand);
            if (ec <= e) {
                theta = std::move(cand);
                e = ec;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if (!moved) break;
    }
    return decode(theta);
}

std::pair<Frame, Mask> render_object(const Frame& frame_t, const Mask& mask_t,
                                     const Vec2& center, const CenteredAffine& pose) {
    frame_t.validate();
    require(mask_t.same_shape_as_frame(frame_t.width, frame_t.height),
            "render_object: mask shape mismatch");
    const Affine2 inv = pose.to_pixel(center).inverse();

    Frame mask_f(frame_t.width, frame_t.height, 1);
    for (size_t i = 0; i < mask_t.bits.size(); ++i)
        mask_f.data[i] = mask_t.bits[i] ? 1.0f : 0.0f;

    Frame img(frame_t.width, frame_t.height, frame_t.channels);
    Mask mask(frame_t.width, frame_t.height);
    parallel_rows(frame_t.height, [&](int y) {
        std::vector<float> px(static_cast<size_t>(frame_t.channels));
        for (int x = 0; x < frame_t.width; ++x) {
            const Vec2 s = inv.apply(x, y);
            const bool inside = bilinear_sample(frame_t, s.x, s.y, px.data());
            for (int c = 0; c < frame_t.channels; ++c) img.at(x, y, c) = px[c];
            if (inside && bilinear_sample1(mask_f, s.x, s.y) >= 0.5f) mask.set(x, y, true);
        }
    });
    return {std::move(img), std::move(mask)};
}

} // namespace flowcast::objects
