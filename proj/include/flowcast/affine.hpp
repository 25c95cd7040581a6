#pragma once

#include <array>
#include <cmath>

#include "flowcast/common.hpp"

namespace flowcast {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// 2x3 affine map on pixel coordinates, row-major:
///   p -> (a0*x + a1*y + a2, a3*x + a4*y + a5).
/// Also serves as the global camera motion model (GlobalMotion), where it
/// maps frame-k coordinates to frame-(k+1) coordinates.
struct Affine2 {
    std::array<double, 6> a{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

    static Affine2 identity() { return {}; }

    static Affine2 translation(double tx, double ty) {
        return Affine2{{1.0, 0.0, tx, 0.0, 1.0, ty}};
    }

    Vec2 apply(double x, double y) const {
        return {a[0] * x + a[1] * y + a[2], a[3] * x + a[4] * y + a[5]};
    }
    Vec2 apply(const Vec2& p) const { return apply(p.x, p.y); }

    double det() const { return a[0] * a[4] - a[1] * a[3]; }

    bool finite() const {
        for (double v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Affine2 inverse() const {
        const double d = det();
        require(std::abs(d) > 1e-12, "Affine2::inverse: singular linear block");
        const double i0 = a[4] / d, i1 = -a[1] / d;
        const double i3 = -a[3] / d, i4 = a[0] / d;
        return Affine2{{i0, i1, -(i0 * a[2] + i1 * a[5]), i3, i4, -(i3 * a[2] + i4 * a[5])}};
    }
};

/// outer ∘ inner: applies `inner` first.
inline Affine2 concat(const Affine2& outer, const Affine2& inner) {
    const auto& o = outer.a;
    const auto& i = inner.a;
    return Affine2{{o[0] * i[0] + o[1] * i[3], o[0] * i[1] + o[1] * i[4],
                    o[0] * i[2] + o[1] * i[5] + o[2], o[3] * i[0] + o[4] * i[3],
                    o[3] * i[1] + o[4] * i[4], o[3] * i[2] + o[4] * i[5] + o[5]}};
}

inline double max_abs_diff(const Affine2& p, const Affine2& q) {
    double m = 0.0;
    for (int k = 0; k < 6; ++k) m = std::max(m, std::abs(p.a[k] - q.a[k]));
    return m;
}

} // namespace flowcast
