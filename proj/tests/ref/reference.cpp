#include "ref/reference.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/affine.hpp"

namespace refimpl {

bool bilinear(const Frame& f, double x, double y, float* out) {
    const bool inside = x >= 0.0 && x <= f.width - 1.0 && y >= 0.0 && y <= f.height - 1.0;
    const double cx = std::min(std::max(x, 0.0), static_cast<double>(f.width - 1));
    const double cy = std::min(std::max(y, 0.0), static_cast<double>(f.height - 1));
    const int x0 = static_cast<int>(std::floor(cx));
    const int y0 = static_cast<int>(std::floor(cy));
    const int x1 = std::min(x0 + 1, f.width - 1);
    const int y1 = std::min(y0 + 1, f.height - 1);
    const double fx = cx - x0, fy = cy - y0;
    for (int c = 0; c < f.channels; ++c) {
        const double v = (1 - fx) * (1 - fy) * f.at(x0, y0, c) + fx * (1 - fy) * f.at(x1, y0, c) +
                         (1 - fx) * fy * f.at(x0, y1, c) + fx * fy * f.at(x1, y1, c);
        out[c] = static_cast<float>(v);
    }
    return inside;
}

WarpResult warp(const Frame& source, const FlowField& flow) {
    WarpResult r{Frame(source.width, source.height, source.channels),
                 Mask(source.width, source.height)};
    float px[3];
    for (int y = 0; y < source.height; ++y)
        for (int x = 0; x < source.width; ++x) {
            const bool ok = bilinear(source, x + flow.dx(x, y), y + flow.dy(x, y), px);
            for (int c = 0; c < source.channels; ++c) r.image.at(x, y, c) = px[c];
            r.valid.set(x, y, ok);
        }
    return r;
}

Gradients gradient(const Frame& f) {
    Gradients g;
    g.width = f.width;
    g.height = f.height;
    g.channels = f.channels;
    g.gx.assign(f.data.size(), 0.0f);
    g.gy.assign(f.data.size(), 0.0f);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c) {
                const size_t i = g.index(x, y, c);
                if (x + 1 < f.width) g.gx[i] = f.at(x + 1, y, c) - f.at(x, y, c);
                if (y + 1 < f.height) g.gy[i] = f.at(x, y + 1, c) - f.at(x, y, c);
            }
    return g;
}

Frame blur5(const Frame& f) {
    // The defining kernel is separable; evaluate it axis by axis exactly as
    // written ({1,4,6,4,1}/16 per axis, clamped borders, float rasters).
    static const double k1[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    Frame tmp(f.width, f.height, f.channels);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c) {
                double acc = 0.0;
                for (int t = -2; t <= 2; ++t)
                    acc += k1[t + 2] * f.at(std::clamp(x + t, 0, f.width - 1), y, c);
                tmp.at(x, y, c) = static_cast<float>(acc);
            }
    Frame out(f.width, f.height, f.channels);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c) {
                double acc = 0.0;
                for (int t = -2; t <= 2; ++t)
                    acc += k1[t + 2] * tmp.at(x, std::clamp(y + t, 0, f.height - 1), c);
                out.at(x, y, c) = static_cast<float>(acc);
            }
    return out;
}

Frame decimate2(const Frame& f) {
    Frame out((f.width + 1) / 2, (f.height + 1) / 2, f.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < f.channels; ++c) out.at(x, y, c) = f.at(2 * x, 2 * y, c);
    return out;
}

std::vector<Frame> pyramid(const Frame& f, int levels) {
    std::vector<Frame> pyr{f};
    for (int l = 1; l < levels; ++l) pyr.push_back(refimpl::decimate2(blur5(pyr.back())));
    return pyr;
}

double data_term(const FlowField& pred, const FlowField& ref, const Mask& confidence) {
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x)
            if (confidence.at(x, y)) {
                sum += std::abs(static_cast<double>(pred.dx(x, y)) - ref.dx(x, y)) +
                       std::abs(static_cast<double>(pred.dy(x, y)) - ref.dy(x, y));
                ++n;
            }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double perceptual(const Frame& warped, const Frame& target) {
    const auto pa = pyramid(warped, 3);
    const auto pb = pyramid(target, 3);
    double total = 0.0;
    for (int l = 0; l < 3; ++l) {
        const Frame& a = pa[static_cast<size_t>(l)];
        const Frame& b = pb[static_cast<size_t>(l)];
        const Gradients ga = gradient(a);
        const Gradients gb = gradient(b);
        double sum = 0.0;
        for (size_t i = 0; i < a.data.size(); ++i)
            sum += std::abs(static_cast<double>(a.data[i]) - b.data[i]) +
                   std::abs(static_cast<double>(ga.gx[i]) - gb.gx[i]) +
                   std::abs(static_cast<double>(ga.gy[i]) - gb.gy[i]);
        total += sum / static_cast<double>(a.data.size());
    }
    return total;
}

double smoothness(const FlowField& flow, const Frame& image) {
    const Gradients g = gradient(image);
    double sum = 0.0;
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            double fgrad = 0.0;
            if (x + 1 < flow.width)
                fgrad += std::abs(static_cast<double>(flow.dx(x + 1, y)) - flow.dx(x, y)) +
                         std::abs(static_cast<double>(flow.dy(x + 1, y)) - flow.dy(x, y));
            if (y + 1 < flow.height)
                fgrad += std::abs(static_cast<double>(flow.dx(x, y + 1)) - flow.dx(x, y)) +
                         std::abs(static_cast<double>(flow.dy(x, y + 1)) - flow.dy(x, y));
            double igrad = 0.0;
            for (int c = 0; c < image.channels; ++c) {
                const size_t i = g.index(x, y, c);
                igrad +=
                    std::abs(static_cast<double>(g.gx[i])) + std::abs(static_cast<double>(g.gy[i]));
            }
            sum += fgrad * std::exp(-igrad);
        }
    return sum / (static_cast<double>(flow.width) * flow.height);
}

Consistency fb(const FlowField& forward, const FlowField& backward, double a, double b) {
    Consistency r;
    r.residual.assign(forward.v.size(), 0.0f);
    r.valid = Mask(forward.width, forward.height);
    Frame bx(forward.width, forward.height, 1), by(forward.width, forward.height, 1);
    for (int y = 0; y < forward.height; ++y)
        for (int x = 0; x < forward.width; ++x) {
            bx.at(x, y) = backward.dx(x, y);
            by.at(x, y) = backward.dy(x, y);
        }
    double sum = 0.0;
    for (int y = 0; y < forward.height; ++y)
        for (int x = 0; x < forward.width; ++x) {
            const double fx = forward.dx(x, y), fy = forward.dy(x, y);
            const double px = x + fx, py = y + fy;
            float bdx, bdy;
            bilinear(bx, px, py, &bdx);
            bilinear(by, px, py, &bdy);
            const double rx = x - (px + bdx), ry = y - (py + bdy);
            const size_t i = (static_cast<size_t>(y) * forward.width + x) * 2;
            r.residual[i] = static_cast<float>(rx);
            r.residual[i + 1] = static_cast<float>(ry);
            const bool ok =
                std::sqrt(rx * rx + ry * ry) < std::max(a, b * std::sqrt(fx * fx + fy * fy));
            r.valid.set(x, y, ok);
            if (ok) sum += std::abs(rx) + std::abs(ry);
        }
    r.energy = sum / (static_cast<double>(forward.width) * forward.height);
    return r;
}

namespace {

std::vector<double> gauss_taps(int taps) {
    // Middle `taps` samples of the 11-tap sigma-1.5 Gaussian, renormalized.
    std::vector<double> full(11);
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5.0;
        full[static_cast<size_t>(i)] = std::exp(-d * d / 4.5);
    }
    double s = 0.0;
    for (double v : full) s += v;
    for (double& v : full) v /= s;
    const int off = (11 - taps) / 2;
    std::vector<double> k(full.begin() + off, full.begin() + off + taps);
    s = 0.0;
    for (double v : k) s += v;
    for (double& v : k) v /= s;
    return k;
}

} // namespace

flowcast::metrics::SsimStats ssim_stats(const Frame& a, const Frame& b) {
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    const int tx = std::min(11, a.width), ty = std::min(11, a.height);
    const auto kx = gauss_taps(tx);
    const auto ky = gauss_taps(ty);
    double ssim_sum = 0.0, cs_sum = 0.0;
    size_t n = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y0 = 0; y0 + ty <= a.height; ++y0)
            for (int x0 = 0; x0 + tx <= a.width; ++x0) {
                double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
                for (int j = 0; j < ty; ++j)
                    for (int i = 0; i < tx; ++i) {
                        const double w = kx[static_cast<size_t>(i)] * ky[static_cast<size_t>(j)];
                        const double va = a.at(x0 + i, y0 + j, c);
                        const double vb = b.at(x0 + i, y0 + j, c);
                        ma += w * va;
                        mb += w * vb;
                        maa += w * va * va;
                        mbb += w * vb * vb;
                        mab += w * va * vb;
                    }
                const double var_a = maa - ma * ma;
                const double var_b = mbb - mb * mb;
                const double cov = mab - ma * mb;
                const double cs = (2 * cov + C2) / (var_a + var_b + C2);
                const double lum = (2 * ma * mb + C1) / (ma * ma + mb * mb + C1);
                cs_sum += cs;
                ssim_sum += lum * cs;
                ++n;
            }
    return {ssim_sum / static_cast<double>(n), cs_sum / static_cast<double>(n)};
}

double ms_ssim(const Frame& a, const Frame& b) {
    static const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    const int min_dim = std::min(a.width, a.height);
    int levels = 1;
    while (levels < 5 && static_cast<double>(min_dim) / (1 << levels) >= 11.0) ++levels;
    double wsum = 0.0;
    for (int l = 0; l < levels; ++l) wsum += weights[l];

    Frame ca = a, cb = b;
    double result = 1.0;
    for (int l = 0; l < levels; ++l) {
        const auto s = ssim_stats(ca, cb);
        const double factor = (l == levels - 1) ? s.ssim : s.cs;
        result *= std::pow(std::max(factor, 0.0), weights[l] / wsum);
        if (l + 1 < levels) {
            ca = refimpl::decimate2(blur5(ca));
            cb = refimpl::decimate2(blur5(cb));
        }
    }
    return result;
}

Frame diffuse(const Frame& f, const Mask& holes) {
    // Multi-source BFS layering, then fill layer by layer: each pixel takes
    // the mean of its 8-neighbors from strictly earlier layers.
    const int w = f.width, h = f.height;
    std::vector<int> layer(static_cast<size_t>(w) * h, -1);
    std::vector<size_t> frontier;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!holes.at(x, y)) {
                layer[static_cast<size_t>(y) * w + x] = 0;
                frontier.push_back(static_cast<size_t>(y) * w + x);
            }
    Frame out = f;
    int depth = 0;
    while (!frontier.empty()) {
        ++depth;
        std::vector<size_t> next;
        for (size_t i : frontier) {
            const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const size_t ni = static_cast<size_t>(ny) * w + nx;
                    if (layer[ni] < 0) {
                        layer[ni] = depth;
                        next.push_back(ni);
                    }
                }
        }
        for (size_t i : next) {
            const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
            double sum[3] = {0, 0, 0};
            int cnt = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const size_t ni = static_cast<size_t>(ny) * w + nx;
                    if (layer[ni] >= 0 && layer[ni] < depth) {
                        for (int c = 0; c < f.channels; ++c) sum[c] += out.at(nx, ny, c);
                        ++cnt;
                    }
                }
            if (cnt > 0)
                for (int c = 0; c < f.channels; ++c)
                    out.at(x, y, c) = static_cast<float>(sum[c] / cnt);
        }
        frontier = std::move(next);
    }
    return out;
}

flowcast::Affine2 fit_affine(const std::vector<flowcast::Vec2>& p,
                             const std::vector<flowcast::Vec2>& q) {
    // Normal equations for all 6 unknowns at once, Gaussian elimination with
    // partial pivoting.
    double A[6][7] = {};
    for (size_t k = 0; k < p.size(); ++k) {
        const double bx[3] = {p[k].x, p[k].y, 1.0};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                A[i][j] += bx[i] * bx[j];
                A[i + 3][j + 3] += bx[i] * bx[j];
            }
        for (int i = 0; i < 3; ++i) {
            A[i][6] += bx[i] * q[k].x;
            A[i + 3][6] += bx[i] * q[k].y;
        }
    }
    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[piv], A[col]);
        for (int r = 0; r < 6; ++r) {
            if (r == col || A[col][col] == 0.0) continue;
            const double m = A[r][col] / A[col][col];
            for (int cc = col; cc < 7; ++cc) A[r][cc] -= m * A[col][cc];
        }
    }
    flowcast::Affine2 g;
    const int order[6] = {0, 1, 2, 3, 4, 5}; // (a0 a1 a2 | a3 a4 a5)
    for (int i = 0; i < 6; ++i) g.a[static_cast<size_t>(order[i])] = A[i][6] / A[i][i];
    return g;
}

} // namespace refimpl
