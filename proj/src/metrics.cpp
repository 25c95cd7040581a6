#include "flowcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flowcast/image_ops.hpp"
#include "flowcast/parallel.hpp"

using nlohmann::json;

namespace flowcast::metrics {

namespace {

constexpr double kC1 = 0.01 * 0.01; // (K1 * range)^2
constexpr double kC2 = 0.03 * 0.03; // (K2 * range)^2
constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kMsWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Middle `taps` samples of the 11-tap Gaussian, renormalized to sum 1.
std::vector<double> window_kernel(int taps) {
    double full[kWin];
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - (kWin - 1) / 2.0;
        full[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += full[i];
    }
    for (double& v : full) v /= sum;
    const int off = (kWin - taps) / 2;
    std::vector<double> k(full + off, full + off + taps);
    double s = 0.0;
    for (double v : k) s += v;
    for (double& v : k) v /= s;
    return k;
}

// Valid-region separable convolution of one channel plane.
struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;
    double& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
    double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
};

Plane convolve_valid(const Plane& p, const std::vector<double>& kx,
                     const std::vector<double>& ky) {
    Plane mid;
    mid.w = p.w - static_cast<int>(kx.size()) + 1;
    mid.h = p.h;
    mid.v.assign(static_cast<size_t>(mid.w) * mid.h, 0.0);
    parallel_rows(mid.h, [&](int y) {
        for (int x = 0; x < mid.w; ++x) {
            double acc = 0.0;
            for (size_t t = 0; t < kx.size(); ++t) acc += kx[t] * p.at(x + static_cast<int>(t), y);
            mid.at(x, y) = acc;
        }
    });
    Plane out;
    out.w = mid.w;
    out.h = p.h - static_cast<int>(ky.size()) + 1;
    out.v.assign(static_cast<size_t>(out.w) * out.h, 0.0);
    parallel_rows(out.h, [&](int y) {
        for (int x = 0; x < out.w; ++x) {
            double acc = 0.0;
            for (size_t t = 0; t < ky.size(); ++t) acc += ky[t] * mid.at(x, y + static_cast<int>(t));
            out.at(x, y) = acc;
        }
    });
    return out;
}

Plane channel_plane(const Frame& f, int c) {
    Plane p;
    p.w = f.width;
    p.h = f.height;
    p.v.resize(static_cast<size_t>(p.w) * p.h);
    parallel_rows(p.h, [&](int y) {
        for (int x = 0; x < p.w; ++x) p.at(x, y) = f.at(x, y, c);
    });
    return p;
}

Plane product_plane(const Plane& a, const Plane& b) {
    Plane p;
    p.w = a.w;
    p.h = a.h;
    p.v.resize(a.v.size());
    for (size_t i = 0; i < p.v.size(); ++i) p.v[i] = a.v[i] * b.v[i];
    return p;
}

} // namespace

SsimStats ssim_stats(const Frame& a, const Frame& b) {
    require(a.same_shape(b), "ssim: shape mismatch");
    const auto kx = window_kernel(std::min(kWin, a.width));
    const auto ky = window_kernel(std::min(kWin, a.height));

    double ssim_sum = 0.0, cs_sum = 0.0;
    size_t n = 0;
    for (int c = 0; c < a.channels; ++c) {
        const Plane pa = channel_plane(a, c);
        const Plane pb = channel_plane(b, c);
        const Plane mu_a = convolve_valid(pa, kx, ky);
        const Plane mu_b = convolve_valid(pb, kx, ky);
        const Plane m_aa = convolve_valid(product_plane(pa, pa), kx, ky);
        const Plane m_bb = convolve_valid(product_plane(pb, pb), kx, ky);
        const Plane m_ab = convolve_valid(product_plane(pa, pb), kx, ky);
        // Per-window indices; serial accumulation keeps the sum order fixed.
        for (int y = 0; y < mu_a.h; ++y) {
            for (int x = 0; x < mu_a.w; ++x) {
                const double ma = mu_a.at(x, y), mb = mu_b.at(x, y);
                const double va = m_aa.at(x, y) - ma * ma;
                const double vb = m_bb.at(x, y) - mb * mb;
                const double cov = m_ab.at(x, y) - ma * mb;
                const double cs = (2.0 * cov + kC2) / (va + vb + kC2);
                const double lum = (2.0 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
                cs_sum += cs;
                ssim_sum += lum * cs;
                ++n;
            }
        }
    }
    return SsimStats{ssim_sum / static_cast<double>(n), cs_sum / static_cast<double>(n)};
}

double ssim(const Frame& a, const Frame& b) { return ssim_stats(a, b).ssim; }

double ms_ssim(const Frame& a, const Frame& b) {
    require(a.same_shape(b), "ms_ssim: shape mismatch");
    const int min_dim = std::min(a.width, a.height);
    int levels = 1;
    while (levels < 5 && static_cast<double>(min_dim) / (1 << levels) >= kWin) ++levels;

    double wsum = 0.0;
    for (int l = 0; l < levels; ++l) wsum += kMsWeights[l];

    Frame ca = a, cb = b;
    double result = 1.0;
    for (int l = 0; l < levels; ++l) {
        const SsimStats s = ssim_stats(ca, cb);
        const double w = kMsWeights[l] / wsum;
        const double factor = (l == levels - 1) ? s.ssim : s.cs;
        result *= std::pow(std::max(factor, 0.0), w);
        if (l + 1 < levels) {
            ca = decimate2(binomial_blur5(ca));
            cb = decimate2(binomial_blur5(cb));
        }
    }
    return result;
}

double l1_error(const Frame& a, const Frame& b) {
    require(a.same_shape(b), "l1_error: shape mismatch");
    const double sum = sum_rows(a.height, [&](int y) {
        double s = 0.0;
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < a.channels; ++c)
                s += std::abs(static_cast<double>(a.at(x, y, c)) - b.at(x, y, c));
        return s;
    });
    return sum / static_cast<double>(a.data.size());
}

std::optional<double> psnr(const Frame& a, const Frame& b) {
    require(a.same_shape(b), "psnr: shape mismatch");
    const double sum = sum_rows(a.height, [&](int y) {
        double s = 0.0;
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < a.channels; ++c) {
                const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
                s += d * d;
            }
        return s;
    });
    const double mse = sum / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::nullopt;
    return -10.0 * std::log10(mse);
}

EvalReport evaluate(const std::vector<Frame>& predicted, const std::vector<Frame>& reference) {
    require(predicted.size() == reference.size(), "evaluate: frame count mismatch");
    require(!predicted.empty(), "evaluate: no frames");
    EvalReport rep;
    for (size_t i = 0; i < predicted.size(); ++i) {
        FrameScore fs;
        fs.horizon = static_cast<int>(i) + 1;
        fs.ms_ssim = ms_ssim(predicted[i], reference[i]);
        fs.ssim = ssim(predicted[i], reference[i]);
        fs.l1 = l1_error(predicted[i], reference[i]);
        fs.psnr = psnr(predicted[i], reference[i]);
        rep.frames.push_back(fs);
    }
    for (int k : {1, 3, 5, 10}) {
        const size_t n = std::min<size_t>(static_cast<size_t>(k), rep.frames.size());
        Bucket bk;
        bk.k = k;
        double psnr_sum = 0.0;
        size_t psnr_n = 0;
        for (size_t i = 0; i < n; ++i) {
            bk.ms_ssim += rep.frames[i].ms_ssim;
            bk.ssim += rep.frames[i].ssim;
            bk.l1 += rep.frames[i].l1;
            if (rep.frames[i].psnr) {
                psnr_sum += *rep.frames[i].psnr;
                ++psnr_n;
            }
        }
        bk.ms_ssim /= static_cast<double>(n);
        bk.ssim /= static_cast<double>(n);
        bk.l1 /= static_cast<double>(n);
        if (psnr_n > 0) bk.psnr = psnr_sum / static_cast<double>(psnr_n);
        rep.buckets.push_back(bk);
        if (n == rep.frames.size()) break; // no more frames to widen over
    }
    return rep;
}

std::string report_to_json(const EvalReport& r) {
    json j;
    j["frames"] = json::array();
    for (const FrameScore& f : r.frames) {
        json e;
        e["horizon"] = f.horizon;
        e["ms_ssim"] = f.ms_ssim;
        e["ssim"] = f.ssim;
        e["l1"] = f.l1;
        if (f.psnr)
            e["psnr"] = *f.psnr;
        else
            e["psnr"] = nullptr;
        j["frames"].push_back(e);
    }
    j["buckets"] = json::array();
    for (const Bucket& b : r.buckets) {
        json e;
        e["next"] = b.k;
        e["ms_ssim"] = b.ms_ssim;
        e["ssim"] = b.ssim;
        e["l1"] = b.l1;
        if (b.psnr)
            e["psnr"] = *b.psnr;
        else
            e["psnr"] = nullptr;
        j["buckets"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& r) {
    std::ostringstream os;
    char line[160];
    os << "row          ms_ssim         ssim           l1         psnr\n";
    auto fmt = [&](const std::string& name, double ms, double ss, double l1,
                   const std::optional<double>& ps) {
        if (ps)
            std::snprintf(line, sizeof line, "%-8s %12.9f %12.9f %12.9f %12.6f\n", name.c_str(),
                          ms, ss, l1, *ps);
        else
            std::snprintf(line, sizeof line, "%-8s %12.9f %12.9f %12.9f %12s\n", name.c_str(), ms,
                          ss, l1, "inf");
        os << line;
    };
    for (const FrameScore& f : r.frames)
        fmt("t+" + std::to_string(f.horizon), f.ms_ssim, f.ssim, f.l1, f.psnr);
    for (const Bucket& b : r.buckets)
        fmt("next" + std::to_string(b.k), b.ms_ssim, b.ssim, b.l1, b.psnr);
    return os.str();
}

} // namespace flowcast::metrics
