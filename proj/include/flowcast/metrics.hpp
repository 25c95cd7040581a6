#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowcast/image.hpp"

namespace flowcast::metrics {

/// Single-scale SSIM statistics: ssim = mean of the full index, cs = mean of
/// the contrast-sensitivity factor only. Channels are averaged.
struct SsimStats {
    double ssim = 0.0;
    double cs = 0.0;
};

/// 11x11 Gaussian-window (sigma 1.5) SSIM over valid window placements,
/// K1 = 0.01, K2 = 0.03, dynamic range 1. Images smaller than the window
/// fall back to one truncated, renormalized window.
SsimStats ssim_stats(const Frame& a, const Frame& b);
double ssim(const Frame& a, const Frame& b);

/// Multi-scale SSIM with the standard 5-scale exponents
/// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333). Uses the largest scale count
/// L <= 5 with min(W, H) / 2^(L-1) >= 11 and renormalizes the exponents to
/// sum to 1 when L < 5. Combined as prod_{j<L} cs_j^{w_j} * ssim_L^{w_L};
/// scales come from the binomial-blur/decimate pyramid.
double ms_ssim(const Frame& a, const Frame& b);

/// Mean absolute difference over all pixels and channels.
double l1_error(const Frame& a, const Frame& b);

/// 10*log10(1 / MSE); nullopt when the frames are identical (MSE == 0).
std::optional<double> psnr(const Frame& a, const Frame& b);

struct FrameScore {
    int horizon = 0; // 1-based distance from the last input
    double ms_ssim = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
    std::optional<double> psnr;
};

/// Mean over the first min(k, available) horizons; psnr averages only the
/// frames where it is defined.
struct Bucket {
    int k = 0;
    double ms_ssim = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
    std::optional<double> psnr;
};

struct EvalReport {
    std::vector<FrameScore> frames;
    std::vector<Bucket> buckets; // k in {1, 3, 5, 10}, trimmed to available
};

EvalReport evaluate(const std::vector<Frame>& predicted, const std::vector<Frame>& reference);

std::string report_to_json(const EvalReport& r);
std::string report_to_table(const EvalReport& r); // aligned plain text

} // namespace flowcast::metrics
