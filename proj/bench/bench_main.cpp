// Times the parallel kernels against the serial reference implementations on
// 720p-sized inputs and prints a parity column (max absolute difference) so
// the two cannot drift apart unnoticed. Usage: flowcast_bench [W H repeats].

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include "flowcast/energy.hpp"
#include "flowcast/image_ops.hpp"
#include "flowcast/metrics.hpp"

#include "helpers.hpp"
#include "ref/reference.hpp"

using namespace flowcast;
using testutil::Rng;

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
    double best = 1e30;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const char* name, double lib_s, double ref_s, double diff) {
    std::printf("%-16s %9.2f %9.2f %8.2fx %11.2e\n", name, lib_s * 1e3, ref_s * 1e3,
                ref_s / lib_s, diff);
}

} // namespace

int main(int argc, char** argv) {
    const int w = argc > 1 ? std::atoi(argv[1]) : 1280;
    const int h = argc > 2 ? std::atoi(argv[2]) : 720;
    const int repeats = argc > 3 ? std::atoi(argv[3]) : 3;

    Rng rng(0xBE);
    const Frame a = testutil::random_frame(rng, w, h, 3);
    const Frame b = testutil::random_frame(rng, w, h, 3);
    const FlowField fwd = testutil::random_flow(rng, w, h, 8.0);
    const FlowField bwd = testutil::random_flow(rng, w, h, 8.0);

    std::printf("%dx%d, 3 channels, best of %d, %d threads\n\n", w, h, repeats,
                omp_get_max_threads());
    std::printf("%-16s %9s %9s %9s %11s\n", "kernel", "par ms", "ser ms", "speedup", "max diff");

    {
        WarpResult lib, ref;
        const double tl = best_of(repeats, [&] { lib = backward_warp(a, fwd); });
        const double tr = best_of(repeats, [&] { ref = refimpl::warp(a, fwd); });
        row("backward_warp", tl, tr, testutil::max_abs_diff(lib.image, ref.image));
    }
    {
        Frame lib(1, 1, 1), ref(1, 1, 1);
        const double tl = best_of(repeats, [&] { lib = binomial_blur5(a); });
        const double tr = best_of(repeats, [&] { ref = refimpl::blur5(a); });
        row("binomial_blur5", tl, tr, testutil::max_abs_diff(lib, ref));
    }
    {
        std::vector<Frame> lib;
        Frame ref(1, 1, 1);
        const double tl = best_of(repeats, [&] { lib = gaussian_pyramid(a, 5); });
        const double tr = best_of(repeats, [&] {
            ref = a;
            for (int l = 1; l < 5; ++l) ref = refimpl::decimate2(refimpl::blur5(ref));
        });
        row("pyramid(5)", tl, tr, testutil::max_abs_diff(lib.back(), ref));
    }
    {
        double lib = 0.0;
        metrics::SsimStats ref;
        const double tl = best_of(repeats, [&] { lib = metrics::ssim(a, b); });
        const double tr = best_of(repeats, [&] { ref = refimpl::ssim_stats(a, b); });
        row("ssim", tl, tr, std::abs(lib - ref.ssim));
    }
    {
        double lib = 0.0, ref = 0.0;
        const double tl = best_of(1, [&] { lib = metrics::ms_ssim(a, b); });
        const double tr = best_of(1, [&] { ref = refimpl::ms_ssim(a, b); });
        row("ms_ssim", tl, tr, std::abs(lib - ref));
    }
    {
        energy::ConsistencyResult lib;
        refimpl::Consistency ref;
        const double tl = best_of(repeats, [&] { lib = energy::fb_consistency(fwd, bwd, 3.0, 0.05); });
        const double tr = best_of(repeats, [&] { ref = refimpl::fb(fwd, bwd, 3.0, 0.05); });
        row("fb_consistency", tl, tr, std::abs(lib.energy - ref.energy));
    }
    {
        double lib = 0.0, ref = 0.0;
        const double tl = best_of(repeats, [&] { lib = energy::smoothness_term(fwd, a); });
        const double tr = best_of(repeats, [&] { ref = refimpl::smoothness(fwd, a); });
        row("smoothness", tl, tr, std::abs(lib - ref));
    }
    return 0;
}
