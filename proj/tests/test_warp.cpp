#include <doctest.h>

#include "flowcast/image_ops.hpp"
#include "helpers.hpp"
#include "ref/reference.hpp"

using namespace flowcast;

TEST_CASE("zero-flow warp is the identity with an all-valid mask") {
    testutil::Rng rng(7);
    const Frame f = testutil::random_frame(rng, 12, 9, 3);
    const WarpResult r = backward_warp(f, FlowField(12, 9));
    CHECK_EQ(testutil::max_abs_diff(r.image, f), 0.0);
    CHECK_EQ(r.valid.count(), f.pixel_count());
}

TEST_CASE("constant (1,0) flow shifts a column ramp and invalidates the last column") {
    const int w = 6, h = 4;
    Frame f(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.at(x, y) = static_cast<float>(x) / 8.0f;
    const WarpResult r = backward_warp(f, FlowField(w, h, 1.0f, 0.0f));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x + 1 < w; ++x) {
            CHECK_EQ(r.image.at(x, y), f.at(x + 1, y)); // value c+1 at column c
            CHECK(r.valid.at(x, y));
        }
        CHECK_FALSE(r.valid.at(w - 1, y)); // sample at x = w clamps
        CHECK_EQ(r.image.at(w - 1, y), f.at(w - 1, y));
    }
}

TEST_CASE("flow pointing every pixel at the center yields a constant output") {
    Frame f(3, 3, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) f.at(x, y) = static_cast<float>(3 * y + x) / 10.0f;
    FlowField flow(3, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            flow.set(x, y, static_cast<float>(1 - x), static_cast<float>(1 - y));
    const WarpResult r = backward_warp(f, flow);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            CHECK_EQ(r.image.at(x, y), f.at(1, 1));
            CHECK(r.valid.at(x, y));
        }
}

TEST_CASE("backward_warp matches the reference on random inputs") {
    testutil::Rng rng(99);
    for (int it = 0; it < 20; ++it) {
        const int w = 5 + static_cast<int>(rng.next() * 20);
        const int h = 5 + static_cast<int>(rng.next() * 16);
        const int c = rng.next() < 0.5 ? 1 : 3;
        const Frame f = testutil::random_frame(rng, w, h, c);
        const FlowField flow = testutil::random_flow(rng, w, h, 6.0);
        const WarpResult got = backward_warp(f, flow);
        const WarpResult want = refimpl::warp(f, flow);
        CHECK_LT(testutil::max_abs_diff(got.image, want.image), 1e-6);
        CHECK(testutil::same_bits(got.valid, want.valid));
    }
}

TEST_CASE("backward_warp rejects shape mismatches") {
    const Frame f(4, 4, 1);
    CHECK_THROWS_AS(backward_warp(f, FlowField(5, 4)), InvalidArgument);
}
