#include "sevo/error.hpp"
#include "sevo/observation.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace sevo;
using sevo::test::oracle_blend;

TEST_CASE("overlay blends a masked pixel toward yellow") {
    Frame f(1, 1, Rgb{100, 100, 100});
    SegmentationMask m(1, 1);
    m.set(0, 0, true);
    const auto out = compose_overlay(f, m, {});
    CHECK(out.at(0, 0) == Rgb{170, 170, 55});
}

TEST_CASE("overlay on a white pixel") {
    Frame f(1, 1, Rgb{255, 255, 255});
    SegmentationMask m(1, 1);
    m.set(0, 0, true);
    CHECK(compose_overlay(f, m, {}).at(0, 0) == Rgb{255, 255, 140});
}

TEST_CASE("unmasked pixels and zero opacity leave the frame untouched") {
    Rng rng(3);
    const auto f = test::random_frame(rng, 13, 7);
    SegmentationMask empty(13, 7);
    CHECK(compose_overlay(f, empty, {}) == f);

    const auto mask = test::random_mask(rng, 13, 7);
    OverlayConfig clear;
    clear.alpha = 0.0;
    CHECK(compose_overlay(f, mask, clear) == f);
}

TEST_CASE("overlay matches the scalar oracle on random inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = static_cast<int>(rng.uniform_int(1, 40));
        const int h = static_cast<int>(rng.uniform_int(1, 30));
        const auto f = test::random_frame(rng, w, h);
        const auto m = test::random_mask(rng, w, h, rng.uniform());
        OverlayConfig cfg;
        cfg.alpha = trial % 10 == 0 ? 0.5 : rng.uniform();
        for (auto& c : cfg.color) c = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        const auto out = compose_overlay(f, m, cfg);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const auto p = f.at(x, y);
                Rgb want = p;
                if (m.at(x, y)) {
                    for (int k = 0; k < 3; ++k) want[k] = oracle_blend(p[k], cfg.color[k], cfg.alpha);
                }
                REQUIRE(out.at(x, y) == want);
            }
        }
    }
}

TEST_CASE("blend_channel rounds halves away from zero") {
    // 0.5 * 1 + 0.5 * 0 = 0.5 -> 1
    CHECK(blend_channel(1, 0, 0.5) == 1);
    CHECK(blend_channel(0, 255, 0.5) == 128);
    CHECK(blend_channel(200, 0, 1.0) == 0);
}

TEST_CASE("overlay rejects bad shapes and opacities") {
    Frame f(4, 4);
    CHECK_THROWS_AS(compose_overlay(f, SegmentationMask(4, 3), {}), ShapeError);
    OverlayConfig bad;
    bad.alpha = 1.5;
    CHECK_THROWS_AS(compose_overlay(f, SegmentationMask(4, 4), bad), InvalidArgument);
    bad.alpha = -0.1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("virtual observation composes only when enabled") {
    Rng rng(5);
    std::vector<Frame> frames{test::random_frame(rng, 8, 8), test::random_frame(rng, 8, 8)};
    std::vector<SegmentationMask> zero{SegmentationMask(8, 8), SegmentationMask(8, 8)};
    const JointState q{{1.0, 2.0, 0.5}};

    auto obs = make_virtual_observation(frames, zero, q, {}, true, 0.25);
    CHECK(obs.frames == frames);
    CHECK(obs.joint_state == q);
    CHECK(obs.timestamp == 0.25);

    std::vector<SegmentationMask> masks{test::random_mask(rng, 8, 8), test::random_mask(rng, 8, 8)};
    CHECK(make_virtual_observation(frames, masks, q, {}, false).frames == frames);

    SegmentationMask four(8, 8);
    four.set(1, 1, true);
    four.set(2, 1, true);
    four.set(5, 6, true);
    four.set(7, 7, true);
    obs = make_virtual_observation({frames[0]}, {four}, q, {}, true);
    int changed = 0;
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            const auto p = frames[0].at(x, y);
            const auto o = obs.frames[0].at(x, y);
            if (four.at(x, y)) {
                for (int k = 0; k < 3; ++k) CHECK(o[k] == oracle_blend(p[k], Rgb{255, 255, 0}[k], 0.45));
            }
            if (o != p) ++changed;
        }
    }
    CHECK(changed <= 4);

    CHECK_THROWS_AS(make_virtual_observation(frames, {zero[0]}, q, {}, true), ShapeError);
}

TEST_CASE("area-mean downsample") {
    Frame f(32, 32, Rgb{0, 0, 0});
    // Top-left 2x2 cell: one white pixel out of four.
    f.set(0, 0, {255, 255, 255});
    const auto v = downsample_area_mean(f, 16);
    REQUIRE(v.size() == 16 * 16 * 3);
    CHECK(v[0] == doctest::Approx(0.25));
    CHECK(v[3] == 0.0f);

    Rng rng(2);
    const auto g = test::random_frame(rng, 48, 48);
    const auto d = downsample_area_mean(g, 16);
    for (int cy = 0; cy < 16; ++cy) {
        for (int cx = 0; cx < 16; ++cx) {
            for (int k = 0; k < 3; ++k) {
                double sum = 0.0;
                for (int y = 0; y < 3; ++y) {
                    for (int x = 0; x < 3; ++x) sum += g.at(cx * 3 + x, cy * 3 + y)[k];
                }
                const double want = std::round(sum / 9.0 / 255.0 * 1e6) / 1e6;
                CHECK(d[(cy * 16 + cx) * 3 + k] == doctest::Approx(want).epsilon(1e-6));
            }
        }
    }
    CHECK_THROWS_AS(downsample_area_mean(Frame(30, 32), 16), ShapeError);
}
