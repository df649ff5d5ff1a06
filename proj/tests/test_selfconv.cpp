// Copyright 2026 The DeSCA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "desca/error.hpp"
#include "desca/parallel.hpp"
#include "desca/selfconv.hpp"

#include "oracle.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <random>

using namespace desca;

namespace {

const double kEps = 0.03 * 0.03;

SamplingPattern default_pattern(std::uint64_t seed = 0) {
    DescriptorParams p;
    p.seed = seed;
    return build_sampling_pattern(p);
}

} // namespace

TEST_CASE("correlate_patches_direct") {
    const Image img = synth::random_image(9, 9, 21);
    const auto uni = FilterWeights::uniform(2);
    const auto gui = FilterWeights::guided(2, kEps);

    SUBCASE("self-correlation is one") {
        for (auto w : {uni, gui}) CHECK(correlate_patches_direct(img, {4, 4}, {4, 4}, w) == doctest::Approx(1.0));
    }
    SUBCASE("an intensity offset cancels under uniform weights") {
        Image two(12, 5, 0.0);
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(0.0, 0.5);
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 6; ++x) {
                two.at(x, y) = u(rng);
                two.at(x + 6, y) = two.at(x, y) + 0.3;
            }
        CHECK(correlate_patches_direct(two, {2, 2}, {8, 2}, uni) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("uniform weights match textbook NCC") {
        for (int ay = 0; ay < 9; ++ay)
            for (int ax = 0; ax < 9; ++ax)
                for (auto [bx, by] : {std::pair{0, 0}, {8, 3}, {ax + 1, ay}, {4, 7}, {ax - 2, ay + 3}}) {
                    const double got = correlate_patches_direct(img, {ax, ay}, {bx, by}, uni);
                    CHECK(std::abs(got - oracle::textbook_ncc(img, 2, ax, ay, bx, by)) < 1e-6);
                }
    }
    SUBCASE("guided weights match the impulse-response oracle") {
        for (auto [ax, ay, bx, by] : {std::array{4, 4, 6, 5}, {0, 0, 3, 1}, {8, 8, 5, 5}, {2, 7, 2, 3}}) {
            const auto w = oracle::guided_row_by_impulse(img, ax, ay, 2, kEps);
            const double expect = oracle::weighted_ncc(img, w, 4, ax, ay, bx, by);
            CHECK(std::abs(correlate_patches_direct(img, {ax, ay}, {bx, by}, gui) - expect) < 1e-9);
        }
    }
    SUBCASE("degenerate patches give zero") {
        const Image flat = synth::constant_image(9, 9, 0.5);
        CHECK(correlate_patches_direct(flat, {4, 4}, {4, 4}, uni) == 0.0);
        CHECK(correlate_patches_direct(flat, {4, 4}, {2, 1}, gui) == 0.0);
    }
    SUBCASE("symmetric under uniform weights") {
        for (auto [dx, dy] : {std::pair{1, 0}, {-3, 2}, {4, -4}}) {
            const double ab = correlate_patches_direct(img, {4, 4}, {4 + dx, 4 + dy}, uni);
            const double ba = correlate_patches_direct(img, {4 + dx, 4 + dy}, {4, 4}, uni);
            CHECK(std::abs(ab - ba) < 1e-6);
        }
    }
}

TEST_CASE("build_offset_maps special cases") {
    const auto pat = default_pattern();
    SUBCASE("constant image gives the zero sentinel everywhere") {
        for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
            const auto maps = build_offset_maps(synth::constant_image(16, 12, 0.4), pat, w);
            for (const auto& m : maps.maps)
                for (float v : m) CHECK(v == 0.0f);
        }
    }
    SUBCASE("zero displacement plane is one") {
        const Image img = synth::random_image(16, 12, 22);
        for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
            const auto maps = build_offset_maps(img, pat, w);
            const int z = maps.plane_index({0, 0});
            for (int y = -maps.anchor_margin; y < 12 + maps.anchor_margin; ++y)
                for (int x = -maps.anchor_margin; x < 16 + maps.anchor_margin; ++x) {
                    // Beyond a corner the replicated patch can be constant. Guided
                    // kernel rows have negative weights, so there the weighted
                    // variance itself may vanish or go negative.
                    const double expect = correlate_patches_direct(img, {x, y}, {x, y}, w);
                    const bool inside = x >= 0 && x < 16 && y >= 0 && y < 12;
                    if (inside && w.mode == FilterWeights::Mode::Uniform) CHECK(expect == doctest::Approx(1.0));
                    CHECK((expect == 0.0 || expect == doctest::Approx(1.0)));
                    CHECK(maps.at(z, x, y) == doctest::Approx(expect).epsilon(1e-6));
                }
        }
    }
    SUBCASE("offsets are exactly the deduplicated pattern displacements") {
        const auto maps = build_offset_maps(synth::random_image(8, 8, 1), pat, FilterWeights::uniform(2));
        CHECK(maps.offsets == pat.volume_deltas());
        CHECK(maps.anchor_margin == pat.params.support_radius());
        CHECK(maps.plane_index({9, 9}) == -1);
    }
    SUBCASE("values lie in [-1, 1]") {
        const auto maps = build_offset_maps(synth::random_image(20, 20, 2), pat, FilterWeights::guided(2, kEps));
        for (const auto& m : maps.maps)
            for (float v : m) {
                CHECK(v >= -1.0f);
                CHECK(v <= 1.0f);
            }
    }
}

TEST_CASE("offset maps equal direct correlation at every pixel and displacement") {
    const Image img = synth::random_image(32, 32, 23);
    const auto pat = default_pattern(5);
    SUBCASE("uniform") {
        const auto w = FilterWeights::uniform(2);
        const auto maps = build_offset_maps(img, pat, w);
        double worst = 0.0;
        for (std::size_t i = 0; i < maps.offsets.size(); ++i) {
            const Offset d = maps.offsets[i];
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    const double direct = correlate_patches_direct(img, {x, y}, {x + d.dx, y + d.dy}, w);
                    worst = std::max(worst, std::abs(direct - maps.at(static_cast<int>(i), x, y)));
                }
        }
        MESSAGE("uniform worst deviation " << worst);
        CHECK(worst < 1e-5);
    }
    SUBCASE("guided") {
        const auto w = FilterWeights::guided(2, kEps);
        const auto maps = build_offset_maps(img, pat, w);
        const DirectCorrelator direct(img, w, maps.anchor_margin, 8);
        double worst = 0.0;
        for (std::size_t i = 0; i < maps.offsets.size(); i += 3) {
            const Offset d = maps.offsets[i];
            for (int y = -4; y < 36; y += 3)
                for (int x = -4; x < 36; x += 2) {
                    const double v = direct({x, y}, {x + d.dx, y + d.dy});
                    worst = std::max(worst, std::abs(v - maps.at(static_cast<int>(i), x, y)));
                }
        }
        MESSAGE("guided worst deviation " << worst);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("DirectCorrelator agrees with correlate_patches_direct") {
    const Image img = synth::random_image(12, 10, 24);
    for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
        const DirectCorrelator dc(img, w, 4, 8);
        for (auto [a, b] : {std::pair{Offset{0, 0}, Offset{3, 2}}, {Offset{-4, -4}, Offset{4, 4}},
                            {Offset{15, 13}, Offset{9, 5}}, {Offset{-9, 2}, Offset{-1, 2}}}) {
            CHECK(std::abs(dc(a, b) - correlate_patches_direct(img, a, b, w)) < 1e-9);
        }
    }
}

TEST_CASE("remap_to_volume") {
    const Image img = synth::random_image(24, 24, 25);
    const auto pat = default_pattern(9);
    for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
        const auto maps = build_offset_maps(img, pat, w);
        std::mt19937 rng(4);
        for (int trial = 0; trial < 10; ++trial) {
            const int x = static_cast<int>(rng() % 24), y = static_cast<int>(rng() % 24);
            const auto vol = remap_to_volume(maps, pat, x, y);
            REQUIRE(vol.num_kernels == 32);
            REQUIRE(vol.window_size == static_cast<int>(pat.window.size()));
            for (int k = 0; k < vol.num_kernels; ++k) {
                const Offset a{x + pat.kernels[k].dx, y + pat.kernels[k].dy};
                const double self = vol.at(k, pat.window_index(pat.kernels[k]));
                CHECK(self == doctest::Approx(correlate_patches_direct(img, a, a, w)).epsilon(1e-6));
                CHECK((self == 0.0 || self == doctest::Approx(1.0).epsilon(1e-6)));
                for (int j = 0; j < vol.window_size; ++j) {
                    const Offset b{x + pat.window[j].dx, y + pat.window[j].dy};
                    CHECK(std::abs(vol.at(k, j) - correlate_patches_direct(img, a, b, w)) < 1e-5);
                }
            }
        }
    }
}

TEST_CASE("offset maps do not depend on the thread count") {
    const Image img = synth::random_image(40, 30, 26);
    const auto pat = default_pattern();
    const int before = num_threads();
    set_num_threads(1);
    const auto one = build_offset_maps(img, pat, FilterWeights::guided(2, kEps));
    set_num_threads(4);
    const auto four = build_offset_maps(img, pat, FilterWeights::guided(2, kEps));
    set_num_threads(before);
    CHECK(one.maps == four.maps);
    CHECK(remap_to_volume(one, pat, 7, 9).values == remap_to_volume(four, pat, 7, 9).values);
}

TEST_CASE("affine intensity change leaves uniform correlations unchanged") {
    const Image img = synth::random_image(20, 20, 27);
    const Image aff = synth::map_values(img, [](double v) { return 0.6 * v + 0.2; });
    const auto pat = default_pattern();
    const auto a = build_offset_maps(img, pat, FilterWeights::uniform(2));
    const auto b = build_offset_maps(aff, pat, FilterWeights::uniform(2));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.maps.size(); ++i)
        for (std::size_t p = 0; p < a.maps[i].size(); ++p)
            worst = std::max(worst, static_cast<double>(std::abs(a.maps[i][p] - b.maps[i][p])));
    CHECK(worst < 1e-6);
}

TEST_CASE("offset map runtime is independent of the patch size") {
    const Image img = synth::random_image(96, 96, 28);
    const auto pat = default_pattern();
    const auto deltas = pat.volume_deltas();
    auto time_fast = [&](int radius) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto maps = build_offset_maps(img, deltas, 4, FilterWeights::uniform(radius));
        CHECK(maps.maps.size() == deltas.size());
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto time_direct = [&](int radius) {
        const DirectCorrelator direct(img, FilterWeights::uniform(radius), 4, 8);
        const auto t0 = std::chrono::steady_clock::now();
        double sink = 0.0;
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                for (const Offset d : deltas) sink += direct({x, y}, {x + d.dx, y + d.dy});
        CHECK(std::isfinite(sink));
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    time_fast(2);
    double f2 = 1e9, f4 = 1e9, d2 = 1e9, d4 = 1e9;
    for (int rep = 0; rep < 7; ++rep) {
        f2 = std::min(f2, time_fast(2));
        f4 = std::min(f4, time_fast(4));
        d2 = std::min(d2, time_direct(2));
        d4 = std::min(d4, time_direct(4));
    }
    MESSAGE("fast: M_F=5 " << f2 << " s, M_F=9 " << f4 << " s; direct: " << d2 << " s vs " << d4 << " s");
    CHECK(std::abs(f4 - f2) / f2 < 0.10);
    CHECK(d4 / d2 > 2.5);
}

TEST_CASE("dump_offset_maps writes one PFM per displacement plus an index") {
    const auto pat = default_pattern();
    const auto maps = build_offset_maps(synth::random_image(10, 8, 29), pat, FilterWeights::uniform(2));
    const auto dir = std::filesystem::temp_directory_path() / "desca_unit" / "maps";
    std::filesystem::remove_all(dir);
    dump_offset_maps(maps, dir);
    CHECK(std::filesystem::exists(dir / "index.json"));
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) n += e.path().extension() == ".pfm";
    CHECK(n == maps.offsets.size());
    const FloatGrid g = read_pfm(dir / "delta_0_0.pfm");
    CHECK(g.width == maps.stride());
}
