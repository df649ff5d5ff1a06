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

#include "desca/descriptors.hpp"
#include "desca/error.hpp"
#include "desca/field_io.hpp"
#include "desca/parallel.hpp"

#include "oracle.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace desca;

namespace {

const double kEps = 0.03 * 0.03;

SamplingPattern pattern_with_seed(std::uint64_t seed) {
    DescriptorParams p;
    p.seed = seed;
    return build_sampling_pattern(p);
}

ComputeOptions options(FilterWeights w, ComputePath path = ComputePath::Fast, bool normalize = true) {
    ComputeOptions o;
    o.weights = w;
    o.path = path;
    o.normalize = normalize;
    return o;
}

double max_field_diff(const DescriptorField& a, const DescriptorField& b) {
    REQUIRE(a.data.size() == b.data.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, static_cast<double>(std::abs(a.data[i] - b.data[i])));
    return m;
}

double norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

std::vector<double> random_surface(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> s(n);
    for (auto& v : s) v = u(rng);
    return s;
}

// Nested-loop log-polar self-similarity at one pixel.
std::vector<double> lss_oracle(const Image& img, const SamplingPattern& pat, int x, int y) {
    const int r = pat.params.patch_radius();
    std::vector<double> out;
    for (const auto& bin : pat.lss_bins) {
        double best = 0.0;
        for (int m : bin) {
            const Offset j = pat.window[m];
            double ssd = 0.0;
            for (int ty = -r; ty <= r; ++ty)
                for (int tx = -r; tx <= r; ++tx) {
                    const double d = oracle::px(img, x + tx, y + ty) - oracle::px(img, x + j.dx + tx, y + j.dy + ty);
                    ssd += d * d;
                }
            best = std::max(best, std::exp(-ssd / pat.params.sigma_c));
        }
        out.push_back(best);
    }
    double n = 0.0;
    for (double v : out) n += v * v;
    for (double& v : out) v /= std::sqrt(n);
    return out;
}

} // namespace

TEST_CASE("kind names") {
    for (auto k : {DescriptorKind::LSS, DescriptorKind::DASC, DescriptorKind::SiSCA, DescriptorKind::DeSCA})
        CHECK(parse_kind(kind_name(k)) == k);
    CHECK(parse_kind("desca") == DescriptorKind::DeSCA);
    CHECK_FALSE(parse_kind("sift").has_value());
}

TEST_CASE("descriptor lengths") {
    const auto pat = pattern_with_seed(0);
    CHECK(descriptor_length(DescriptorKind::SiSCA, pat) == 416);
    CHECK(descriptor_length(DescriptorKind::DeSCA, pat) == 585);
    CHECK(descriptor_length(DescriptorKind::LSS, pat) == 64);
    CHECK(descriptor_length(DescriptorKind::DASC, pat) == 32);
    DescriptorParams p;
    p.pyramid_levels = 4;
    p.num_kernels = 20;
    const auto deeper = build_sampling_pattern(p);
    CHECK(descriptor_length(DescriptorKind::DeSCA, deeper) == (20 + 29) * 29);
}

TEST_CASE("gating") {
    CHECK(gate(1.0, 0.5) == 1.0);
    CHECK(gate(-1.0, 0.5) == 1.0);
    CHECK(gate(0.0, 0.5) == doctest::Approx(0.1353352832366127).epsilon(1e-15));
    std::mt19937 rng(1);
    auto s = random_surface(200, rng);
    std::sort(s.begin(), s.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (std::size_t i = 1; i < s.size(); ++i)
        if (std::abs(s[i]) > std::abs(s[i - 1])) CHECK(gate(s[i], 0.5) > gate(s[i - 1], 0.5));
}

TEST_CASE("cspp_max_pool") {
    const auto pat = pattern_with_seed(0);
    const std::size_t wn = pat.window.size();
    SUBCASE("constant surface") {
        const auto out = cspp_max_pool(std::vector<double>(wn, 0.37), pat.bins);
        for (double v : out) CHECK(v == 0.37);
    }
    SUBCASE("nested-loop oracle, root = max of quadrants, parents dominate children") {
        std::mt19937 rng(2);
        for (int t = 0; t < 50; ++t) {
            const auto s = random_surface(wn, rng);
            const auto out = cspp_max_pool(s, pat.bins);
            REQUIRE(out.size() == 13);
            for (std::size_t u = 0; u < pat.bins.size(); ++u) {
                double m = -1.0;
                for (std::size_t j = 0; j < wn; ++j) {
                    const auto& mem = pat.bins[u].members;
                    if (std::find(mem.begin(), mem.end(), static_cast<int>(j)) != mem.end()) m = std::max(m, s[j]);
                }
                CHECK(out[u] == m);
                if (u > 0) CHECK(out[pat.bins[u].parent] >= out[u]);
            }
            CHECK(out[0] == std::max({out[1], out[2], out[3], out[4]}));
        }
    }
    SUBCASE("empty bin pools to -1") {
        auto bins = pat.bins;
        bins[5].members.clear();
        const auto out = cspp_max_pool(std::vector<double>(wn, 0.5), bins);
        CHECK(out[5] == -1.0);
    }
}

TEST_CASE("aggregate_hierarchy") {
    const auto pat = pattern_with_seed(3);
    std::mt19937 rng(3);
    SelfConvVolume vol;
    vol.num_kernels = static_cast<int>(pat.kernels.size());
    vol.window_size = static_cast<int>(pat.window.size());
    vol.values = random_surface(static_cast<std::size_t>(vol.num_kernels) * vol.window_size, rng);
    const auto h = aggregate_hierarchy(vol, pat);
    REQUIRE(h.member_counts.size() == pat.bins.size());
    CHECK(h.member_counts[0] == vol.num_kernels);
    for (std::size_t v = 0; v < pat.bins.size(); ++v) {
        std::vector<double> avg(vol.window_size, 0.0);
        int n = 0;
        for (int k = 0; k < vol.num_kernels; ++k) {
            const auto& mem = pat.bins[v].members;
            if (std::find(mem.begin(), mem.end(), pat.window_index(pat.kernels[k])) == mem.end()) continue;
            for (int j = 0; j < vol.window_size; ++j) avg[j] += vol.at(k, j);
            ++n;
        }
        CHECK(h.member_counts[v] == n);
        for (int j = 0; j < vol.window_size; ++j) {
            const double expect = n ? avg[j] / n : 0.0;
            CHECK(std::abs(h.surface(static_cast<int>(v))[j] - expect) < 1e-7);
        }
        if (n == 1) {
            for (int k = 0; k < vol.num_kernels; ++k) {
                const auto& mem = pat.bins[v].members;
                if (std::find(mem.begin(), mem.end(), pat.window_index(pat.kernels[k])) == mem.end()) continue;
                for (int j = 0; j < vol.window_size; ++j) CHECK(h.surface(static_cast<int>(v))[j] == vol.at(k, j));
            }
        }
    }
}

TEST_CASE("LSS") {
    const auto pat = pattern_with_seed(0);
    SUBCASE("constant image is uniform") {
        const auto f = lss_descriptor(synth::constant_image(12, 10, 0.3), pat);
        CHECK(f.length == 64);
        for (float v : f.data) CHECK(v == doctest::Approx(1.0 / 8.0).epsilon(1e-6));
    }
    SUBCASE("matches the nested-loop oracle") {
        const Image img = synth::random_image(24, 24, 31);
        const auto f = lss_descriptor(img, pat);
        double worst = 0.0;
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x) {
                const auto expect = lss_oracle(img, pat, x, y);
                for (int l = 0; l < 64; ++l) worst = std::max(worst, std::abs(expect[l] - f.at(x, y)[l]));
            }
        CHECK(worst < 1e-6);
    }
    SUBCASE("an isolated bright pixel: overlapping neighbours look less alike than distant ones") {
        // Near offsets see the impulse twice (SSD 2h^2); beyond the patch
        // footprint it appears only once (SSD h^2).
        Image img = synth::constant_image(21, 21, 0.2);
        const double h = 0.5;
        img.at(10, 10) += h;
        ComputeOptions raw;
        raw.normalize = false;
        const auto f = lss_descriptor(img, pat, raw);
        const auto d = f.at(10, 10);
        for (std::size_t l = 0; l < pat.lss_bins.size(); ++l) {
            bool all_near = true, all_far = true;
            for (int m : pat.lss_bins[l]) {
                const int c = pat.window[m].chebyshev();
                all_near = all_near && c <= 2;
                all_far = all_far && c > 2;
            }
            if (all_near) CHECK(d[l] == doctest::Approx(std::exp(-2 * h * h / 0.5)).epsilon(1e-6));
            if (all_far) CHECK(d[l] == doctest::Approx(std::exp(-h * h / 0.5)).epsilon(1e-6));
        }
    }
}

TEST_CASE("DASC") {
    const auto pat = pattern_with_seed(4);
    SUBCASE("constant image") {
        ComputeOptions raw = options(FilterWeights::guided(2, kEps), ComputePath::Fast, false);
        const auto f = dasc_descriptor(synth::constant_image(10, 10, 0.6), pat, raw);
        for (float v : f.data) CHECK(v == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
        const auto g = dasc_descriptor(synth::constant_image(10, 10, 0.6), pat);
        for (float v : g.data) CHECK(v == doctest::Approx(1.0 / std::sqrt(32.0)).epsilon(1e-6));
    }
    SUBCASE("pairs are never degenerate") {
        for (const auto& [s, t] : pat.dasc_pairs) CHECK(s != t);
    }
    SUBCASE("matches direct evaluation") {
        const Image img = synth::random_image(24, 24, 32);
        for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
            const auto f = dasc_descriptor(img, pat, options(w, ComputePath::Fast, false));
            double worst = 0.0;
            for (int y = 0; y < 24; ++y)
                for (int x = 0; x < 24; ++x)
                    for (std::size_t l = 0; l < pat.dasc_pairs.size(); ++l) {
                        const auto [s, t] = pat.dasc_pairs[l];
                        const double c = correlate_patches_direct(img, {x + s.dx, y + s.dy}, {x + t.dx, y + t.dy}, w);
                        worst = std::max(worst, std::abs(gate(c, 0.5) - f.at(x, y)[l]));
                    }
            CHECK(worst < 1e-5);
            const auto direct = dasc_descriptor(img, pat, options(w, ComputePath::Direct, false));
            CHECK(max_field_diff(f, direct) < 1e-5);
        }
    }
}

TEST_CASE("SiSCA and DeSCA against the nested-loop oracle") {
    const Image img = synth::random_image(32, 32, 33);
    const auto pat = pattern_with_seed(6);
    for (bool deep : {false, true}) {
        const auto kind = deep ? DescriptorKind::DeSCA : DescriptorKind::SiSCA;
        SUBCASE(deep ? "DeSCA uniform" : "SiSCA uniform") {
            const auto f = compute_descriptor(kind, img, pat, options(FilterWeights::uniform(2)));
            double worst = 0.0;
            for (int y = 0; y < 32; y += 3)
                for (int x = 0; x < 32; x += 3) {
                    const auto expect = oracle::self_conv_descriptor(img, pat, oracle::Weights::Uniform, kEps, x, y, deep);
                    REQUIRE(expect.size() == static_cast<std::size_t>(f.length));
                    for (int l = 0; l < f.length; ++l) worst = std::max(worst, std::abs(expect[l] - f.at(x, y)[l]));
                }
            CHECK(worst < 1e-5);
        }
        SUBCASE(deep ? "DeSCA guided" : "SiSCA guided") {
            const auto f = compute_descriptor(kind, img, pat, options(FilterWeights::guided(2, kEps)));
            double worst = 0.0;
            for (auto [x, y] : {std::pair{0, 0}, {16, 16}, {31, 5}, {7, 29}}) {
                const auto expect = oracle::self_conv_descriptor(img, pat, oracle::Weights::Guided, kEps, x, y, deep);
                for (int l = 0; l < f.length; ++l) worst = std::max(worst, std::abs(expect[l] - f.at(x, y)[l]));
            }
            CHECK(worst < 1e-5);
        }
    }
}

TEST_CASE("fast and direct descriptor paths agree") {
    const Image img = synth::random_image(20, 18, 34);
    const auto pat = pattern_with_seed(7);
    for (auto kind : {DescriptorKind::SiSCA, DescriptorKind::DeSCA})
        for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
            const auto fast = compute_descriptor(kind, img, pat, options(w));
            const auto direct = compute_descriptor(kind, img, pat, options(w, ComputePath::Direct));
            CHECK(max_field_diff(fast, direct) < 1e-5);
        }
}

TEST_CASE("constant image yields uniform SiSCA/DeSCA descriptors") {
    const auto pat = pattern_with_seed(0);
    for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
        const auto raw = desca_descriptor(synth::constant_image(9, 9, 0.5), pat, options(w, ComputePath::Fast, false));
        for (float v : raw.data) CHECK(v == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
        const auto f = desca_descriptor(synth::constant_image(9, 9, 0.5), pat, options(w));
        CHECK(f.length == 585);
        for (float v : f.data) CHECK(v == doctest::Approx(1.0 / std::sqrt(585.0)).epsilon(1e-6));
    }
}

TEST_CASE("normalization and range") {
    const Image img = synth::blob_texture(28, 24, 35);
    const auto pat = pattern_with_seed(8);
    for (auto kind : {DescriptorKind::LSS, DescriptorKind::DASC, DescriptorKind::SiSCA, DescriptorKind::DeSCA}) {
        const auto raw = compute_descriptor(kind, img, pat, options(FilterWeights::guided(2, kEps), ComputePath::Fast, false));
        const auto f = compute_descriptor(kind, img, pat, options(FilterWeights::guided(2, kEps)));
        for (float v : raw.data) {
            CHECK(v > 0.0f);
            CHECK(v <= 1.0f);
        }
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) CHECK(norm(f.at(x, y)) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("the SiSCA block is a prefix of DeSCA") {
    const Image img = synth::random_image(16, 16, 36);
    const auto pat = pattern_with_seed(9);
    const auto s = sisca_descriptor(img, pat, options(FilterWeights::guided(2, kEps), ComputePath::Fast, false));
    const auto d = desca_descriptor(img, pat, options(FilterWeights::guided(2, kEps), ComputePath::Fast, false));
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int l = 0; l < s.length; ++l) CHECK(s.at(x, y)[l] == d.at(x, y)[l]);
}

TEST_CASE("affine intensity invariance with uniform weights") {
    const Image img = synth::blob_texture(30, 26, 37);
    const Image aff = synth::map_values(img, [](double v) { return 0.6 * v + 0.2; });
    const auto pat = pattern_with_seed(10);
    for (auto kind : {DescriptorKind::DASC, DescriptorKind::SiSCA, DescriptorKind::DeSCA}) {
        const auto a = compute_descriptor(kind, img, pat, options(FilterWeights::uniform(2)));
        const auto b = compute_descriptor(kind, aff, pat, options(FilterWeights::uniform(2)));
        CHECK(max_field_diff(a, b) < 1e-5);
    }
}

TEST_CASE("translation equivariance") {
    const Image scene = synth::blob_texture(43, 32, 38);
    const Image orig = synth::crop(scene, 3, 0, 40, 32);
    const Image moved = synth::crop(scene, 0, 0, 40, 32); // moved(x) = orig(x - 3)
    const auto pat = pattern_with_seed(11);
    for (auto w : {FilterWeights::uniform(2), FilterWeights::guided(2, kEps)}) {
        const auto a = desca_descriptor(orig, pat, options(w));
        const auto b = desca_descriptor(moved, pat, options(w));
        double worst = 0.0;
        const int m = 14;
        for (int y = m; y < 32 - m; ++y)
            for (int x = m + 3; x < 40 - m; ++x)
                for (int l = 0; l < a.length; ++l)
                    worst = std::max(worst, static_cast<double>(std::abs(b.at(x, y)[l] - a.at(x - 3, y)[l])));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("descriptor fields do not depend on the thread count") {
    const Image img = synth::blob_texture(30, 20, 39);
    const auto pat = pattern_with_seed(12);
    const int before = num_threads();
    for (auto kind : {DescriptorKind::LSS, DescriptorKind::DASC, DescriptorKind::DeSCA}) {
        set_num_threads(1);
        const auto one = compute_descriptor(kind, img, pat, options(FilterWeights::guided(2, kEps)));
        set_num_threads(3);
        const auto three = compute_descriptor(kind, img, pat, options(FilterWeights::guided(2, kEps)));
        CHECK(one.data == three.data);
    }
    set_num_threads(before);
}

TEST_CASE("field file round-trip") {
    const auto pat = pattern_with_seed(13);
    const auto f = desca_descriptor(synth::random_image(7, 5, 40), pat);
    std::stringstream buf;
    write_field(buf, f);
    CHECK(buf.str().size() == 4 + 2 + 1 + 4 + 4 + 4 + 8 + f.data.size() * 4);
    CHECK(buf.str().substr(0, 4) == "DSCA");
    const auto back = read_field(buf);
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    CHECK(back.length == 585);
    CHECK(back.kind == DescriptorKind::DeSCA);
    CHECK(back.params.seed == 13);
    CHECK(back.data == f.data);

    std::stringstream bad("DSCB" + buf.str().substr(4));
    CHECK_THROWS_AS(read_field(bad), FormatError);
    std::stringstream truncated(buf.str().substr(0, 40));
    CHECK_THROWS_AS(read_field(truncated), FormatError);

    const auto side = field_sidecar(f, pat, FilterWeights::guided(2, kEps));
    CHECK(side["params"].get<DescriptorParams>() == pat.params);
    CHECK(side["pattern_digest"].get<std::string>().size() == 16);
}
