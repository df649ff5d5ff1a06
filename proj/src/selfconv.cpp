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

#include "desca/selfconv.hpp"

#include "desca/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

namespace desca {

namespace {

inline double finish_correlation(double cov, double var_a, double var_b) {
    if (var_a < kDegenerateVariance || var_b < kDegenerateVariance) return 0.0;
    return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

int max_extent(std::span<const Offset> deltas) {
    int m = 0;
    for (const auto& d : deltas) m = std::max(m, d.chebyshev());
    return m;
}

// Product plane g(q) = src(q) * src(q + delta) (or just src(q + delta) when
// `with_self` is false, squared when `square` is true) over the margin `margin`.
Plane shifted_plane(const Plane& src, int width, int height, int margin, Offset delta,
                    bool with_self, bool square) {
    Plane out(-margin, -margin, width + 2 * margin, height + 2 * margin);
    for (int y = out.y0; y < out.y0 + out.height; ++y) {
        const double* self = &src.data[static_cast<std::size_t>(y - src.y0) * src.width + (out.x0 - src.x0)];
        const double* moved = &src.data[static_cast<std::size_t>(y + delta.dy - src.y0) * src.width +
                                        (out.x0 + delta.dx - src.x0)];
        double* dst = &out.data[static_cast<std::size_t>(y - out.y0) * out.width];
        for (int x = 0; x < out.width; ++x) {
            const double m = moved[x];
            dst[x] = with_self ? self[x] * m : (square ? m * m : m);
        }
    }
    return out;
}

} // namespace

int OffsetCorrelationMaps::plane_index(Offset delta) const {
    const auto it = std::lower_bound(offsets.begin(), offsets.end(), delta);
    if (it == offsets.end() || *it != delta) return -1;
    return static_cast<int>(it - offsets.begin());
}

OffsetCorrelationMaps build_offset_maps(const Image& img, std::span<const Offset> deltas,
                                        int anchor_margin, const FilterWeights& weights) {
    weights.validate();
    DESCA_REQUIRE(!img.empty(), "build_offset_maps: empty image");
    DESCA_REQUIRE(anchor_margin >= 0, "anchor margin must be non-negative");

    OffsetCorrelationMaps maps;
    maps.width = img.width;
    maps.height = img.height;
    maps.anchor_margin = anchor_margin;
    {
        std::set<Offset> unique(deltas.begin(), deltas.end());
        maps.offsets.assign(unique.begin(), unique.end());
    }
    const std::size_t plane_size =
        static_cast<std::size_t>(maps.stride()) * (img.height + 2 * anchor_margin);
    maps.maps.assign(maps.offsets.size(), std::vector<float>(plane_size, 0.0f));

    const int A = anchor_margin;
    const int r = weights.radius;
    const int reach = weights.reach();
    const int dmax = max_extent(maps.offsets);
    const Plane canvas = make_canvas(img, A + dmax + reach);
    const int n_planes = static_cast<int>(maps.offsets.size());
    const int W = img.width;
    const int H = img.height;

    if (weights.mode == FilterWeights::Mode::Uniform) {
        Plane sq(canvas.x0, canvas.y0, canvas.width, canvas.height);
        for (std::size_t i = 0; i < sq.data.size(); ++i) sq.data[i] = canvas.data[i] * canvas.data[i];
        const Plane mean_f = box_mean_valid(canvas, r);   // margin A + dmax
        const Plane mean_f2 = box_mean_valid(sq, r);

#pragma omp parallel for schedule(dynamic)
        for (int d = 0; d < n_planes; ++d) {
            const Offset delta = maps.offsets[d];
            const Plane prod = shifted_plane(canvas, W, H, A + r, delta, true, false);
            const Plane mean_ff = box_mean_valid(prod, r); // margin A
            auto& out = maps.maps[d];
            for (int y = -A; y < H + A; ++y) {
                float* dst = &out[static_cast<std::size_t>(y + A) * maps.stride()];
                for (int x = -A; x < W + A; ++x) {
                    const double ga = mean_f.at(x, y);
                    const double gb = mean_f.at(x + delta.dx, y + delta.dy);
                    const double va = mean_f2.at(x, y) - ga * ga;
                    const double vb = mean_f2.at(x + delta.dx, y + delta.dy) - gb * gb;
                    dst[x + A] = finish_correlation(mean_ff.at(x, y) - ga * gb, va, vb);
                }
            }
        }
        return maps;
    }

    // Guided weights: every weighted mean is a self-guided filtering with the
    // image as guide, evaluated at the anchor.
    const int inner = A + 2 * r;
    const Plane guide = crop_to_margin(canvas, W, H, inner);
    const GuideStats stats = make_guide_stats(guide, r, weights.epsilon);
    Plane guide_sq(guide.x0, guide.y0, guide.width, guide.height);
    for (std::size_t i = 0; i < guide.data.size(); ++i) guide_sq.data[i] = guide.data[i] * guide.data[i];
    const Plane g_f = guided_mean_valid(guide, stats);     // margin A
    const Plane g_f2 = guided_mean_valid(guide_sq, stats);

#pragma omp parallel for schedule(dynamic)
    for (int d = 0; d < n_planes; ++d) {
        const Offset delta = maps.offsets[d];
        const Plane g_ff = guided_mean_valid(shifted_plane(canvas, W, H, inner, delta, true, false), stats);
        const Plane g_s = guided_mean_valid(shifted_plane(canvas, W, H, inner, delta, false, false), stats);
        const Plane g_s2 = guided_mean_valid(shifted_plane(canvas, W, H, inner, delta, false, true), stats);
        auto& out = maps.maps[d];
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double ga = g_f.data[i];
            const double gb = g_s.data[i];
            out[i] = finish_correlation(g_ff.data[i] - ga * gb, g_f2.data[i] - ga * ga,
                                        g_s2.data[i] - gb * gb);
        }
    }
    return maps;
}

OffsetCorrelationMaps build_offset_maps(const Image& img, const SamplingPattern& pattern,
                                        const FilterWeights& weights) {
    const auto deltas = pattern.volume_deltas();
    return build_offset_maps(img, deltas, pattern.params.support_radius(), weights);
}

VolumeIndex make_volume_index(const OffsetCorrelationMaps& maps, const SamplingPattern& pattern) {
    VolumeIndex index;
    index.window_size = static_cast<int>(pattern.window.size());
    index.anchor = pattern.kernels;
    index.plane.resize(pattern.kernels.size() * pattern.window.size());
    for (std::size_t k = 0; k < pattern.kernels.size(); ++k) {
        DESCA_REQUIRE(pattern.kernels[k].chebyshev() <= maps.anchor_margin,
                      "kernel offset exceeds the map anchor margin");
        for (std::size_t j = 0; j < pattern.window.size(); ++j) {
            const int p = maps.plane_index(pattern.window[j] - pattern.kernels[k]);
            DESCA_REQUIRE(p >= 0, "offset maps lack a displacement required by the pattern");
            index.plane[k * pattern.window.size() + j] = p;
        }
    }
    return index;
}

void remap_into(const OffsetCorrelationMaps& maps, const VolumeIndex& index, int x, int y,
                std::span<double> out) {
    const std::size_t wn = static_cast<std::size_t>(index.window_size);
    const int stride = maps.stride();
    for (std::size_t k = 0; k < index.anchor.size(); ++k) {
        const Offset a = index.anchor[k];
        const std::size_t pos = static_cast<std::size_t>(y + a.dy + maps.anchor_margin) * stride +
                                (x + a.dx + maps.anchor_margin);
        const int* planes = &index.plane[k * wn];
        double* dst = &out[k * wn];
        for (std::size_t j = 0; j < wn; ++j) dst[j] = maps.maps[planes[j]][pos];
    }
}

SelfConvVolume remap_to_volume(const OffsetCorrelationMaps& maps, const SamplingPattern& pattern,
                               int x, int y) {
    DESCA_REQUIRE(x >= 0 && y >= 0 && x < maps.width && y < maps.height,
                  "remap_to_volume: pixel outside the image");
    const VolumeIndex index = make_volume_index(maps, pattern);
    SelfConvVolume vol;
    vol.num_kernels = static_cast<int>(pattern.kernels.size());
    vol.window_size = index.window_size;
    vol.values.resize(static_cast<std::size_t>(vol.num_kernels) * vol.window_size);
    remap_into(maps, index, x, y, vol.values);
    return vol;
}

namespace {

std::vector<double> uniform_row(int radius) {
    const int side = 2 * radius + 1;
    return std::vector<double>(static_cast<std::size_t>(side) * side, 1.0 / (side * side));
}

// Weighted NCC with weights `w` over a side x side footprint centered on
// patch a. `pa` and `pb` point at the top-left sample of each footprint.
double weighted_ncc(std::span<const double> w, int side, const double* pa, const double* pb,
                    std::size_t stride) {
    double ga = 0.0;
    double gb = 0.0;
    for (int ty = 0; ty < side; ++ty) {
        const double* wr = w.data() + static_cast<std::size_t>(ty) * side;
        const double* ra = pa + ty * stride;
        const double* rb = pb + ty * stride;
        for (int tx = 0; tx < side; ++tx) {
            ga += wr[tx] * ra[tx];
            gb += wr[tx] * rb[tx];
        }
    }
    double cov = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (int ty = 0; ty < side; ++ty) {
        const double* wr = w.data() + static_cast<std::size_t>(ty) * side;
        const double* ra = pa + ty * stride;
        const double* rb = pb + ty * stride;
        for (int tx = 0; tx < side; ++tx) {
            const double da = ra[tx] - ga;
            const double db = rb[tx] - gb;
            cov += wr[tx] * da * db;
            va += wr[tx] * da * da;
            vb += wr[tx] * db * db;
        }
    }
    return finish_correlation(cov, va, vb);
}

// Same, reading both footprints from the replicate-padded image.
double weighted_ncc_clamped(const Image& img, std::span<const double> w, int reach, Offset a,
                            Offset b) {
    const int side = 2 * reach + 1;
    std::vector<double> buf(2 * w.size());
    double* fa = buf.data();
    double* fb = buf.data() + w.size();
    for (int ty = 0; ty < side; ++ty)
        for (int tx = 0; tx < side; ++tx) {
            fa[ty * side + tx] = img.clamped(a.dx - reach + tx, a.dy - reach + ty);
            fb[ty * side + tx] = img.clamped(b.dx - reach + tx, b.dy - reach + ty);
        }
    return weighted_ncc(w, side, fa, fb, static_cast<std::size_t>(side));
}

} // namespace

double correlate_patches_direct(const Image& img, Offset a, Offset b, const FilterWeights& weights) {
    weights.validate();
    const std::vector<double> w =
        weights.mode == FilterWeights::Mode::Uniform
            ? uniform_row(weights.radius)
            : guided_kernel_row(img, a.dx, a.dy, weights.radius, weights.epsilon);
    return weighted_ncc_clamped(img, w, weights.reach(), a, b);
}

DirectCorrelator::DirectCorrelator(const Image& img, const FilterWeights& weights, int anchor_margin,
                                   int max_displacement)
    : image_(&img), weights_(weights), anchor_margin_(anchor_margin) {
    weights_.validate();
    canvas_margin_ = anchor_margin + max_displacement + weights_.reach();
    canvas_ = make_canvas(img, canvas_margin_);
    if (weights_.mode == FilterWeights::Mode::Uniform) {
        uniform_row_ = uniform_row(weights_.radius);
        return;
    }
    const int side = 2 * weights_.reach() + 1;
    const std::size_t row_len = static_cast<std::size_t>(side) * side;
    const int aw = img.width + 2 * anchor_margin;
    const int ah = img.height + 2 * anchor_margin;
    guided_rows_.resize(static_cast<std::size_t>(aw) * ah * row_len);
#pragma omp parallel for schedule(dynamic)
    for (int y = 0; y < ah; ++y) {
        for (int x = 0; x < aw; ++x) {
            const auto row = guided_kernel_row(img, x - anchor_margin, y - anchor_margin,
                                               weights_.radius, weights_.epsilon);
            std::copy(row.begin(), row.end(),
                      guided_rows_.begin() +
                          static_cast<std::ptrdiff_t>((static_cast<std::size_t>(y) * aw + x) * row_len));
        }
    }
}

std::span<const double> DirectCorrelator::weights_at(Offset a, std::vector<double>& scratch) const {
    if (weights_.mode == FilterWeights::Mode::Uniform) return uniform_row_;
    const int A = anchor_margin_;
    const int aw = image_->width + 2 * A;
    if (a.dx >= -A && a.dy >= -A && a.dx < image_->width + A && a.dy < image_->height + A) {
        const int side = 2 * weights_.reach() + 1;
        const std::size_t row_len = static_cast<std::size_t>(side) * side;
        return {guided_rows_.data() + (static_cast<std::size_t>(a.dy + A) * aw + (a.dx + A)) * row_len,
                row_len};
    }
    scratch = guided_kernel_row(*image_, a.dx, a.dy, weights_.radius, weights_.epsilon);
    return scratch;
}

double DirectCorrelator::operator()(Offset a, Offset b) const {
    std::vector<double> scratch;
    const auto w = weights_at(a, scratch);
    const int reach = weights_.reach();
    const int m = canvas_margin_ - reach;
    const bool inside = a.dx >= -m && a.dy >= -m && b.dx >= -m && b.dy >= -m &&
                        a.dx < image_->width + m && b.dx < image_->width + m &&
                        a.dy < image_->height + m && b.dy < image_->height + m;
    if (inside) {
        return weighted_ncc(w, 2 * reach + 1, canvas_.ptr(a.dx - reach, a.dy - reach),
                            canvas_.ptr(b.dx - reach, b.dy - reach),
                            static_cast<std::size_t>(canvas_.width));
    }
    return weighted_ncc_clamped(*image_, w, reach, a, b);
}

void dump_offset_maps(const OffsetCorrelationMaps& maps, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    index["width"] = maps.width;
    index["height"] = maps.height;
    index["anchor_margin"] = maps.anchor_margin;
    index["planes"] = nlohmann::json::array();
    for (std::size_t d = 0; d < maps.offsets.size(); ++d) {
        const Offset o = maps.offsets[d];
        const std::string name = "delta_" + std::to_string(o.dx) + "_" + std::to_string(o.dy) + ".pfm";
        FloatGrid g;
        g.width = maps.stride();
        g.height = maps.height + 2 * maps.anchor_margin;
        g.data = maps.maps[d];
        write_pfm(dir / name, g);
        index["planes"].push_back({{"dx", o.dx}, {"dy", o.dy}, {"file", name}});
    }
    std::ofstream out(dir / "index.json");
    out << index.dump(2) << '\n';
}

} // namespace desca
