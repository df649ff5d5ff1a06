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

#pragma once

#include "desca/filter.hpp"
#include "desca/geometry.hpp"
#include "desca/image.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace desca {

/// Variance below which a patch counts as flat; its correlations are 0.
inline constexpr double kDegenerateVariance = 1e-10;

/// Dense correlation planes: for displacement Δ, the plane stores
/// C(F_p, F_{p+Δ}) for every anchor p, weights centered on p.
///
/// Planes cover the image plus `anchor_margin` pixels on every side so anchors
/// pushed outside the image by a kernel offset can be looked up directly.
struct OffsetCorrelationMaps {
    int width = 0;
    int height = 0;
    int anchor_margin = 0;
    std::vector<Offset> offsets;
    std::vector<std::vector<float>> maps;

    [[nodiscard]] int stride() const noexcept { return width + 2 * anchor_margin; }
    [[nodiscard]] int plane_index(Offset delta) const;
    [[nodiscard]] float at(int plane, int x, int y) const {
        return maps[plane][static_cast<std::size_t>(y + anchor_margin) * stride() +
                           (x + anchor_margin)];
    }
};

/// Builds one correlation plane per displacement in `deltas` (deduplicated).
/// Parallel over planes; results do not depend on the thread count.
OffsetCorrelationMaps build_offset_maps(const Image& img, std::span<const Offset> deltas,
                                        int anchor_margin, const FilterWeights& weights);

/// Planes needed for the self-convolution volume of `pattern`.
OffsetCorrelationMaps build_offset_maps(const Image& img, const SamplingPattern& pattern,
                                        const FilterWeights& weights);

/// Per-pixel N_K × |R| self-convolution matrix, entry (k, j) = C(F_{i+r_k}, F_{i+j}).
struct SelfConvVolume {
    int num_kernels = 0;
    int window_size = 0;
    std::vector<double> values;

    [[nodiscard]] double at(int k, int j) const {
        return values[static_cast<std::size_t>(k) * window_size + j];
    }
    double& at(int k, int j) { return values[static_cast<std::size_t>(k) * window_size + j]; }
    [[nodiscard]] std::span<const double> surface(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * window_size,
                static_cast<std::size_t>(window_size)};
    }
};

/// Index mapping from precomputed planes to the volume at pixel (x, y).
SelfConvVolume remap_to_volume(const OffsetCorrelationMaps& maps, const SamplingPattern& pattern,
                               int x, int y);

/// Precomputed (plane, anchor) lookup for every volume entry; shared by all pixels.
struct VolumeIndex {
    int window_size = 0;
    std::vector<int> plane;      ///< per (k, j)
    std::vector<Offset> anchor;  ///< per k
};
VolumeIndex make_volume_index(const OffsetCorrelationMaps& maps, const SamplingPattern& pattern);
void remap_into(const OffsetCorrelationMaps& maps, const VolumeIndex& index, int x, int y,
                std::span<double> out);

/// Brute-force weighted zero-mean NCC between patches centered at `a` and `b`,
/// with weights centered on `a`. Flat patches give 0; results are clamped to [-1,1].
double correlate_patches_direct(const Image& img, Offset a, Offset b, const FilterWeights& weights);

/// Reusable brute-force correlator: caches the padded image and (in guided mode)
/// the kernel rows for every anchor within `anchor_margin` of the image.
class DirectCorrelator {
public:
    DirectCorrelator(const Image& img, const FilterWeights& weights, int anchor_margin,
                     int max_displacement);

    [[nodiscard]] double operator()(Offset a, Offset b) const;

private:
    [[nodiscard]] std::span<const double> weights_at(Offset a, std::vector<double>& scratch) const;

    const Image* image_ = nullptr;
    FilterWeights weights_;
    int anchor_margin_ = 0;
    int canvas_margin_ = 0;
    Plane canvas_;
    std::vector<double> uniform_row_;
    std::vector<double> guided_rows_; // (W+2A)(H+2A) rows of (4r+1)^2 weights
};

/// Debug dump: one PFM per plane plus an index.json listing the offsets.
void dump_offset_maps(const OffsetCorrelationMaps& maps, const std::filesystem::path& dir);

} // namespace desca
