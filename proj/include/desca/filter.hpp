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

#include "desca/image.hpp"

#include <vector>

namespace desca {

/// Edge-aware weights ω used by every weighted mean in the toolkit.
///
/// `radius` is floor(M_F/2). Uniform weights are 1/(2r+1)^2 over the patch;
/// guided weights are the (implicit) kernel of a self-guided filter with
/// smoothness `epsilon`, which spans 4r+1 pixels.
struct FilterWeights {
    enum class Mode { Uniform, Guided };

    Mode mode = Mode::Guided;
    int radius = 2;
    double epsilon = 0.03 * 0.03;

    static FilterWeights uniform(int radius) { return {Mode::Uniform, radius, 0.0}; }
    static FilterWeights guided(int radius, double epsilon) { return {Mode::Guided, radius, epsilon}; }

    /// Largest |t| such that ω_{p,p+t} can be non-zero.
    [[nodiscard]] int reach() const noexcept { return mode == Mode::Guided ? 2 * radius : radius; }
    void validate() const;
};

/// A rectangular window of samples placed in image coordinates.
///
/// (x0, y0) is the image coordinate of the first sample; negative values mean the
/// plane extends into the replicate-padded border.
struct Plane {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int x0_, int y0_, int w, int h, double fill = 0.0);

    double& at(int x, int y) {
        return data[static_cast<std::size_t>(y - y0) * width + (x - x0)];
    }
    [[nodiscard]] double at(int x, int y) const {
        return data[static_cast<std::size_t>(y - y0) * width + (x - x0)];
    }
    [[nodiscard]] const double* ptr(int x, int y) const {
        return data.data() + static_cast<std::size_t>(y - y0) * width + (x - x0);
    }
    /// Margin by which this plane exceeds a width×height image on every side.
    [[nodiscard]] int margin() const noexcept { return -x0; }
};

/// Replicate-padded copy of `img` covering [-margin, W+margin) × [-margin, H+margin).
Plane make_canvas(const Image& img, int margin);
/// Crops a plane to the given margin around the image (must be contained in `p`).
Plane crop_to_margin(const Plane& p, int image_width, int image_height, int margin);
Image plane_to_image(const Plane& p);

/// Mean over (2r+1)^2 windows for every position whose window lies inside `p`.
/// The result shrinks by `radius` on every side. Integral-image based: O(1) per
/// sample regardless of radius.
Plane box_mean_valid(const Plane& p, int radius);

/// Window statistics of a guide, reused across many guided filterings.
struct GuideStats {
    int radius = 0;
    double epsilon = 0.0;
    Plane guide;    ///< guide samples, margin m
    Plane mean;     ///< box mean of the guide, margin m - r
    Plane inv_var;  ///< 1 / (var + eps), margin m - r
};

GuideStats make_guide_stats(const Plane& guide, int radius, double epsilon);

/// Single-channel guided filter of `input` (same extent as the guide in `stats`).
/// The result shrinks by 2r on every side.
Plane guided_mean_valid(const Plane& input, const GuideStats& stats);

/// Weighted mean with uniform weights, replicate-padded: same size as `img`.
Image box_mean(const Image& img, int radius);

/// Guided filter a = cov(I,p)/(var(I)+eps), b = mean(p) - a mean(I),
/// q = mean(a) I + mean(b), with replicate-padded borders.
Image guided_mean(const Image& img, const Image& guide, int radius, double epsilon);

/// Explicit guided-filter kernel row ω_{p,·} of the replicate-padded guide,
/// laid out over offsets t ∈ [-2r, 2r]^2 in row-major order. Rows sum to 1.
///
/// W_pq = 1/n^2 Σ_{k: p,q ∈ w_k} (1 + (I_p - μ_k)(I_q - μ_k) / (σ_k^2 + ε)).
std::vector<double> guided_kernel_row(const Image& guide, int px, int py, int radius,
                                      double epsilon);

} // namespace desca
