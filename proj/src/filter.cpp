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

#include "desca/filter.hpp"

#include "desca/error.hpp"

#include <algorithm>
#include <vector>

namespace desca {

void FilterWeights::validate() const {
    DESCA_REQUIRE(radius >= 1, "filter radius must be >= 1");
    if (mode == Mode::Guided) DESCA_REQUIRE(epsilon > 0.0, "guided epsilon must be > 0");
}

Plane::Plane(int x0_, int y0_, int w, int h, double fill)
    : x0(x0_), y0(y0_), width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

Plane make_canvas(const Image& img, int margin) {
    DESCA_REQUIRE(margin >= 0 && !img.empty(), "make_canvas: bad input");
    Plane p(-margin, -margin, img.width + 2 * margin, img.height + 2 * margin);
    for (int y = 0; y < p.height; ++y) {
        double* row = p.data.data() + static_cast<std::size_t>(y) * p.width;
        for (int x = 0; x < p.width; ++x) row[x] = img.clamped(x - margin, y - margin);
    }
    return p;
}

Plane crop_to_margin(const Plane& p, int image_width, int image_height, int margin) {
    DESCA_REQUIRE(p.x0 <= -margin && p.y0 <= -margin &&
                      p.x0 + p.width >= image_width + margin &&
                      p.y0 + p.height >= image_height + margin,
                  "crop_to_margin: plane does not cover the requested region");
    Plane out(-margin, -margin, image_width + 2 * margin, image_height + 2 * margin);
    for (int y = out.y0; y < out.y0 + out.height; ++y) {
        const double* src = &p.data[static_cast<std::size_t>(y - p.y0) * p.width + (out.x0 - p.x0)];
        std::copy_n(src, out.width, &out.at(out.x0, y));
    }
    return out;
}

Image plane_to_image(const Plane& p) {
    Image img(p.width, p.height);
    img.data = p.data;
    return img;
}

Plane box_mean_valid(const Plane& p, int radius) {
    DESCA_REQUIRE(radius >= 0, "box radius must be >= 0");
    const int ow = p.width - 2 * radius;
    const int oh = p.height - 2 * radius;
    DESCA_REQUIRE(ow > 0 && oh > 0, "box_mean_valid: plane smaller than the window");

    // Summed-area table with a zero row/column in front.
    const int sw = p.width + 1;
    std::vector<double> sat(static_cast<std::size_t>(sw) * (p.height + 1), 0.0);
    for (int y = 0; y < p.height; ++y) {
        const double* src = p.data.data() + static_cast<std::size_t>(y) * p.width;
        const double* above = sat.data() + static_cast<std::size_t>(y) * sw;
        double* dst = sat.data() + static_cast<std::size_t>(y + 1) * sw;
        double run = 0.0;
        for (int x = 0; x < p.width; ++x) {
            run += src[x];
            dst[x + 1] = above[x + 1] + run;
        }
    }

    Plane out(p.x0 + radius, p.y0 + radius, ow, oh);
    const int d = 2 * radius + 1;
    const double inv = 1.0 / (static_cast<double>(d) * d);
    for (int y = 0; y < oh; ++y) {
        const double* top = sat.data() + static_cast<std::size_t>(y) * sw;
        const double* bot = sat.data() + static_cast<std::size_t>(y + d) * sw;
        double* dst = out.data.data() + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            dst[x] = (bot[x + d] - bot[x] - top[x + d] + top[x]) * inv;
        }
    }
    return out;
}

namespace {

Plane multiply(const Plane& a, const Plane& b) {
    Plane out(a.x0, a.y0, a.width, a.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

// Samples of `p` over the extent of `like` (which must be contained in `p`).
const double* aligned_row(const Plane& p, const Plane& like, int row) {
    return &p.data[static_cast<std::size_t>(like.y0 + row - p.y0) * p.width + (like.x0 - p.x0)];
}

} // namespace

GuideStats make_guide_stats(const Plane& guide, int radius, double epsilon) {
    GuideStats s;
    s.radius = radius;
    s.epsilon = epsilon;
    s.guide = guide;
    s.mean = box_mean_valid(guide, radius);
    Plane mean_sq = box_mean_valid(multiply(guide, guide), radius);
    s.inv_var = Plane(s.mean.x0, s.mean.y0, s.mean.width, s.mean.height);
    for (std::size_t i = 0; i < s.mean.data.size(); ++i) {
        const double var = mean_sq.data[i] - s.mean.data[i] * s.mean.data[i];
        s.inv_var.data[i] = 1.0 / (var + epsilon);
    }
    return s;
}

Plane guided_mean_valid(const Plane& input, const GuideStats& stats) {
    const Plane& guide = stats.guide;
    DESCA_REQUIRE(input.x0 == guide.x0 && input.y0 == guide.y0 && input.width == guide.width &&
                      input.height == guide.height,
                  "guided_mean_valid: input and guide extents differ");
    const int r = stats.radius;
    const Plane mean_p = box_mean_valid(input, r);
    const Plane mean_ip = box_mean_valid(multiply(guide, input), r);

    Plane a(mean_p.x0, mean_p.y0, mean_p.width, mean_p.height);
    Plane b(mean_p.x0, mean_p.y0, mean_p.width, mean_p.height);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double mi = stats.mean.data[i];
        a.data[i] = (mean_ip.data[i] - mi * mean_p.data[i]) * stats.inv_var.data[i];
        b.data[i] = mean_p.data[i] - a.data[i] * mi;
    }
    const Plane mean_a = box_mean_valid(a, r);
    Plane out = box_mean_valid(b, r);
    for (int y = 0; y < out.height; ++y) {
        const double* g = aligned_row(guide, out, y);
        const double* ma = mean_a.data.data() + static_cast<std::size_t>(y) * out.width;
        double* dst = out.data.data() + static_cast<std::size_t>(y) * out.width;
        for (int x = 0; x < out.width; ++x) dst[x] += ma[x] * g[x];
    }
    return out;
}

Image box_mean(const Image& img, int radius) {
    DESCA_REQUIRE(radius >= 1, "box radius must be >= 1");
    DESCA_REQUIRE(!img.empty(), "box_mean: empty image");
    // Same arithmetic as box_mean_valid on a replicate canvas, minus the two
    // canvas-sized temporaries; the table is reused across calls.
    const int pw = img.width + 2 * radius;
    const int ph = img.height + 2 * radius;
    const int sw = pw + 1;
    thread_local std::vector<double> sat;
    sat.assign(static_cast<std::size_t>(sw) * (ph + 1), 0.0);
    for (int y = 0; y < ph; ++y) {
        const double* src = img.row(std::clamp(y - radius, 0, img.height - 1)).data();
        const double* above = sat.data() + static_cast<std::size_t>(y) * sw;
        double* dst = sat.data() + static_cast<std::size_t>(y + 1) * sw;
        double run = 0.0;
        for (int x = 0; x < pw; ++x) {
            run += src[std::clamp(x - radius, 0, img.width - 1)];
            dst[x + 1] = above[x + 1] + run;
        }
    }
    Image out(img.width, img.height);
    const int d = 2 * radius + 1;
    const double inv = 1.0 / (static_cast<double>(d) * d);
    for (int y = 0; y < img.height; ++y) {
        const double* top = sat.data() + static_cast<std::size_t>(y) * sw;
        const double* bot = sat.data() + static_cast<std::size_t>(y + d) * sw;
        double* dst = out.data.data() + static_cast<std::size_t>(y) * img.width;
        for (int x = 0; x < img.width; ++x) dst[x] = (bot[x + d] - bot[x] - top[x + d] + top[x]) * inv;
    }
    return out;
}

Image guided_mean(const Image& img, const Image& guide, int radius, double epsilon) {
    DESCA_REQUIRE(img.width == guide.width && img.height == guide.height,
                  "guided_mean: image and guide dimensions differ");
    FilterWeights::guided(radius, epsilon).validate();
    const int m = 2 * radius;
    const GuideStats stats = make_guide_stats(make_canvas(guide, m), radius, epsilon);
    return plane_to_image(guided_mean_valid(make_canvas(img, m), stats));
}

std::vector<double> guided_kernel_row(const Image& guide, int px, int py, int radius,
                                      double epsilon) {
    const int side = 4 * radius + 1;
    const int win = 2 * radius + 1;
    const double n = static_cast<double>(win) * win;
    std::vector<double> row(static_cast<std::size_t>(side) * side, 0.0);
    const double ip = guide.clamped(px, py);
    for (int ky = py - radius; ky <= py + radius; ++ky) {
        for (int kx = px - radius; kx <= px + radius; ++kx) {
            double mu = 0.0;
            for (int y = ky - radius; y <= ky + radius; ++y)
                for (int x = kx - radius; x <= kx + radius; ++x) mu += guide.clamped(x, y);
            mu /= n;
            double var = 0.0;
            for (int y = ky - radius; y <= ky + radius; ++y)
                for (int x = kx - radius; x <= kx + radius; ++x) {
                    const double d = guide.clamped(x, y) - mu;
                    var += d * d;
                }
            var /= n;
            const double scale = (ip - mu) / (var + epsilon);
            for (int y = ky - radius; y <= ky + radius; ++y) {
                for (int x = kx - radius; x <= kx + radius; ++x) {
                    const double w = (1.0 + (guide.clamped(x, y) - mu) * scale) / (n * n);
                    row[static_cast<std::size_t>(y - py + 2 * radius) * side + (x - px + 2 * radius)] += w;
                }
            }
        }
    }
    return row;
}

} // namespace desca
