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

#include "desca/matching.hpp"

#include "desca/error.hpp"

#include <algorithm>
#include <cmath>

namespace desca {

void to_json(nlohmann::json& j, const EvalReport& r) {
    j = nlohmann::json{{"bad_pixel_rate", r.bad_pixel_rate},
                       {"threshold", r.threshold},
                       {"evaluated_count", r.evaluated_count}};
}

namespace {

double l2_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        const double d = static_cast<double>(a[l]) - b[l];
        s += d * d;
    }
    return std::sqrt(s);
}

void require_comparable(const DescriptorField& left, const DescriptorField& right) {
    DESCA_REQUIRE(left.width == right.width && left.height == right.height,
                  "descriptor fields differ in size");
    DESCA_REQUIRE(left.kind == right.kind && left.length == right.length,
                  "descriptor fields differ in kind");
    DESCA_REQUIRE(left.pattern_digest == right.pattern_digest,
                  "descriptor fields were computed with different sampling patterns");
}

} // namespace

CostVolume build_cost_volume(const DescriptorField& left, const DescriptorField& right, int max_disp) {
    require_comparable(left, right);
    DESCA_REQUIRE(max_disp >= 0, "max disparity must be non-negative");
    CostVolume vol;
    vol.width = left.width;
    vol.height = left.height;
    vol.max_disp = max_disp;
    vol.costs.assign(static_cast<std::size_t>(vol.width) * vol.height * vol.depth(), kInfiniteCost);
#pragma omp parallel for schedule(dynamic, 2)
    for (int y = 0; y < vol.height; ++y) {
        for (int x = 0; x < vol.width; ++x) {
            const auto dl = left.at(x, y);
            for (int d = 0; d <= max_disp && x - d >= 0; ++d) {
                vol.at(x, y, d) = static_cast<float>(l2_distance(dl, right.at(x - d, y)));
            }
        }
    }
    return vol;
}

CostVolume build_ssd_cost_volume(const Image& left, const Image& right, int radius, int max_disp) {
    DESCA_REQUIRE(left.width == right.width && left.height == right.height,
                  "stereo images differ in size");
    DESCA_REQUIRE(radius >= 0 && max_disp >= 0, "radius and max disparity must be non-negative");
    CostVolume vol;
    vol.width = left.width;
    vol.height = left.height;
    vol.max_disp = max_disp;
    vol.costs.assign(static_cast<std::size_t>(vol.width) * vol.height * vol.depth(), kInfiniteCost);
#pragma omp parallel for schedule(dynamic, 2)
    for (int y = 0; y < vol.height; ++y) {
        for (int x = 0; x < vol.width; ++x) {
            for (int d = 0; d <= max_disp && x - d >= 0; ++d) {
                double ssd = 0.0;
                for (int ty = -radius; ty <= radius; ++ty) {
                    for (int tx = -radius; tx <= radius; ++tx) {
                        const double diff = left.clamped(x + tx, y + ty) - right.clamped(x - d + tx, y + ty);
                        ssd += diff * diff;
                    }
                }
                vol.at(x, y, d) = static_cast<float>(ssd);
            }
        }
    }
    return vol;
}

DisparityMap wta_disparity(const CostVolume& volume) {
    DisparityMap map(volume.width, volume.height);
    for (int y = 0; y < volume.height; ++y) {
        for (int x = 0; x < volume.width; ++x) {
            int best = -1;
            float best_cost = kInfiniteCost;
            for (int d = 0; d <= volume.max_disp; ++d) {
                const float c = volume.at(x, y, d);
                if (c < best_cost) {
                    best_cost = c;
                    best = d;
                }
            }
            const std::size_t i = static_cast<std::size_t>(y) * volume.width + x;
            map.values[i] = best < 0 ? 0.0f : static_cast<float>(best);
            map.valid[i] = best < 0 ? 0 : 1;
        }
    }
    return map;
}

std::vector<ProfileSample> cost_profile(const DescriptorField& left, const DescriptorField& right,
                                        int x, int y, int row) {
    require_comparable(left, right);
    DESCA_REQUIRE(x >= 0 && y >= 0 && x < left.width && y < left.height,
                  "profile pixel outside the image");
    DESCA_REQUIRE(row >= 0 && row < right.height, "profile scanline outside the image");
    std::vector<ProfileSample> profile(static_cast<std::size_t>(right.width));
    const auto dl = left.at(x, y);
    for (int xr = 0; xr < right.width; ++xr) {
        profile[static_cast<std::size_t>(xr)] = {xr, l2_distance(dl, right.at(xr, row))};
    }
    return profile;
}

EvalReport bad_pixel_rate(const DisparityMap& pred, const DisparityMap& gt,
                          const std::vector<std::uint8_t>& mask, double threshold) {
    DESCA_REQUIRE(pred.width == gt.width && pred.height == gt.height,
                  "prediction and ground truth differ in size");
    DESCA_REQUIRE(mask.empty() || mask.size() == gt.values.size(), "mask size mismatch");
    DESCA_REQUIRE(threshold >= 0.0, "threshold must be non-negative");
    EvalReport report;
    report.threshold = threshold;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        if (gt.valid[i] == 0) continue;
        ++report.evaluated_count;
        if (pred.valid[i] == 0 || std::abs(static_cast<double>(pred.values[i]) - gt.values[i]) > threshold) ++bad;
    }
    if (report.evaluated_count == 0) throw DataError("no evaluable pixels (mask and ground truth are empty)");
    report.bad_pixel_rate = static_cast<double>(bad) / static_cast<double>(report.evaluated_count);
    return report;
}

void save_disparity(const std::filesystem::path& path, const DisparityMap& map) {
    FloatGrid g;
    g.width = map.width;
    g.height = map.height;
    g.data.resize(map.values.size());
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        g.data[i] = map.valid[i] ? map.values[i] : std::numeric_limits<float>::infinity();
    }
    write_pfm(path, g);
}

DisparityMap load_disparity(const std::filesystem::path& path) {
    if (format_from_path(path) == ImageFormat::PFM) {
        const FloatGrid g = read_pfm(path);
        if (g.channels != 1) throw DataError("disparity PFM must be single-channel");
        DisparityMap map(g.width, g.height);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            map.values[i] = std::isfinite(g.data[i]) ? g.data[i] : 0.0f;
            map.valid[i] = std::isfinite(g.data[i]) ? 1 : 0;
        }
        return map;
    }
    const PixelGrid g = read_pnm(path);
    if (g.channels != 1) throw DataError("disparity PGM must be single-channel");
    DisparityMap map(g.width, g.height);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        map.values[i] = g.data[i];
        map.valid[i] = g.data[i] != 0 ? 1 : 0;
    }
    return map;
}

std::vector<std::uint8_t> load_mask(const std::filesystem::path& path, int width, int height) {
    const PixelGrid g = read_pnm(path);
    if (g.width != width || g.height != height) throw DataError("mask size does not match the images");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        bool on = false;
        for (int c = 0; c < g.channels; ++c) on |= g.data[i * g.channels + c] != 0;
        mask[i] = on ? 1 : 0;
    }
    return mask;
}

} // namespace desca
