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

#include "desca/descriptors.hpp"
#include "desca/image.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace desca {

inline constexpr float kInfiniteCost = std::numeric_limits<float>::infinity();

/// costs(x, y, d) for d ∈ [0, max_disp]; correspondences leaving the image are +inf.
struct CostVolume {
    int width = 0;
    int height = 0;
    int max_disp = 0;
    std::vector<float> costs;

    [[nodiscard]] int depth() const noexcept { return max_disp + 1; }
    [[nodiscard]] float at(int x, int y, int d) const {
        return costs[(static_cast<std::size_t>(y) * width + x) * depth() + d];
    }
    float& at(int x, int y, int d) {
        return costs[(static_cast<std::size_t>(y) * width + x) * depth() + d];
    }
};

struct DisparityMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> valid;

    DisparityMap() = default;
    DisparityMap(int w, int h, float fill = 0.0f)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill),
          valid(static_cast<std::size_t>(w) * h, 1) {}

    [[nodiscard]] float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] bool is_valid(int x, int y) const {
        return valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

struct EvalReport {
    double bad_pixel_rate = 0.0;
    double threshold = 1.0;
    std::size_t evaluated_count = 0;
};

void to_json(nlohmann::json& j, const EvalReport& r);

/// L2 distance between left(x, y) and right(x - d, y).
CostVolume build_cost_volume(const DescriptorField& left, const DescriptorField& right, int max_disp);

/// Raw-intensity baseline: sum of squared differences over (2r+1)^2 patches.
CostVolume build_ssd_cost_volume(const Image& left, const Image& right, int radius, int max_disp);

/// Per-pixel argmin; ties go to the smaller disparity; all-inf pixels are invalid.
DisparityMap wta_disparity(const CostVolume& volume);

struct ProfileSample {
    int x = 0;
    double cost = 0.0;
};

/// Distance from left(x, y) to every right(x', row), in x' order.
std::vector<ProfileSample> cost_profile(const DescriptorField& left, const DescriptorField& right,
                                        int x, int y, int row);

/// Fraction of evaluated pixels with |pred - gt| > threshold. A pixel is evaluated
/// when the mask (if any) is non-zero and the ground truth is valid. Invalid
/// predictions count as bad.
EvalReport bad_pixel_rate(const DisparityMap& pred, const DisparityMap& gt,
                          const std::vector<std::uint8_t>& mask, double threshold = 1.0);

/// PFM with +inf at invalid pixels.
void save_disparity(const std::filesystem::path& path, const DisparityMap& map);
/// PFM: non-finite samples are invalid. PGM: raw values, 0 is invalid.
DisparityMap load_disparity(const std::filesystem::path& path);
/// Non-zero samples mark pixels to evaluate.
std::vector<std::uint8_t> load_mask(const std::filesystem::path& path, int width, int height);

} // namespace desca
