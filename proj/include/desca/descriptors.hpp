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
#include "desca/selfconv.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace desca {

enum class DescriptorKind : std::uint8_t { LSS = 0, DASC = 1, SiSCA = 2, DeSCA = 3 };

std::string_view kind_name(DescriptorKind kind);
std::optional<DescriptorKind> parse_kind(std::string_view name);

/// How self-convolution values are obtained: precomputed planes or brute force.
enum class ComputePath { Fast, Direct };

/// Wall time (seconds) per pipeline stage.
struct StageTimes {
    double offset_maps = 0.0;
    double pooling = 0.0;
    double gating = 0.0;
    double matching = 0.0;

    [[nodiscard]] double total() const noexcept { return offset_maps + pooling + gating + matching; }
};

struct ComputeOptions {
    FilterWeights weights;
    ComputePath path = ComputePath::Fast;
    bool normalize = true;           ///< false keeps the gated (pre-normalization) values
    StageTimes* timing = nullptr;
};

/// H×W×L descriptor array, pixel-major.
struct DescriptorField {
    int width = 0;
    int height = 0;
    int length = 0;
    DescriptorKind kind = DescriptorKind::DeSCA;
    DescriptorParams params;
    std::uint64_t pattern_digest = 0;
    bool has_empty_bins = false;
    std::vector<float> data;

    [[nodiscard]] std::span<const float> at(int x, int y) const {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * length,
                static_cast<std::size_t>(length)};
    }
    std::span<float> at(int x, int y) {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * length,
                static_cast<std::size_t>(length)};
    }
};

/// Per-kind descriptor length for a pattern.
int descriptor_length(DescriptorKind kind, const SamplingPattern& pattern);

/// exp(-(1 - |h|) / sigma_c).
inline double gate(double h, double sigma_c) {
    return std::exp(-(1.0 - std::abs(h)) / sigma_c);
}

/// C-SPP: max of `surface` over each bin; empty bins give -1.
void cspp_max_pool(std::span<const double> surface, const std::vector<PyramidBin>& bins,
                   std::span<double> out);
std::vector<double> cspp_max_pool(std::span<const double> surface,
                                  const std::vector<PyramidBin>& bins);

/// Averaged surfaces per circular pyramidal point set.
struct HierarchicalSurfaces {
    int window_size = 0;
    std::vector<double> values;      ///< N_SP × |R|
    std::vector<int> member_counts;  ///< N_v
    [[nodiscard]] std::span<const double> surface(int v) const {
        return {values.data() + static_cast<std::size_t>(v) * window_size,
                static_cast<std::size_t>(window_size)};
    }
};

HierarchicalSurfaces aggregate_hierarchy(const SelfConvVolume& volume, const SamplingPattern& pattern);

/// L2-normalizes every pixel vector in place (all-zero vectors stay zero).
void normalize_field(DescriptorField& field);

DescriptorField lss_descriptor(const Image& img, const SamplingPattern& pattern,
                               const ComputeOptions& options = {});
DescriptorField dasc_descriptor(const Image& img, const SamplingPattern& pattern,
                                const ComputeOptions& options = {});
DescriptorField sisca_descriptor(const Image& img, const SamplingPattern& pattern,
                                 const ComputeOptions& options = {});
DescriptorField desca_descriptor(const Image& img, const SamplingPattern& pattern,
                                 const ComputeOptions& options = {});

DescriptorField compute_descriptor(DescriptorKind kind, const Image& img,
                                   const SamplingPattern& pattern, const ComputeOptions& options = {});
DescriptorField compute_descriptor(DescriptorKind kind, const Image& img,
                                   const DescriptorParams& params, const ComputeOptions& options = {});

} // namespace desca
