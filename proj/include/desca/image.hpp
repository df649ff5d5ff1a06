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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace desca {

/// Single-channel image, row-major, intensities in [0,1] once loaded.
///
/// `valid` is either empty (every pixel valid) or holds one flag per pixel;
/// invalid pixels come from non-finite PFM samples.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;
    std::vector<std::uint8_t> valid;
    bool converted_from_color = false;

    Image() = default;
    Image(int w, int h, double fill = 0.0);

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
    [[nodiscard]] bool empty() const noexcept { return data.empty(); }

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] double at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    /// Replicate-border access: coordinates outside the grid clamp to the edge.
    [[nodiscard]] double clamped(int x, int y) const;
    [[nodiscard]] bool is_valid(int x, int y) const {
        return valid.empty() || valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
    [[nodiscard]] std::span<const double> row(int y) const {
        return {data.data() + static_cast<std::size_t>(y) * width,
                static_cast<std::size_t>(width)};
    }
};

enum class ImageFormat { PGM, PFM };

/// Raw float grid as stored in a PFM file (no clamping, no rescaling).
struct FloatGrid {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data; // interleaved when channels == 3
};

/// Raw PGM/PPM samples.
struct PixelGrid {
    int width = 0;
    int height = 0;
    int channels = 1;
    int maxval = 255;
    std::vector<std::uint16_t> data;
};

FloatGrid read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const FloatGrid& grid);
PixelGrid read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const PixelGrid& grid);

/// Picks the format from the file extension (".pfm" → PFM, anything else PGM).
ImageFormat format_from_path(const std::filesystem::path& path);

/// Loads an image and rescales it to [0,1]. PGM is divided by its maxval; PFM is
/// multiplied by `pfm_scale` and clamped. Colour input is converted to luminance
/// and flagged through `Image::converted_from_color`.
Image load_image(const std::filesystem::path& path, ImageFormat format, double pfm_scale = 1.0);
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit (or 16-bit when `maxval` > 255) binary PGM.
void save_image(const std::filesystem::path& path, const Image& img, int maxval = 255);

/// Replicates edge pixels outward by `margin` on every side.
Image pad_replicate(const Image& img, int margin);

} // namespace desca
