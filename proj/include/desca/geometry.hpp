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

#include <json.hpp>

#include <compare>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace desca {

/// Displacement relative to a center pixel.
struct Offset {
    int dx = 0;
    int dy = 0;

    friend constexpr Offset operator+(Offset a, Offset b) { return {a.dx + b.dx, a.dy + b.dy}; }
    friend constexpr Offset operator-(Offset a, Offset b) { return {a.dx - b.dx, a.dy - b.dy}; }
    friend constexpr auto operator<=>(const Offset&, const Offset&) = default;
    [[nodiscard]] constexpr int chebyshev() const noexcept {
        return (dx < 0 ? -dx : dx) > (dy < 0 ? -dy : dy) ? (dx < 0 ? -dx : dx)
                                                         : (dy < 0 ? -dy : dy);
    }
};

struct DescriptorParams {
    double sigma_c = 0.5;
    int patch_size = 5;      ///< M_F
    int support_size = 9;    ///< M_R
    int num_kernels = 32;    ///< N_K
    int pyramid_levels = 3;  ///< N_S (= N_O)
    int num_radii = 4;       ///< N_rho
    int num_angles = 16;     ///< N_theta
    std::uint64_t seed = 0;

    [[nodiscard]] int patch_radius() const noexcept { return patch_size / 2; }
    [[nodiscard]] int support_radius() const noexcept { return support_size / 2; }
    void validate() const;

    friend bool operator==(const DescriptorParams&, const DescriptorParams&) = default;
};

void to_json(nlohmann::json& j, const DescriptorParams& p);
void from_json(const nlohmann::json& j, DescriptorParams& p);

/// Project PRNG: std::mt19937_64 (its output sequence is fixed by the C++
/// standard) with rejection-sampled bounded integers, so draws are identical on
/// every platform and standard library.
class PatternRng {
public:
    explicit PatternRng(std::uint64_t seed) : engine_(seed) {}
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    /// Uniform double in [0, 1) with 53 random bits.
    double unit();

private:
    std::mt19937_64 engine_;
};

/// N_SB = 1 + Σ_{s=2..N_S} 2^s.
int pyramid_bin_count(int levels);

/// Log-polar point set P (center-relative), with (0,0) appended.
std::vector<Offset> build_log_polar_points(const DescriptorParams& params);

/// Ring radii ρ_r = R_max^(r/N_ρ), r = 1..N_ρ.
std::vector<double> ring_radii(const DescriptorParams& params);
/// Angles θ_a = 2πa/N_θ, a = 1..N_θ.
std::vector<double> ring_angles(const DescriptorParams& params);

/// Partial Fisher-Yates draw of `count` distinct elements of `points`.
std::vector<Offset> draw_kernels(const std::vector<Offset>& points, int count, std::uint64_t seed);

/// Square support window R, row-major over dy then dx.
std::vector<Offset> support_window(int support_radius);

/// One circular pyramid bin: members are indices into the support window.
struct PyramidBin {
    int level = 1;
    int parent = -1;           ///< index of the enclosing bin at level-1, -1 at the top
    double angle_lo = 0.0;     ///< angular span (radians)
    double angle_hi = 0.0;
    double log_lo = 0.0;       ///< radial span in ring-index units (radius = R_max^(e/N_ρ))
    double log_hi = 0.0;
    bool open_outer = true;    ///< outermost bins also hold window corners beyond R_max
    std::vector<int> members;
};

/// Circular spatial pyramid bins SB over the support window.
std::vector<PyramidBin> build_pyramid_bins(const DescriptorParams& params);

/// SP(v) = points ∩ SB(v); returns indices into `points` per bin.
std::vector<std::vector<int>> build_point_sets(const std::vector<Offset>& points,
                                               const std::vector<Offset>& window,
                                               const std::vector<PyramidBin>& bins);

/// Everything a descriptor needs to know about sampling, fixed for a run.
struct SamplingPattern {
    DescriptorParams params;
    std::vector<double> radii;
    std::vector<double> angles;
    std::vector<Offset> window;                  ///< R, |R| = M_R^2
    std::vector<Offset> points;                  ///< P
    std::vector<Offset> kernels;                 ///< r_k, k < N_K
    std::vector<PyramidBin> bins;                ///< SB
    std::vector<std::vector<int>> point_sets;    ///< SP(v) as indices into points
    std::vector<std::vector<int>> set_kernels;   ///< drawn kernels k with r_k ∈ SP(v)
    std::vector<std::vector<int>> lss_bins;      ///< log-polar bins B(l) over the window
    std::vector<bool> lss_bin_borrowed;          ///< true if B(l) had no grid offset
    std::vector<std::pair<Offset, Offset>> dasc_pairs;

    [[nodiscard]] int bin_count() const noexcept { return static_cast<int>(bins.size()); }
    [[nodiscard]] int window_index(Offset o) const;
    /// Deduplicated displacements j - r_k needed by the self-convolution volume.
    [[nodiscard]] std::vector<Offset> volume_deltas() const;
    /// Deduplicated displacements t_l - s_l needed by DASC.
    [[nodiscard]] std::vector<Offset> dasc_deltas() const;
    /// FNV-1a hash of the canonical JSON serialization.
    [[nodiscard]] std::uint64_t digest() const;
};

SamplingPattern build_sampling_pattern(const DescriptorParams& params);

nlohmann::json pattern_to_json(const SamplingPattern& pattern);

std::uint64_t fnv1a64(std::string_view bytes);

} // namespace desca
