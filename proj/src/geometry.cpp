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

#include "desca/geometry.hpp"

#include "desca/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace desca {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Offsets within this distance of a bin boundary count as lying on it.
constexpr double kBoundaryTol = 1e-9;
constexpr std::uint64_t kDascSalt = 0x9E3779B97F4A7C15ull;

double offset_angle(Offset o) {
    if (o.dx == 0 && o.dy == 0) return 0.0;
    double a = std::atan2(static_cast<double>(o.dy), static_cast<double>(o.dx));
    if (a < 0.0) a += kTwoPi;
    return a;
}

double offset_radius(Offset o) { return std::hypot(o.dx, o.dy); }

} // namespace

void DescriptorParams::validate() const {
    DESCA_REQUIRE(sigma_c > 0.0, "sigma_c must be > 0");
    DESCA_REQUIRE(patch_size >= 3 && patch_size % 2 == 1, "patch size M_F must be odd and >= 3");
    DESCA_REQUIRE(support_size >= 3 && support_size % 2 == 1,
                  "support size M_R must be odd and >= 3");
    DESCA_REQUIRE(num_kernels >= 1, "N_K must be >= 1");
    DESCA_REQUIRE(pyramid_levels >= 1 && pyramid_levels <= 12, "N_S must be in [1, 12]");
    DESCA_REQUIRE(num_radii >= 1 && num_angles >= 1, "N_rho and N_theta must be >= 1");
}

void to_json(nlohmann::json& j, const DescriptorParams& p) {
    j = nlohmann::json{{"sigma_c", p.sigma_c},           {"patch_size", p.patch_size},
                       {"support_size", p.support_size}, {"num_kernels", p.num_kernels},
                       {"pyramid_levels", p.pyramid_levels}, {"num_radii", p.num_radii},
                       {"num_angles", p.num_angles},     {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, DescriptorParams& p) {
    p.sigma_c = j.value("sigma_c", p.sigma_c);
    p.patch_size = j.value("patch_size", p.patch_size);
    p.support_size = j.value("support_size", p.support_size);
    p.num_kernels = j.value("num_kernels", p.num_kernels);
    p.pyramid_levels = j.value("pyramid_levels", p.pyramid_levels);
    p.num_radii = j.value("num_radii", p.num_radii);
    p.num_angles = j.value("num_angles", p.num_angles);
    p.seed = j.value("seed", p.seed);
}

std::uint64_t PatternRng::below(std::uint64_t bound) {
    DESCA_REQUIRE(bound > 0, "PatternRng::below needs a positive bound");
    // Reject the lowest (2^64 mod bound) outputs so every residue is equally likely.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = engine_();
        if (x >= threshold) return x % bound;
    }
}

double PatternRng::unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int pyramid_bin_count(int levels) {
    DESCA_REQUIRE(levels >= 1, "pyramid levels must be >= 1");
    int n = 1;
    for (int s = 2; s <= levels; ++s) n += 1 << s;
    return n;
}

std::vector<double> ring_radii(const DescriptorParams& params) {
    const double rmax = params.support_radius();
    std::vector<double> radii(params.num_radii);
    for (int r = 1; r <= params.num_radii; ++r) {
        radii[r - 1] = std::pow(rmax, static_cast<double>(r) / params.num_radii);
    }
    return radii;
}

std::vector<double> ring_angles(const DescriptorParams& params) {
    std::vector<double> angles(params.num_angles);
    for (int a = 1; a <= params.num_angles; ++a) {
        angles[a - 1] = kTwoPi * a / params.num_angles;
    }
    return angles;
}

std::vector<Offset> build_log_polar_points(const DescriptorParams& params) {
    const auto radii = ring_radii(params);
    const auto angles = ring_angles(params);
    std::vector<Offset> points;
    std::set<Offset> seen;
    auto emit = [&](Offset o) {
        if (seen.insert(o).second) points.push_back(o);
    };
    for (double rho : radii) {
        for (double theta : angles) {
            emit({static_cast<int>(std::lround(rho * std::cos(theta))),
                  static_cast<int>(std::lround(rho * std::sin(theta)))});
        }
    }
    emit({0, 0});
    return points;
}

std::vector<Offset> draw_kernels(const std::vector<Offset>& points, int count, std::uint64_t seed) {
    DESCA_REQUIRE(count >= 0 && static_cast<std::size_t>(count) <= points.size(),
                  "N_K exceeds the number of log-polar points");
    std::vector<Offset> pool = points;
    PatternRng rng(seed);
    for (int i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

std::vector<Offset> support_window(int support_radius) {
    std::vector<Offset> window;
    window.reserve(static_cast<std::size_t>(2 * support_radius + 1) * (2 * support_radius + 1));
    for (int dy = -support_radius; dy <= support_radius; ++dy)
        for (int dx = -support_radius; dx <= support_radius; ++dx) window.push_back({dx, dy});
    return window;
}

std::vector<PyramidBin> build_pyramid_bins(const DescriptorParams& params) {
    DESCA_REQUIRE(params.pyramid_levels >= 1, "pyramid levels must be >= 1");
    const auto window = support_window(params.support_radius());
    const double rmax = params.support_radius();
    const double nrho = params.num_radii;
    auto boundary_radius = [&](double log_index) { return std::pow(rmax, log_index / nrho); };

    std::vector<PyramidBin> bins;
    PyramidBin root;
    root.level = 1;
    root.angle_lo = 0.0;
    root.angle_hi = kTwoPi;
    root.log_lo = 0.0;
    root.log_hi = nrho;
    root.members.resize(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) root.members[i] = static_cast<int>(i);
    bins.push_back(root);
    if (params.pyramid_levels == 1) return bins;

    // Level 2: quadrants; an offset on a quadrant boundary joins the lower index.
    for (int q = 0; q < 4; ++q) {
        PyramidBin b;
        b.level = 2;
        b.parent = 0;
        b.angle_lo = q * std::numbers::pi / 2;
        b.angle_hi = (q + 1) * std::numbers::pi / 2;
        b.log_lo = 0.0;
        b.log_hi = nrho;
        for (int m : root.members) {
            const double a = offset_angle(window[m]);
            const bool below_hi = a <= b.angle_hi + kBoundaryTol;
            const bool above_lo = q == 0 || a > b.angle_lo + kBoundaryTol;
            if (below_hi && above_lo) b.members.push_back(m);
        }
        bins.push_back(std::move(b));
    }

    std::size_t level_begin = 1;
    for (int s = 3; s <= params.pyramid_levels; ++s) {
        const std::size_t level_end = bins.size();
        for (std::size_t p = level_begin; p < level_end; ++p) {
            const PyramidBin parent = bins[p];
            PyramidBin lower = parent;
            PyramidBin upper = parent;
            lower.level = upper.level = s;
            lower.parent = upper.parent = static_cast<int>(p);
            lower.members.clear();
            upper.members.clear();
            if (s % 2 == 1) {
                const double mid = 0.5 * (parent.log_lo + parent.log_hi);
                const double split = boundary_radius(mid);
                lower.log_hi = mid;
                lower.open_outer = false;
                upper.log_lo = mid;
                for (int m : parent.members) {
                    (offset_radius(window[m]) <= split + kBoundaryTol ? lower : upper)
                        .members.push_back(m);
                }
            } else {
                const double mid = 0.5 * (parent.angle_lo + parent.angle_hi);
                lower.angle_hi = mid;
                upper.angle_lo = mid;
                for (int m : parent.members) {
                    (offset_angle(window[m]) <= mid + kBoundaryTol ? lower : upper)
                        .members.push_back(m);
                }
            }
            bins.push_back(std::move(lower));
            bins.push_back(std::move(upper));
        }
        level_begin = level_end;
    }
    return bins;
}

std::vector<std::vector<int>> build_point_sets(const std::vector<Offset>& points,
                                               const std::vector<Offset>& window,
                                               const std::vector<PyramidBin>& bins) {
    std::vector<std::vector<int>> sets(bins.size());
    for (std::size_t v = 0; v < bins.size(); ++v) {
        for (std::size_t p = 0; p < points.size(); ++p) {
            for (int m : bins[v].members) {
                if (window[m] == points[p]) {
                    sets[v].push_back(static_cast<int>(p));
                    break;
                }
            }
        }
    }
    return sets;
}

int SamplingPattern::window_index(Offset o) const {
    const int r = params.support_radius();
    if (o.chebyshev() > r) return -1;
    return (o.dy + r) * (2 * r + 1) + (o.dx + r);
}

std::vector<Offset> SamplingPattern::volume_deltas() const {
    std::set<Offset> deltas;
    for (const Offset& k : kernels)
        for (const Offset& j : window) deltas.insert(j - k);
    return {deltas.begin(), deltas.end()};
}

std::vector<Offset> SamplingPattern::dasc_deltas() const {
    std::set<Offset> deltas;
    for (const auto& [s, t] : dasc_pairs) deltas.insert(t - s);
    return {deltas.begin(), deltas.end()};
}

std::uint64_t SamplingPattern::digest() const {
    nlohmann::json j = pattern_to_json(*this);
    // Derived floating-point geometry may differ in the last ulp between libm
    // builds; the integer geometry and the parameters determine it fully.
    j.erase("radii");
    j.erase("angles");
    return fnv1a64(j.dump());
}

namespace {

std::vector<std::vector<int>> build_lss_bins(const DescriptorParams& params,
                                             const std::vector<Offset>& window,
                                             const std::vector<double>& radii,
                                             const std::vector<double>& angles,
                                             std::vector<bool>& borrowed) {
    const int nr = params.num_radii;
    const int na = params.num_angles;
    std::vector<std::vector<int>> bins(static_cast<std::size_t>(nr) * na);
    borrowed.assign(bins.size(), false);
    const int wr = params.support_radius();
    for (int r = 0; r < nr; ++r) {
        const double rho_lo = r == 0 ? 0.0 : radii[r - 1];
        const double rho_hi = radii[r];
        for (int a = 0; a < na; ++a) {
            const double th_lo = a == 0 ? 0.0 : angles[a - 1];
            const double th_hi = angles[a];
            auto& bin = bins[static_cast<std::size_t>(r) * na + a];
            for (std::size_t m = 0; m < window.size(); ++m) {
                const Offset o = window[m];
                if (o.dx == 0 && o.dy == 0) continue;
                const double rho = offset_radius(o);
                double th = offset_angle(o);
                if (th <= kBoundaryTol) th = kTwoPi; // angles live in (0, 2π]
                if (rho > rho_lo + kBoundaryTol && rho <= rho_hi + kBoundaryTol &&
                    th > th_lo + kBoundaryTol && th <= th_hi + kBoundaryTol) {
                    bin.push_back(static_cast<int>(m));
                }
            }
            if (bin.empty()) {
                // No grid offset falls inside: use the log-polar sample of this bin.
                const Offset o{static_cast<int>(std::lround(rho_hi * std::cos(th_hi))),
                               static_cast<int>(std::lround(rho_hi * std::sin(th_hi)))};
                bin.push_back((o.dy + wr) * (2 * wr + 1) + (o.dx + wr));
                borrowed[static_cast<std::size_t>(r) * na + a] = true;
            }
        }
    }
    return bins;
}

std::vector<std::pair<Offset, Offset>> draw_dasc_pairs(const std::vector<Offset>& points, int count,
                                                       std::uint64_t seed) {
    const std::size_t n = points.size();
    DESCA_REQUIRE(n >= 2 && static_cast<std::size_t>(count) <= n * (n - 1) / 2,
                  "not enough log-polar points for the DASC pairs");
    PatternRng rng(seed ^ kDascSalt);
    std::set<std::pair<std::size_t, std::size_t>> used;
    std::vector<std::pair<Offset, Offset>> pairs;
    while (pairs.size() < static_cast<std::size_t>(count)) {
        const auto s = rng.below(n);
        const auto t = rng.below(n);
        if (s == t) continue;
        if (!used.insert({std::min(s, t), std::max(s, t)}).second) continue;
        pairs.emplace_back(points[s], points[t]);
    }
    return pairs;
}

nlohmann::json offset_json(Offset o) { return nlohmann::json::array({o.dx, o.dy}); }

} // namespace

SamplingPattern build_sampling_pattern(const DescriptorParams& params) {
    params.validate();
    SamplingPattern p;
    p.params = params;
    p.radii = ring_radii(params);
    p.angles = ring_angles(params);
    p.window = support_window(params.support_radius());
    p.points = build_log_polar_points(params);
    p.kernels = draw_kernels(p.points, params.num_kernels, params.seed);
    p.bins = build_pyramid_bins(params);
    p.point_sets = build_point_sets(p.points, p.window, p.bins);
    p.set_kernels.resize(p.bins.size());
    for (std::size_t v = 0; v < p.bins.size(); ++v) {
        const auto& members = p.bins[v].members;
        for (std::size_t k = 0; k < p.kernels.size(); ++k) {
            const int wi = p.window_index(p.kernels[k]);
            if (std::find(members.begin(), members.end(), wi) != members.end())
                p.set_kernels[v].push_back(static_cast<int>(k));
        }
    }
    p.lss_bins = build_lss_bins(params, p.window, p.radii, p.angles, p.lss_bin_borrowed);
    p.dasc_pairs = draw_dasc_pairs(p.points, params.num_kernels, params.seed);
    return p;
}

nlohmann::json pattern_to_json(const SamplingPattern& p) {
    using nlohmann::json;
    json j;
    j["params"] = p.params;
    j["radii"] = p.radii;
    j["angles"] = p.angles;
    auto offsets = [](const std::vector<Offset>& v) {
        json a = json::array();
        for (const auto& o : v) a.push_back(offset_json(o));
        return a;
    };
    j["points"] = offsets(p.points);
    j["kernels"] = offsets(p.kernels);
    json bins = json::array();
    for (const auto& b : p.bins) {
        json members = json::array();
        for (int m : b.members) members.push_back(offset_json(p.window[m]));
        bins.push_back({{"level", b.level}, {"parent", b.parent}, {"members", members}});
    }
    j["pyramid_bins"] = bins;
    json sets = json::array();
    for (const auto& s : p.point_sets) {
        json members = json::array();
        for (int m : s) members.push_back(offset_json(p.points[m]));
        sets.push_back(members);
    }
    j["point_sets"] = sets;
    json lss = json::array();
    for (const auto& b : p.lss_bins) {
        json members = json::array();
        for (int m : b) members.push_back(offset_json(p.window[m]));
        lss.push_back(members);
    }
    j["lss_bins"] = lss;
    json pairs = json::array();
    for (const auto& [s, t] : p.dasc_pairs) pairs.push_back({offset_json(s), offset_json(t)});
    j["dasc_pairs"] = pairs;
    return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace desca
