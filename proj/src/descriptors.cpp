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

#include "desca/descriptors.hpp"

#include "desca/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

namespace desca {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

DescriptorField make_field(DescriptorKind kind, const Image& img, const SamplingPattern& pattern) {
    DESCA_REQUIRE(!img.empty(), "cannot describe an empty image");
    DescriptorField f;
    f.kind = kind;
    f.width = img.width;
    f.height = img.height;
    f.length = descriptor_length(kind, pattern);
    f.params = pattern.params;
    f.pattern_digest = pattern.digest();
    f.data.assign(static_cast<std::size_t>(f.width) * f.height * f.length, 0.0f);
    return f;
}

// Gating of pooled activations followed by optional normalization.
void gate_and_normalize(DescriptorField& field, const ComputeOptions& options) {
    const auto t0 = Clock::now();
    const double sigma = field.params.sigma_c;
    const auto n = static_cast<std::ptrdiff_t>(field.data.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        field.data[i] = static_cast<float>(gate(field.data[i], sigma));
    }
    if (options.normalize) normalize_field(field);
    if (options.timing) options.timing->gating += seconds_since(t0);
}

int max_anchor(const std::vector<std::pair<Offset, Offset>>& pairs) {
    int m = 0;
    for (const auto& [s, t] : pairs) m = std::max({m, s.chebyshev(), t.chebyshev()});
    return m;
}

int max_chebyshev(const std::vector<Offset>& v) {
    int m = 0;
    for (const auto& o : v) m = std::max(m, o.chebyshev());
    return m;
}

// Fills the per-pixel self-convolution volume either from precomputed planes
// (fast path) or by brute-force correlation (direct path).
class VolumeSource {
public:
    VolumeSource(const Image& img, const SamplingPattern& pattern, const ComputeOptions& options)
        : pattern_(pattern), path_(options.path) {
        options.weights.validate();
        const auto t0 = Clock::now();
        if (path_ == ComputePath::Fast) {
            maps_ = build_offset_maps(img, pattern, options.weights);
            index_ = make_volume_index(maps_, pattern);
        } else {
            const int anchor = std::max(max_chebyshev(pattern.kernels), 0);
            const int disp = max_chebyshev(pattern.volume_deltas());
            direct_.emplace(img, options.weights, anchor, disp);
        }
        if (options.timing) options.timing->offset_maps += seconds_since(t0);
    }

    void fill(int x, int y, std::span<double> out) const {
        if (path_ == ComputePath::Fast) {
            remap_into(maps_, index_, x, y, out);
            return;
        }
        const std::size_t wn = pattern_.window.size();
        const Offset i{x, y};
        for (std::size_t k = 0; k < pattern_.kernels.size(); ++k) {
            for (std::size_t j = 0; j < wn; ++j) {
                out[k * wn + j] = (*direct_)(i + pattern_.kernels[k], i + pattern_.window[j]);
            }
        }
    }

    [[nodiscard]] bool parallel() const noexcept { return path_ == ComputePath::Fast; }

private:
    const SamplingPattern& pattern_;
    ComputePath path_;
    OffsetCorrelationMaps maps_;
    VolumeIndex index_;
    std::optional<DirectCorrelator> direct_;
};

bool any_empty_bin(const SamplingPattern& pattern) {
    return std::any_of(pattern.bins.begin(), pattern.bins.end(),
                       [](const PyramidBin& b) { return b.members.empty(); });
}

// Shared SiSCA/DeSCA assembly; `deep` adds the hierarchical block.
DescriptorField self_conv_descriptor(const Image& img, const SamplingPattern& pattern,
                                     const ComputeOptions& options, bool deep) {
    DescriptorField field = make_field(deep ? DescriptorKind::DeSCA : DescriptorKind::SiSCA, img, pattern);
    field.has_empty_bins = any_empty_bin(pattern);
    if (deep) {
        for (const auto& s : pattern.set_kernels) field.has_empty_bins |= s.empty();
    }
    const VolumeSource source(img, pattern, options);

    const auto t0 = Clock::now();
    const std::size_t nk = pattern.kernels.size();
    const std::size_t wn = pattern.window.size();
    const std::size_t nsb = pattern.bins.size();
    const std::size_t nsp = pattern.set_kernels.size();
    const int W = img.width;
    const int H = img.height;

    auto describe_row = [&](int y, std::vector<double>& volume, std::vector<double>& aggregate,
                            std::vector<double>& pooled) {
        for (int x = 0; x < W; ++x) {
            source.fill(x, y, volume);
            float* dst = field.at(x, y).data();
            for (std::size_t k = 0; k < nk; ++k) {
                cspp_max_pool(std::span<const double>(&volume[k * wn], wn), pattern.bins, pooled);
                for (std::size_t u = 0; u < nsb; ++u) dst[k * nsb + u] = static_cast<float>(pooled[u]);
            }
            if (!deep) continue;
            for (std::size_t v = 0; v < nsp; ++v) {
                const auto& members = pattern.set_kernels[v];
                std::fill(aggregate.begin(), aggregate.end(), 0.0);
                if (!members.empty()) {
                    for (int k : members) {
                        const double* s = &volume[static_cast<std::size_t>(k) * wn];
                        for (std::size_t j = 0; j < wn; ++j) aggregate[j] += s[j];
                    }
                    const double inv = 1.0 / static_cast<double>(members.size());
                    for (auto& a : aggregate) a *= inv;
                }
                cspp_max_pool(aggregate, pattern.bins, pooled);
                float* block = dst + nk * nsb + v * nsb;
                for (std::size_t u = 0; u < nsb; ++u) block[u] = static_cast<float>(pooled[u]);
            }
        }
    };

    if (source.parallel()) {
#pragma omp parallel
        {
            std::vector<double> volume(nk * wn), aggregate(wn), pooled(nsb);
#pragma omp for schedule(dynamic, 4)
            for (int y = 0; y < H; ++y) describe_row(y, volume, aggregate, pooled);
        }
    } else {
        std::vector<double> volume(nk * wn), aggregate(wn), pooled(nsb);
        for (int y = 0; y < H; ++y) describe_row(y, volume, aggregate, pooled);
    }
    if (options.timing) options.timing->pooling += seconds_since(t0);

    gate_and_normalize(field, options);
    return field;
}

} // namespace

std::string_view kind_name(DescriptorKind kind) {
    switch (kind) {
    case DescriptorKind::LSS: return "lss";
    case DescriptorKind::DASC: return "dasc";
    case DescriptorKind::SiSCA: return "sisca";
    case DescriptorKind::DeSCA: return "desca";
    }
    return "unknown";
}

std::optional<DescriptorKind> parse_kind(std::string_view name) {
    for (auto k : {DescriptorKind::LSS, DescriptorKind::DASC, DescriptorKind::SiSCA,
                   DescriptorKind::DeSCA}) {
        if (kind_name(k) == name) return k;
    }
    return std::nullopt;
}

int descriptor_length(DescriptorKind kind, const SamplingPattern& pattern) {
    const int nsb = pattern.bin_count();
    switch (kind) {
    case DescriptorKind::LSS: return pattern.params.num_radii * pattern.params.num_angles;
    case DescriptorKind::DASC: return static_cast<int>(pattern.dasc_pairs.size());
    case DescriptorKind::SiSCA: return static_cast<int>(pattern.kernels.size()) * nsb;
    case DescriptorKind::DeSCA:
        return (static_cast<int>(pattern.kernels.size()) + static_cast<int>(pattern.point_sets.size())) * nsb;
    }
    return 0;
}

void cspp_max_pool(std::span<const double> surface, const std::vector<PyramidBin>& bins,
                   std::span<double> out) {
    DESCA_REQUIRE(out.size() >= bins.size(), "cspp_max_pool: output too small");
    for (std::size_t u = 0; u < bins.size(); ++u) {
        double m = -1.0;
        bool any = false;
        for (int j : bins[u].members) {
            const double v = surface[static_cast<std::size_t>(j)];
            if (!any || v > m) m = v;
            any = true;
        }
        out[u] = any ? m : -1.0;
    }
}

std::vector<double> cspp_max_pool(std::span<const double> surface, const std::vector<PyramidBin>& bins) {
    std::vector<double> out(bins.size());
    cspp_max_pool(surface, bins, out);
    return out;
}

HierarchicalSurfaces aggregate_hierarchy(const SelfConvVolume& volume, const SamplingPattern& pattern) {
    DESCA_REQUIRE(volume.num_kernels == static_cast<int>(pattern.kernels.size()) &&
                      volume.window_size == static_cast<int>(pattern.window.size()),
                  "aggregate_hierarchy: volume does not match the pattern");
    HierarchicalSurfaces h;
    h.window_size = volume.window_size;
    const std::size_t wn = static_cast<std::size_t>(volume.window_size);
    h.values.assign(pattern.set_kernels.size() * wn, 0.0);
    h.member_counts.resize(pattern.set_kernels.size());
    for (std::size_t v = 0; v < pattern.set_kernels.size(); ++v) {
        const auto& members = pattern.set_kernels[v];
        h.member_counts[v] = static_cast<int>(members.size());
        if (members.empty()) continue;
        double* dst = &h.values[v * wn];
        for (int k : members) {
            const auto s = volume.surface(k);
            for (std::size_t j = 0; j < wn; ++j) dst[j] += s[j];
        }
        for (std::size_t j = 0; j < wn; ++j) dst[j] /= static_cast<double>(members.size());
    }
    return h;
}

void normalize_field(DescriptorField& field) {
    const auto pixels = static_cast<std::ptrdiff_t>(field.width) * field.height;
    const std::size_t L = static_cast<std::size_t>(field.length);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < pixels; ++p) {
        float* v = field.data.data() + static_cast<std::size_t>(p) * L;
        double sq = 0.0;
        for (std::size_t l = 0; l < L; ++l) sq += static_cast<double>(v[l]) * v[l];
        if (sq <= 0.0) continue;
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t l = 0; l < L; ++l) v[l] = static_cast<float>(v[l] * inv);
    }
}

DescriptorField lss_descriptor(const Image& img, const SamplingPattern& pattern,
                               const ComputeOptions& options) {
    DescriptorField field = make_field(DescriptorKind::LSS, img, pattern);
    field.has_empty_bins = std::find(pattern.lss_bin_borrowed.begin(), pattern.lss_bin_borrowed.end(),
                                     true) != pattern.lss_bin_borrowed.end();
    const int r = pattern.params.patch_radius();
    const int R = pattern.params.support_radius();
    const Plane canvas = make_canvas(img, R + r);
    const double sigma = pattern.params.sigma_c;

    std::vector<int> used;
    {
        std::set<int> u;
        for (const auto& b : pattern.lss_bins) u.insert(b.begin(), b.end());
        used.assign(u.begin(), u.end());
    }
    const int W = img.width;
    const int H = img.height;
    const std::size_t nl = pattern.lss_bins.size();

    const auto t0 = Clock::now();
#pragma omp parallel
    {
        std::vector<double> sim(pattern.window.size(), 0.0);
#pragma omp for schedule(dynamic, 4)
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                for (int m : used) {
                    const Offset j = pattern.window[static_cast<std::size_t>(m)];
                    double ssd = 0.0;
                    for (int ty = -r; ty <= r; ++ty) {
                        for (int tx = -r; tx <= r; ++tx) {
                            const double d = canvas.at(x + tx, y + ty) -
                                             canvas.at(x + j.dx + tx, y + j.dy + ty);
                            ssd += d * d;
                        }
                    }
                    sim[static_cast<std::size_t>(m)] = std::exp(-ssd / sigma);
                }
                float* dst = field.at(x, y).data();
                for (std::size_t l = 0; l < nl; ++l) {
                    double best = 0.0;
                    for (int m : pattern.lss_bins[l]) best = std::max(best, sim[static_cast<std::size_t>(m)]);
                    dst[l] = static_cast<float>(best);
                }
            }
        }
    }
    if (options.timing) options.timing->pooling += seconds_since(t0);
    if (options.normalize) {
        const auto t1 = Clock::now();
        normalize_field(field);
        if (options.timing) options.timing->gating += seconds_since(t1);
    }
    return field;
}

DescriptorField dasc_descriptor(const Image& img, const SamplingPattern& pattern,
                                const ComputeOptions& options) {
    DescriptorField field = make_field(DescriptorKind::DASC, img, pattern);
    options.weights.validate();
    const auto& pairs = pattern.dasc_pairs;
    for (const auto& [s, t] : pairs) DESCA_REQUIRE(s != t, "DASC pair with identical endpoints");
    const int W = img.width;
    const int H = img.height;
    const std::size_t L = pairs.size();

    auto t0 = Clock::now();
    if (options.path == ComputePath::Fast) {
        const auto deltas = pattern.dasc_deltas();
        const OffsetCorrelationMaps maps = build_offset_maps(img, deltas, max_anchor(pairs), options.weights);
        std::vector<int> planes(L);
        for (std::size_t l = 0; l < L; ++l) planes[l] = maps.plane_index(pairs[l].second - pairs[l].first);
        if (options.timing) options.timing->offset_maps += seconds_since(t0);
        t0 = Clock::now();
#pragma omp parallel for schedule(static)
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                float* dst = field.at(x, y).data();
                for (std::size_t l = 0; l < L; ++l) {
                    const Offset s = pairs[l].first;
                    dst[l] = maps.at(planes[l], x + s.dx, y + s.dy);
                }
            }
        }
    } else {
        const DirectCorrelator corr(img, options.weights, max_anchor(pairs), 2 * max_anchor(pairs));
        if (options.timing) options.timing->offset_maps += seconds_since(t0);
        t0 = Clock::now();
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                float* dst = field.at(x, y).data();
                const Offset i{x, y};
                for (std::size_t l = 0; l < L; ++l) {
                    dst[l] = static_cast<float>(corr(i + pairs[l].first, i + pairs[l].second));
                }
            }
        }
    }
    if (options.timing) options.timing->pooling += seconds_since(t0);
    gate_and_normalize(field, options);
    return field;
}

DescriptorField sisca_descriptor(const Image& img, const SamplingPattern& pattern,
                                 const ComputeOptions& options) {
    return self_conv_descriptor(img, pattern, options, false);
}

DescriptorField desca_descriptor(const Image& img, const SamplingPattern& pattern,
                                 const ComputeOptions& options) {
    return self_conv_descriptor(img, pattern, options, true);
}

DescriptorField compute_descriptor(DescriptorKind kind, const Image& img,
                                   const SamplingPattern& pattern, const ComputeOptions& options) {
    switch (kind) {
    case DescriptorKind::LSS: return lss_descriptor(img, pattern, options);
    case DescriptorKind::DASC: return dasc_descriptor(img, pattern, options);
    case DescriptorKind::SiSCA: return sisca_descriptor(img, pattern, options);
    case DescriptorKind::DeSCA: return desca_descriptor(img, pattern, options);
    }
    throw ContractViolation("unknown descriptor kind");
}

DescriptorField compute_descriptor(DescriptorKind kind, const Image& img,
                                   const DescriptorParams& params, const ComputeOptions& options) {
    return compute_descriptor(kind, img, build_sampling_pattern(params), options);
}

} // namespace desca
