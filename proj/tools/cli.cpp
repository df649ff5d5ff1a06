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

#include "cli.hpp"

#include "desca/error.hpp"
#include "desca/field_io.hpp"
#include "desca/image.hpp"
#include "desca/matching.hpp"
#include "desca/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace desca::cli {

namespace {

struct UsageError : Error {
    using Error::Error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string weight_mode_name(FilterWeights::Mode m) {
    return m == FilterWeights::Mode::Guided ? "guided" : "uniform";
}

FilterWeights::Mode parse_weight_mode(const std::string& s) {
    if (s == "guided") return FilterWeights::Mode::Guided;
    if (s == "uniform") return FilterWeights::Mode::Uniform;
    throw UsageError("unknown weights '" + s + "' (expected uniform or guided)");
}

ComputePath parse_path(const std::string& s) {
    if (s == "fast") return ComputePath::Fast;
    if (s == "direct") return ComputePath::Direct;
    throw UsageError("unknown path '" + s + "' (expected fast or direct)");
}

void parse_kinds(const std::vector<std::string>& names, RunConfig& c) {
    if (names.empty()) throw UsageError("no descriptor kind given");
    c.kinds.clear();
    c.raw_ssd = false;
    for (const auto& n : names) {
        if (n == "ssd") {
            c.raw_ssd = true;
            continue;
        }
        const auto k = parse_kind(n);
        if (!k) throw UsageError("unknown descriptor '" + n + "' (expected lss, dasc, sisca, desca)");
        c.kinds.push_back(*k);
    }
    if (c.raw_ssd && !c.kinds.empty()) throw UsageError("'ssd' cannot be combined with descriptor kinds");
    if (c.kinds.empty()) c.kinds.push_back(DescriptorKind::DeSCA);
}

void require_path(const std::filesystem::path& p, const char* flag) {
    if (p.empty()) throw UsageError(std::string("missing required ") + flag);
}

void apply_threads(const RunConfig& c) { set_num_threads(resolve_threads(c.threads)); }

std::filesystem::path sidecar_path(const std::filesystem::path& p) { return p.string() + ".json"; }

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

ComputeOptions compute_options(const RunConfig& c, StageTimes* timing = nullptr) {
    ComputeOptions o;
    o.weights = c.weights();
    o.path = c.path;
    o.timing = timing;
    return o;
}

void require_same_size(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw DataError("left and right images differ in size (" + std::to_string(a.width) + "x" +
                        std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                        std::to_string(b.height) + ")");
}

Image crop(const Image& img, int x0, int y0, int w, int h) {
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
    return out;
}

TimingReport timed_compute(DescriptorKind kind, const Image& img, const SamplingPattern& pattern,
                           const RunConfig& c, ComputePath path) {
    RunConfig local = c;
    local.path = path;
    TimingReport best;
    for (int rep = 0; rep < c.repeat; ++rep) {
        TimingReport t;
        t.width = img.width;
        t.height = img.height;
        t.threads = num_threads();
        const auto t0 = Clock::now();
        const DescriptorField f = compute_descriptor(kind, img, pattern, compute_options(local, &t.stages));
        t.total = seconds_since(t0);
        (void)f;
        if (rep == 0 || t.total < best.total) best = t;
    }
    return best;
}

} // namespace

FilterWeights RunConfig::weights() const {
    const int r = params.patch_radius();
    return weight_mode == FilterWeights::Mode::Guided ? FilterWeights::guided(r, epsilon)
                                                      : FilterWeights::uniform(r);
}

void RunConfig::validate() const {
    try {
        params.validate();
        weights().validate();
    } catch (const ContractViolation& e) {
        throw UsageError(e.what());
    }
    if (kinds.empty()) throw UsageError("no descriptor kind given");
    if (max_disp < 0) throw UsageError("--max-disp must be >= 0");
    if (!(threshold >= 0.0)) throw UsageError("--threshold must be >= 0");
    if (threads < 0) throw UsageError("--threads must be >= 0");
    if (crop < 1) throw UsageError("--crop must be >= 1");
    if (repeat < 1) throw UsageError("--repeat must be >= 1");
}

void to_json(nlohmann::json& j, const RunConfig& c) {
    nlohmann::json desc;
    if (c.raw_ssd) {
        desc = "ssd";
    } else if (c.kinds.size() == 1) {
        desc = kind_name(c.kinds.front());
    } else {
        desc = nlohmann::json::array();
        for (auto k : c.kinds) desc.push_back(kind_name(k));
    }
    j = {{"desc", desc},
         {"params", c.params},
         {"weights", weight_mode_name(c.weight_mode)},
         {"epsilon", c.epsilon},
         {"path", c.path == ComputePath::Fast ? "fast" : "direct"},
         {"input", c.input.string()},
         {"left", c.left.string()},
         {"right", c.right.string()},
         {"gt", c.gt.string()},
         {"mask", c.mask.string()},
         {"out", c.out.string()},
         {"fields", c.fields.string()},
         {"max_disp", c.max_disp},
         {"threshold", c.threshold},
         {"threads", c.threads},
         {"x", c.x},
         {"y", c.y},
         {"row", c.row},
         {"crop", c.crop},
         {"scaling", c.scaling},
         {"repeat", c.repeat}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    if (j.contains("desc")) {
        const auto& d = j.at("desc");
        std::vector<std::string> names;
        if (d.is_array()) names = d.get<std::vector<std::string>>();
        else names.push_back(d.get<std::string>());
        parse_kinds(names, c);
    }
    if (j.contains("params")) {
        DescriptorParams p = c.params;
        from_json(j.at("params"), p);
        c.params = p;
    }
    if (j.contains("weights")) c.weight_mode = parse_weight_mode(j.at("weights").get<std::string>());
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("path")) c.path = parse_path(j.at("path").get<std::string>());
    auto path_field = [&](const char* key, std::filesystem::path& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::string>();
    };
    path_field("input", c.input);
    path_field("left", c.left);
    path_field("right", c.right);
    path_field("gt", c.gt);
    path_field("mask", c.mask);
    path_field("out", c.out);
    path_field("fields", c.fields);
    c.max_disp = j.value("max_disp", c.max_disp);
    c.threshold = j.value("threshold", c.threshold);
    c.threads = j.value("threads", c.threads);
    c.x = j.value("x", c.x);
    c.y = j.value("y", c.y);
    c.row = j.value("row", c.row);
    c.crop = j.value("crop", c.crop);
    c.scaling = j.value("scaling", c.scaling);
    c.repeat = j.value("repeat", c.repeat);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + ": " + e.what());
    }
    RunConfig c;
    try {
        c = j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + ": " + e.what());
    }
    return c;
}

void to_json(nlohmann::json& j, const TimingReport& t) {
    j = {{"width", t.width},
         {"height", t.height},
         {"threads", t.threads},
         {"stages",
          {{"offset_maps", t.stages.offset_maps},
           {"pooling", t.stages.pooling},
           {"gating", t.stages.gating},
           {"matching", t.stages.matching}}},
         {"total", t.total}};
}

int cmd_compute(const RunConfig& c, std::ostream& out) {
    c.validate();
    require_path(c.input, "--input");
    require_path(c.out, "--out");
    if (c.raw_ssd) throw UsageError("compute needs a descriptor kind, not 'ssd'");
    apply_threads(c);
    const Image img = load_image(c.input);
    const SamplingPattern pattern = build_sampling_pattern(c.params);
    const DescriptorField field = compute_descriptor(c.kind(), img, pattern, compute_options(c));
    write_field(c.out, field);
    write_sidecar(sidecar_path(c.out), field_sidecar(field, pattern, c.weights()));
    out << nlohmann::json{{"kind", kind_name(field.kind)},
                          {"width", field.width},
                          {"height", field.height},
                          {"length", field.length},
                          {"converted_from_color", img.converted_from_color},
                          {"out", c.out.string()}}
               .dump()
        << '\n';
    return kExitOk;
}

int cmd_stereo(const RunConfig& c, std::ostream& out) {
    c.validate();
    require_path(c.left, "--left");
    require_path(c.right, "--right");
    require_path(c.out, "--out");
    apply_threads(c);
    const Image left = load_image(c.left);
    const Image right = load_image(c.right);
    require_same_size(left, right);

    StageTimes times;
    CostVolume vol;
    if (c.raw_ssd) {
        const auto t0 = Clock::now();
        vol = build_ssd_cost_volume(left, right, c.params.patch_radius(), c.max_disp);
        times.matching = seconds_since(t0);
    } else {
        // Both fields must come from the same random pattern to be comparable.
        const SamplingPattern pattern = build_sampling_pattern(c.params);
        const DescriptorField lf = compute_descriptor(c.kind(), left, pattern, compute_options(c, &times));
        const DescriptorField rf = compute_descriptor(c.kind(), right, pattern, compute_options(c, &times));
        if (!c.fields.empty()) {
            for (const auto& [field, side] : {std::pair{&lf, "left"}, {&rf, "right"}}) {
                const std::filesystem::path p = c.fields.string() + "_" + side + ".dsca";
                write_field(p, *field);
                write_sidecar(sidecar_path(p), field_sidecar(*field, pattern, c.weights()));
            }
        }
        const auto t0 = Clock::now();
        vol = build_cost_volume(lf, rf, c.max_disp);
        times.matching = seconds_since(t0);
    }
    const DisparityMap disp = wta_disparity(vol);
    save_disparity(c.out, disp);

    nlohmann::json summary{{"desc", c.raw_ssd ? std::string("ssd") : std::string(kind_name(c.kind()))},
                           {"width", left.width},
                           {"height", left.height},
                           {"max_disp", c.max_disp},
                           {"out", c.out.string()}};
    if (!c.gt.empty()) {
        const DisparityMap gt = load_disparity(c.gt);
        if (gt.width != left.width || gt.height != left.height)
            throw DataError("ground truth size does not match the images");
        std::vector<std::uint8_t> mask = c.mask.empty()
                                             ? std::vector<std::uint8_t>(gt.values.size(), 1)
                                             : load_mask(c.mask, gt.width, gt.height);
        const EvalReport report = bad_pixel_rate(disp, gt, mask, c.threshold);
        std::filesystem::path report_path = c.out;
        report_path.replace_extension(".json");
        write_json(report_path, report);
        summary["report"] = report;
        summary["report_path"] = report_path.string();
    }
    out << summary.dump() << '\n';
    return kExitOk;
}

int cmd_profile(const RunConfig& c, std::ostream& out) {
    c.validate();
    require_path(c.left, "--left");
    require_path(c.right, "--right");
    if (c.raw_ssd) throw UsageError("profile needs descriptor kinds, not 'ssd'");
    apply_threads(c);
    const Image left = load_image(c.left);
    const Image right = load_image(c.right);
    require_same_size(left, right);
    const int row = c.row >= 0 ? c.row : c.y;
    if (c.x < 0 || c.y < 0 || c.x >= left.width || c.y >= left.height || row >= left.height)
        throw UsageError("profile pixel (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ") row " +
                         std::to_string(row) + " is outside the " + std::to_string(left.width) + "x" +
                         std::to_string(left.height) + " image");
    if (c.kinds.size() > 1 && c.out.empty()) throw UsageError("several kinds need --out");

    const SamplingPattern pattern = build_sampling_pattern(c.params);
    for (const DescriptorKind kind : c.kinds) {
        const DescriptorField lf = compute_descriptor(kind, left, pattern, compute_options(c));
        const DescriptorField rf = compute_descriptor(kind, right, pattern, compute_options(c));
        const auto profile = cost_profile(lf, rf, c.x, c.y, row);

        std::ostringstream csv;
        csv.precision(9);
        csv << "x,cost\n";
        for (const auto& s : profile) csv << s.x << ',' << s.cost << '\n';

        if (c.out.empty()) {
            out << csv.str();
            continue;
        }
        std::filesystem::path dst = c.out;
        if (c.kinds.size() > 1) {
            dst = c.out.parent_path() / (c.out.stem().string() + "_" + std::string(kind_name(kind)) + ".csv");
        }
        std::ofstream file(dst);
        if (!file) throw FormatError("cannot write " + dst.string());
        file << csv.str();
        out << nlohmann::json{{"desc", kind_name(kind)}, {"out", dst.string()}, {"samples", profile.size()}}.dump()
            << '\n';
    }
    return kExitOk;
}

int cmd_bench(const RunConfig& c, std::ostream& out) {
    c.validate();
    require_path(c.input, "--input");
    if (c.raw_ssd) throw UsageError("bench needs a descriptor kind, not 'ssd'");
    apply_threads(c);
    const Image img = load_image(c.input);
    const int cw = std::min(c.crop, img.width);
    const int ch = std::min(c.crop, img.height);
    const Image small = crop(img, (img.width - cw) / 2, (img.height - ch) / 2, cw, ch);

    const SamplingPattern pattern = build_sampling_pattern(c.params);
    const TimingReport fast = timed_compute(c.kind(), img, pattern, c, ComputePath::Fast);
    const TimingReport fast_crop = timed_compute(c.kind(), small, pattern, c, ComputePath::Fast);
    const TimingReport direct_crop = timed_compute(c.kind(), small, pattern, c, ComputePath::Direct);

    nlohmann::json report{{"desc", kind_name(c.kind())},
                          {"weights", weight_mode_name(c.weight_mode)},
                          {"threads", num_threads()},
                          {"fast", fast},
                          {"fast_crop", fast_crop},
                          {"direct_crop", direct_crop},
                          {"direct_over_fast", direct_crop.total / std::max(fast_crop.total, 1e-12)}};

    if (c.scaling) {
        // Patch size M_F -> 2 M_F - 1, i.e. the patch radius doubles.
        RunConfig big = c;
        big.params.patch_size = 2 * c.params.patch_size - 1;
        big.validate();
        const SamplingPattern big_pattern = build_sampling_pattern(big.params);
        const TimingReport fast_big = timed_compute(c.kind(), img, big_pattern, big, ComputePath::Fast);
        const TimingReport direct_big = timed_compute(c.kind(), small, big_pattern, big, ComputePath::Direct);
        report["scaling"] = {{"patch_size_from", c.params.patch_size},
                             {"patch_size_to", big.params.patch_size},
                             {"fast", fast_big},
                             {"direct_crop", direct_big},
                             {"fast_ratio", fast_big.total / std::max(fast.total, 1e-12)},
                             {"direct_ratio", direct_big.total / std::max(direct_crop.total, 1e-12)}};
    }
    if (!c.out.empty()) write_json(c.out, report);
    out << report.dump() << '\n';
    return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dense self-convolutional descriptors: compute, match, profile, benchmark", "desca"};
    app.require_subcommand(1);

    std::optional<std::string> config_path, weights, path;
    std::vector<std::string> desc;
    std::optional<double> epsilon, threshold, sigma_c;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_disp, threads, patch_size, support_size, kernels, levels, radii, angles, x, y, row,
        crop_side, repeat;
    std::optional<std::string> input, left, right, gt, mask, out_path, fields;
    bool scaling = false;
    bool dump_config = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration; flags override it");
        sub->add_option("--desc", desc, "descriptor kind(s): lss, dasc, sisca, desca")->delimiter(',');
        sub->add_option("--weights", weights, "patch weights: uniform or guided");
        sub->add_option("--epsilon", epsilon, "guided filter smoothness");
        sub->add_option("--seed", seed, "sampling pattern seed");
        sub->add_option("--sigma-c", sigma_c, "gating bandwidth");
        sub->add_option("--patch-size", patch_size, "patch size M_F (odd)");
        sub->add_option("--support-size", support_size, "support window size M_R (odd)");
        sub->add_option("--kernels", kernels, "number of random kernels");
        sub->add_option("--levels", levels, "pyramid levels");
        sub->add_option("--radii", radii, "log-polar radii");
        sub->add_option("--angles", angles, "log-polar angles");
        sub->add_option("--path", path, "fast or direct");
        sub->add_option("--threads", threads, "worker threads (default: DESCA_THREADS, then all cores)");
        sub->add_option("--out", out_path, "output file");
        sub->add_flag("--dump-config", dump_config, "print the effective configuration as JSON and exit");
    };

    CLI::App* compute = app.add_subcommand("compute", "compute a dense descriptor field");
    add_common(compute);
    compute->add_option("--input", input, "input image (PGM/PPM/PFM)");

    CLI::App* stereo = app.add_subcommand("stereo", "WTA stereo matching with optional evaluation");
    add_common(stereo);
    stereo->add_option("--left", left, "left image");
    stereo->add_option("--right", right, "right image");
    stereo->add_option("--gt", gt, "ground-truth disparity (PFM, or PGM with 0 = unknown)");
    stereo->add_option("--mask", mask, "evaluation mask (nonzero = evaluate)");
    stereo->add_option("--max-disp", max_disp, "largest disparity searched");
    stereo->add_option("--threshold", threshold, "bad-pixel threshold in pixels");
    stereo->add_option("--fields", fields, "also write PREFIX_left.dsca and PREFIX_right.dsca");

    CLI::App* profile = app.add_subcommand("profile", "matching cost along a scanline");
    add_common(profile);
    profile->add_option("--left", left, "left image");
    profile->add_option("--right", right, "right image");
    profile->add_option("--x", x, "reference pixel column");
    profile->add_option("--y", y, "reference pixel row");
    profile->add_option("--row", row, "scanline searched in the right image (default: --y)");

    CLI::App* bench = app.add_subcommand("bench", "time the fast path against the direct path");
    add_common(bench);
    bench->add_option("--input", input, "input image");
    bench->add_option("--crop", crop_side, "side of the centered crop used for the direct path");
    bench->add_flag("--scaling", scaling, "also time patch size 2*M_F-1");
    bench->add_option("--repeat", repeat, "report the fastest of N runs per measurement");

    auto report_error = [&](const char* kind, const std::string& message, int code) {
        err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", e.what(), kExitUsage);
    }

    try {
        RunConfig c = config_path ? load_config(*config_path) : RunConfig{};
        if (!desc.empty()) parse_kinds(desc, c);
        if (weights) c.weight_mode = parse_weight_mode(*weights);
        if (epsilon) c.epsilon = *epsilon;
        if (seed) c.params.seed = *seed;
        if (sigma_c) c.params.sigma_c = *sigma_c;
        if (patch_size) c.params.patch_size = *patch_size;
        if (support_size) c.params.support_size = *support_size;
        if (kernels) c.params.num_kernels = *kernels;
        if (levels) c.params.pyramid_levels = *levels;
        if (radii) c.params.num_radii = *radii;
        if (angles) c.params.num_angles = *angles;
        if (path) c.path = parse_path(*path);
        if (threads) c.threads = *threads;
        if (input) c.input = *input;
        if (left) c.left = *left;
        if (right) c.right = *right;
        if (gt) c.gt = *gt;
        if (mask) c.mask = *mask;
        if (out_path) c.out = *out_path;
        if (fields) c.fields = *fields;
        if (max_disp) c.max_disp = *max_disp;
        if (threshold) c.threshold = *threshold;
        if (x) c.x = *x;
        if (y) c.y = *y;
        if (row) c.row = *row;
        if (crop_side) c.crop = *crop_side;
        if (scaling) c.scaling = true;
        if (repeat) c.repeat = *repeat;

        if (dump_config) {
            c.validate();
            out << nlohmann::json(c).dump(2) << '\n';
            return kExitOk;
        }
        if (compute->parsed()) return cmd_compute(c, out);
        if (stereo->parsed()) {
            if (c.kinds.size() > 1) throw UsageError("stereo takes a single descriptor kind");
            return cmd_stereo(c, out);
        }
        if (profile->parsed()) return cmd_profile(c, out);
        if (c.kinds.size() > 1) throw UsageError("bench takes a single descriptor kind");
        return cmd_bench(c, out);
    } catch (const UsageError& e) {
        return report_error("usage", e.what(), kExitUsage);
    } catch (const ContractViolation& e) {
        return report_error("usage", e.what(), kExitUsage);
    } catch (const FormatError& e) {
        return report_error("data", e.what(), kExitData);
    } catch (const DataError& e) {
        return report_error("data", e.what(), kExitData);
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), kExitData);
    }
}

} // namespace desca::cli
