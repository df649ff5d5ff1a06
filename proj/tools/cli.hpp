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
#include "desca/filter.hpp"
#include "desca/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace desca::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct RunConfig {
    std::vector<DescriptorKind> kinds{DescriptorKind::DeSCA};
    bool raw_ssd = false;  ///< stereo only: intensity SSD baseline in place of descriptors
    DescriptorParams params;
    FilterWeights::Mode weight_mode = FilterWeights::Mode::Guided;
    double epsilon = 0.03 * 0.03;
    ComputePath path = ComputePath::Fast;

    std::filesystem::path input, left, right, gt, mask, out, fields;
    int max_disp = 16;
    double threshold = 1.0;
    int threads = 0;

    int x = -1, y = -1, row = -1;  ///< profile
    int crop = 64;                 ///< bench: side of the direct-path crop
    bool scaling = false;          ///< bench: also time M_F = 2*M_F - 1
    int repeat = 1;                ///< bench: keep the fastest of this many runs

    [[nodiscard]] FilterWeights weights() const;
    [[nodiscard]] DescriptorKind kind() const { return kinds.front(); }
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_config(const std::filesystem::path& path);

struct TimingReport {
    int width = 0, height = 0, threads = 1;
    StageTimes stages;
    double total = 0.0;  ///< wall time of the whole run
};
void to_json(nlohmann::json& j, const TimingReport& t);

int cmd_compute(const RunConfig& config, std::ostream& out);
int cmd_stereo(const RunConfig& config, std::ostream& out);
int cmd_profile(const RunConfig& config, std::ostream& out);
int cmd_bench(const RunConfig& config, std::ostream& out);

/// Parses argv, dispatches, and maps failures to exit codes. Diagnostics go to `err`
/// as one JSON object per line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace desca::cli
