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
#include "desca/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace desca {

inline constexpr char kFieldMagic[4] = {'D', 'S', 'C', 'A'};
inline constexpr std::uint16_t kFieldVersion = 1;

/// Binary layout (little-endian, packed):
///   "DSCA" | u16 version | u8 kind | u32 H | u32 W | u32 L | u64 seed | H*W*L f32
void write_field(std::ostream& out, const DescriptorField& field);
void write_field(const std::filesystem::path& path, const DescriptorField& field);
DescriptorField read_field(std::istream& in);
DescriptorField read_field(const std::filesystem::path& path);

/// Sidecar with the full parameters, pattern digest and explicit pattern geometry.
nlohmann::json field_sidecar(const DescriptorField& field, const SamplingPattern& pattern,
                             const FilterWeights& weights);
void write_sidecar(const std::filesystem::path& path, const nlohmann::json& sidecar);

} // namespace desca
