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

#include "desca/field_io.hpp"

#include "desca/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace desca {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) throw FormatError("truncated descriptor header");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return static_cast<T>(v);
}

} // namespace

void write_field(std::ostream& out, const DescriptorField& field) {
    out.write(kFieldMagic, 4);
    put_le<std::uint16_t>(out, kFieldVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(field.kind));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.height));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.width));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.length));
    put_le<std::uint64_t>(out, field.params.seed);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(field.data.data()),
                  static_cast<std::streamsize>(field.data.size() * sizeof(float)));
    } else {
        for (float f : field.data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
    if (!out) throw FormatError("failed to write descriptor field");
}

void write_field(const std::filesystem::path& path, const DescriptorField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    write_field(out, field);
}

DescriptorField read_field(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFieldMagic, 4) != 0) throw FormatError("not a DSCA descriptor file");
    const auto version = get_le<std::uint16_t>(in);
    if (version != kFieldVersion) throw FormatError("unsupported DSCA version " + std::to_string(version));
    DescriptorField f;
    const auto kind = get_le<std::uint8_t>(in);
    if (kind > static_cast<std::uint8_t>(DescriptorKind::DeSCA)) throw FormatError("unknown descriptor kind");
    f.kind = static_cast<DescriptorKind>(kind);
    f.height = static_cast<int>(get_le<std::uint32_t>(in));
    f.width = static_cast<int>(get_le<std::uint32_t>(in));
    f.length = static_cast<int>(get_le<std::uint32_t>(in));
    f.params.seed = get_le<std::uint64_t>(in);
    const std::size_t count = static_cast<std::size_t>(f.width) * f.height * f.length;
    f.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) f.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(in));
    return f;
}

DescriptorField read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return read_field(in);
}

nlohmann::json field_sidecar(const DescriptorField& field, const SamplingPattern& pattern,
                             const FilterWeights& weights) {
    char digest[17];
    std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(field.pattern_digest));
    return {{"kind", kind_name(field.kind)},
            {"width", field.width},
            {"height", field.height},
            {"length", field.length},
            {"params", field.params},
            {"weights",
             {{"mode", weights.mode == FilterWeights::Mode::Guided ? "guided" : "uniform"},
              {"radius", weights.radius},
              {"epsilon", weights.epsilon}}},
            {"has_empty_bins", field.has_empty_bins},
            {"pattern_digest", digest},
            {"pattern", pattern_to_json(pattern)}};
}

void write_sidecar(const std::filesystem::path& path, const nlohmann::json& sidecar) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << sidecar.dump(2) << '\n';
}

} // namespace desca
