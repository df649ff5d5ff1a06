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

#include "desca/image.hpp"

#include "desca/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace desca {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            if (!tok.empty()) break;
        } else {
            tok.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    if (tok.empty()) throw FormatError("unexpected end of header");
    return tok;
}

int parse_positive(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size() || v <= 0 || v > (1L << 30)) throw FormatError("");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw FormatError(std::string("bad ") + what + " in header: '" + tok + "'");
    }
}

std::ifstream open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return in;
}

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

} // namespace

Image::Image(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

double Image::clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return data[static_cast<std::size_t>(y) * width + x];
}

FloatGrid read_pfm(const std::filesystem::path& path) {
    auto in = open_binary(path);
    const std::string magic = next_token(in);
    FloatGrid grid;
    if (magic == "Pf") {
        grid.channels = 1;
    } else if (magic == "PF") {
        grid.channels = 3;
    } else {
        throw FormatError("not a PFM file: " + path.string());
    }
    grid.width = parse_positive(next_token(in), "width");
    grid.height = parse_positive(next_token(in), "height");
    const std::string scale_tok = next_token(in);
    double scale = 0.0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        throw FormatError("bad PFM scale: '" + scale_tok + "'");
    }
    if (scale == 0.0) throw FormatError("PFM scale must be non-zero");
    const bool little = scale < 0.0;

    const std::size_t count =
        static_cast<std::size_t>(grid.width) * grid.height * grid.channels;
    std::vector<float> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
    if (static_cast<std::size_t>(in.gcount()) != count * 4)
        throw FormatError("truncated PFM data in " + path.string());
    const bool swap = little != (std::endian::native == std::endian::little);
    if (swap) {
        for (auto& v : raw) {
            std::uint32_t u;
            std::memcpy(&u, &v, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&v, &u, 4);
        }
    }
    // PFM rows are stored bottom to top.
    grid.data.resize(count);
    const std::size_t row_len = static_cast<std::size_t>(grid.width) * grid.channels;
    for (int y = 0; y < grid.height; ++y) {
        std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>((grid.height - 1 - y) * row_len),
                    row_len, grid.data.begin() + static_cast<std::ptrdiff_t>(y * row_len));
    }
    return grid;
}

void write_pfm(const std::filesystem::path& path, const FloatGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << (grid.channels == 3 ? "PF" : "Pf") << '\n'
        << grid.width << ' ' << grid.height << '\n'
        << (std::endian::native == std::endian::little ? "-1.0" : "1.0") << '\n';
    const std::size_t row_len = static_cast<std::size_t>(grid.width) * grid.channels;
    for (int y = grid.height - 1; y >= 0; --y) {
        out.write(reinterpret_cast<const char*>(grid.data.data() + y * row_len),
                  static_cast<std::streamsize>(row_len * 4));
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

PixelGrid read_pnm(const std::filesystem::path& path) {
    auto in = open_binary(path);
    const std::string magic = next_token(in);
    PixelGrid grid;
    if (magic == "P5") {
        grid.channels = 1;
    } else if (magic == "P6") {
        grid.channels = 3;
    } else {
        throw FormatError("not a binary PGM/PPM file: " + path.string());
    }
    grid.width = parse_positive(next_token(in), "width");
    grid.height = parse_positive(next_token(in), "height");
    grid.maxval = parse_positive(next_token(in), "maxval");
    if (grid.maxval > 65535) throw FormatError("maxval exceeds 65535");
    // next_token consumed the single whitespace byte after maxval

    const std::size_t count =
        static_cast<std::size_t>(grid.width) * grid.height * grid.channels;
    const std::size_t bytes_per = grid.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw FormatError("truncated pixel data in " + path.string());
    grid.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid.data[i] = bytes_per == 2
                           ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1])
                           : raw[i];
    }
    return grid;
}

void write_pgm(const std::filesystem::path& path, const PixelGrid& grid) {
    if (grid.channels != 1) throw ContractViolation("write_pgm expects one channel");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "P5\n" << grid.width << ' ' << grid.height << '\n' << grid.maxval << '\n';
    if (grid.maxval > 255) {
        for (auto v : grid.data) {
            const char be[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
            out.write(be, 2);
        }
    } else {
        for (auto v : grid.data) out.put(static_cast<char>(v));
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

ImageFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".pfm" ? ImageFormat::PFM : ImageFormat::PGM;
}

Image load_image(const std::filesystem::path& path, ImageFormat format, double pfm_scale) {
    Image img;
    if (format == ImageFormat::PGM) {
        const PixelGrid g = read_pnm(path);
        img = Image(g.width, g.height);
        img.converted_from_color = g.channels == 3;
        const double inv = 1.0 / g.maxval;
        for (std::size_t i = 0; i < img.size(); ++i) {
            if (g.channels == 3) {
                img.data[i] = luminance(g.data[3 * i], g.data[3 * i + 1], g.data[3 * i + 2]) * inv;
            } else {
                img.data[i] = g.data[i] * inv;
            }
            img.data[i] = std::clamp(img.data[i], 0.0, 1.0);
        }
        return img;
    }

    const FloatGrid g = read_pfm(path);
    img = Image(g.width, g.height);
    img.converted_from_color = g.channels == 3;
    bool any_invalid = false;
    std::vector<std::uint8_t> valid(img.size(), 1);
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = g.channels == 3
                       ? luminance(g.data[3 * i], g.data[3 * i + 1], g.data[3 * i + 2])
                       : g.data[i];
        if (!std::isfinite(v)) {
            valid[i] = 0;
            any_invalid = true;
            v = 0.0;
        }
        img.data[i] = std::clamp(v * pfm_scale, 0.0, 1.0);
    }
    if (any_invalid) img.valid = std::move(valid);
    return img;
}

Image load_image(const std::filesystem::path& path) {
    return load_image(path, format_from_path(path));
}

void save_image(const std::filesystem::path& path, const Image& img, int maxval) {
    DESCA_REQUIRE(maxval > 0 && maxval <= 65535, "maxval must be in [1, 65535]");
    PixelGrid g;
    g.width = img.width;
    g.height = img.height;
    g.maxval = maxval;
    g.data.resize(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        g.data[i] = static_cast<std::uint16_t>(
            std::lround(std::clamp(img.data[i], 0.0, 1.0) * maxval));
    }
    write_pgm(path, g);
}

Image pad_replicate(const Image& img, int margin) {
    DESCA_REQUIRE(margin >= 0, "margin must be non-negative");
    DESCA_REQUIRE(!img.empty(), "cannot pad an empty image");
    Image out(img.width + 2 * margin, img.height + 2 * margin);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            out.at(x, y) = img.clamped(x - margin, y - margin);
        }
    }
    return out;
}

} // namespace desca
