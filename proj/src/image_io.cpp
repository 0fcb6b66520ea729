#include "salseq/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "salseq/salmap.hpp"

namespace salseq {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    return out;
}

void write_pgm8_raw(const std::vector<std::uint8_t>& bytes, int w, int h,
                    const std::string& path) {
    auto out = open_out(path);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void png_chunk(std::ostream& out, const char type[4], const std::vector<std::uint8_t>& data) {
    auto be32 = [&](std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                             static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    be32(static_cast<std::uint32_t>(data.size()));
    out.write(type, 4);
    if (!data.empty())
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    be32(static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_pgm8(const DenseMap& m, const std::string& path) {
    std::vector<std::uint8_t> bytes(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        double v = std::clamp(m.values[i], 0.0, 1.0);
        bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    write_pgm8_raw(bytes, m.width, m.height, path);
}

void write_pgm8(const FixationMap& m, const std::string& path) {
    std::vector<std::uint8_t> bytes(m.grid.size());
    for (std::size_t i = 0; i < m.grid.size(); ++i) bytes[i] = m.grid[i] ? 255 : 0;
    write_pgm8_raw(bytes, m.width, m.height, path);
}

DenseMap read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string magic;
    in >> magic;
    if (magic != "P5") throw ParseError(path + ": not a binary PGM (P5)");
    auto next_token = [&]() -> long {
        // skip whitespace and '#' comments
        for (;;) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v;
        if (!(in >> v)) throw ParseError(path + ": truncated PGM header");
        return v;
    };
    long w = next_token(), h = next_token(), maxval = next_token();
    in.get();  // single whitespace after maxval
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw ParseError(path + ": invalid PGM header");
    DenseMap m(static_cast<int>(w), static_cast<int>(h));
    std::size_t n = m.size();
    if (maxval < 256) {
        std::vector<std::uint8_t> bytes(n);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
        if (!in) throw ParseError(path + ": truncated PGM data");
        for (std::size_t i = 0; i < n; ++i) m.values[i] = bytes[i] / static_cast<double>(maxval);
    } else {
        std::vector<std::uint8_t> bytes(2 * n);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(2 * n));
        if (!in) throw ParseError(path + ": truncated PGM data");
        for (std::size_t i = 0; i < n; ++i) {
            unsigned v = (static_cast<unsigned>(bytes[2 * i]) << 8) | bytes[2 * i + 1];
            m.values[i] = v / static_cast<double>(maxval);
        }
    }
    return m;
}

void write_png16(const DenseMap& m, const std::string& path) {
    const int w = m.width, h = m.height;
    // raw image: one filter byte (0) per scanline, then big-endian 16-bit samples
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(h) * (1 + 2 * w));
    std::size_t p = 0;
    for (int y = 0; y < h; ++y) {
        raw[p++] = 0;
        for (int x = 0; x < w; ++x) {
            double v = std::clamp(m.at(x, y), 0.0, 1.0);
            auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            raw[p++] = static_cast<std::uint8_t>(q >> 8);
            raw[p++] = static_cast<std::uint8_t>(q & 0xff);
        }
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw ParseError("png deflate failed");
    compressed.resize(bound);

    auto out = open_out(path);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<std::uint8_t> ihdr(13);
    auto put32 = [&](std::size_t off, std::uint32_t v) {
        ihdr[off] = static_cast<std::uint8_t>(v >> 24);
        ihdr[off + 1] = static_cast<std::uint8_t>(v >> 16);
        ihdr[off + 2] = static_cast<std::uint8_t>(v >> 8);
        ihdr[off + 3] = static_cast<std::uint8_t>(v);
    };
    put32(0, static_cast<std::uint32_t>(w));
    put32(4, static_cast<std::uint32_t>(h));
    ihdr[8] = 16;  // bit depth
    ihdr[9] = 0;   // grayscale
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    png_chunk(out, "IHDR", ihdr);
    png_chunk(out, "IDAT", compressed);
    png_chunk(out, "IEND", {});
}

}  // namespace salseq
