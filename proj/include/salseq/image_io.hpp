#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace salseq {

struct DenseMap;
struct FixationMap;

/// P5 PGM, 8-bit, values quantized by round(v * 255) from a [0,1] map.
void write_pgm8(const DenseMap& m, const std::string& path);
void write_pgm8(const FixationMap& m, const std::string& path);

/// Reads a binary P5 PGM (8- or 16-bit) into a [0,1]-scaled DenseMap.
DenseMap read_pgm(const std::string& path);

/// 16-bit grayscale PNG, values quantized by round(v * 65535).
void write_png16(const DenseMap& m, const std::string& path);

}  // namespace salseq
