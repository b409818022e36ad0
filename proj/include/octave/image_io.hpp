#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace octave::io {

// Lossless single-channel rasters as binary PGM (P5).
// Label files use maxval 255 with the documented encoding
// (background=0, vessel=1, unannotated=255); intensity images use
// maxval 65535 (big-endian 16-bit samples, per the PGM format).

struct GrayImage8 {
    int64_t h = 0, w = 0;
    std::vector<uint8_t> v;
};

struct GrayImage16 {
    int64_t h = 0, w = 0;
    std::vector<uint16_t> v;
};

void write_pgm8(const std::filesystem::path& path, const GrayImage8& img);
GrayImage8 read_pgm8(const std::filesystem::path& path);

void write_pgm16(const std::filesystem::path& path, const GrayImage16& img);
GrayImage16 read_pgm16(const std::filesystem::path& path);

// Quantizes intensities in [0,1] to 16-bit samples and back.
GrayImage16 quantize16(const std::vector<double>& pix, int64_t h, int64_t w);
std::vector<double> dequantize16(const GrayImage16& img);

}  // namespace octave::io
