#include "octave/image_io.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "octave/error.hpp"

namespace octave::io {

namespace {

void write_header(std::ofstream& f, int64_t w, int64_t h, int maxval) {
    f << "P5\n" << w << " " << h << "\n" << maxval << "\n";
}

int read_token(std::istream& f) {
    // skips whitespace and '#' comments per the PGM grammar
    while (true) {
        int c = f.peek();
        if (c == '#') {
            std::string line;
            std::getline(f, line);
        } else if (std::isspace(c)) {
            f.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(f >> value)) throw io_error("pgm: malformed header");
    return value;
}

struct Header {
    int64_t w, h;
    int maxval;
};

Header read_header(std::istream& f, const std::filesystem::path& path) {
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '5') throw io_error("pgm: " + path.string() + " is not binary PGM");
    Header h{};
    h.w = read_token(f);
    h.h = read_token(f);
    h.maxval = read_token(f);
    f.get();  // single whitespace after maxval
    if (h.w <= 0 || h.h <= 0) throw io_error("pgm: " + path.string() + " has bad dimensions");
    return h;
}

}  // namespace

void write_pgm8(const std::filesystem::path& path, const GrayImage8& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write " + path.string());
    write_header(f, img.w, img.h, 255);
    f.write(reinterpret_cast<const char*>(img.v.data()), static_cast<std::streamsize>(img.v.size()));
    if (!f) throw io_error("short write to " + path.string());
}

GrayImage8 read_pgm8(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot read " + path.string());
    Header h = read_header(f, path);
    if (h.maxval != 255) throw io_error("pgm: " + path.string() + " is not 8-bit");
    GrayImage8 img{h.h, h.w, std::vector<uint8_t>(static_cast<size_t>(h.w * h.h))};
    f.read(reinterpret_cast<char*>(img.v.data()), static_cast<std::streamsize>(img.v.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.v.size()))
        throw io_error("pgm: " + path.string() + " truncated");
    return img;
}

void write_pgm16(const std::filesystem::path& path, const GrayImage16& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write " + path.string());
    write_header(f, img.w, img.h, 65535);
    std::vector<uint8_t> buf(img.v.size() * 2);
    for (size_t i = 0; i < img.v.size(); ++i) {
        buf[2 * i] = static_cast<uint8_t>(img.v[i] >> 8);  // big-endian per spec
        buf[2 * i + 1] = static_cast<uint8_t>(img.v[i] & 0xff);
    }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw io_error("short write to " + path.string());
}

GrayImage16 read_pgm16(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot read " + path.string());
    Header h = read_header(f, path);
    if (h.maxval != 65535) throw io_error("pgm: " + path.string() + " is not 16-bit");
    GrayImage16 img{h.h, h.w, std::vector<uint16_t>(static_cast<size_t>(h.w * h.h))};
    std::vector<uint8_t> buf(img.v.size() * 2);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() != static_cast<std::streamsize>(buf.size()))
        throw io_error("pgm: " + path.string() + " truncated");
    for (size_t i = 0; i < img.v.size(); ++i)
        img.v[i] = static_cast<uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    return img;
}

GrayImage16 quantize16(const std::vector<double>& pix, int64_t h, int64_t w) {
    GrayImage16 img{h, w, std::vector<uint16_t>(pix.size())};
    for (size_t i = 0; i < pix.size(); ++i) {
        double v = pix[i];
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        img.v[i] = static_cast<uint16_t>(std::lround(v * 65535.0));
    }
    return img;
}

std::vector<double> dequantize16(const GrayImage16& img) {
    std::vector<double> out(img.v.size());
    for (size_t i = 0; i < img.v.size(); ++i) out[i] = static_cast<double>(img.v[i]) / 65535.0;
    return out;
}

}  // namespace octave::io
