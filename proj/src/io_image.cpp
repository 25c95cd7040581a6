#include "flowcast/io_image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace flowcast {

namespace {

struct FileCloser {
    FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

uint8_t to_byte(float v) {
    const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

std::string lower_ext(const std::string& path) {
    const size_t dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string e = path.substr(dot + 1);
    for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

// Reads any PNG as 8-bit gray or RGB rows (alpha stripped, palette expanded).
std::vector<uint8_t> read_png_bytes(const std::string& path, int& w, int& h, int& ch) {
    FileCloser fc{std::fopen(path.c_str(), "rb")};
    if (!fc.f) throw IoError("read_png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("read_png: init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("read_png: init failed");
    }
    std::vector<uint8_t> data;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_png: corrupt file " + path);
    }
    png_init_io(png, fc.f);
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    ch = static_cast<int>(png_get_channels(png, info));
    if (ch != 1 && ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_png: unsupported channel count in " + path);
    }
    data.resize(static_cast<size_t>(w) * h * ch);
    rows.resize(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<size_t>(y)] = data.data() + static_cast<size_t>(y) * w * ch;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return data;
}

void write_png_bytes(const std::string& path, const uint8_t* data, int w, int h, int ch) {
    FileCloser fc{std::fopen(path.c_str(), "wb")};
    if (!fc.f) throw IoError("write_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("write_png: init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("write_png: init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_png: write failed for " + path);
    }
    png_init_io(png, fc.f);
    // Fixed settings so identical pixels always produce identical bytes.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_SUB);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<size_t>(y)] =
            const_cast<png_bytep>(data + static_cast<size_t>(y) * w * ch);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

Frame read_png(const std::string& path) {
    int w = 0, h = 0, ch = 0;
    const std::vector<uint8_t> bytes = read_png_bytes(path, w, h, ch);
    Frame f(w, h, ch);
    for (size_t i = 0; i < bytes.size(); ++i) f.data[i] = bytes[i] / 255.0f;
    return f;
}

void write_png(const std::string& path, const Frame& frame) {
    frame.validate();
    std::vector<uint8_t> bytes(frame.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(frame.data[i]);
    write_png_bytes(path, bytes.data(), frame.width, frame.height, frame.channels);
}

Mask read_mask_png(const std::string& path) {
    int w = 0, h = 0, ch = 0;
    const std::vector<uint8_t> bytes = read_png_bytes(path, w, h, ch);
    if (ch != 1) throw IoError("read_mask_png: mask must be grayscale: " + path);
    Mask m(w, h);
    for (size_t i = 0; i < bytes.size(); ++i) m.bits[i] = bytes[i] >= 128 ? 1 : 0;
    return m;
}

void write_mask_png(const std::string& path, const Mask& mask) {
    std::vector<uint8_t> bytes(mask.bits.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.bits[i] ? 255 : 0;
    write_png_bytes(path, bytes.data(), mask.width, mask.height, 1);
}

Frame read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_pnm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") throw IoError("read_pnm: bad magic in " + path);
    const int ch = magic == "P5" ? 1 : 3;
    auto next_int = [&]() {
        // Skips whitespace and '#' comments between header fields.
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
        int v = -1;
        in >> v;
        if (!in) throw IoError("read_pnm: bad header in " + path);
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    if (w <= 0 || h <= 0 || maxval != 255) throw IoError("read_pnm: unsupported header in " + path);
    in.get(); // single whitespace after maxval
    Frame f(w, h, ch);
    std::vector<uint8_t> bytes(f.data.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw IoError("read_pnm: truncated data in " + path);
    for (size_t i = 0; i < bytes.size(); ++i) f.data[i] = bytes[i] / 255.0f;
    return f;
}

void write_pnm(const std::string& path, const Frame& frame) {
    frame.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_pnm: cannot open " + path);
    out << (frame.channels == 1 ? "P5" : "P6") << "\n"
        << frame.width << " " << frame.height << "\n255\n";
    std::vector<uint8_t> bytes(frame.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(frame.data[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_pnm: write failed for " + path);
}

Frame read_frame(const std::string& path) {
    const std::string e = lower_ext(path);
    if (e == "png") return read_png(path);
    if (e == "pgm" || e == "ppm" || e == "pnm") return read_pnm(path);
    throw IoError("read_frame: unsupported extension: " + path);
}

void write_frame(const std::string& path, const Frame& frame) {
    const std::string e = lower_ext(path);
    if (e == "png") return write_png(path, frame);
    if (e == "pgm" || e == "ppm" || e == "pnm") return write_pnm(path, frame);
    throw IoError("write_frame: unsupported extension: " + path);
}

} // namespace flowcast
