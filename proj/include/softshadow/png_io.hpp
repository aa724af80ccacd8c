#pragma once

// PNG persistence. Loading divides by 255 or 65535 depending on bit depth;
// saving clamps to [0,1] and quantizes with round-half-up. Grayscale files
// map to ScalarMap, color files to Image (gray input is replicated across
// channels, alpha is stripped). Soft masks are written as 16-bit grayscale
// to avoid 8-bit banding in penumbra gradients.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "softshadow/image.hpp"

namespace softshadow {

/// Raised for unreadable, malformed, or unsupported input files.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline uint16_t quantize(double v, uint16_t max_val) {
    double c = std::clamp(v, 0.0, 1.0);
    double q = std::floor(c * max_val + 0.5);  // round half up
    if (q > max_val) q = max_val;
    return static_cast<uint16_t>(q);
}

struct DecodedPng {
    int height = 0, width = 0, channels = 0;  // channels: 1 or 3
    std::vector<double> v;                    // height*width*channels, in [0,1]
};

inline DecodedPng read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("malformed PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    const int nch = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG color type in " + path.string());
    }

    const size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<uint8_t> raw(static_cast<size_t>(height) * row_bytes);
    std::vector<png_bytep> rows(height);
    for (int i = 0; i < height; ++i) rows[i] = raw.data() + static_cast<size_t>(i) * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    DecodedPng out;
    out.height = height;
    out.width = width;
    out.channels = nch;
    out.v.resize(static_cast<size_t>(height) * width * nch);
    const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (int i = 0; i < height; ++i) {
        const uint8_t* row = rows[i];
        for (size_t k = 0; k < static_cast<size_t>(width) * nch; ++k) {
            uint32_t q = depth == 16 ? (static_cast<uint32_t>(row[2 * k]) << 8) | row[2 * k + 1]
                                     : row[k];
            out.v[(static_cast<size_t>(i) * width * nch) + k] = q * scale;
        }
    }
    return out;
}

inline void write_png(const std::filesystem::path& path, int height, int width, int channels,
                      int bit_depth, const double* data) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed: " + path.string());
    }

    png_init_io(png, fp.get());
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const uint16_t max_val = bit_depth == 16 ? 65535 : 255;
    const size_t row_bytes = static_cast<size_t>(width) * channels * (bit_depth / 8);
    std::vector<uint8_t> row(row_bytes);
    for (int i = 0; i < height; ++i) {
        for (size_t k = 0; k < static_cast<size_t>(width) * channels; ++k) {
            uint16_t q = quantize(data[(static_cast<size_t>(i) * width * channels) + k], max_val);
            if (bit_depth == 16) {
                row[2 * k] = static_cast<uint8_t>(q >> 8);  // PNG 16-bit is big-endian
                row[2 * k + 1] = static_cast<uint8_t>(q & 0xff);
            } else {
                row[k] = static_cast<uint8_t>(q);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline Image load_image_png(const std::filesystem::path& path) {
    detail::DecodedPng d = detail::read_png(path);
    Image img(d.height, d.width);
    for (int i = 0; i < d.height; ++i)
        for (int j = 0; j < d.width; ++j)
            for (int c = 0; c < 3; ++c)
                img.at(i, j, c) =
                    d.channels == 1 ? d.v[static_cast<size_t>(i) * d.width + j]
                                    : d.v[(static_cast<size_t>(i) * d.width + j) * 3 + c];
    return img;
}

inline ScalarMap load_scalar_png(const std::filesystem::path& path) {
    detail::DecodedPng d = detail::read_png(path);
    if (d.channels != 1)
        throw IoError("expected single-channel PNG: " + path.string());
    ScalarMap m(d.height, d.width);
    m.data() = std::move(d.v);
    return m;
}

inline void save_image_png(const std::filesystem::path& path, const Image& img,
                           int bit_depth = 16) {
    require(bit_depth == 8 || bit_depth == 16, "save_image_png: bit depth must be 8 or 16");
    require(img.all_finite(), "save_image_png: image contains non-finite values");
    detail::write_png(path, img.height(), img.width(), 3, bit_depth, img.data().data());
}

inline void save_scalar_png(const std::filesystem::path& path, const ScalarMap& m,
                            int bit_depth = 16) {
    require(bit_depth == 8 || bit_depth == 16, "save_scalar_png: bit depth must be 8 or 16");
    require(m.all_finite(), "save_scalar_png: map contains non-finite values");
    detail::write_png(path, m.height(), m.width(), 1, bit_depth, m.data().data());
}

}  // namespace softshadow
