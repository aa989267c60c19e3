#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "thinpaint/core/image.hpp"

namespace thinpaint {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace detail

/// Load a PNG as a binary mask: values strictly greater than `threshold` become
/// foreground. Color images are converted with BT.601 luma (0.299 R + 0.587 G +
/// 0.114 B) before thresholding. Only 8-bit images are accepted.
inline BinaryMask load_mask(const std::string& path, int threshold = 127) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("load_mask: cannot open '" + path + "'");

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw DataError("load_mask: '" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("load_mask: libpng init failed for '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("load_mask: libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("load_mask: failed to decode '" + path + "'");
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("load_mask: unsupported bit depth 16 in '" + path + "' (8-bit only)");
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const png_size_t rowbytes = png_get_rowbytes(png, info);
    const int channels = png_get_channels(png, info);
    std::vector<png_byte> data(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = data.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels != 1 && channels != 3)
        throw DataError("load_mask: unsupported channel count " + std::to_string(channels) +
                        " in '" + path + "'");

    BinaryMask mask(static_cast<int>(height), static_cast<int>(width));
    for (png_uint_32 r = 0; r < height; ++r) {
        const png_byte* row = data.data() + r * rowbytes;
        for (png_uint_32 c = 0; c < width; ++c) {
            double value;
            if (channels == 1) {
                value = row[c];
            } else {
                const png_byte* px = row + 3 * c;
                value = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            }
            mask(static_cast<int>(r), static_cast<int>(c)) =
                value > static_cast<double>(threshold) ? 1 : 0;
        }
    }
    return mask;
}

/// Save a mask as an 8-bit grayscale PNG with foreground = 255, background = 0.
inline void save_mask(const BinaryMask& mask, const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("save_mask: cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("save_mask: libpng init failed for '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("save_mask: libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("save_mask: failed to write '" + path + "'");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width()),
                 static_cast<png_uint_32>(mask.height()), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(mask.width()));
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) row[c] = mask.at(r, c) ? 255 : 0;
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Save an RGB overlay: the base mask in white and `highlight` pixels in red.
inline void save_overlay(const BinaryMask& base, const BinaryMask& highlight,
                         const std::string& path) {
    if (base.height() != highlight.height() || base.width() != highlight.width())
        throw DataError("save_overlay: shape mismatch");
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("save_overlay: cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("save_overlay: libpng init failed for '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("save_overlay: libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("save_overlay: failed to write '" + path + "'");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(base.width()),
                 static_cast<png_uint_32>(base.height()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(base.width()) * 3);
    for (int r = 0; r < base.height(); ++r) {
        for (int c = 0; c < base.width(); ++c) {
            png_byte* px = row.data() + 3 * c;
            if (highlight.at(r, c)) {
                px[0] = 255;
                px[1] = 0;
                px[2] = 0;
            } else if (base.at(r, c)) {
                px[0] = px[1] = px[2] = 255;
            } else {
                px[0] = px[1] = px[2] = 0;
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace thinpaint
