#ifndef BOPASK_PNG_IO_HPP
#define BOPASK_PNG_IO_HPP

#include <png.h>

#include <cstdio>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bopask/core.hpp"

namespace bopask {

/// Row-major 16-bit single-channel image, the BOP depth map encoding.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> data;

    std::uint16_t at(int v, int u) const {
        return data[static_cast<std::size_t>(v) * width + u];
    }
    std::uint16_t& at(int v, int u) {
        return data[static_cast<std::size_t>(v) * width + u];
    }
};

namespace detail {
struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace detail

inline DepthImage load_depth_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IngestError(IngestCode::missing, "cannot open depth PNG: " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IngestError(IngestCode::shape, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IngestError(IngestCode::shape, "corrupt depth PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IngestError(IngestCode::shape,
                          "depth PNG must be 16-bit single channel: " + path);
    }
    DepthImage img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.data.resize(static_cast<std::size_t>(img.width) * img.height);

    png_set_swap(png);  // PNG is big-endian on disk
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int r = 0; r < img.height; ++r)
        rows[static_cast<std::size_t>(r)] =
            reinterpret_cast<png_bytep>(img.data.data() +
                                        static_cast<std::size_t>(r) * img.width);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void save_depth_png(const DepthImage& img, const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IngestError(IngestCode::missing, "cannot write depth PNG: " + path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IngestError(IngestCode::shape, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IngestError(IngestCode::shape, "failed writing depth PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);

    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    auto* base = const_cast<std::uint16_t*>(img.data.data());
    for (int r = 0; r < img.height; ++r)
        rows[static_cast<std::size_t>(r)] = reinterpret_cast<png_bytep>(
            base + static_cast<std::size_t>(r) * img.width);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace bopask

#endif  // BOPASK_PNG_IO_HPP
