#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "setgan/core/errors.hpp"
#include "setgan/core/tensor.hpp"

namespace setgan {

/// Grayscale raster, shape {H, W}. Unit range [0,1] for storage and display,
/// signed range [-1,1] for network inputs/outputs; helpers convert between.
using GrayImage = Tensor<float>;

inline GrayImage to_signed_range(const GrayImage& unit) {
    GrayImage out = unit;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0f * out[i] - 1.0f;
    return out;
}

inline GrayImage to_unit_range(const GrayImage& sgn) {
    GrayImage out = sgn;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::clamp(0.5f * (sgn[i] + 1.0f), 0.0f, 1.0f);
    return out;
}

/// Writes an 8-bit grayscale PNG. Values are clamped to [0,1] and quantized.
inline void save_png_gray(const std::filesystem::path& path, const GrayImage& img) {
    if (img.rank() != 2) throw std::invalid_argument("save_png_gray: expected rank-2 image");
    const std::size_t h = img.dim(0), w = img.dim(1);

    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw DataError("save_png_gray: cannot open " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("save_png_gray: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("save_png_gray: libpng write failed for " + path.string());
    }

    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const float v = std::clamp(img.at2(y, x), 0.0f, 1.0f);
            row[x] = static_cast<png_byte>(std::lround(v * 255.0f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

/// Reads a PNG as grayscale in [0,1]. Color inputs are reduced with the
/// standard luminance weights.
inline GrayImage load_png_gray(const std::filesystem::path& path) {
    std::FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw DataError("load_png_gray: cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("load_png_gray: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("load_png_gray: libpng read failed for " + path.string());
    }

    png_init_io(png, fp);
    png_read_png(png, info,
                 PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_EXPAND |
                     PNG_TRANSFORM_PACKING,
                 nullptr);

    const std::size_t w = png_get_image_width(png, info);
    const std::size_t h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const std::size_t channels = png_get_channels(png, info);
    png_bytepp rows = png_get_rows(png, info);

    GrayImage img({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        const png_bytep r = rows[y];
        for (std::size_t x = 0; x < w; ++x) {
            float v;
            if (color == PNG_COLOR_TYPE_GRAY || channels == 1) {
                v = r[x] / 255.0f;
            } else {
                const float red = r[x * channels + 0] / 255.0f;
                const float green = r[x * channels + 1] / 255.0f;
                const float blue = r[x * channels + 2] / 255.0f;
                v = 0.299f * red + 0.587f * green + 0.114f * blue;
            }
            img.at2(y, x) = v;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

/// Area-average resampling. Exact box filter: each target pixel averages the
/// source rectangle it covers, with fractional edge weights. Works for both
/// down- and up-scaling and is deterministic.
inline GrayImage resize_area(const GrayImage& src, std::size_t out_h, std::size_t out_w) {
    if (src.rank() != 2) throw std::invalid_argument("resize_area: expected rank-2 image");
    const std::size_t in_h = src.dim(0), in_w = src.dim(1);
    if (in_h == 0 || in_w == 0 || out_h == 0 || out_w == 0)
        throw std::invalid_argument("resize_area: empty image");

    GrayImage out({out_h, out_w});
    const double sy = static_cast<double>(in_h) / out_h;
    const double sx = static_cast<double>(in_w) / out_w;

    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        const std::size_t iy0 = static_cast<std::size_t>(y0);
        const std::size_t iy1 = std::min(in_h, static_cast<std::size_t>(std::ceil(y1)));
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            const std::size_t ix0 = static_cast<std::size_t>(x0);
            const std::size_t ix1 = std::min(in_w, static_cast<std::size_t>(std::ceil(x1)));
            double acc = 0.0, area = 0.0;
            for (std::size_t iy = iy0; iy < iy1; ++iy) {
                const double wy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
                for (std::size_t ix = ix0; ix < ix1; ++ix) {
                    const double wx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
                    acc += wy * wx * src.at2(iy, ix);
                    area += wy * wx;
                }
            }
            out.at2(oy, ox) = static_cast<float>(acc / area);
        }
    }
    return out;
}

/// Lays out equally sized tiles in a rows x cols grid with a light border.
/// Tiles are unit-range images.
inline GrayImage montage(const std::vector<GrayImage>& tiles, std::size_t rows, std::size_t cols,
                         std::size_t border = 2, float border_value = 1.0f) {
    if (tiles.empty() || rows * cols < tiles.size())
        throw std::invalid_argument("montage: grid too small for tile count");
    const std::size_t th = tiles[0].dim(0), tw = tiles[0].dim(1);
    for (const auto& t : tiles)
        if (t.dim(0) != th || t.dim(1) != tw)
            throw std::invalid_argument("montage: tiles must share one shape");

    GrayImage canvas = GrayImage::full(
        {rows * th + (rows + 1) * border, cols * tw + (cols + 1) * border}, border_value);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const std::size_t r = i / cols, c = i % cols;
        const std::size_t oy = border + r * (th + border);
        const std::size_t ox = border + c * (tw + border);
        for (std::size_t y = 0; y < th; ++y)
            for (std::size_t x = 0; x < tw; ++x)
                canvas.at2(oy + y, ox + x) = std::clamp(tiles[i].at2(y, x), 0.0f, 1.0f);
    }
    return canvas;
}

/// Minimal raster drawing for report plots.
namespace draw {

inline void fill_rect(GrayImage& img, long y0, long x0, long y1, long x1, float value) {
    const long h = static_cast<long>(img.dim(0)), w = static_cast<long>(img.dim(1));
    y0 = std::clamp(y0, 0L, h);
    y1 = std::clamp(y1, 0L, h);
    x0 = std::clamp(x0, 0L, w);
    x1 = std::clamp(x1, 0L, w);
    for (long y = y0; y < y1; ++y)
        for (long x = x0; x < x1; ++x) img.at2(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = value;
}

inline void hline(GrayImage& img, long y, long x0, long x1, float value) {
    fill_rect(img, y, x0, y + 1, x1, value);
}

inline void vline(GrayImage& img, long x, long y0, long y1, float value) {
    fill_rect(img, y0, x, y1, x + 1, value);
}

}  // namespace draw

}  // namespace setgan
