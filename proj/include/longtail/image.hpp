#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "longtail/rng.hpp"

namespace longtail {

// 8-bit RGB raster, row-major, 3 channels interleaved.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    ImageBuffer() = default;
    ImageBuffer(int w, int h)
        : width(w), height(h),
          pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0) {
        if (w < 1 || h < 1) throw std::invalid_argument("ImageBuffer: dimensions must be >= 1");
    }

    static ImageBuffer filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        ImageBuffer img(w, h);
        for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
            img.pixels[i] = r;
            img.pixels[i + 1] = g;
            img.pixels[i + 2] = b;
        }
        return img;
    }

    std::uint8_t* px(int x, int y) {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* px(int x, int y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    bool same_shape(const ImageBuffer& o) const {
        return width == o.width && height == o.height;
    }

    bool operator==(const ImageBuffer& o) const {
        return width == o.width && height == o.height && pixels == o.pixels;
    }
};

namespace detail {

// Round-half-up quantization from [0,1] float workspace back to 8 bits.
inline std::uint8_t quantize8(double v) {
    double q = std::floor(v * 255.0 + 0.5);
    if (q < 0.0) return 0;
    if (q > 255.0) return 255;
    return static_cast<std::uint8_t>(q);
}

inline std::uint8_t clamp8i(long v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
}

} // namespace detail

// Bilinear resize with edge clamping (pixel-center alignment).
inline ImageBuffer resize_bilinear(const ImageBuffer& src, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw std::invalid_argument("resize_bilinear: target must be >= 1");
    if (new_w == src.width && new_h == src.height) return src;
    ImageBuffer out(new_w, new_h);
    const double sx = static_cast<double>(src.width) / new_w;
    const double sy = static_cast<double>(src.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        int y0 = static_cast<int>(std::floor(fy));
        int y1 = std::min(y0 + 1, src.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            int x0 = static_cast<int>(std::floor(fx));
            int x1 = std::min(x0 + 1, src.width - 1);
            double wx = fx - x0;
            const std::uint8_t* p00 = src.px(x0, y0);
            const std::uint8_t* p10 = src.px(x1, y0);
            const std::uint8_t* p01 = src.px(x0, y1);
            const std::uint8_t* p11 = src.px(x1, y1);
            std::uint8_t* dst = out.px(x, y);
            for (int c = 0; c < 3; ++c) {
                double top = p00[c] + wx * (p10[c] - p00[c]);
                double bot = p01[c] + wx * (p11[c] - p01[c]);
                dst[c] = detail::quantize8((top + wy * (bot - top)) / 255.0);
            }
        }
    }
    return out;
}

// Dimensions after the undersized-input rule: shorter side scaled up to
// `size`, aspect preserved. Identity when the image is already big enough.
inline std::pair<int, int> upscaled_dims(int w, int h, int size) {
    if (std::min(w, h) >= size) return {w, h};
    if (w <= h) {
        int nh = static_cast<int>(std::lround(static_cast<double>(h) * size / w));
        return {size, std::max(nh, size)};
    }
    int nw = static_cast<int>(std::lround(static_cast<double>(w) * size / h));
    return {std::max(nw, size), size};
}

inline ImageBuffer upscale_min_side(const ImageBuffer& img, int size) {
    auto [nw, nh] = upscaled_dims(img.width, img.height, size);
    if (nw == img.width && nh == img.height) return img;
    return resize_bilinear(img, nw, nh);
}

inline ImageBuffer crop_at(const ImageBuffer& img, int size, int ox, int oy) {
    if (ox < 0 || oy < 0 || ox + size > img.width || oy + size > img.height)
        throw std::invalid_argument("crop_at: window outside image");
    ImageBuffer out(size, size);
    for (int y = 0; y < size; ++y) {
        const std::uint8_t* srow = img.px(ox, oy + y);
        std::uint8_t* drow = out.px(0, y);
        std::copy(srow, srow + static_cast<std::size_t>(size) * 3, drow);
    }
    return out;
}

// Random square crop; undersized inputs are upscaled first.
inline ImageBuffer random_crop(const ImageBuffer& img, int size, Rng& rng) {
    if (size < 1) throw std::invalid_argument("random_crop: size must be >= 1");
    ImageBuffer src = upscale_min_side(img, size);
    int ox = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(src.width - size) + 1));
    int oy = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(src.height - size) + 1));
    return crop_at(src, size, ox, oy);
}

// Equally spaced sqrt(k) x sqrt(k) grid of crops from the upper-left corner
// to the lower-right corner, row-major.
inline std::vector<ImageBuffer> multi_crop_grid(const ImageBuffer& img, int size, int k) {
    if (size < 1) throw std::invalid_argument("multi_crop_grid: size must be >= 1");
    int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k))));
    if (k < 1 || g * g != k) throw std::invalid_argument("multi_crop_grid: k must be a perfect square");
    ImageBuffer src = upscale_min_side(img, size);
    auto origins = [&](int dim) {
        std::vector<int> o(g);
        for (int i = 0; i < g; ++i)
            o[i] = g == 1 ? 0
                          : static_cast<int>(std::lround(static_cast<double>(i) * (dim - size) / (g - 1)));
        return o;
    };
    std::vector<int> oxs = origins(src.width);
    std::vector<int> oys = origins(src.height);
    std::vector<ImageBuffer> crops;
    crops.reserve(static_cast<std::size_t>(k));
    for (int gy = 0; gy < g; ++gy)
        for (int gx = 0; gx < g; ++gx)
            crops.push_back(crop_at(src, size, oxs[gx], oys[gy]));
    return crops;
}

} // namespace longtail
