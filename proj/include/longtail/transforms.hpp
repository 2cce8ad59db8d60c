#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>

#include "longtail/image.hpp"
#include "longtail/rng.hpp"

namespace longtail {

enum class TransformKind : int {
    sample_pairing = 0,
    gauss_noise,
    saturation,
    contrast,
    brightness,
    sharpness,
    color_casting,
    equalize,
    equalize_yuv,
    posterize,
    autocontrast,
    solarize,
    vignetting,
    rotate,
    flip,
    shear_x,
    shear_y,
    distortion,
    scale,
    scale_diff,
    cutout,
};

inline constexpr int kNumTransforms = 21;

enum class TransformSubset { color, shape };

struct TransformInfo {
    std::string_view name;
    TransformSubset subset;
    bool has_magnitude;
    double lo;
    double hi;
    double identity; // least-destructive endpoint, anchor for level mapping
};

namespace detail {
inline constexpr std::array<TransformInfo, kNumTransforms> kTransformTable{{
    {"sample_pairing", TransformSubset::color, true, 0.0, 0.2, 0.0},
    {"gauss_noise", TransformSubset::color, true, 0.0, 0.2, 0.0},
    {"saturation", TransformSubset::color, true, 0.6, 1.4, 1.0},
    {"contrast", TransformSubset::color, true, 0.6, 1.4, 1.0},
    {"brightness", TransformSubset::color, true, 0.6, 1.4, 1.0},
    {"sharpness", TransformSubset::color, true, 0.6, 1.4, 1.0},
    {"color_casting", TransformSubset::color, true, -30.0, 30.0, 0.0},
    {"equalize", TransformSubset::color, false, 0.0, 0.0, 0.0},
    {"equalize_yuv", TransformSubset::color, false, 0.0, 0.0, 0.0},
    {"posterize", TransformSubset::color, true, 0.0, 3.0, 3.0},
    {"autocontrast", TransformSubset::color, false, 0.0, 0.0, 0.0},
    {"solarize", TransformSubset::color, true, 128.0, 255.0, 255.0},
    {"vignetting", TransformSubset::color, true, 0.0, 0.6, 0.0},
    {"rotate", TransformSubset::shape, true, -40.0, 40.0, 0.0},
    {"flip", TransformSubset::shape, false, 0.0, 0.0, 0.0},
    {"shear_x", TransformSubset::shape, true, -15.0, 15.0, 0.0},
    {"shear_y", TransformSubset::shape, true, -15.0, 15.0, 0.0},
    {"distortion", TransformSubset::shape, true, 0.0, 0.6, 0.0},
    {"scale", TransformSubset::shape, true, 0.8, 1.2, 1.0},
    {"scale_diff", TransformSubset::shape, true, 0.8, 1.2, 1.0},
    {"cutout", TransformSubset::shape, true, 0.0, 50.0, 0.0},
}};
} // namespace detail

inline const TransformInfo& transform_info(TransformKind k) {
    return detail::kTransformTable[static_cast<int>(k)];
}

inline std::optional<TransformKind> transform_from_name(std::string_view name) {
    for (int i = 0; i < kNumTransforms; ++i)
        if (detail::kTransformTable[i].name == name) return static_cast<TransformKind>(i);
    return std::nullopt;
}

inline std::vector<TransformKind> kinds_in_subset(TransformSubset s) {
    std::vector<TransformKind> out;
    for (int i = 0; i < kNumTransforms; ++i)
        if (detail::kTransformTable[i].subset == s) out.push_back(static_cast<TransformKind>(i));
    return out;
}

namespace detail {

constexpr double kGrayFill = 128.0 / 255.0;

inline double luma(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

// Bilinear tap with mid-gray contribution from out-of-frame texels.
inline void sample_gray_fill(const ImageBuffer& img, double sx, double sy, double out[3]) {
    double fx = std::floor(sx);
    double fy = std::floor(sy);
    int x0 = static_cast<int>(fx);
    int y0 = static_cast<int>(fy);
    double wx = sx - fx;
    double wy = sy - fy;
    auto texel = [&](int x, int y, int c) -> double {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return kGrayFill;
        return img.px(x, y)[c] / 255.0;
    };
    for (int c = 0; c < 3; ++c) {
        double top = texel(x0, y0, c) * (1.0 - wx) + texel(x0 + 1, y0, c) * wx;
        double bot = texel(x0, y0 + 1, c) * (1.0 - wx) + texel(x0 + 1, y0 + 1, c) * wx;
        out[c] = top * (1.0 - wy) + bot * wy;
    }
}

// Inverse-mapped geometric warp: dst(x,y) = src(map(x,y)).
template <typename MapFn>
ImageBuffer warp(const ImageBuffer& img, MapFn&& map) {
    ImageBuffer out(img.width, img.height);
    double rgb[3];
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            auto [sx, sy] = map(static_cast<double>(x), static_cast<double>(y));
            sample_gray_fill(img, sx, sy, rgb);
            std::uint8_t* d = out.px(x, y);
            for (int c = 0; c < 3; ++c) d[c] = quantize8(rgb[c]);
        }
    }
    return out;
}

// Per-pixel photometric map in normalized [0,1] space.
template <typename Fn>
ImageBuffer map_pixels(const ImageBuffer& img, Fn&& fn) {
    ImageBuffer out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        double r = img.pixels[i] / 255.0;
        double g = img.pixels[i + 1] / 255.0;
        double b = img.pixels[i + 2] / 255.0;
        double o[3];
        fn(r, g, b, o);
        out.pixels[i] = quantize8(o[0]);
        out.pixels[i + 1] = quantize8(o[1]);
        out.pixels[i + 2] = quantize8(o[2]);
    }
    return out;
}

// Classic integer histogram-equalization LUT (half-step bias).
inline std::array<std::uint8_t, 256> equalize_lut(const std::array<long, 256>& hist) {
    std::array<std::uint8_t, 256> lut{};
    long total = 0;
    int last_nonzero = -1;
    int nonzero_count = 0;
    for (int i = 0; i < 256; ++i) {
        total += hist[i];
        if (hist[i] > 0) {
            last_nonzero = i;
            ++nonzero_count;
        }
    }
    long step = nonzero_count <= 1 ? 0 : (total - hist[last_nonzero]) / 255;
    if (step == 0) {
        for (int i = 0; i < 256; ++i) lut[i] = static_cast<std::uint8_t>(i);
        return lut;
    }
    long n = step / 2;
    for (int i = 0; i < 256; ++i) {
        lut[i] = clamp8i(n / step);
        n += hist[i];
    }
    return lut;
}

inline ImageBuffer tf_sample_pairing(const ImageBuffer& img, double m, const ImageBuffer& partner) {
    ImageBuffer mate = partner.same_shape(img) ? partner
                                               : resize_bilinear(partner, img.width, img.height);
    ImageBuffer out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        double v = (1.0 - m) * (img.pixels[i] / 255.0) + m * (mate.pixels[i] / 255.0);
        out.pixels[i] = quantize8(v);
    }
    return out;
}

inline ImageBuffer tf_gauss_noise(const ImageBuffer& img, double m, Rng& rng) {
    ImageBuffer out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] = quantize8(img.pixels[i] / 255.0 + m * rng.normal());
    return out;
}

inline ImageBuffer tf_saturation(const ImageBuffer& img, double m) {
    return map_pixels(img, [m](double r, double g, double b, double* o) {
        double l = luma(r, g, b);
        o[0] = l + m * (r - l);
        o[1] = l + m * (g - l);
        o[2] = l + m * (b - l);
    });
}

inline ImageBuffer tf_contrast(const ImageBuffer& img, double m) {
    double mean = 0.0;
    for (std::size_t i = 0; i < img.pixels.size(); i += 3)
        mean += luma(img.pixels[i] / 255.0, img.pixels[i + 1] / 255.0, img.pixels[i + 2] / 255.0);
    mean /= static_cast<double>(img.pixels.size() / 3);
    return map_pixels(img, [m, mean](double r, double g, double b, double* o) {
        o[0] = mean + m * (r - mean);
        o[1] = mean + m * (g - mean);
        o[2] = mean + m * (b - mean);
    });
}

inline ImageBuffer tf_brightness(const ImageBuffer& img, double m) {
    return map_pixels(img, [m](double r, double g, double b, double* o) {
        o[0] = m * r;
        o[1] = m * g;
        o[2] = m * b;
    });
}

inline ImageBuffer tf_sharpness(const ImageBuffer& img, double m) {
    // Blend against a 3x3 smoothing ([1 1 1; 1 5 1; 1 1 1]/13, replicated edges).
    ImageBuffer out(img.width, img.height);
    auto at = [&](int x, int y, int c) -> double {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return img.px(x, y)[c] / 255.0;
    };
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            std::uint8_t* d = out.px(x, y);
            for (int c = 0; c < 3; ++c) {
                double blur = (at(x - 1, y - 1, c) + at(x, y - 1, c) + at(x + 1, y - 1, c) +
                               at(x - 1, y, c) + 5.0 * at(x, y, c) + at(x + 1, y, c) +
                               at(x - 1, y + 1, c) + at(x, y + 1, c) + at(x + 1, y + 1, c)) /
                              13.0;
                double v = at(x, y, c);
                d[c] = quantize8(blur + m * (v - blur));
            }
        }
    }
    return out;
}

inline ImageBuffer tf_color_casting(const ImageBuffer& img, double m, Rng& rng) {
    int ch = static_cast<int>(rng.uniform_int(3));
    ImageBuffer out = img;
    for (std::size_t i = static_cast<std::size_t>(ch); i < out.pixels.size(); i += 3)
        out.pixels[i] = clamp8i(std::lround(out.pixels[i] + m));
    return out;
}

inline ImageBuffer tf_equalize(const ImageBuffer& img) {
    std::array<std::array<long, 256>, 3> hist{};
    for (std::size_t i = 0; i < img.pixels.size(); i += 3)
        for (int c = 0; c < 3; ++c) ++hist[c][img.pixels[i + c]];
    std::array<std::array<std::uint8_t, 256>, 3> lut;
    for (int c = 0; c < 3; ++c) lut[c] = equalize_lut(hist[c]);
    ImageBuffer out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3)
        for (int c = 0; c < 3; ++c) out.pixels[i + c] = lut[c][img.pixels[i + c]];
    return out;
}

inline ImageBuffer tf_equalize_yuv(const ImageBuffer& img) {
    // Equalize the luma channel, keep chroma (B-Y, R-Y) fixed; that reduces
    // to shifting every channel by the luma delta.
    const std::size_t n = img.pixels.size() / 3;
    std::vector<std::uint8_t> yq(n);
    std::array<long, 256> hist{};
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* p = img.pixels.data() + i * 3;
        double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        yq[i] = clamp8i(std::lround(y));
        ++hist[yq[i]];
    }
    auto lut = equalize_lut(hist);
    ImageBuffer out(img.width, img.height);
    for (std::size_t i = 0; i < n; ++i) {
        long delta = static_cast<long>(lut[yq[i]]) - yq[i];
        const std::uint8_t* p = img.pixels.data() + i * 3;
        std::uint8_t* d = out.pixels.data() + i * 3;
        for (int c = 0; c < 3; ++c) d[c] = clamp8i(p[c] + delta);
    }
    return out;
}

inline ImageBuffer tf_posterize(const ImageBuffer& img, double m) {
    long bits = std::clamp(std::lround(m), 0L, 8L);
    ImageBuffer out(img.width, img.height);
    if (bits == 0) return out; // zero bits: constant black
    std::uint8_t mask = static_cast<std::uint8_t>(0xFFu << (8 - bits));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = img.pixels[i] & mask;
    return out;
}

inline ImageBuffer tf_autocontrast(const ImageBuffer& img) {
    ImageBuffer out(img.width, img.height);
    for (int c = 0; c < 3; ++c) {
        int lo = 255, hi = 0;
        for (std::size_t i = static_cast<std::size_t>(c); i < img.pixels.size(); i += 3) {
            lo = std::min(lo, static_cast<int>(img.pixels[i]));
            hi = std::max(hi, static_cast<int>(img.pixels[i]));
        }
        std::array<std::uint8_t, 256> lut;
        if (hi <= lo) {
            for (int i = 0; i < 256; ++i) lut[i] = static_cast<std::uint8_t>(i);
        } else {
            for (int i = 0; i < 256; ++i)
                lut[i] = clamp8i(std::lround((i - lo) * 255.0 / (hi - lo)));
        }
        for (std::size_t i = static_cast<std::size_t>(c); i < img.pixels.size(); i += 3)
            out.pixels[i] = lut[img.pixels[i]];
    }
    return out;
}

inline ImageBuffer tf_solarize(const ImageBuffer& img, double threshold) {
    ImageBuffer out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        std::uint8_t v = img.pixels[i];
        out.pixels[i] = v > threshold ? static_cast<std::uint8_t>(255 - v) : v;
    }
    return out;
}

inline ImageBuffer tf_vignetting(const ImageBuffer& img, double m) {
    double cx = (img.width - 1) / 2.0;
    double cy = (img.height - 1) / 2.0;
    double rmax2 = cx * cx + cy * cy;
    if (rmax2 <= 0.0) return img; // 1x1: center is the periphery
    ImageBuffer out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            double s = 1.0 - m * (r2 / rmax2);
            const std::uint8_t* p = img.px(x, y);
            std::uint8_t* d = out.px(x, y);
            for (int c = 0; c < 3; ++c) d[c] = quantize8(p[c] / 255.0 * s);
        }
    }
    return out;
}

inline ImageBuffer tf_rotate(const ImageBuffer& img, double degrees) {
    double rad = degrees * std::numbers::pi / 180.0;
    double cs = std::cos(rad), sn = std::sin(rad);
    double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    return warp(img, [=](double x, double y) {
        double dx = x - cx, dy = y - cy;
        return std::pair{cx + cs * dx + sn * dy, cy - sn * dx + cs * dy};
    });
}

inline ImageBuffer tf_flip(const ImageBuffer& img, Rng& rng) {
    bool horizontal = rng.uniform_int(2) == 0;
    ImageBuffer out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* s =
                horizontal ? img.px(img.width - 1 - x, y) : img.px(x, img.height - 1 - y);
            std::uint8_t* d = out.px(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
        }
    return out;
}

inline ImageBuffer tf_shear(const ImageBuffer& img, double degrees, bool along_x) {
    double t = std::tan(degrees * std::numbers::pi / 180.0);
    double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    return warp(img, [=](double x, double y) {
        if (along_x) return std::pair{x - t * (y - cy), y};
        return std::pair{x, y - t * (x - cx)};
    });
}

inline ImageBuffer tf_distortion(const ImageBuffer& img, double m) {
    // Sinusoidal grid warp; peak displacement m * min(w,h) / 10 pixels.
    double dim = static_cast<double>(std::min(img.width, img.height));
    double amp = m * dim / 10.0;
    double period = std::max(dim / 4.0, 1.0);
    double k = 2.0 * std::numbers::pi / period;
    return warp(img, [=](double x, double y) {
        return std::pair{x + amp * std::sin(k * y), y + amp * std::sin(k * x)};
    });
}

inline ImageBuffer tf_scale(const ImageBuffer& img, double sx, double sy) {
    double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    return warp(img, [=](double x, double y) {
        return std::pair{cx + (x - cx) / sx, cy + (y - cy) / sy};
    });
}

inline ImageBuffer tf_cutout(const ImageBuffer& img, double m, Rng& rng) {
    long side = std::lround(m);
    int ccx = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.width)));
    int ccy = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.height)));
    if (side <= 0) return img;
    int x0 = std::max(0, ccx - static_cast<int>(side / 2));
    int y0 = std::max(0, ccy - static_cast<int>(side / 2));
    int x1 = std::min(img.width, x0 + static_cast<int>(side));
    int y1 = std::min(img.height, y0 + static_cast<int>(side));
    ImageBuffer out = img;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            std::uint8_t* d = out.px(x, y);
            d[0] = d[1] = d[2] = 128;
        }
    return out;
}

inline ImageBuffer dispatch_transform(const ImageBuffer& img, TransformKind kind, double m,
                                      Rng& rng, const ImageBuffer* partner) {
    switch (kind) {
        case TransformKind::sample_pairing: return tf_sample_pairing(img, m, *partner);
        case TransformKind::gauss_noise: return tf_gauss_noise(img, m, rng);
        case TransformKind::saturation: return tf_saturation(img, m);
        case TransformKind::contrast: return tf_contrast(img, m);
        case TransformKind::brightness: return tf_brightness(img, m);
        case TransformKind::sharpness: return tf_sharpness(img, m);
        case TransformKind::color_casting: return tf_color_casting(img, m, rng);
        case TransformKind::equalize: return tf_equalize(img);
        case TransformKind::equalize_yuv: return tf_equalize_yuv(img);
        case TransformKind::posterize: return tf_posterize(img, m);
        case TransformKind::autocontrast: return tf_autocontrast(img);
        case TransformKind::solarize: return tf_solarize(img, m);
        case TransformKind::vignetting: return tf_vignetting(img, m);
        case TransformKind::rotate: return tf_rotate(img, m);
        case TransformKind::flip: return tf_flip(img, rng);
        case TransformKind::shear_x: return tf_shear(img, m, true);
        case TransformKind::shear_y: return tf_shear(img, m, false);
        case TransformKind::distortion: return tf_distortion(img, m);
        case TransformKind::scale: return tf_scale(img, m, m);
        case TransformKind::scale_diff: {
            // Second axis deviates from 1 by at most |m - 1|, so magnitude 1
            // stays an exact identity on both axes.
            double sy = 1.0 + (m - 1.0) * rng.uniform(-1.0, 1.0);
            return tf_scale(img, m, sy);
        }
        case TransformKind::cutout: return tf_cutout(img, m, rng);
    }
    throw std::invalid_argument("unknown transform kind");
}

} // namespace detail

// Policy-internal entry point: skips the Table-range check so that level
// modes with level > 10 may exceed the printed ranges.
inline ImageBuffer apply_transform_unchecked(const ImageBuffer& img, TransformKind kind,
                                             double magnitude, Rng& rng,
                                             const ImageBuffer* partner = nullptr) {
    if (kind == TransformKind::sample_pairing && partner == nullptr)
        throw std::invalid_argument("sample_pairing requires a partner image");
    return detail::dispatch_transform(img, kind, magnitude, rng, partner);
}

inline ImageBuffer apply_transform(const ImageBuffer& img, TransformKind kind, double magnitude,
                                   Rng& rng, const ImageBuffer* partner = nullptr) {
    const TransformInfo& info = transform_info(kind);
    if (info.has_magnitude && (magnitude < info.lo || magnitude > info.hi))
        throw std::invalid_argument(std::string(info.name) + ": magnitude out of range");
    if (kind != TransformKind::sample_pairing && partner != nullptr)
        throw std::invalid_argument("partner only valid for sample_pairing");
    return apply_transform_unchecked(img, kind, magnitude, rng, partner);
}

} // namespace longtail
