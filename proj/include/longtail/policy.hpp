#pragma once

#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "longtail/errors.hpp"
#include "longtail/image.hpp"
#include "longtail/rng.hpp"
#include "longtail/transforms.hpp"

namespace longtail {

enum class SubsetSelector { color, shape, any };

enum class MagnitudeMode { full_random, constant_level, random_level };

struct PolicyConfig {
    int n = 2;
    double p_exec = 0.7;
    std::vector<SubsetSelector> order = {SubsetSelector::color, SubsetSelector::shape};
    MagnitudeMode magnitude_mode = MagnitudeMode::full_random;
    int level = 10; // for constant_level / random_level
    int crop_size = 224;
    bool distinct_kinds = false; // draw slot kinds without replacement

    void validate() const {
        if (n < 0) throw std::invalid_argument("policy: n must be >= 0");
        if (p_exec < 0.0 || p_exec > 1.0) throw std::invalid_argument("policy: p_exec must be in [0,1]");
        if (static_cast<int>(order.size()) != n)
            throw std::invalid_argument("policy: order length must equal n");
        if (magnitude_mode != MagnitudeMode::full_random && level < 1)
            throw std::invalid_argument("policy: level must be >= 1");
        if (crop_size < 1) throw std::invalid_argument("policy: crop_size must be >= 1");
    }
};

struct PlanDraw {
    TransformKind kind;
    bool executed;
    double magnitude;
    std::uint64_t kernel_seed; // drives any in-kernel randomness, so a logged
                               // plan replays bit-exactly
};

struct TransformPlan {
    std::vector<PlanDraw> draws;
    int crop_x = 0;
    int crop_y = 0;
};

// Deformation-level mapping: level/10 of the way from the identity-like
// endpoint to the extreme endpoint. Levels above 10 extrapolate past the
// table range. Two-sided ranges get a random sign.
inline double level_to_magnitude(TransformKind kind, int level, MagnitudeMode mode, Rng& rng) {
    const TransformInfo& info = transform_info(kind);
    if (!info.has_magnitude)
        throw std::invalid_argument(std::string(info.name) + " has no magnitude range");
    if (level < 1) throw std::invalid_argument("level must be >= 1");
    if (mode == MagnitudeMode::full_random) return rng.uniform(info.lo, info.hi);
    double extreme;
    if (info.identity == info.lo) {
        extreme = info.hi;
    } else if (info.identity == info.hi) {
        extreme = info.lo;
    } else {
        extreme = rng.uniform_int(2) == 0 ? info.hi : info.lo;
    }
    double target = info.identity + (level / 10.0) * (extreme - info.identity);
    if (mode == MagnitudeMode::constant_level) return target;
    return rng.uniform(std::min(info.identity, target), std::max(info.identity, target));
}

inline TransformPlan sample_plan(const PolicyConfig& cfg, int img_w, int img_h, Rng& rng) {
    cfg.validate();
    TransformPlan plan;
    plan.draws.reserve(static_cast<std::size_t>(cfg.n));
    static const std::vector<TransformKind> color = kinds_in_subset(TransformSubset::color);
    static const std::vector<TransformKind> shape = kinds_in_subset(TransformSubset::shape);
    std::vector<bool> used(kNumTransforms, false);
    for (int slot = 0; slot < cfg.n; ++slot) {
        const std::vector<TransformKind>* pool = nullptr;
        switch (cfg.order[static_cast<std::size_t>(slot)]) {
            case SubsetSelector::color: pool = &color; break;
            case SubsetSelector::shape: pool = &shape; break;
            case SubsetSelector::any: pool = nullptr; break;
        }
        TransformKind kind;
        for (;;) {
            if (pool) {
                kind = (*pool)[rng.uniform_int(pool->size())];
            } else {
                kind = static_cast<TransformKind>(rng.uniform_int(kNumTransforms));
            }
            if (!cfg.distinct_kinds || !used[static_cast<int>(kind)]) break;
        }
        used[static_cast<int>(kind)] = true;
        bool executed = rng.bernoulli(cfg.p_exec);
        double magnitude = 0.0;
        if (transform_info(kind).has_magnitude)
            magnitude = level_to_magnitude(kind, cfg.level, cfg.magnitude_mode, rng);
        plan.draws.push_back({kind, executed, magnitude, rng.next_u64()});
    }
    auto [w, h] = upscaled_dims(img_w, img_h, cfg.crop_size);
    plan.crop_x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(w - cfg.crop_size) + 1));
    plan.crop_y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(h - cfg.crop_size) + 1));
    return plan;
}

// Lazy partner access so callers do not need the whole dataset in memory.
struct PartnerSource {
    std::size_t count = 0;
    std::function<ImageBuffer(std::size_t)> get;
};

inline PartnerSource partner_pool(const std::vector<ImageBuffer>& images) {
    return {images.size(), [&images](std::size_t i) { return images[i]; }};
}

inline ImageBuffer execute_plan(const ImageBuffer& img, const TransformPlan& plan,
                                const PartnerSource& partners, int crop_size) {
    ImageBuffer current = img;
    for (const PlanDraw& draw : plan.draws) {
        if (!draw.executed) continue;
        Rng kernel_rng(draw.kernel_seed);
        if (draw.kind == TransformKind::sample_pairing) {
            if (partners.count == 0)
                throw std::invalid_argument("sample_pairing requires a partner source");
            ImageBuffer partner = partners.get(kernel_rng.uniform_int(partners.count));
            current = apply_transform_unchecked(current, draw.kind, draw.magnitude, kernel_rng,
                                                &partner);
        } else {
            current = apply_transform_unchecked(current, draw.kind, draw.magnitude, kernel_rng);
        }
    }
    ImageBuffer src = upscale_min_side(current, crop_size);
    return crop_at(src, crop_size, plan.crop_x, plan.crop_y);
}

// --- plan log -------------------------------------------------------------
// One line per image: id, crop offsets, then (kind, executed, magnitude,
// kernel_seed) per slot. Magnitudes use %.17g so replay is exact.

inline std::string plan_log_header(int n) {
    std::string h = "image,crop_x,crop_y";
    for (int i = 0; i < n; ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), ",kind_%d,exec_%d,mag_%d,seed_%d", i, i, i, i);
        h += buf;
    }
    return h;
}

inline std::string plan_log_line(const std::string& image_id, const TransformPlan& plan) {
    std::string line = image_id;
    char buf[160];
    std::snprintf(buf, sizeof(buf), ",%d,%d", plan.crop_x, plan.crop_y);
    line += buf;
    for (const PlanDraw& d : plan.draws) {
        std::snprintf(buf, sizeof(buf), ",%s,%d,%.17g,%llu", transform_info(d.kind).name.data(),
                      d.executed ? 1 : 0, d.magnitude,
                      static_cast<unsigned long long>(d.kernel_seed));
        line += buf;
    }
    return line;
}

struct LoggedPlan {
    std::string image_id;
    TransformPlan plan;
};

inline LoggedPlan parse_plan_line(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (fields.size() < 3 || (fields.size() - 3) % 4 != 0)
        throw data_error("plan log line " + std::to_string(line_no) + ": malformed field count");
    LoggedPlan out;
    out.image_id = fields[0];
    try {
        out.plan.crop_x = std::stoi(fields[1]);
        out.plan.crop_y = std::stoi(fields[2]);
        for (std::size_t i = 3; i + 4 <= fields.size(); i += 4) {
            auto kind = transform_from_name(fields[i]);
            if (!kind)
                throw data_error("plan log line " + std::to_string(line_no) +
                                 ": unknown transform '" + fields[i] + "'");
            PlanDraw d;
            d.kind = *kind;
            d.executed = std::stoi(fields[i + 1]) != 0;
            d.magnitude = std::stod(fields[i + 2]);
            d.kernel_seed = std::stoull(fields[i + 3]);
            out.plan.draws.push_back(d);
        }
    } catch (const data_error&) {
        throw;
    } catch (const std::exception&) {
        throw data_error("plan log line " + std::to_string(line_no) + ": malformed number");
    }
    return out;
}

} // namespace longtail
