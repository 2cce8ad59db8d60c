#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "longtail/errors.hpp"

namespace longtail {

struct ClassStats {
    std::vector<long long> counts;

    int num_classes() const { return static_cast<int>(counts.size()); }

    void validate() const {
        if (counts.empty()) throw std::invalid_argument("ClassStats: no classes");
        for (std::size_t i = 0; i < counts.size(); ++i)
            if (counts[i] < 1)
                throw std::invalid_argument("ClassStats: class " + std::to_string(i) +
                                            " has no samples");
    }
};

enum class LossFamily { ce, ce_rw, cb_focal, mwl_focal, mwnl };

inline const char* loss_family_name(LossFamily f) {
    switch (f) {
        case LossFamily::ce: return "ce";
        case LossFamily::ce_rw: return "ce_rw";
        case LossFamily::cb_focal: return "cb_focal";
        case LossFamily::mwl_focal: return "mwl_focal";
        case LossFamily::mwnl: return "mwnl";
    }
    return "?";
}

struct LossConfig {
    LossFamily family = LossFamily::mwnl;
    double alpha = 1.1;  // weight exponent
    double gamma = 2.0;  // focal exponent r
    double clamp_t = 0.1; // outlier threshold T
    std::vector<double> class_coeff; // C_i; empty means all 1
    double beta_cb = 0.9999; // cb_focal only

    double coeff(int y) const {
        if (class_coeff.empty()) return 1.0;
        return class_coeff[static_cast<std::size_t>(y)];
    }

    void validate(int num_classes) const {
        if (alpha < 0.0) throw std::invalid_argument("loss: alpha must be >= 0");
        if (gamma < 0.0) throw std::invalid_argument("loss: gamma must be >= 0");
        if (clamp_t < 0.0 || clamp_t >= 1.0)
            throw std::invalid_argument("loss: clamp_t must be in [0,1)");
        if (family == LossFamily::mwnl && clamp_t <= 0.0)
            throw std::invalid_argument("loss: mwnl requires clamp_t > 0");
        if (beta_cb < 0.0 || beta_cb >= 1.0)
            throw std::invalid_argument("loss: beta_cb must be in [0,1)");
        if (!class_coeff.empty() && static_cast<int>(class_coeff.size()) != num_classes)
            throw std::invalid_argument("loss: class_coeff length must match class count");
        for (double c : class_coeff)
            if (c <= 0.0) throw std::invalid_argument("loss: class_coeff entries must be > 0");
    }
};

struct LossOutput {
    double value = 0.0;
    std::vector<double> grad;
};

namespace detail {

inline double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

} // namespace detail

// Eq.-3 style transformed probabilities: sigmoid(z_i) for the target class,
// sigmoid(-z_i) otherwise.
inline std::vector<double> transformed_probs(std::span<const double> z, int y) {
    if (y < 0 || y >= static_cast<int>(z.size()))
        throw std::invalid_argument("transformed_probs: target class out of range");
    std::vector<double> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        double s = static_cast<int>(i) == y ? z[i] : -z[i];
        p[i] = std::exp(detail::log_sigmoid(s));
    }
    return p;
}

// Per-class loss weights.
inline double cb_weight(long long n, double beta) {
    if (n < 1) throw std::invalid_argument("cb_weight: n must be >= 1");
    if (beta < 0.0 || beta >= 1.0) throw std::invalid_argument("cb_weight: beta must be in [0,1)");
    if (beta == 0.0) return 1.0;
    return (1.0 - beta) / (1.0 - std::pow(beta, static_cast<double>(n)));
}

inline double mw_weight(long long n, double alpha, double c) {
    if (n < 1) throw std::invalid_argument("mw_weight: n must be >= 1");
    if (alpha < 0.0) throw std::invalid_argument("mw_weight: alpha must be >= 0");
    if (c <= 0.0) throw std::invalid_argument("mw_weight: coefficient must be > 0");
    return c * std::pow(1.0 / static_cast<double>(n), alpha);
}

namespace detail {

// Unweighted sigmoid-focal sum: value = -sum_i (1-p_i)^gamma log(p_i), with
// optional per-term clamping at threshold t (clamped terms contribute the
// constant (1-t)^gamma * log(t) and zero gradient).
inline LossOutput focal_core(std::span<const double> z, int y, double gamma, double t) {
    LossOutput out;
    out.grad.assign(z.size(), 0.0);
    const double clamp_term = t > 0.0 ? std::pow(1.0 - t, gamma) * std::log(t) : 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double sign = static_cast<int>(i) == y ? 1.0 : -1.0;
        const double s = sign * z[i];
        const double lp = log_sigmoid(s);   // log p
        const double lq = log_sigmoid(-s);  // log(1-p)
        const double p = std::exp(lp);
        if (t > 0.0 && p <= t) {
            out.value -= clamp_term;
            continue; // gradient of the clamped constant is exactly zero
        }
        // d(-term)/dz = sign * (gamma * q^gamma * p * log p - q^(gamma+1))
        const double qg = std::exp(gamma * lq);
        out.value -= qg * lp;
        double g = -std::exp((gamma + 1.0) * lq);
        if (gamma > 0.0) g += gamma * qg * p * lp;
        out.grad[i] = sign * g;
    }
    return out;
}

inline LossOutput softmax_ce(std::span<const double> z, int y) {
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    double lse = zmax + std::log(sum);
    LossOutput out;
    out.value = lse - z[y];
    out.grad.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out.grad[i] = std::exp(z[i] - lse);
        if (static_cast<int>(i) == y) out.grad[i] -= 1.0;
    }
    return out;
}

inline void scale_output(LossOutput& out, double w) {
    out.value *= w;
    for (double& g : out.grad) g *= w;
}

} // namespace detail

// Focal loss over transformed probabilities (Eq.-4 style sigmoid sum).
inline LossOutput focal_loss(std::span<const double> z, int y, double gamma) {
    if (y < 0 || y >= static_cast<int>(z.size()))
        throw std::invalid_argument("focal_loss: target class out of range");
    if (gamma < 0.0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
    return detail::focal_core(z, y, gamma, 0.0);
}

// Multi-weighted loss with outlier clamping. The class weight is
// (C*_y / N_y)^beta_eff with C*_y = C_y^(1/alpha); beta_eff = alpha gives the
// static form C_y * (1/N_y)^alpha, beta_eff = 0 gives weight 1.
inline LossOutput mwnl_loss(std::span<const double> z, int y, const ClassStats& stats,
                            const LossConfig& cfg, double beta_eff) {
    if (cfg.family != LossFamily::mwl_focal && cfg.family != LossFamily::mwnl)
        throw std::invalid_argument("mwnl_loss: family must be mwl_focal or mwnl");
    stats.validate();
    cfg.validate(stats.num_classes());
    if (y < 0 || y >= stats.num_classes())
        throw std::invalid_argument("mwnl_loss: target class out of range");
    if (static_cast<int>(z.size()) != stats.num_classes())
        throw std::invalid_argument("mwnl_loss: logit count must match class count");
    if (beta_eff < 0.0 || beta_eff > cfg.alpha)
        throw std::invalid_argument("mwnl_loss: beta_eff must be in [0, alpha]");
    const double cy = cfg.coeff(y);
    double weight;
    if (cfg.alpha == 0.0) {
        if (cy != 1.0)
            throw std::invalid_argument(
                "mwnl_loss: alpha = 0 with class_coeff != 1 leaves C*_y undefined");
        weight = 1.0;
    } else {
        const double ny = static_cast<double>(stats.counts[static_cast<std::size_t>(y)]);
        weight = std::exp(beta_eff * (std::log(cy) / cfg.alpha - std::log(ny)));
    }
    const double t = cfg.family == LossFamily::mwnl ? cfg.clamp_t : 0.0;
    LossOutput out = detail::focal_core(z, y, cfg.gamma, t);
    detail::scale_output(out, weight);
    return out;
}

inline LossOutput loss_for_family(std::span<const double> z, int y, const ClassStats& stats,
                                  const LossConfig& cfg, double beta_eff) {
    stats.validate();
    cfg.validate(stats.num_classes());
    if (y < 0 || y >= stats.num_classes())
        throw std::invalid_argument("loss_for_family: target class out of range");
    if (static_cast<int>(z.size()) != stats.num_classes())
        throw std::invalid_argument("loss_for_family: logit count must match class count");
    const long long ny = stats.counts[static_cast<std::size_t>(y)];
    switch (cfg.family) {
        case LossFamily::ce: return detail::softmax_ce(z, y);
        case LossFamily::ce_rw: {
            LossOutput out = detail::softmax_ce(z, y);
            detail::scale_output(out, 1.0 / static_cast<double>(ny));
            return out;
        }
        case LossFamily::cb_focal: {
            LossOutput out = detail::focal_core(z, y, cfg.gamma, 0.0);
            detail::scale_output(out, cb_weight(ny, cfg.beta_cb));
            return out;
        }
        case LossFamily::mwl_focal:
        case LossFamily::mwnl: return mwnl_loss(z, y, stats, cfg, beta_eff);
    }
    throw std::invalid_argument("unknown loss family");
}

// --- batch evaluation stream ------------------------------------------------
// Input rows:  sample_id, y, z_0 .. z_{C-1}
// Output rows: sample_id, value, grad_0 .. grad_{C-1}   (9 significant digits)

inline void evaluate_loss_stream(std::istream& in, std::ostream& out, const ClassStats& stats,
                                 const LossConfig& cfg, double beta_eff) {
    const int c = stats.num_classes();
    std::string line;
    int line_no = 0;
    char buf[64];
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, field;
        if (!std::getline(ss, id, ','))
            throw data_error("loss input line " + std::to_string(line_no) + ": missing sample id");
        auto next_field = [&](const char* what) {
            if (!std::getline(ss, field, ','))
                throw data_error("loss input line " + std::to_string(line_no) + ": missing " +
                                 what);
            return field;
        };
        int y;
        std::vector<double> z(static_cast<std::size_t>(c));
        try {
            y = std::stoi(next_field("target class"));
            for (int i = 0; i < c; ++i) z[static_cast<std::size_t>(i)] = std::stod(next_field("logit"));
        } catch (const data_error&) {
            throw;
        } catch (const std::exception&) {
            throw data_error("loss input line " + std::to_string(line_no) + ": malformed number");
        }
        if (y < 0 || y >= c)
            throw data_error("loss input line " + std::to_string(line_no) +
                             ": target class out of range");
        LossOutput lo = loss_for_family(z, y, stats, cfg, beta_eff);
        out << id;
        std::snprintf(buf, sizeof(buf), ",%.9g", lo.value);
        out << buf;
        for (double g : lo.grad) {
            std::snprintf(buf, sizeof(buf), ",%.9g", g);
            out << buf;
        }
        out << '\n';
    }
}

} // namespace longtail
