#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "longtail/dataset.hpp"
#include "longtail/errors.hpp"
#include "longtail/image.hpp"
#include "longtail/loss.hpp"
#include "longtail/metrics.hpp"
#include "longtail/policy.hpp"
#include "longtail/rng.hpp"
#include "longtail/schedule.hpp"

namespace longtail {

// --- model ------------------------------------------------------------------
// One hidden layer, rectified linear units, per-class logits. Stand-in for the
// out-of-scope convolutional backbones; the loss/schedule machinery under test
// is backbone-agnostic.

struct ModelConfig {
    int input_dim = 16;
    int hidden_dim = 32;
    int num_classes = 2;
};

struct ModelParams {
    int input_dim = 0;
    int hidden_dim = 0;
    int num_classes = 0;
    std::vector<double> w1; // input_dim x hidden_dim, row-major
    std::vector<double> b1; // hidden_dim
    std::vector<double> w2; // hidden_dim x num_classes, row-major
    std::vector<double> b2; // num_classes
};

inline ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
    if (cfg.input_dim < 1 || cfg.hidden_dim < 1 || cfg.num_classes < 2)
        throw std::invalid_argument("model: dimensions must be positive (>= 2 classes)");
    ModelParams p;
    p.input_dim = cfg.input_dim;
    p.hidden_dim = cfg.hidden_dim;
    p.num_classes = cfg.num_classes;
    double s1 = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
    double s2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
    p.w1.resize(static_cast<std::size_t>(cfg.input_dim) * cfg.hidden_dim);
    p.w2.resize(static_cast<std::size_t>(cfg.hidden_dim) * cfg.num_classes);
    p.b1.assign(static_cast<std::size_t>(cfg.hidden_dim), 0.0);
    p.b2.assign(static_cast<std::size_t>(cfg.num_classes), 0.0);
    for (double& w : p.w1) w = rng.uniform(-s1, s1);
    for (double& w : p.w2) w = rng.uniform(-s2, s2);
    return p;
}

struct ForwardPass {
    std::vector<double> hidden_pre;    // before relu
    std::vector<double> hidden_masked; // relu * mask
    std::vector<double> logits;
};

// Empty mask = evaluation mode (no dropout).
inline ForwardPass forward(const ModelParams& p, std::span<const double> x,
                           std::span<const double> mask = {}) {
    if (static_cast<int>(x.size()) != p.input_dim)
        throw std::invalid_argument("forward: input dimension mismatch");
    if (!mask.empty() && static_cast<int>(mask.size()) != p.hidden_dim)
        throw std::invalid_argument("forward: mask dimension mismatch");
    ForwardPass f;
    f.hidden_pre.assign(static_cast<std::size_t>(p.hidden_dim), 0.0);
    for (int d = 0; d < p.input_dim; ++d) {
        const double xd = x[static_cast<std::size_t>(d)];
        const double* wrow = p.w1.data() + static_cast<std::size_t>(d) * p.hidden_dim;
        for (int h = 0; h < p.hidden_dim; ++h) f.hidden_pre[static_cast<std::size_t>(h)] += xd * wrow[h];
    }
    for (int h = 0; h < p.hidden_dim; ++h) f.hidden_pre[static_cast<std::size_t>(h)] += p.b1[static_cast<std::size_t>(h)];
    f.hidden_masked.resize(static_cast<std::size_t>(p.hidden_dim));
    for (int h = 0; h < p.hidden_dim; ++h) {
        double a = std::max(f.hidden_pre[static_cast<std::size_t>(h)], 0.0);
        if (!mask.empty()) a *= mask[static_cast<std::size_t>(h)];
        f.hidden_masked[static_cast<std::size_t>(h)] = a;
    }
    f.logits = p.b2;
    for (int h = 0; h < p.hidden_dim; ++h) {
        const double a = f.hidden_masked[static_cast<std::size_t>(h)];
        if (a == 0.0) continue;
        const double* wrow = p.w2.data() + static_cast<std::size_t>(h) * p.num_classes;
        for (int c = 0; c < p.num_classes; ++c) f.logits[static_cast<std::size_t>(c)] += a * wrow[c];
    }
    return f;
}

struct Gradients {
    std::vector<double> w1, b1, w2, b2;

    explicit Gradients(const ModelParams& p)
        : w1(p.w1.size(), 0.0), b1(p.b1.size(), 0.0), w2(p.w2.size(), 0.0), b2(p.b2.size(), 0.0) {}

    void scale(double s) {
        for (double& v : w1) v *= s;
        for (double& v : b1) v *= s;
        for (double& v : w2) v *= s;
        for (double& v : b2) v *= s;
    }
};

// Exact backprop through both layers and the dropout mask; accumulates into g.
inline void backward_accumulate(const ModelParams& p, std::span<const double> x,
                                const ForwardPass& f, std::span<const double> dlogits,
                                std::span<const double> mask, Gradients& g) {
    for (int c = 0; c < p.num_classes; ++c) g.b2[static_cast<std::size_t>(c)] += dlogits[static_cast<std::size_t>(c)];
    std::vector<double> dhidden(static_cast<std::size_t>(p.hidden_dim), 0.0);
    for (int h = 0; h < p.hidden_dim; ++h) {
        const double a = f.hidden_masked[static_cast<std::size_t>(h)];
        double* gw = g.w2.data() + static_cast<std::size_t>(h) * p.num_classes;
        const double* w = p.w2.data() + static_cast<std::size_t>(h) * p.num_classes;
        double acc = 0.0;
        for (int c = 0; c < p.num_classes; ++c) {
            gw[c] += a * dlogits[static_cast<std::size_t>(c)];
            acc += w[c] * dlogits[static_cast<std::size_t>(c)];
        }
        dhidden[static_cast<std::size_t>(h)] = acc;
    }
    for (int h = 0; h < p.hidden_dim; ++h) {
        double d = dhidden[static_cast<std::size_t>(h)];
        if (!mask.empty()) d *= mask[static_cast<std::size_t>(h)];
        if (f.hidden_pre[static_cast<std::size_t>(h)] <= 0.0) d = 0.0;
        dhidden[static_cast<std::size_t>(h)] = d;
        g.b1[static_cast<std::size_t>(h)] += d;
    }
    for (int d = 0; d < p.input_dim; ++d) {
        const double xd = x[static_cast<std::size_t>(d)];
        if (xd == 0.0) continue;
        double* gw = g.w1.data() + static_cast<std::size_t>(d) * p.hidden_dim;
        for (int h = 0; h < p.hidden_dim; ++h) gw[h] += xd * dhidden[static_cast<std::size_t>(h)];
    }
}

// --- optimizer ----------------------------------------------------------------

struct AdamState {
    std::vector<double> m_w1, v_w1, m_b1, v_b1, m_w2, v_w2, m_b2, v_b2;
    long long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(const ModelParams& p)
        : m_w1(p.w1.size(), 0.0), v_w1(p.w1.size(), 0.0), m_b1(p.b1.size(), 0.0),
          v_b1(p.b1.size(), 0.0), m_w2(p.w2.size(), 0.0), v_w2(p.w2.size(), 0.0),
          m_b2(p.b2.size(), 0.0), v_b2(p.b2.size(), 0.0) {}
};

inline void adam_step(AdamState& st, ModelParams& p, const Gradients& g, double lr) {
    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    auto update = [&](std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& grad) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * grad[i];
            v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
            theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + st.eps);
        }
    };
    update(p.w1, st.m_w1, st.v_w1, g.w1);
    update(p.b1, st.m_b1, st.v_b1, g.b1);
    update(p.w2, st.m_w2, st.v_w2, g.w2);
    update(p.b2, st.m_b2, st.v_b2, g.b2);
}

// --- regularizer masks ----------------------------------------------------------

enum class RegularizerKind { none, dropout, dropblock };

struct RegularizerConfig {
    RegularizerKind kind = RegularizerKind::dropout;
    double drop_prob = 0.1; // p
    int block_size = 5;     // s

    void validate() const {
        if (drop_prob < 0.0 || drop_prob >= 1.0)
            throw std::invalid_argument("regularizer: drop_prob must be in [0,1)");
        if (block_size < 1) throw std::invalid_argument("regularizer: block_size must be >= 1");
    }
};

// Inverted-scaling unit dropout: entries are 0 or 1/(1-p).
inline std::vector<double> dropout_mask(int n, double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout_mask: p must be in [0,1)");
    std::vector<double> mask(static_cast<std::size_t>(n), 0.0);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& m : mask)
        if (!rng.bernoulli(p)) m = keep_scale;
    return mask;
}

// Structured dropout: s x s zero blocks centered on Bernoulli seed cells,
// clipped at the borders. The seed rate is calibrated so the expected zeroed
// fraction is about p; survivors are rescaled by total/survivors.
inline std::vector<double> dropblock_mask(int h, int w, double p, int s, Rng& rng) {
    if (s > std::min(h, w)) throw std::invalid_argument("dropblock_mask: block size exceeds grid");
    if (s < 1) throw std::invalid_argument("dropblock_mask: block size must be >= 1");
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropblock_mask: p must be in [0,1)");
    const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    std::vector<double> mask(n, 1.0);
    if (p == 0.0) return mask;
    // sum over seed positions of clipped block area, for the rate calibration
    auto axis_cover_sum = [&](int dim) {
        long long sum = 0;
        for (int i = 0; i < dim; ++i) {
            int lo = std::max(0, i - (s - 1) / 2);
            int hi = std::min(dim, i - (s - 1) / 2 + s);
            sum += hi - lo;
        }
        return sum;
    };
    const double cover = static_cast<double>(axis_cover_sum(h)) * static_cast<double>(axis_cover_sum(w));
    const double gamma = p * static_cast<double>(n) / cover;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!rng.bernoulli(gamma)) continue;
            int x0 = std::max(0, x - (s - 1) / 2);
            int y0 = std::max(0, y - (s - 1) / 2);
            int x1 = std::min(w, x - (s - 1) / 2 + s);
            int y1 = std::min(h, y - (s - 1) / 2 + s);
            for (int yy = y0; yy < y1; ++yy)
                for (int xx = x0; xx < x1; ++xx) mask[static_cast<std::size_t>(yy) * w + xx] = 0.0;
        }
    long long survivors = 0;
    for (double m : mask)
        if (m > 0.0) ++survivors;
    if (survivors == 0) return mask; // fully dropped; nothing to rescale
    const double scale = static_cast<double>(n) / static_cast<double>(survivors);
    for (double& m : mask)
        if (m > 0.0) m = scale;
    return mask;
}

// --- datasets -------------------------------------------------------------------

// Unit-covariance Gaussian clusters at pairwise center distance `separation`;
// a fraction `label_noise` of samples gets a uniformly wrong label.
inline FeatureDataset make_synthetic(const std::vector<long long>& counts, int dim,
                                     double separation, double label_noise, std::uint64_t seed) {
    const int c = static_cast<int>(counts.size());
    if (c < 2) throw std::invalid_argument("make_synthetic: need at least 2 classes");
    if (dim < c) throw std::invalid_argument("make_synthetic: feature dim must be >= class count");
    for (long long n : counts)
        if (n < 1) throw std::invalid_argument("make_synthetic: counts must be positive");
    if (label_noise < 0.0 || label_noise >= 0.5)
        throw std::invalid_argument("make_synthetic: label noise must be in [0, 0.5)");
    FeatureDataset ds;
    ds.feature_dim = dim;
    ds.num_classes = c;
    Rng rng = stream_rng(seed, Stream::synthetic);
    // centers at (separation/sqrt(2)) * e_i are pairwise `separation` apart
    const double radius = separation / std::sqrt(2.0);
    for (int cls = 0; cls < c; ++cls) {
        for (long long i = 0; i < counts[static_cast<std::size_t>(cls)]; ++i) {
            std::vector<double> x(static_cast<std::size_t>(dim));
            for (double& v : x) v = rng.normal();
            x[static_cast<std::size_t>(cls)] += radius;
            ds.features.push_back(std::move(x));
            ds.labels.push_back(cls);
        }
    }
    const auto n_total = static_cast<long long>(ds.labels.size());
    const auto n_noisy = static_cast<long long>(std::floor(label_noise * static_cast<double>(n_total) + 0.5));
    if (n_noisy > 0) {
        std::vector<std::size_t> idx(ds.labels.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        for (long long i = 0; i < n_noisy; ++i) {
            int& y = ds.labels[idx[static_cast<std::size_t>(i)]];
            int wrong = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c - 1)));
            if (wrong >= y) ++wrong;
            y = wrong;
        }
    }
    return ds;
}

// Epoch index stream for the over-sampling baseline: every class appears
// max_i(N_i) times; minority classes are drawn with replacement.
inline std::vector<std::size_t> oversample_indices(const ClassStats& stats,
                                                   const std::vector<int>& labels, Rng& rng) {
    stats.validate();
    std::vector<std::vector<std::size_t>> per_class(stats.counts.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        per_class[static_cast<std::size_t>(labels[i])].push_back(i);
    long long max_n = 0;
    for (long long n : stats.counts) max_n = std::max(max_n, n);
    std::vector<std::size_t> epoch;
    epoch.reserve(static_cast<std::size_t>(max_n) * stats.counts.size());
    for (const auto& idx : per_class) {
        if (static_cast<long long>(idx.size()) == max_n) {
            epoch.insert(epoch.end(), idx.begin(), idx.end());
        } else {
            for (long long i = 0; i < max_n; ++i)
                epoch.push_back(idx[rng.uniform_int(idx.size())]);
        }
    }
    rng.shuffle(epoch);
    return epoch;
}

// --- training loop ----------------------------------------------------------------

struct TrainOptions {
    ModelConfig model;
    LossConfig loss;
    ScheduleConfig schedule;
    RegularizerConfig regularizer;
    int batch_size = 128;
    double val_fraction = 0.2;
    bool oversample = false;
    std::uint64_t seed = 12345;
};

struct EpochRecord {
    int epoch = 0;
    double beta = 0.0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_bacc = 0.0;
    std::vector<double> val_sens;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> log;
};

namespace detail {

inline std::vector<double> regularizer_mask(const RegularizerConfig& reg, int hidden_dim,
                                            Rng& rng) {
    switch (reg.kind) {
        case RegularizerKind::none: return {};
        case RegularizerKind::dropout: return dropout_mask(hidden_dim, reg.drop_prob, rng);
        case RegularizerKind::dropblock: {
            int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(hidden_dim))));
            if (side * side != hidden_dim)
                throw std::invalid_argument(
                    "dropblock needs a perfect-square hidden_dim; use dropout otherwise");
            return dropblock_mask(side, side, reg.drop_prob, reg.block_size, rng);
        }
    }
    return {};
}

inline std::vector<double> eval_scores(const ModelParams& p, std::span<const double> x) {
    ForwardPass f = forward(p, x);
    std::vector<double> scores(f.logits.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = 1.0 / (1.0 + std::exp(-f.logits[i])); // per-class probability
    return scores;
}

} // namespace detail

namespace detail {

// Core loop shared by the feature-vector and image front ends.
// train_features(epoch, indices) materializes the feature rows for one batch;
// val_features(index) yields the fixed evaluation-time features.
template <typename TrainBatchFn, typename ValFn>
TrainResult train_impl(const std::vector<int>& labels, int num_classes, const TrainOptions& opt,
                       TrainBatchFn&& train_features, ValFn&& val_features) {
    if (labels.empty()) throw std::invalid_argument("train: empty dataset");
    if (num_classes != opt.model.num_classes)
        throw std::invalid_argument("train: num_classes does not match dataset");
    if (opt.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    opt.schedule.validate();
    opt.regularizer.validate();
    opt.loss.validate(num_classes);

    auto [train_idx, val_idx] =
        stratified_indices(labels, num_classes, 1.0 - opt.val_fraction, opt.seed);

    std::vector<long long> counts(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i : train_idx) ++counts[static_cast<std::size_t>(labels[i])];
    ClassStats train_stats{counts};
    std::vector<int> train_labels;
    train_labels.reserve(train_idx.size());
    for (std::size_t i : train_idx) train_labels.push_back(labels[i]);

    Rng init_rng = stream_rng(opt.seed, Stream::init);
    TrainResult result;
    result.params = init_params(opt.model, init_rng);
    AdamState adam(result.params);

    for (int epoch = 0; epoch < opt.schedule.max_epochs; ++epoch) {
        const double beta = cls_beta(epoch, opt.schedule);
        const double lr = lr_at(epoch, opt.schedule);

        std::vector<std::size_t> order;
        if (opt.oversample) {
            Rng rng = stream_rng(opt.seed, Stream::sampler, static_cast<std::uint64_t>(epoch));
            for (std::size_t local : oversample_indices(train_stats, train_labels, rng))
                order.push_back(train_idx[local]);
        } else {
            order = train_idx;
            Rng rng = stream_rng(opt.seed, Stream::shuffle, static_cast<std::uint64_t>(epoch));
            rng.shuffle(order);
        }

        double loss_sum = 0.0;
        std::size_t batch_start = 0;
        std::size_t batch_no = 0;
        while (batch_start < order.size()) {
            const std::size_t batch_end =
                std::min(batch_start + static_cast<std::size_t>(opt.batch_size), order.size());
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(batch_start),
                                           order.begin() + static_cast<std::ptrdiff_t>(batch_end));
            std::vector<std::vector<double>> feats = train_features(epoch, batch);
            Gradients grads(result.params);
            Rng drop_rng =
                stream_rng(opt.seed, Stream::dropout, static_cast<std::uint64_t>(epoch), batch_no);
            for (std::size_t k = 0; k < batch.size(); ++k) {
                std::vector<double> mask =
                    regularizer_mask(opt.regularizer, opt.model.hidden_dim, drop_rng);
                ForwardPass f = forward(result.params, feats[k], mask);
                LossOutput lo =
                    loss_for_family(f.logits, labels[batch[k]], train_stats, opt.loss, beta);
                if (!std::isfinite(lo.value))
                    throw numeric_error("training diverged at epoch " + std::to_string(epoch) +
                                        ": non-finite loss");
                loss_sum += lo.value;
                backward_accumulate(result.params, feats[k], f, lo.grad, mask, grads);
            }
            grads.scale(1.0 / static_cast<double>(batch.size())); // mean reduction
            adam_step(adam, result.params, grads, lr);
            batch_start = batch_end;
            ++batch_no;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.beta = beta;
        rec.lr = lr;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        ConfusionMatrix cm(num_classes);
        for (std::size_t i : val_idx)
            cm.add(labels[i], argmax_class(eval_scores(result.params, val_features(i))));
        rec.val_bacc = balanced_accuracy(cm);
        ClassReport rep = class_report(cm);
        for (const auto& s : rep.sensitivity) rec.val_sens.push_back(s.value_or(0.0));
        result.log.push_back(std::move(rec));
    }
    return result;
}

} // namespace detail

inline TrainResult train(const FeatureDataset& ds, const TrainOptions& opt) {
    if (ds.feature_dim != opt.model.input_dim)
        throw std::invalid_argument("train: input_dim does not match dataset");
    auto batch_features = [&ds](int, const std::vector<std::size_t>& batch) {
        std::vector<std::vector<double>> feats;
        feats.reserve(batch.size());
        for (std::size_t i : batch) feats.push_back(ds.features[i]);
        return feats;
    };
    auto val_features = [&ds](std::size_t i) { return ds.features[i]; };
    return detail::train_impl(ds.labels, ds.num_classes, opt, batch_features, val_features);
}

// --- image-input training ----------------------------------------------------

struct ImageDataset {
    std::vector<ImageBuffer> images;
    std::vector<int> labels;
    int num_classes = 0;
};

enum class PairingScope { dataset, batch };

namespace detail {

inline std::vector<double> flatten_pixels(const ImageBuffer& img) {
    std::vector<double> x(img.pixels.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = img.pixels[i] / 255.0;
    return x;
}

// Deterministic evaluation-time view: upscale if needed, center crop.
inline ImageBuffer center_crop(const ImageBuffer& img, int size) {
    ImageBuffer src = upscale_min_side(img, size);
    return crop_at(src, size, (src.width - size) / 2, (src.height - size) / 2);
}

} // namespace detail

// Trains on raw crops: each epoch every training image is run through the
// augmentation policy (per-image stream seeded by image index and epoch) and
// the crop's normalized pixels feed the classifier. Without a policy the
// model sees deterministic center crops.
inline TrainResult train(const ImageDataset& ds, const TrainOptions& opt,
                         const std::optional<PolicyConfig>& policy,
                         PairingScope scope = PairingScope::dataset) {
    const int crop = policy ? policy->crop_size : static_cast<int>(std::lround(
                                 std::sqrt(static_cast<double>(opt.model.input_dim) / 3.0)));
    if (crop * crop * 3 != opt.model.input_dim)
        throw std::invalid_argument("train: input_dim must equal crop_size^2 * 3");
    auto batch_features = [&, crop](int epoch, const std::vector<std::size_t>& batch) {
        std::vector<std::vector<double>> feats;
        feats.reserve(batch.size());
        PartnerSource partners;
        std::vector<ImageBuffer> batch_pool;
        if (policy) {
            if (scope == PairingScope::dataset) {
                partners = {ds.images.size(),
                            [&ds](std::size_t i) { return ds.images[i]; }};
            } else {
                batch_pool.reserve(batch.size());
                for (std::size_t i : batch) batch_pool.push_back(ds.images[i]);
                partners = partner_pool(batch_pool);
            }
        }
        for (std::size_t i : batch) {
            if (policy) {
                Rng rng = stream_rng(opt.seed, Stream::policy, static_cast<std::uint64_t>(i),
                                     static_cast<std::uint64_t>(epoch));
                TransformPlan plan =
                    sample_plan(*policy, ds.images[i].width, ds.images[i].height, rng);
                feats.push_back(detail::flatten_pixels(
                    execute_plan(ds.images[i], plan, partners, policy->crop_size)));
            } else {
                feats.push_back(detail::flatten_pixels(detail::center_crop(ds.images[i], crop)));
            }
        }
        return feats;
    };
    auto val_features = [&, crop](std::size_t i) {
        return detail::flatten_pixels(detail::center_crop(ds.images[i], crop));
    };
    return detail::train_impl(ds.labels, ds.num_classes, opt, batch_features, val_features);
}

// --- persistence -----------------------------------------------------------------

inline void write_epoch_log(std::ostream& out, std::span<const EpochRecord> log, int num_classes) {
    out << "epoch,beta,lr,train_loss,val_bacc";
    for (int c = 0; c < num_classes; ++c) out << ",val_sens_" << c;
    out << '\n';
    char buf[80];
    for (const EpochRecord& r : log) {
        out << r.epoch;
        std::snprintf(buf, sizeof(buf), ",%.9g,%.9g,%.9g,%.9g", r.beta, r.lr, r.train_loss,
                      r.val_bacc);
        out << buf;
        for (double s : r.val_sens) {
            std::snprintf(buf, sizeof(buf), ",%.9g", s);
            out << buf;
        }
        out << '\n';
    }
}

inline void save_checkpoint(std::ostream& out, const ModelParams& p) {
    out << "longtail-checkpoint v1\n";
    out << p.input_dim << ' ' << p.hidden_dim << ' ' << p.num_classes << '\n';
    char buf[40];
    auto dump = [&](const char* name, const std::vector<double>& v) {
        out << name;
        for (double x : v) {
            std::snprintf(buf, sizeof(buf), " %.17g", x);
            out << buf;
        }
        out << '\n';
    };
    dump("w1", p.w1);
    dump("b1", p.b1);
    dump("w2", p.w2);
    dump("b2", p.b2);
}

inline ModelParams load_checkpoint(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header != "longtail-checkpoint v1")
        throw data_error("checkpoint: unrecognized header");
    ModelParams p;
    in >> p.input_dim >> p.hidden_dim >> p.num_classes;
    if (!in || p.input_dim < 1 || p.hidden_dim < 1 || p.num_classes < 2)
        throw data_error("checkpoint: malformed dimensions");
    auto read_block = [&](const char* name, std::vector<double>& v, std::size_t n) {
        std::string tag;
        in >> tag;
        if (tag != name) throw data_error(std::string("checkpoint: expected block '") + name + "'");
        v.resize(n);
        for (double& x : v)
            if (!(in >> x)) throw data_error("checkpoint: truncated parameter block");
    };
    read_block("w1", p.w1, static_cast<std::size_t>(p.input_dim) * p.hidden_dim);
    read_block("b1", p.b1, static_cast<std::size_t>(p.hidden_dim));
    read_block("w2", p.w2, static_cast<std::size_t>(p.hidden_dim) * p.num_classes);
    read_block("b2", p.b2, static_cast<std::size_t>(p.num_classes));
    return p;
}

} // namespace longtail
