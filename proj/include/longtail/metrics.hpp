#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "longtail/errors.hpp"

namespace longtail {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<long long> cells;

    explicit ConfusionMatrix(int c = 0)
        : num_classes(c), cells(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0) {}

    long long& at(int truth, int pred) {
        return cells[static_cast<std::size_t>(truth) * num_classes + pred];
    }
    long long at(int truth, int pred) const {
        return cells[static_cast<std::size_t>(truth) * num_classes + pred];
    }
    void add(int truth, int pred, long long k = 1) { at(truth, pred) += k; }

    long long row_sum(int i) const {
        long long s = 0;
        for (int j = 0; j < num_classes; ++j) s += at(i, j);
        return s;
    }
    long long col_sum(int j) const {
        long long s = 0;
        for (int i = 0; i < num_classes; ++i) s += at(i, j);
        return s;
    }
    long long total() const { return std::accumulate(cells.begin(), cells.end(), 0LL); }

    // Accumulation is associative; shards can be merged.
    void merge(const ConfusionMatrix& o) {
        if (o.num_classes != num_classes)
            throw std::invalid_argument("ConfusionMatrix::merge: class count mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += o.cells[i];
    }
};

// Mean of per-class recalls.
inline double balanced_accuracy(const ConfusionMatrix& cm) {
    if (cm.num_classes < 1) throw std::invalid_argument("balanced_accuracy: empty matrix");
    double sum = 0.0;
    for (int i = 0; i < cm.num_classes; ++i) {
        long long row = cm.row_sum(i);
        if (row == 0)
            throw data_error("balanced_accuracy: class " + std::to_string(i) +
                             " has no samples, recall undefined");
        sum += static_cast<double>(cm.at(i, i)) / static_cast<double>(row);
    }
    return sum / cm.num_classes;
}

struct ClassReport {
    std::vector<std::optional<double>> sensitivity;
    std::vector<std::optional<double>> specificity;
    std::optional<double> avg_specificity; // mean over defined classes
};

inline ClassReport class_report(const ConfusionMatrix& cm) {
    ClassReport rep;
    rep.sensitivity.resize(static_cast<std::size_t>(cm.num_classes));
    rep.specificity.resize(static_cast<std::size_t>(cm.num_classes));
    const long long total = cm.total();
    double spec_sum = 0.0;
    int spec_defined = 0;
    for (int i = 0; i < cm.num_classes; ++i) {
        long long tp = cm.at(i, i);
        long long pos = cm.row_sum(i);
        long long pred_pos = cm.col_sum(i);
        long long fp = pred_pos - tp;
        long long neg = total - pos;
        long long tn = neg - fp;
        if (pos > 0) rep.sensitivity[static_cast<std::size_t>(i)] = static_cast<double>(tp) / pos;
        if (neg > 0) {
            double s = static_cast<double>(tn) / static_cast<double>(neg);
            rep.specificity[static_cast<std::size_t>(i)] = s;
            spec_sum += s;
            ++spec_defined;
        }
    }
    if (spec_defined > 0) rep.avg_specificity = spec_sum / spec_defined;
    return rep;
}

struct Prediction {
    std::string id;
    int true_class = 0;
    std::vector<double> scores;
};

struct PredictionSet {
    int num_classes = 0;
    std::vector<Prediction> samples;
};

struct AucReport {
    std::vector<std::optional<double>> per_class; // nullopt = excluded
    std::optional<double> mean;                   // over included classes
};

// One-vs-rest AUC via the rank statistic (midranks handle score ties exactly).
inline AucReport avg_auc(const PredictionSet& preds) {
    AucReport rep;
    rep.per_class.resize(static_cast<std::size_t>(preds.num_classes));
    const std::size_t n = preds.samples.size();
    double sum = 0.0;
    int included = 0;
    std::vector<std::size_t> idx(n);
    for (int c = 0; c < preds.num_classes; ++c) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        auto score = [&](std::size_t i) { return preds.samples[i].scores[static_cast<std::size_t>(c)]; };
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return score(a) < score(b); });
        long long n_pos = 0;
        double rank_sum_pos = 0.0;
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && score(idx[j]) == score(idx[i])) ++j;
            double midrank = 0.5 * static_cast<double>(i + 1 + j); // average of ranks i+1..j
            for (std::size_t k = i; k < j; ++k)
                if (preds.samples[idx[k]].true_class == c) {
                    rank_sum_pos += midrank;
                    ++n_pos;
                }
            i = j;
        }
        long long n_neg = static_cast<long long>(n) - n_pos;
        if (n_pos == 0 || n_neg == 0) continue; // excluded, reported as nullopt
        double auc = (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1)) /
                     (static_cast<double>(n_pos) * static_cast<double>(n_neg));
        rep.per_class[static_cast<std::size_t>(c)] = auc;
        sum += auc;
        ++included;
    }
    if (included > 0) rep.mean = sum / included;
    return rep;
}

inline std::vector<double> aggregate_crops(const std::vector<std::vector<double>>& crop_scores) {
    if (crop_scores.empty()) throw std::invalid_argument("aggregate_crops: empty input");
    const std::size_t c = crop_scores.front().size();
    std::vector<double> mean(c, 0.0);
    for (const auto& s : crop_scores) {
        if (s.size() != c) throw std::invalid_argument("aggregate_crops: ragged score vectors");
        for (std::size_t i = 0; i < c; ++i) mean[i] += s[i];
    }
    for (double& v : mean) v /= static_cast<double>(crop_scores.size());
    return mean;
}

// Predicted class is the argmax of the score vector (lowest index on ties).
inline int argmax_class(const std::vector<double>& scores) {
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

inline ConfusionMatrix confusion_from_predictions(const PredictionSet& preds) {
    ConfusionMatrix cm(preds.num_classes);
    for (const Prediction& p : preds.samples) cm.add(p.true_class, argmax_class(p.scores));
    return cm;
}

// Group rows sharing a sample id (multi-crop output) and average their scores.
// Group order follows first appearance; true classes must agree within a group.
inline PredictionSet aggregate_by_id(const PredictionSet& preds) {
    PredictionSet out;
    out.num_classes = preds.num_classes;
    std::unordered_map<std::string, std::size_t> pos;
    std::vector<long long> counts;
    for (const Prediction& p : preds.samples) {
        auto it = pos.find(p.id);
        if (it == pos.end()) {
            pos.emplace(p.id, out.samples.size());
            out.samples.push_back({p.id, p.true_class, p.scores});
            counts.push_back(1);
        } else {
            Prediction& agg = out.samples[it->second];
            if (agg.true_class != p.true_class)
                throw data_error("predictions: sample '" + p.id +
                                 "' has conflicting true classes");
            for (std::size_t i = 0; i < agg.scores.size(); ++i) agg.scores[i] += p.scores[i];
            ++counts[it->second];
        }
    }
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        for (double& s : out.samples[i].scores) s /= static_cast<double>(counts[i]);
    return out;
}

// Rows: sample_id, true_class, score_0 .. score_{C-1}. An optional header
// starting with "sample_id" is skipped.
inline PredictionSet load_predictions(std::istream& in) {
    PredictionSet preds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("sample_id", 0) == 0) continue;
        std::stringstream ss(line);
        std::string field;
        Prediction p;
        if (!std::getline(ss, p.id, ','))
            throw data_error("predictions line " + std::to_string(line_no) + ": missing id");
        try {
            if (!std::getline(ss, field, ','))
                throw data_error("predictions line " + std::to_string(line_no) +
                                 ": missing true class");
            p.true_class = std::stoi(field);
            while (std::getline(ss, field, ',')) p.scores.push_back(std::stod(field));
        } catch (const data_error&) {
            throw;
        } catch (const std::exception&) {
            throw data_error("predictions line " + std::to_string(line_no) + ": malformed number");
        }
        if (p.scores.empty())
            throw data_error("predictions line " + std::to_string(line_no) + ": no scores");
        if (preds.num_classes == 0) {
            preds.num_classes = static_cast<int>(p.scores.size());
        } else if (static_cast<int>(p.scores.size()) != preds.num_classes) {
            throw data_error("predictions line " + std::to_string(line_no) +
                             ": score count differs from previous rows");
        }
        if (p.true_class < 0 || p.true_class >= preds.num_classes)
            throw data_error("predictions line " + std::to_string(line_no) +
                             ": true class out of range");
        preds.samples.push_back(std::move(p));
    }
    return preds;
}

// Flat key=value metrics block.
inline std::string metrics_report(const ConfusionMatrix& cm, const AucReport& auc) {
    std::ostringstream out;
    char buf[64];
    auto emit = [&](const std::string& key, std::optional<double> v) {
        if (v) {
            std::snprintf(buf, sizeof(buf), "%.9g", *v);
            out << key << '=' << buf << '\n';
        } else {
            out << key << "=undefined\n";
        }
    };
    emit("bacc", balanced_accuracy(cm));
    ClassReport rep = class_report(cm);
    for (int i = 0; i < cm.num_classes; ++i)
        emit("sens_" + std::to_string(i), rep.sensitivity[static_cast<std::size_t>(i)]);
    for (int i = 0; i < cm.num_classes; ++i)
        emit("spec_" + std::to_string(i), rep.specificity[static_cast<std::size_t>(i)]);
    emit("avg_spec", rep.avg_specificity);
    for (int i = 0; i < cm.num_classes; ++i)
        emit("auc_" + std::to_string(i), auc.per_class[static_cast<std::size_t>(i)]);
    emit("avg_auc", auc.mean);
    return out.str();
}

} // namespace longtail
