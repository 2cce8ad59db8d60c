#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "longtail/errors.hpp"
#include "longtail/loss.hpp"
#include "longtail/rng.hpp"

namespace longtail {

// Labeled sample list. Two on-disk layouts:
//   path,label_name             (no header; class names in first-appearance order)
//   image,CLASS1,CLASS2,...     (header row names classes; one-hot 0.0/1.0 rows)
struct Manifest {
    enum class Layout { path_label, one_hot };

    struct Entry {
        std::string id; // path or sample id
        int label = 0;
    };

    Layout layout = Layout::path_label;
    std::vector<std::string> class_names;
    std::vector<Entry> entries;
    std::string base_dir; // directory of the manifest file; "" if parsed from memory

    int num_classes() const { return static_cast<int>(class_names.size()); }

    // Entry paths resolve relative to the manifest's directory.
    std::string resolve(const Entry& e) const {
        if (base_dir.empty() || e.id.starts_with('/')) return e.id;
        return base_dir + "/" + e.id;
    }
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string f = line.substr(start, comma == std::string::npos ? comma : comma - start);
        // tolerate spaces around separators
        std::size_t b = f.find_first_not_of(" \t\r");
        std::size_t e = f.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

} // namespace detail

inline Manifest parse_manifest(std::istream& in, const std::string& source_name = "<memory>") {
    Manifest m;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    std::unordered_map<std::string, int> label_index;
    auto fail = [&](const std::string& why) {
        throw data_error(source_name + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields = detail::split_csv(line);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() < 2) fail("expected at least two comma-separated fields");
            if (fields.size() > 2) {
                // one-hot layout; first row is the header
                m.layout = Manifest::Layout::one_hot;
                m.class_names.assign(fields.begin() + 1, fields.end());
                for (std::size_t i = 0; i < m.class_names.size(); ++i) {
                    if (m.class_names[i].empty()) fail("empty class name in header");
                    if (!label_index.emplace(m.class_names[i], static_cast<int>(i)).second)
                        fail("duplicate class name '" + m.class_names[i] + "'");
                }
                continue;
            }
            m.layout = Manifest::Layout::path_label;
            // fall through: the first row is data in the two-column layout
        }
        if (m.layout == Manifest::Layout::path_label) {
            if (fields.size() != 2) fail("expected 'path,label'");
            if (fields[0].empty()) fail("empty path");
            if (fields[1].empty()) fail("empty label");
            auto [it, inserted] =
                label_index.emplace(fields[1], static_cast<int>(m.class_names.size()));
            if (inserted) m.class_names.push_back(fields[1]);
            m.entries.push_back({fields[0], it->second});
        } else {
            if (fields.size() != m.class_names.size() + 1)
                fail("expected " + std::to_string(m.class_names.size() + 1) + " fields");
            int hot = -1;
            for (std::size_t i = 1; i < fields.size(); ++i) {
                double v;
                try {
                    v = std::stod(fields[i]);
                } catch (const std::exception&) {
                    fail("malformed indicator '" + fields[i] + "'");
                    return m; // unreachable
                }
                if (v == 0.0) continue;
                if (v != 1.0) fail("indicator must be 0.0 or 1.0");
                if (hot >= 0) fail("multi-hot row");
                hot = static_cast<int>(i - 1);
            }
            if (hot < 0) fail("row has no positive indicator");
            m.entries.push_back({fields[0], hot});
        }
    }
    if (m.entries.empty()) throw data_error(source_name + ": manifest has no entries");
    return m;
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open manifest '" + path + "'");
    Manifest m = parse_manifest(in, path);
    std::size_t slash = path.find_last_of('/');
    m.base_dir = slash == std::string::npos ? std::string(".") : path.substr(0, slash);
    return m;
}

inline std::string serialize_manifest(const Manifest& m) {
    std::string out;
    if (m.layout == Manifest::Layout::one_hot) {
        out = "image";
        for (const std::string& c : m.class_names) out += "," + c;
        out += '\n';
        for (const Manifest::Entry& e : m.entries) {
            out += e.id;
            for (int i = 0; i < m.num_classes(); ++i)
                out += i == e.label ? ",1.0" : ",0.0";
            out += '\n';
        }
    } else {
        for (const Manifest::Entry& e : m.entries) {
            out += e.id;
            out += ',';
            out += m.class_names[static_cast<std::size_t>(e.label)];
            out += '\n';
        }
    }
    return out;
}

inline ClassStats class_stats(const Manifest& m) {
    std::vector<long long> counts(static_cast<std::size_t>(m.num_classes()), 0);
    for (const Manifest::Entry& e : m.entries) ++counts[static_cast<std::size_t>(e.label)];
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] == 0)
            throw data_error("class '" + m.class_names[i] +
                             "' has no samples; per-class weights undefined");
    return ClassStats{std::move(counts)};
}

// --- feature-vector datasets -------------------------------------------------

struct FeatureDataset {
    int feature_dim = 0;
    int num_classes = 0;
    std::vector<std::vector<double>> features;
    std::vector<int> labels;

    ClassStats stats() const {
        std::vector<long long> counts(static_cast<std::size_t>(num_classes), 0);
        for (int y : labels) ++counts[static_cast<std::size_t>(y)];
        return ClassStats{std::move(counts)};
    }
};

// Rows: id, label_index, f_0 .. f_{D-1}. A header line starting with "id" is
// skipped.
inline FeatureDataset load_features_csv(std::istream& in, const std::string& source = "<memory>") {
    FeatureDataset ds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("id", 0) == 0) continue;
        std::vector<std::string> fields = detail::split_csv(line);
        if (fields.size() < 3)
            throw data_error(source + ":" + std::to_string(line_no) +
                             ": expected id,label,features");
        int label;
        std::vector<double> x;
        try {
            label = std::stoi(fields[1]);
            for (std::size_t i = 2; i < fields.size(); ++i) x.push_back(std::stod(fields[i]));
        } catch (const std::exception&) {
            throw data_error(source + ":" + std::to_string(line_no) + ": malformed number");
        }
        if (label < 0)
            throw data_error(source + ":" + std::to_string(line_no) + ": negative label");
        if (ds.feature_dim == 0) {
            ds.feature_dim = static_cast<int>(x.size());
        } else if (static_cast<int>(x.size()) != ds.feature_dim) {
            throw data_error(source + ":" + std::to_string(line_no) +
                             ": feature count differs from previous rows");
        }
        ds.num_classes = std::max(ds.num_classes, label + 1);
        ds.features.push_back(std::move(x));
        ds.labels.push_back(label);
    }
    if (ds.features.empty()) throw data_error(source + ": no feature rows");
    return ds;
}

// Seeded per-class index split. The train side gets round-half-up(N * fraction),
// clamped so both sides keep at least one sample.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_indices(const std::vector<int>& labels, int num_classes, double fraction,
                   std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw std::invalid_argument("stratified split: fraction must be in (0,1)");
    std::vector<std::vector<std::size_t>> per_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i)
        per_class[static_cast<std::size_t>(labels[i])].push_back(i);
    Rng rng = stream_rng(seed, Stream::split);
    std::vector<std::size_t> train, val;
    for (int c = 0; c < num_classes; ++c) {
        auto& idx = per_class[static_cast<std::size_t>(c)];
        if (idx.size() < 2)
            throw data_error("stratified split: class " + std::to_string(c) +
                             " has fewer than 2 samples");
        rng.shuffle(idx);
        auto n_train = static_cast<std::size_t>(
            std::floor(static_cast<double>(idx.size()) * fraction + 0.5));
        n_train = std::clamp(n_train, std::size_t{1}, idx.size() - 1);
        train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        val.insert(val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {train, val};
}

inline std::pair<Manifest, Manifest> stratified_split(const Manifest& m, double fraction,
                                                      std::uint64_t seed) {
    std::vector<int> labels;
    labels.reserve(m.entries.size());
    for (const Manifest::Entry& e : m.entries) labels.push_back(e.label);
    auto [train_idx, val_idx] = stratified_indices(labels, m.num_classes(), fraction, seed);
    auto pick = [&](const std::vector<std::size_t>& idx) {
        Manifest out;
        out.layout = m.layout;
        out.class_names = m.class_names;
        out.base_dir = m.base_dir;
        for (std::size_t i : idx) out.entries.push_back(m.entries[i]);
        return out;
    };
    return {pick(train_idx), pick(val_idx)};
}

} // namespace longtail
