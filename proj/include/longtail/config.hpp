#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "longtail/errors.hpp"
#include "longtail/loss.hpp"
#include "longtail/policy.hpp"
#include "longtail/schedule.hpp"
#include "longtail/trainer.hpp"

namespace longtail {

// Flat, fully documented configuration surface. Defaults follow the paper's
// reported settings wherever it states one.
struct RunConfig {
    std::uint64_t seed = 12345;

    // loss
    std::string loss_family = "mwnl";
    double alpha = 1.1;
    double gamma = 2.0;
    double clamp_t = 0.1;
    std::string class_coeff = "1.0"; // scalar broadcast or comma list
    double beta_cb = 0.9999;
    std::string class_counts;       // comma list; required by the loss command
    std::string beta_eff;           // empty = alpha (static weighting)

    // schedule
    std::string schedule_mode = "cls";
    int e1 = 20;
    int e2 = 60;
    int drw_switch = 20;
    double lr_start = 1e-3;
    double lr_decay = 0.1;
    int lr_milestone_start = 30;
    int lr_milestone_step = 10;
    int max_epochs = 70;

    // augmentation policy
    int n_transforms = 2;
    double p_exec = 0.7;
    std::string order = "color,shape";
    std::string magnitude_mode = "full_random"; // or cm:<level> / rm:<level>
    int crop_size = 224;
    bool distinct_kinds = false;
    std::string pairing_scope = "dataset"; // or batch

    // regularizer
    std::string regularizer = "dropout"; // dropout | dropblock | none
    double drop_prob = 0.1;
    int block_size = 5;

    // trainer
    int hidden_dim = 32;
    int input_dim = 16;
    int batch_size = 128;
    double val_fraction = 0.2;
    std::string sampler = "shuffle"; // shuffle | oversample
    std::string train_features;     // feature csv path
    std::string train_manifest;     // image manifest path
    std::string synthetic_counts = "1000,500,100,50,20";
    double synthetic_separation = 3.0;
    double synthetic_noise = 0.0;

    // evaluation
    int k_crops = 16;
    std::string aggregate = "probs"; // probs | logits
    int jpeg_quality = 95;
};

namespace detail {

struct ConfigKey {
    const char* name;
    const char* doc;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + v + "'");
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline const std::vector<ConfigKey>& config_keys() {
    auto real_key = [](const char* name, const char* doc, double RunConfig::* field) {
        return ConfigKey{name, doc,
                         [field](const RunConfig& c) { return format_real(c.*field); },
                         [field, name](RunConfig& c, const std::string& v) {
                             c.*field = parse_real(name, v);
                         }};
    };
    auto int_key = [](const char* name, const char* doc, int RunConfig::* field) {
        return ConfigKey{name, doc,
                         [field](const RunConfig& c) { return std::to_string(c.*field); },
                         [field, name](RunConfig& c, const std::string& v) {
                             c.*field = static_cast<int>(parse_int(name, v));
                         }};
    };
    auto str_key = [](const char* name, const char* doc, std::string RunConfig::* field) {
        return ConfigKey{name, doc, [field](const RunConfig& c) { return c.*field; },
                         [field](RunConfig& c, const std::string& v) { c.*field = v; }};
    };
    static const std::vector<ConfigKey> keys = {
        {"seed", "master seed; every random stream derives from it",
         [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) {
             c.seed = static_cast<std::uint64_t>(parse_int("seed", v));
         }},
        str_key("loss_family", "ce | ce_rw | cb_focal | mwl_focal | mwnl", &RunConfig::loss_family),
        real_key("alpha", "class-weight exponent", &RunConfig::alpha),
        real_key("gamma", "focal exponent r", &RunConfig::gamma),
        real_key("clamp_t", "outlier clamp threshold T", &RunConfig::clamp_t),
        str_key("class_coeff", "per-class coefficient C_i (scalar or comma list)",
                &RunConfig::class_coeff),
        real_key("beta_cb", "class-balanced beta (cb_focal only)", &RunConfig::beta_cb),
        str_key("class_counts", "per-class sample counts N_i for the loss command",
                &RunConfig::class_counts),
        str_key("beta_eff", "weighting exponent for the loss command; empty = alpha",
                &RunConfig::beta_eff),
        str_key("schedule_mode", "static | drw | cls", &RunConfig::schedule_mode),
        int_key("e1", "cls ramp start epoch E1", &RunConfig::e1),
        int_key("e2", "cls ramp end epoch E2", &RunConfig::e2),
        int_key("drw_switch", "drw re-weighting switch epoch", &RunConfig::drw_switch),
        real_key("lr_start", "initial learning rate", &RunConfig::lr_start),
        real_key("lr_decay", "learning-rate decay factor", &RunConfig::lr_decay),
        int_key("lr_milestone_start", "first decay epoch", &RunConfig::lr_milestone_start),
        int_key("lr_milestone_step", "epochs between decays", &RunConfig::lr_milestone_step),
        int_key("max_epochs", "early-stop epoch bound", &RunConfig::max_epochs),
        int_key("n_transforms", "transform draws per image N", &RunConfig::n_transforms),
        real_key("p_exec", "execution probability P per draw", &RunConfig::p_exec),
        str_key("order", "comma list over color/shape/any, one per draw", &RunConfig::order),
        str_key("magnitude_mode", "full_random | cm:<level> | rm:<level>",
                &RunConfig::magnitude_mode),
        int_key("crop_size", "square crop side in pixels", &RunConfig::crop_size),
        {"distinct_kinds", "draw plan kinds without replacement",
         [](const RunConfig& c) { return c.distinct_kinds ? "true" : "false"; },
         [](RunConfig& c, const std::string& v) {
             c.distinct_kinds = parse_bool("distinct_kinds", v);
         }},
        str_key("pairing_scope", "sample_pairing partner pool: dataset | batch",
                &RunConfig::pairing_scope),
        str_key("regularizer", "dropout | dropblock | none", &RunConfig::regularizer),
        real_key("drop_prob", "regularizer drop probability p", &RunConfig::drop_prob),
        int_key("block_size", "dropblock square side s", &RunConfig::block_size),
        int_key("hidden_dim", "hidden units of the reference classifier", &RunConfig::hidden_dim),
        int_key("input_dim", "feature dimension (synthetic data)", &RunConfig::input_dim),
        int_key("batch_size", "minibatch size", &RunConfig::batch_size),
        real_key("val_fraction", "validation split fraction", &RunConfig::val_fraction),
        str_key("sampler", "shuffle | oversample (CE-RS style)", &RunConfig::sampler),
        str_key("train_features", "feature csv path (id,label,f_0..)", &RunConfig::train_features),
        str_key("train_manifest", "image manifest path for training", &RunConfig::train_manifest),
        str_key("synthetic_counts", "per-class counts for synthetic data",
                &RunConfig::synthetic_counts),
        real_key("synthetic_separation", "synthetic cluster center distance",
                 &RunConfig::synthetic_separation),
        real_key("synthetic_noise", "synthetic wrong-label fraction", &RunConfig::synthetic_noise),
        int_key("k_crops", "crops per test image (perfect square)", &RunConfig::k_crops),
        str_key("aggregate", "crop aggregation space: probs | logits", &RunConfig::aggregate),
        int_key("jpeg_quality", "quality for jpeg re-encoding", &RunConfig::jpeg_quality),
    };
    return keys;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        std::string f = s.substr(start, comma == std::string::npos ? comma : comma - start);
        std::size_t b = f.find_first_not_of(" \t");
        std::size_t e = f.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

} // namespace detail

inline void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : detail::config_keys())
        if (key == k.name) {
            k.set(cfg, value);
            return;
        }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& k : detail::config_keys()) {
        out += k.name;
        out += " = ";
        out += k.get(cfg);
        out += '\n';
    }
    return out;
}

inline std::string config_help(const RunConfig& defaults) {
    std::string out;
    for (const auto& k : detail::config_keys()) {
        char line[256];
        std::string def = k.get(defaults);
        if (def.empty()) def = "(empty)";
        std::snprintf(line, sizeof(line), "  %-22s = %-18s %s\n", k.name, def.c_str(), k.doc);
        out += line;
    }
    return out;
}

inline void load_config_stream(RunConfig& cfg, std::istream& in, const std::string& source) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                        ": expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            std::size_t x = s.find_first_not_of(" \t");
            std::size_t y = s.find_last_not_of(" \t");
            s = x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
        };
        trim(key);
        trim(value);
        try {
            set_config_key(cfg, key, value);
        } catch (const std::invalid_argument& ex) {
            throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open config file '" + path + "'");
    load_config_stream(cfg, in, path);
}

// --- typed views ------------------------------------------------------------

inline LossFamily parse_loss_family(const std::string& name) {
    if (name == "ce") return LossFamily::ce;
    if (name == "ce_rw") return LossFamily::ce_rw;
    if (name == "cb_focal") return LossFamily::cb_focal;
    if (name == "mwl_focal") return LossFamily::mwl_focal;
    if (name == "mwnl") return LossFamily::mwnl;
    throw std::invalid_argument("config: unknown loss_family '" + name + "'");
}

inline LossConfig loss_config(const RunConfig& cfg, int num_classes) {
    LossConfig lc;
    lc.family = parse_loss_family(cfg.loss_family);
    lc.alpha = cfg.alpha;
    lc.gamma = cfg.gamma;
    lc.clamp_t = cfg.clamp_t;
    lc.beta_cb = cfg.beta_cb;
    std::vector<std::string> coeffs = detail::split_list(cfg.class_coeff);
    if (coeffs.size() == 1) {
        double c = detail::parse_real("class_coeff", coeffs[0]);
        if (c != 1.0) lc.class_coeff.assign(static_cast<std::size_t>(num_classes), c);
    } else if (!coeffs.empty()) {
        for (const std::string& s : coeffs)
            lc.class_coeff.push_back(detail::parse_real("class_coeff", s));
    }
    lc.validate(num_classes);
    return lc;
}

inline ScheduleConfig schedule_config(const RunConfig& cfg) {
    ScheduleConfig sc;
    if (cfg.schedule_mode == "static") {
        sc.mode = ScheduleMode::Static;
    } else if (cfg.schedule_mode == "drw") {
        sc.mode = ScheduleMode::Drw;
    } else if (cfg.schedule_mode == "cls") {
        sc.mode = ScheduleMode::Cls;
    } else {
        throw std::invalid_argument("config: unknown schedule_mode '" + cfg.schedule_mode + "'");
    }
    sc.e_switch = cfg.drw_switch;
    sc.e1 = cfg.e1;
    sc.e2 = cfg.e2;
    sc.alpha = cfg.alpha;
    sc.lr_start = cfg.lr_start;
    sc.lr_decay = cfg.lr_decay;
    sc.lr_milestone_start = cfg.lr_milestone_start;
    sc.lr_milestone_step = cfg.lr_milestone_step;
    sc.max_epochs = cfg.max_epochs;
    sc.validate();
    return sc;
}

inline PolicyConfig policy_config(const RunConfig& cfg) {
    PolicyConfig pc;
    pc.n = cfg.n_transforms;
    pc.p_exec = cfg.p_exec;
    pc.order.clear();
    for (const std::string& tok : detail::split_list(cfg.order)) {
        if (tok == "color") pc.order.push_back(SubsetSelector::color);
        else if (tok == "shape") pc.order.push_back(SubsetSelector::shape);
        else if (tok == "any") pc.order.push_back(SubsetSelector::any);
        else throw std::invalid_argument("config: order token must be color/shape/any, got '" + tok + "'");
    }
    if (cfg.magnitude_mode == "full_random") {
        pc.magnitude_mode = MagnitudeMode::full_random;
    } else if (cfg.magnitude_mode.rfind("cm:", 0) == 0) {
        pc.magnitude_mode = MagnitudeMode::constant_level;
        pc.level = static_cast<int>(detail::parse_int("magnitude_mode", cfg.magnitude_mode.substr(3)));
    } else if (cfg.magnitude_mode.rfind("rm:", 0) == 0) {
        pc.magnitude_mode = MagnitudeMode::random_level;
        pc.level = static_cast<int>(detail::parse_int("magnitude_mode", cfg.magnitude_mode.substr(3)));
    } else {
        throw std::invalid_argument("config: unknown magnitude_mode '" + cfg.magnitude_mode + "'");
    }
    pc.crop_size = cfg.crop_size;
    pc.distinct_kinds = cfg.distinct_kinds;
    pc.validate();
    return pc;
}

inline RegularizerConfig regularizer_config(const RunConfig& cfg) {
    RegularizerConfig rc;
    if (cfg.regularizer == "none") rc.kind = RegularizerKind::none;
    else if (cfg.regularizer == "dropout") rc.kind = RegularizerKind::dropout;
    else if (cfg.regularizer == "dropblock") rc.kind = RegularizerKind::dropblock;
    else throw std::invalid_argument("config: unknown regularizer '" + cfg.regularizer + "'");
    rc.drop_prob = cfg.drop_prob;
    rc.block_size = cfg.block_size;
    rc.validate();
    return rc;
}

inline PairingScope pairing_scope(const RunConfig& cfg) {
    if (cfg.pairing_scope == "dataset") return PairingScope::dataset;
    if (cfg.pairing_scope == "batch") return PairingScope::batch;
    throw std::invalid_argument("config: pairing_scope must be dataset or batch");
}

inline std::vector<long long> parse_counts(const std::string& key, const std::string& value) {
    std::vector<long long> counts;
    for (const std::string& tok : detail::split_list(value))
        counts.push_back(detail::parse_int(key, tok));
    return counts;
}

} // namespace longtail
