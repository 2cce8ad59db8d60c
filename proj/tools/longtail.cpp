// Command-line front end: seeded, config-driven, file-in/file-out workflows
// over the longtail library. Subcommands: augment, train, evaluate, schedule,
// loss. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longtail/image_io.hpp"
#include "longtail/longtail.hpp"

namespace fs = std::filesystem;
using namespace longtail;

namespace {

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    return out;
}

// Writes to a file when a path is given, otherwise to stdout.
void emit(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
    } else {
        open_output(path) << content;
    }
}

double config_beta_eff(const RunConfig& cfg) {
    if (cfg.beta_eff.empty()) return cfg.alpha; // static Eq.-9-style weighting
    return detail::parse_real("beta_eff", cfg.beta_eff);
}

int cmd_schedule(const RunConfig& cfg, const std::string& out_path) {
    std::ostringstream out;
    dump_schedule(out, schedule_config(cfg));
    emit(out_path, out.str());
    return 0;
}

int cmd_loss(const RunConfig& cfg, const std::string& logits_path, const std::string& out_path) {
    std::vector<long long> counts = parse_counts("class_counts", cfg.class_counts);
    if (counts.empty())
        throw std::invalid_argument("the loss command needs the class_counts config key");
    ClassStats stats{counts};
    stats.validate();
    LossConfig lc = loss_config(cfg, stats.num_classes());
    std::ifstream in(logits_path);
    if (!in) throw data_error("cannot open logits file '" + logits_path + "'");
    std::ostringstream out;
    evaluate_loss_stream(in, out, stats, lc, config_beta_eff(cfg));
    emit(out_path, out.str());
    return 0;
}

std::vector<double> to_logit_space(const std::vector<double>& probs) {
    std::vector<double> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
        out[i] = std::log(p / (1.0 - p));
    }
    return out;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& predictions_path,
                 const std::string& manifest_path, const std::string& out_path) {
    std::ifstream in(predictions_path);
    if (!in) throw data_error("cannot open predictions file '" + predictions_path + "'");
    PredictionSet preds = load_predictions(in);

    if (cfg.k_crops < 1) throw std::invalid_argument("k_crops must be >= 1");
    if (cfg.k_crops > 1) {
        if (cfg.aggregate == "logits") {
            for (Prediction& p : preds.samples) p.scores = to_logit_space(p.scores);
        } else if (cfg.aggregate != "probs") {
            throw std::invalid_argument("aggregate must be probs or logits");
        }
        PredictionSet grouped = aggregate_by_id(preds);
        // every sample must contribute exactly k_crops rows
        if (grouped.samples.size() * static_cast<std::size_t>(cfg.k_crops) !=
            preds.samples.size()) {
            std::unordered_map<std::string, long long> counts;
            for (const Prediction& p : preds.samples) ++counts[p.id];
            for (const Prediction& p : grouped.samples)
                if (counts[p.id] != cfg.k_crops)
                    throw data_error("sample '" + p.id + "' has " +
                                     std::to_string(counts[p.id]) + " crop rows, expected " +
                                     std::to_string(cfg.k_crops));
        }
        if (cfg.aggregate == "logits") {
            for (Prediction& p : grouped.samples)
                for (double& s : p.scores) s = 1.0 / (1.0 + std::exp(-s));
        }
        preds = std::move(grouped);
    }

    if (!manifest_path.empty()) {
        Manifest m = load_manifest(manifest_path);
        std::unordered_map<std::string, int> truth;
        for (const Manifest::Entry& e : m.entries) truth.emplace(e.id, e.label);
        for (const Prediction& p : preds.samples) {
            auto it = truth.find(p.id);
            if (it == truth.end())
                throw data_error("prediction id '" + p.id + "' not present in manifest");
            if (it->second != p.true_class)
                throw data_error("sample '" + p.id + "': manifest class " +
                                 std::to_string(it->second) + " != predictions class " +
                                 std::to_string(p.true_class));
        }
        for (const Manifest::Entry& e : m.entries) {
            bool found = false;
            for (const Prediction& p : preds.samples)
                if (p.id == e.id) {
                    found = true;
                    break;
                }
            if (!found) throw data_error("manifest entry '" + e.id + "' has no prediction rows");
        }
    }

    ConfusionMatrix cm = confusion_from_predictions(preds);
    emit(out_path, metrics_report(cm, avg_auc(preds)));
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& log_path, const std::string& ckpt_path) {
    TrainOptions opt;
    opt.schedule = schedule_config(cfg);
    opt.regularizer = regularizer_config(cfg);
    opt.batch_size = cfg.batch_size;
    opt.val_fraction = cfg.val_fraction;
    opt.seed = cfg.seed;
    if (cfg.sampler == "oversample") {
        opt.oversample = true;
    } else if (cfg.sampler != "shuffle") {
        throw std::invalid_argument("sampler must be shuffle or oversample");
    }
    opt.model.hidden_dim = cfg.hidden_dim;

    TrainResult result;
    if (!cfg.train_features.empty()) {
        std::ifstream in(cfg.train_features);
        if (!in) throw data_error("cannot open feature file '" + cfg.train_features + "'");
        FeatureDataset ds = load_features_csv(in, cfg.train_features);
        opt.model.input_dim = ds.feature_dim;
        opt.model.num_classes = ds.num_classes;
        opt.loss = loss_config(cfg, ds.num_classes);
        result = train(ds, opt);
    } else if (!cfg.train_manifest.empty()) {
        Manifest m = load_manifest(cfg.train_manifest);
        ImageDataset ds;
        ds.num_classes = m.num_classes();
        for (const Manifest::Entry& e : m.entries) {
            ds.images.push_back(read_image(m.resolve(e)));
            ds.labels.push_back(e.label);
        }
        PolicyConfig policy = policy_config(cfg);
        opt.model.input_dim = policy.crop_size * policy.crop_size * 3;
        opt.model.num_classes = ds.num_classes;
        opt.loss = loss_config(cfg, ds.num_classes);
        result = train(ds, opt, policy, pairing_scope(cfg));
    } else {
        std::vector<long long> counts = parse_counts("synthetic_counts", cfg.synthetic_counts);
        FeatureDataset ds = make_synthetic(counts, cfg.input_dim, cfg.synthetic_separation,
                                           cfg.synthetic_noise, cfg.seed);
        opt.model.input_dim = ds.feature_dim;
        opt.model.num_classes = ds.num_classes;
        opt.loss = loss_config(cfg, ds.num_classes);
        result = train(ds, opt);
    }

    std::ostringstream log;
    write_epoch_log(log, result.log, result.params.num_classes);
    emit(log_path, log.str());
    if (!ckpt_path.empty()) {
        std::ofstream out = open_output(ckpt_path);
        save_checkpoint(out, result.params);
    }
    return 0;
}

std::string output_name(std::size_t index, const std::string& id) {
    std::string base = id;
    std::size_t slash = base.find_last_of('/');
    if (slash != std::string::npos) base = base.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "%06zu_", index);
    return prefix + base;
}

int cmd_augment(const RunConfig& cfg, const std::string& manifest_path, const std::string& out_dir,
                const std::string& replay_path, const std::string& format) {
    if (format != "png" && format != "jpeg")
        throw std::invalid_argument("augment format must be png or jpeg");
    Manifest m = load_manifest(manifest_path);
    fs::create_directories(out_dir);

    PartnerSource partners{m.entries.size(), [&m](std::size_t i) {
                               return read_image(m.resolve(m.entries[i]));
                           }};
    PolicyConfig policy = policy_config(cfg);

    auto write_crop = [&](const ImageBuffer& img, std::size_t index, const std::string& id) {
        std::string stem = out_dir + "/" + output_name(index, id);
        if (format == "png") {
            write_png(stem + ".png", img);
        } else {
            write_jpeg(stem + ".jpg", img, cfg.jpeg_quality);
        }
    };

    if (!replay_path.empty()) {
        std::ifstream log(replay_path);
        if (!log) throw data_error("cannot open plan log '" + replay_path + "'");
        std::string line;
        std::size_t index = 0;
        int line_no = 0;
        while (std::getline(log, line)) {
            ++line_no;
            if (line.empty() || line.rfind("image,", 0) == 0) continue;
            LoggedPlan lp = parse_plan_line(line, line_no);
            Manifest::Entry entry{lp.image_id, 0};
            ImageBuffer img = read_image(m.resolve(entry));
            ImageBuffer crop = execute_plan(img, lp.plan, partners, policy.crop_size);
            write_crop(crop, index++, lp.image_id);
        }
        return 0;
    }

    std::ofstream plan_log = open_output(out_dir + "/plans.csv");
    plan_log << plan_log_header(policy.n) << '\n';
    std::size_t written = 0;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        ImageBuffer img;
        try {
            img = read_image(m.resolve(m.entries[i]));
        } catch (const data_error& ex) {
            std::cerr << "skipping '" << m.entries[i].id << "': " << ex.what() << '\n';
            ++failed;
            continue;
        }
        Rng rng = stream_rng(cfg.seed, Stream::policy, i, 0);
        TransformPlan plan = sample_plan(policy, img.width, img.height, rng);
        ImageBuffer crop = execute_plan(img, plan, partners, policy.crop_size);
        write_crop(crop, written, m.entries[i].id);
        plan_log << plan_log_line(m.entries[i].id, plan) << '\n';
        ++written;
    }
    if (written == 0 && failed > 0) throw data_error("no image in the manifest could be read");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    std::string config_path;
    std::vector<std::string> overrides;

    CLI::App app{"longtail: augmentation policy, loss family, schedules and "
                 "reference trainer for small imbalanced datasets"};
    app.require_subcommand(0, 1);
    app.fallthrough(); // parent --config / --set stay usable after a subcommand
    app.add_option("--config", config_path,
                   "config file (flat key = value); default from $LONGTAIL_CONFIG");
    app.add_option("--set", overrides, "override a config key, e.g. --set alpha=1.2")
        ->expected(1)
        ->allow_extra_args(false);
    app.footer("Config keys (defaults match the published training recipe):\n" +
               config_help(RunConfig{}));

    auto* sc_augment = app.add_subcommand("augment", "augment a manifest of images");
    std::string manifest_path, out_dir, replay_path, format = "png";
    sc_augment->add_option("--manifest", manifest_path, "input manifest")->required();
    sc_augment->add_option("--out", out_dir, "output directory")->required();
    sc_augment->add_option("--replay", replay_path, "replay a previously written plan log");
    sc_augment->add_option("--format", format, "crop format: png | jpeg");

    auto* sc_train = app.add_subcommand("train", "train the reference classifier");
    std::string log_path, ckpt_path;
    sc_train->add_option("--log", log_path, "epoch log output (default stdout)");
    sc_train->add_option("--checkpoint", ckpt_path, "checkpoint output path");

    auto* sc_eval = app.add_subcommand("evaluate", "score a predictions file");
    std::string pred_path, eval_manifest, eval_out;
    sc_eval->add_option("--predictions", pred_path, "csv: sample_id,true_class,score_0..")
        ->required();
    sc_eval->add_option("--manifest", eval_manifest, "manifest to cross-check ids against");
    sc_eval->add_option("--out", eval_out, "metrics report output (default stdout)");

    auto* sc_schedule = app.add_subcommand("schedule", "dump the beta / learning-rate schedule");
    std::string sched_out;
    sc_schedule->add_option("--out", sched_out, "schedule dump output (default stdout)");

    auto* sc_loss = app.add_subcommand("loss", "evaluate losses and gradients for a logits file");
    std::string logits_path, loss_out;
    sc_loss->add_option("--logits", logits_path, "csv: sample_id,y,z_0..")->required();
    sc_loss->add_option("--out", loss_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (config_path.empty()) {
            if (const char* env = std::getenv("LONGTAIL_CONFIG")) config_path = env;
        }
        if (!config_path.empty()) load_config_file(cfg, config_path);
        for (const std::string& kv : overrides) {
            std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }

        if (sc_augment->parsed())
            return cmd_augment(cfg, manifest_path, out_dir, replay_path, format);
        if (sc_train->parsed()) return cmd_train(cfg, log_path, ckpt_path);
        if (sc_eval->parsed()) return cmd_evaluate(cfg, pred_path, eval_manifest, eval_out);
        if (sc_schedule->parsed()) return cmd_schedule(cfg, sched_out);
        if (sc_loss->parsed()) return cmd_loss(cfg, logits_path, loss_out);
        std::cerr << app.help();
        return 1;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    } catch (const numeric_error& ex) {
        std::cerr << "numerical failure: " << ex.what() << '\n';
        return 3;
    } catch (const data_error& ex) {
        std::cerr << "data error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
}
