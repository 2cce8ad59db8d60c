#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "longtail/image_io.hpp"
#include "longtail/rng.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kTool = LONGTAIL_CLI_PATH;

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("longtail_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

CliResult run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
    fs::path out = dir / "stdout.txt";
    fs::path err = dir / "stderr.txt";
    std::string cmd = env + (env.empty() ? "" : " ") + kTool + " " + args + " > " +
                      out.string() + " 2> " + err.string();
    int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

longtail::ImageBuffer noise_image(int w, int h, std::uint64_t seed) {
    longtail::Rng rng(seed);
    longtail::ImageBuffer img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(256));
    return img;
}

} // namespace

TEST_CASE("--help lists every config key with its paper default") {
    fs::path dir = fresh_dir("help");
    CliResult r = run_cli("--help", dir);
    CHECK(r.exit_code == 0);
    for (const char* needle :
         {"alpha", "gamma", "clamp_t", "e1", "e2", "p_exec", "n_transforms", "crop_size",
          "batch_size", "lr_start", "lr_decay", "max_epochs", "drop_prob", "block_size",
          "k_crops", "seed", "order", "magnitude_mode"}) {
        INFO(needle);
        CHECK(r.out.find(needle) != std::string::npos);
    }
    // paper-stated defaults, rendered as "key = value" (same format as the tool)
    const std::vector<std::pair<std::string, std::string>> defaults = {
        {"alpha", "1.1"},     {"gamma", "2"},          {"clamp_t", "0.1"},
        {"p_exec", "0.7"},    {"n_transforms", "2"},   {"order", "color,shape"},
        {"crop_size", "224"}, {"batch_size", "128"},   {"lr_start", "0.001"},
        {"lr_decay", "0.1"},  {"max_epochs", "70"},    {"drop_prob", "0.1"},
        {"block_size", "5"},  {"k_crops", "16"},       {"e1", "20"},
        {"e2", "60"}};
    for (const auto& [key, value] : defaults) {
        char needle[128];
        std::snprintf(needle, sizeof(needle), "  %-22s = %-18s", key.c_str(), value.c_str());
        INFO(needle);
        CHECK(r.out.find(needle) != std::string::npos);
    }
}

TEST_CASE("usage errors exit with code 1") {
    fs::path dir = fresh_dir("usage");
    CHECK(run_cli("frobnicate", dir).exit_code == 1);
    CHECK(run_cli("schedule --set no_such_key=1", dir).exit_code == 1);
    CHECK(run_cli("schedule --set e1=60 --set e2=20", dir).exit_code == 1);
}

TEST_CASE("schedule command") {
    fs::path dir = fresh_dir("schedule");
    CliResult r = run_cli("schedule", dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("epoch,beta,lr\n") == 0);
    CHECK(r.out.find("\n20,0,0.001\n") != std::string::npos);
    CHECK(r.out.find("\n40,0.275,1e-05\n") != std::string::npos);
    CHECK(r.out.find("\n60,1.1,1e-07\n") != std::string::npos);

    SECTION("beta column is monotone") {
        std::istringstream in(r.out);
        std::string line;
        std::getline(in, line);
        double prev = -1.0;
        while (std::getline(in, line)) {
            std::size_t c1 = line.find(',');
            std::size_t c2 = line.find(',', c1 + 1);
            double beta = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
            REQUIRE(beta >= prev);
            prev = beta;
        }
    }
    SECTION("byte-identical across repeated runs") {
        fs::path f1 = dir / "a.csv", f2 = dir / "b.csv";
        CHECK(run_cli("schedule --out " + f1.string(), dir).exit_code == 0);
        CHECK(run_cli("schedule --out " + f2.string(), dir).exit_code == 0);
        CHECK(slurp(f1) == slurp(f2));
        CHECK(!slurp(f1).empty());
    }
}

TEST_CASE("loss command") {
    fs::path dir = fresh_dir("loss");
    {
        std::ofstream logits(dir / "logits.csv");
        logits << "s1,0,0.0,0.0\n";
        logits << "s2,1,4.0,-3.5\n";
    }
    SECTION("ce value matches ln 2 at 9 significant digits") {
        CliResult r = run_cli("loss --logits " + (dir / "logits.csv").string() +
                                  " --set loss_family=ce --set class_counts=5,5",
                              dir);
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.find("s1,0.693147181,") == 0);
    }
    SECTION("mwnl row-for-row equals mwl_focal when the clamp never fires") {
        std::string base = "loss --logits " + (dir / "logits.csv").string() +
                           " --set class_counts=5,5 --set clamp_t=0.0001 --set loss_family=";
        CliResult a = run_cli(base + "mwnl", dir);
        CliResult b = run_cli(base + "mwl_focal", dir);
        REQUIRE(a.exit_code == 0);
        REQUIRE(b.exit_code == 0);
        CHECK(a.out == b.out);
        CHECK(!a.out.empty());
    }
    SECTION("missing class_counts is a usage error") {
        CHECK(run_cli("loss --logits " + (dir / "logits.csv").string(), dir).exit_code == 1);
    }
    SECTION("malformed rows are data errors with line numbers") {
        std::ofstream bad(dir / "bad.csv");
        bad << "s1,0,0.0,0.0\nrubbish row\n";
        bad.close();
        CliResult r = run_cli("loss --logits " + (dir / "bad.csv").string() +
                                  " --set loss_family=ce --set class_counts=5,5",
                              dir);
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("line 2") != std::string::npos);
    }
}

TEST_CASE("evaluate command") {
    fs::path dir = fresh_dir("evaluate");
    {
        std::ofstream preds(dir / "perfect.csv");
        preds << "a,0,0.9,0.1\n";
        preds << "b,1,0.2,0.8\n";
    }
    SECTION("perfect predictions score bacc = 1") {
        CliResult r = run_cli("evaluate --predictions " + (dir / "perfect.csv").string() +
                                  " --set k_crops=1",
                              dir);
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.find("bacc=1\n") != std::string::npos);
        CHECK(r.out.find("avg_auc=1\n") != std::string::npos);
    }
    SECTION("16 identical crop rows aggregate to the single-row result") {
        {
            std::ofstream crops(dir / "crops.csv");
            for (int i = 0; i < 16; ++i) crops << "a,0,0.9,0.1\n";
            for (int i = 0; i < 16; ++i) crops << "b,1,0.2,0.8\n";
        }
        CliResult single = run_cli("evaluate --predictions " + (dir / "perfect.csv").string() +
                                       " --set k_crops=1",
                                   dir);
        CliResult multi = run_cli("evaluate --predictions " + (dir / "crops.csv").string() +
                                      " --set k_crops=16",
                                  dir);
        REQUIRE(multi.exit_code == 0);
        CHECK(single.out == multi.out);
    }
    SECTION("crop count mismatch is a data error naming the sample") {
        {
            std::ofstream crops(dir / "short.csv");
            for (int i = 0; i < 3; ++i) crops << "a,0,0.9,0.1\n";
            for (int i = 0; i < 16; ++i) crops << "b,1,0.2,0.8\n";
        }
        CliResult r = run_cli("evaluate --predictions " + (dir / "short.csv").string() +
                                  " --set k_crops=16",
                              dir);
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("'a'") != std::string::npos);
    }
    SECTION("manifest id mismatch is a data error naming the first offender") {
        {
            std::ofstream manifest(dir / "manifest.csv");
            manifest << "a,pos\nb,neg\nc,neg\n";
        }
        CliResult r = run_cli("evaluate --predictions " + (dir / "perfect.csv").string() +
                                  " --manifest " + (dir / "manifest.csv").string() +
                                  " --set k_crops=1",
                              dir);
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("'c'") != std::string::npos);
    }
}

TEST_CASE("train command") {
    fs::path dir = fresh_dir("train");
    const std::string small = " --set synthetic_counts=40,20 --set input_dim=4"
                              " --set hidden_dim=8 --set max_epochs=4 --set batch_size=16"
                              " --set synthetic_separation=3.0 --set schedule_mode=static";
    SECTION("deterministic logs and checkpoint across repeated runs") {
        fs::path log1 = dir / "log1.csv", log2 = dir / "log2.csv";
        fs::path ck1 = dir / "ck1.txt", ck2 = dir / "ck2.txt";
        CliResult a = run_cli("train --log " + log1.string() + " --checkpoint " + ck1.string() +
                                  small,
                              dir);
        REQUIRE(a.exit_code == 0);
        CliResult b = run_cli("train --log " + log2.string() + " --checkpoint " + ck2.string() +
                                  small,
                              dir);
        REQUIRE(b.exit_code == 0);
        CHECK(slurp(log1) == slurp(log2));
        CHECK(slurp(ck1) == slurp(ck2));
        CHECK(slurp(log1).find("epoch,beta,lr,train_loss,val_bacc") == 0);
    }
    SECTION("weight-one members coincide through the cli") {
        fs::path la = dir / "mwl.csv", lb = dir / "cb.csv";
        CliResult a = run_cli("train --log " + la.string() + small +
                                  " --set loss_family=mwl_focal --set alpha=0",
                              dir);
        CliResult b = run_cli("train --log " + lb.string() + small +
                                  " --set loss_family=cb_focal --set beta_cb=0",
                              dir);
        REQUIRE(a.exit_code == 0);
        REQUIRE(b.exit_code == 0);
        CHECK(slurp(la) == slurp(lb));
    }
    SECTION("cls beta column matches the schedule dump") {
        fs::path log = dir / "cls.csv";
        std::string cls = small;
        std::size_t pos = cls.find("schedule_mode=static");
        cls.replace(pos, std::string("schedule_mode=static").size(), "schedule_mode=cls");
        CliResult a = run_cli("train --log " + log.string() + cls +
                                  " --set e1=1 --set e2=3 --set loss_family=mwnl",
                              dir);
        REQUIRE(a.exit_code == 0);
        CliResult sched = run_cli("schedule --set e1=1 --set e2=3 --set max_epochs=4", dir);
        REQUIRE(sched.exit_code == 0);
        // compare epoch,beta prefixes line by line (train log stops at max_epochs-1)
        std::istringstream train_log(slurp(log)), dump(sched.out);
        std::string tl, dl;
        std::getline(train_log, tl);
        std::getline(dump, dl);
        while (std::getline(train_log, tl) && std::getline(dump, dl)) {
            std::size_t c1 = tl.find(',');
            std::size_t c2 = tl.find(',', c1 + 1);
            std::size_t d1 = dl.find(',');
            std::size_t d2 = dl.find(',', d1 + 1);
            REQUIRE(tl.substr(0, c2) == dl.substr(0, d2));
        }
    }
    SECTION("config file and environment variable are honored") {
        fs::path cfg = dir / "run.conf";
        {
            std::ofstream out(cfg);
            out << "# tiny run\n";
            out << "synthetic_counts = 40,20\n";
            out << "input_dim = 4\nhidden_dim = 8\nmax_epochs = 2\nbatch_size = 16\n";
            out << "schedule_mode = static\n";
        }
        fs::path l1 = dir / "via_flag.csv", l2 = dir / "via_env.csv";
        CliResult a = run_cli("train --config " + cfg.string() + " --log " + l1.string(), dir);
        REQUIRE(a.exit_code == 0);
        CliResult b = run_cli("train --log " + l2.string(), dir,
                              "LONGTAIL_CONFIG=" + cfg.string());
        REQUIRE(b.exit_code == 0);
        CHECK(slurp(l1) == slurp(l2));
    }
}

TEST_CASE("augment command") {
    fs::path dir = fresh_dir("augment");
    fs::path imgs = dir / "imgs";
    fs::create_directories(imgs);
    for (int i = 0; i < 3; ++i)
        longtail::write_png((imgs / ("img" + std::to_string(i) + ".png")).string(),
                            noise_image(20 + i, 18, 900 + static_cast<std::uint64_t>(i)));
    {
        std::ofstream manifest(dir / "manifest.csv");
        manifest << "imgs/img0.png,a\nimgs/img1.png,b\nimgs/img2.png,a\n";
    }
    const std::string small_policy = " --set crop_size=12";

    SECTION("produces one crop per image plus a replayable plan log") {
        fs::path out1 = dir / "out1";
        CliResult r = run_cli("augment --manifest " + (dir / "manifest.csv").string() +
                                  " --out " + out1.string() + small_policy,
                              dir);
        REQUIRE(r.exit_code == 0);
        CHECK(fs::exists(out1 / "000000_img0.png"));
        CHECK(fs::exists(out1 / "000001_img1.png"));
        CHECK(fs::exists(out1 / "000002_img2.png"));
        REQUIRE(fs::exists(out1 / "plans.csv"));

        // identical config + seed: byte-identical outputs
        fs::path out2 = dir / "out2";
        run_cli("augment --manifest " + (dir / "manifest.csv").string() + " --out " +
                    out2.string() + small_policy,
                dir);
        for (const char* f : {"000000_img0.png", "000001_img1.png", "000002_img2.png",
                              "plans.csv"})
            REQUIRE(slurp(out1 / f) == slurp(out2 / f));

        // replaying the plan log reproduces the crops bit-exactly
        fs::path out3 = dir / "out3";
        CliResult rep = run_cli("augment --manifest " + (dir / "manifest.csv").string() +
                                    " --out " + out3.string() + " --replay " +
                                    (out1 / "plans.csv").string() + small_policy,
                                dir);
        REQUIRE(rep.exit_code == 0);
        for (const char* f : {"000000_img0.png", "000001_img1.png", "000002_img2.png"})
            REQUIRE(slurp(out1 / f) == slurp(out3 / f));
    }
    SECTION("the default policy applies exactly two draws per image") {
        fs::path out = dir / "out_default";
        run_cli("augment --manifest " + (dir / "manifest.csv").string() + " --out " +
                    out.string() + small_policy,
                dir);
        std::ifstream log(out / "plans.csv");
        std::string header;
        std::getline(log, header);
        CHECK(header ==
              "image,crop_x,crop_y,kind_0,exec_0,mag_0,seed_0,kind_1,exec_1,mag_1,seed_1");
    }
    SECTION("unreadable images are skipped; all-unreadable fails") {
        std::ofstream manifest(dir / "mixed.csv");
        manifest << "imgs/img0.png,a\nimgs/missing.png,b\n";
        manifest.close();
        fs::path out = dir / "out_mixed";
        CliResult r = run_cli("augment --manifest " + (dir / "mixed.csv").string() + " --out " +
                                  out.string() + small_policy,
                              dir);
        CHECK(r.exit_code == 0);
        CHECK(r.err.find("missing.png") != std::string::npos);
        CHECK(fs::exists(out / "000000_img0.png"));

        std::ofstream bad(dir / "allbad.csv");
        bad << "imgs/nope1.png,a\nimgs/nope2.png,b\n";
        bad.close();
        CliResult rb = run_cli("augment --manifest " + (dir / "allbad.csv").string() + " --out " +
                                   (dir / "out_bad").string() + small_policy,
                               dir);
        CHECK(rb.exit_code == 2);
    }
}
