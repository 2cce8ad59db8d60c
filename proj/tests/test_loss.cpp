#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "longtail/loss.hpp"
#include "longtail/rng.hpp"

using namespace longtail;
using Catch::Approx;

namespace {

// Central finite differences of the loss value with respect to each logit.
template <typename LossFn>
std::vector<double> fd_gradient(LossFn&& f, std::vector<double> z, double h = 1e-5) {
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        double keep = z[i];
        z[i] = keep + h;
        double up = f(z);
        z[i] = keep - h;
        double down = f(z);
        z[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double rel_err(double a, double b) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / scale;
}

LossConfig mwnl_config(double alpha = 1.1, double gamma = 2.0, double t = 0.1) {
    LossConfig cfg;
    cfg.family = LossFamily::mwnl;
    cfg.alpha = alpha;
    cfg.gamma = gamma;
    cfg.clamp_t = t;
    return cfg;
}

} // namespace

TEST_CASE("transformed_probs") {
    SECTION("zero logits give 0.5 everywhere") {
        std::vector<double> z = {0.0, 0.0};
        auto p = transformed_probs(z, 0);
        CHECK(p[0] == Approx(0.5));
        CHECK(p[1] == Approx(0.5));
    }
    SECTION("frozen high-precision values") {
        std::vector<double> z = {2.0, -1.0};
        auto p = transformed_probs(z, 0);
        CHECK(p[0] == Approx(0.880797077977882).epsilon(1e-12));
        CHECK(p[1] == Approx(0.731058578630005).epsilon(1e-12));
    }
    SECTION("permuting non-target logits permutes non-target probabilities") {
        std::vector<double> z = {0.3, -2.0, 1.5, 0.7};
        auto p = transformed_probs(z, 0);
        std::vector<double> zp = {0.3, 0.7, -2.0, 1.5};
        auto pp = transformed_probs(zp, 0);
        CHECK(p[0] == pp[0]);
        CHECK(p[1] == pp[2]);
        CHECK(p[2] == pp[3]);
        CHECK(p[3] == pp[1]);
    }
    SECTION("target out of range") {
        std::vector<double> z = {0.0};
        CHECK_THROWS_AS(transformed_probs(z, 1), std::invalid_argument);
    }
}

TEST_CASE("focal loss values") {
    SECTION("gamma = 0 reduces to summed log-sigmoid cross entropy") {
        std::vector<double> z = {0.0, 0.0};
        CHECK(focal_loss(z, 0, 0.0).value == Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    }
    SECTION("frozen value at z=[2,-1], gamma=2") {
        std::vector<double> z = {2.0, -1.0};
        CHECK(focal_loss(z, 0, 2.0).value == Approx(0.0244616203437077).epsilon(1e-10));
    }
    SECTION("confident and correct drives the loss to zero") {
        std::vector<double> z = {30.0, -30.0};
        CHECK(focal_loss(z, 0, 2.0).value < 1e-10);
        CHECK(focal_loss(z, 0, 2.0).value >= 0.0);
    }
    SECTION("extreme logits stay finite") {
        std::vector<double> z = {700.0, -800.0, 5.0};
        CHECK(std::isfinite(focal_loss(z, 0, 2.0).value));
        std::vector<double> z2 = {-700.0, 800.0, 0.0};
        CHECK(std::isfinite(focal_loss(z2, 0, 2.0).value));
        for (double g : focal_loss(z2, 0, 2.0).grad) CHECK(std::isfinite(g));
    }
}

TEST_CASE("cb_weight") {
    CHECK(cb_weight(17, 0.0) == 1.0);
    CHECK(cb_weight(1, 0.73) == Approx(1.0).epsilon(1e-15));
    CHECK(cb_weight(100, 0.99) == Approx(0.0157736753008561).epsilon(1e-12));
}

TEST_CASE("mw_weight") {
    CHECK(mw_weight(12345, 0.0, 1.0) == 1.0);
    CHECK(mw_weight(100, 1.1, 1.0) == Approx(0.00630957344480193).epsilon(1e-12));
    CHECK(mw_weight(50, 1.1, 2.0) == Approx(0.0270497335122497).epsilon(1e-12));
}

TEST_CASE("weight-range extension beyond the class-balanced infimum") {
    // (1/N)^alpha < 1/N for N > 1, alpha > 1
    for (long long n : {2LL, 10LL, 1000LL})
        for (double alpha : {1.1, 1.5, 2.0})
            CHECK(mw_weight(n, alpha, 1.0) < 1.0 / static_cast<double>(n));
}

TEST_CASE("mwnl value oracle") {
    ClassStats stats{{10, 10, 10}};
    LossConfig cfg = mwnl_config(1.0, 2.0, 0.1);

    SECTION("frozen value at z=[5,-6,0] with weight 1") {
        std::vector<double> z = {5.0, -6.0, 0.0};
        LossOutput out = mwnl_loss(z, 0, stats, cfg, 0.0); // beta_eff = 0: weight 1
        CHECK(out.value == Approx(0.173287111085014).epsilon(1e-10));
    }
    SECTION("beta_eff = alpha recovers the static weight C_y (1/N_y)^alpha") {
        std::vector<double> z = {1.0, -0.5, 0.2};
        ClassStats skew{{100, 10, 5}};
        LossConfig c2 = mwnl_config(1.1, 2.0, 0.1);
        c2.class_coeff = {1.5, 1.0, 1.0};
        LossOutput weighted = mwnl_loss(z, 0, skew, c2, c2.alpha);
        LossOutput flat = mwnl_loss(z, 0, skew, mwnl_config(1.1, 2.0, 0.1), 0.0);
        CHECK(weighted.value ==
              Approx(flat.value * mw_weight(100, 1.1, 1.5)).epsilon(1e-12));
    }
    SECTION("beta_eff = 0 gives weight exactly 1") {
        std::vector<double> z = {0.4, 0.1, -0.7};
        ClassStats skew{{1000, 10, 5}};
        LossOutput a = mwnl_loss(z, 0, skew, cfg, 0.0);
        LossOutput b = mwnl_loss(z, 0, ClassStats{{7, 7, 7}}, cfg, 0.0);
        CHECK(a.value == b.value);
    }
}

TEST_CASE("clamp behaviour at the threshold") {
    ClassStats stats{{4, 4}};
    LossConfig cfg = mwnl_config(1.0, 2.0, 0.1);
    const double z_at_t = std::log(0.1 / 0.9); // sigmoid(z) = 0.1

    SECTION("clamp constant for T=0.1, gamma=2") {
        double g_star = std::pow(0.9, 2.0) * std::log(0.1);
        CHECK(g_star == Approx(0.81 * std::log(0.1)).epsilon(1e-15));
        CHECK(g_star == Approx(-1.86509392532518).epsilon(1e-12));
    }
    SECTION("value is continuous across the threshold") {
        const double eps = 1e-9;
        std::vector<double> above = {z_at_t + eps, 3.0};
        std::vector<double> below = {z_at_t - eps, 3.0};
        double va = mwnl_loss(above, 0, stats, cfg, 0.0).value;
        double vb = mwnl_loss(below, 0, stats, cfg, 0.0).value;
        CHECK(std::abs(va - vb) < 1e-7);
    }
    SECTION("term at exactly T matches the clamp constant") {
        std::vector<double> z = {z_at_t, 40.0}; // non-target term ~ 0
        double v = mwnl_loss(z, 0, stats, cfg, 0.0).value;
        CHECK(v == Approx(-std::pow(0.9, 2.0) * std::log(0.1)).margin(1e-9));
    }
    SECTION("fully clamped samples have an exactly zero gradient") {
        // all p^t <= T: target logit very negative, non-target logits very positive
        std::vector<double> z = {-8.0, 9.0};
        LossOutput out = mwnl_loss(z, 0, stats, cfg, 1.0);
        for (double g : out.grad) CHECK(g == 0.0);
        CHECK(out.value > 0.0);
    }
    SECTION("mwl_focal equals mwnl with no term clamped") {
        LossConfig mwl = cfg;
        mwl.family = LossFamily::mwl_focal;
        Rng rng(21);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> z = {rng.uniform(2.5, 6.0), rng.uniform(-6.0, -2.5)};
            // p^t well above T on both classes: clamp never fires
            LossOutput a = mwnl_loss(z, 0, stats, mwl, 1.0);
            LossOutput b = mwnl_loss(z, 0, stats, cfg, 1.0);
            REQUIRE(a.value == b.value);
            REQUIRE(a.grad == b.grad);
        }
    }
}

TEST_CASE("alpha = 0 with non-unit class coefficients is rejected") {
    ClassStats stats{{5, 5}};
    LossConfig cfg = mwnl_config(0.0, 2.0, 0.1);
    std::vector<double> z = {0.3, -0.3};
    CHECK_NOTHROW(mwnl_loss(z, 0, stats, cfg, 0.0));
    cfg.class_coeff = {2.0, 1.0};
    CHECK_THROWS_AS(mwnl_loss(z, 0, stats, cfg, 0.0), std::invalid_argument);
}

TEST_CASE("loss_for_family dispatch") {
    ClassStats stats{{8, 8}};
    SECTION("ce on uniform logits") {
        LossConfig cfg;
        cfg.family = LossFamily::ce;
        std::vector<double> z = {0.0, 0.0};
        CHECK(loss_for_family(z, 0, stats, cfg, 0.0).value ==
              Approx(std::log(2.0)).epsilon(1e-12));
    }
    SECTION("ce_rw scales ce by 1/N_y") {
        LossConfig ce;
        ce.family = LossFamily::ce;
        LossConfig rw;
        rw.family = LossFamily::ce_rw;
        ClassStats skew{{40, 10}};
        std::vector<double> z = {0.7, -0.3};
        double plain = loss_for_family(z, 1, skew, ce, 0.0).value;
        double reweighted = loss_for_family(z, 1, skew, rw, 0.0).value;
        CHECK(reweighted == Approx(plain / 10.0).epsilon(1e-12));
    }
    SECTION("cb_focal scales focal by the class-balanced weight") {
        LossConfig cb;
        cb.family = LossFamily::cb_focal;
        cb.beta_cb = 0.99;
        cb.gamma = 2.0;
        ClassStats skew{{100, 3}};
        std::vector<double> z = {0.2, 0.4};
        double got = loss_for_family(z, 0, skew, cb, 0.0).value;
        CHECK(got == Approx(focal_loss(z, 0, 2.0).value * cb_weight(100, 0.99)).epsilon(1e-12));
    }
    SECTION("cb_focal at beta -> 1 converges to mwl_focal at alpha = 1") {
        LossConfig cb;
        cb.family = LossFamily::cb_focal;
        cb.beta_cb = 1.0 - 1e-6;
        LossConfig mwl = mwnl_config(1.0, 2.0, 0.0);
        mwl.family = LossFamily::mwl_focal;
        Rng rng(22);
        for (int i = 0; i < 1000; ++i) {
            int c = 2 + static_cast<int>(rng.uniform_int(4));
            ClassStats st{{}};
            for (int k = 0; k < c; ++k)
                st.counts.push_back(1 + static_cast<long long>(rng.uniform_int(1000)));
            std::vector<double> z(static_cast<std::size_t>(c));
            for (double& v : z) v = rng.uniform(-6.0, 6.0);
            int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
            double a = loss_for_family(z, y, st, cb, 0.0).value;
            double b = loss_for_family(z, y, st, mwl, 1.0).value;
            REQUIRE(rel_err(a, b) < 1e-3);
        }
    }
}

TEST_CASE("gamma = 0 mwl with weight 1 equals the summed log-sigmoid cross entropy") {
    LossConfig mwl = mwnl_config(0.0, 0.0, 0.0);
    mwl.family = LossFamily::mwl_focal;
    ClassStats stats{{6, 6, 6}};
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> z = {rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
        double direct = 0.0;
        auto p = transformed_probs(z, 1);
        for (double pi : p) direct -= std::log(pi);
        CHECK(loss_for_family(z, 1, stats, mwl, 0.0).value == Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("analytic gradients match finite differences for every family") {
    Rng rng(24);
    const std::vector<LossFamily> families = {LossFamily::ce, LossFamily::ce_rw,
                                              LossFamily::cb_focal, LossFamily::mwl_focal,
                                              LossFamily::mwnl};
    for (LossFamily family : families) {
        LossConfig cfg = mwnl_config(1.1, 2.0, 0.1);
        cfg.family = family;
        cfg.beta_cb = 0.995;
        for (double beta_eff : {0.0, 0.55, 1.1}) {
            for (int trial = 0; trial < 60; ++trial) {
                int c = 2 + static_cast<int>(rng.uniform_int(4));
                ClassStats stats{{}};
                for (int k = 0; k < c; ++k)
                    stats.counts.push_back(1 + static_cast<long long>(rng.uniform_int(500)));
                std::vector<double> z(static_cast<std::size_t>(c));
                int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
                bool near_clamp = true;
                while (near_clamp) {
                    for (double& v : z) v = rng.uniform(-6.0, 6.0);
                    near_clamp = false;
                    for (double p : transformed_probs(z, y))
                        if (std::abs(p - cfg.clamp_t) < 1e-3) near_clamp = true;
                }
                LossOutput out = loss_for_family(z, y, stats, cfg, beta_eff);
                auto value = [&](const std::vector<double>& zz) {
                    return loss_for_family(zz, y, stats, cfg, beta_eff).value;
                };
                std::vector<double> fd = fd_gradient(value, z);
                for (std::size_t i = 0; i < z.size(); ++i)
                    REQUIRE(rel_err(out.grad[i], fd[i]) < 1e-5);
            }
        }
    }
}

TEST_CASE("loss decreases as the target logit grows (above the clamp region)") {
    ClassStats stats{{9, 9, 9}};
    LossConfig cfg = mwnl_config(1.1, 2.0, 0.1);
    std::vector<double> z = {-1.0, 0.4, -0.2};
    double prev = std::numeric_limits<double>::infinity();
    for (double zy = -1.9; zy < 6.0; zy += 0.05) {
        // keep clear of the clamp: sigmoid(-1.9) ~ 0.13 > T
        z[0] = zy;
        double v = mwnl_loss(z, 0, stats, cfg, 1.1).value;
        REQUIRE(v < prev);
        prev = v;
    }
}

TEST_CASE("loss is invariant under permutation of non-target classes") {
    ClassStats stats{{5, 5, 5, 5}};
    LossConfig cfg = mwnl_config(1.1, 2.0, 0.1);
    std::vector<double> z = {0.3, -1.2, 2.2, 0.9};
    std::vector<double> zp = {0.3, 2.2, 0.9, -1.2};
    CHECK(mwnl_loss(z, 0, stats, cfg, 1.1).value ==
          Approx(mwnl_loss(zp, 0, stats, cfg, 1.1).value).epsilon(1e-14));
}

TEST_CASE("batch loss stream format") {
    ClassStats stats{{3, 3}};
    LossConfig cfg;
    cfg.family = LossFamily::ce;
    SECTION("ce on zero logits emits ln 2 with 9 significant digits") {
        std::istringstream in("s1, 0, 0.0, 0.0\n");
        std::ostringstream out;
        evaluate_loss_stream(in, out, stats, cfg, 0.0);
        CHECK(out.str() == "s1,0.693147181,-0.5,0.5\n");
    }
    SECTION("malformed rows carry line numbers") {
        std::istringstream in("s1,0,0.0,0.0\ns2,nope,0.0,0.0\n");
        std::ostringstream out;
        CHECK_THROWS_WITH(evaluate_loss_stream(in, out, stats, cfg, 0.0),
                          Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("short rows are rejected") {
        std::istringstream in("s1,0,0.0\n");
        std::ostringstream out;
        CHECK_THROWS_AS(evaluate_loss_stream(in, out, stats, cfg, 0.0), data_error);
    }
    SECTION("mwnl at T=0 equals mwl_focal row for row") {
        LossConfig mwnl = mwnl_config(1.1, 2.0, 0.1);
        LossConfig mwl = mwnl;
        mwl.family = LossFamily::mwl_focal;
        // all p^t far from T so the clamp never fires
        std::string rows = "a,0,4.0,-3.0\nb,1,-2.5,3.5\n";
        std::istringstream in1(rows), in2(rows);
        std::ostringstream out1, out2;
        evaluate_loss_stream(in1, out1, stats, mwnl, 1.1);
        evaluate_loss_stream(in2, out2, stats, mwl, 1.1);
        CHECK(out1.str() == out2.str());
    }
}
