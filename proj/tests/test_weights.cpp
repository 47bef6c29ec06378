#include "doctest.h"

#include <cmath>
#include <complex>

#include "hblab/rng.hpp"
#include "hblab/weights.hpp"

using namespace hblab;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("w0 closed forms and symmetry") {
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    auto w0 = WeightField::w0(pw);
    // W0(i) = e^{-1}/2 since |E(i)| = e and 1 + Im = 2
    CHECK(w0.value({0.0, 1.0}) == doctest::Approx(std::exp(-1.0) / 2.0));

    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}}));
    auto w0f = WeightField::w0(fin);
    CHECK(w0f.value({0.0, 0.0}) == doctest::Approx(1.0)); // 1/|E(0)| = 1

    Rng rng(10001);
    for (int i = 0; i < 100; ++i) {
        cplx z = rng.in_box(-8.0, 8.0, 0.01, 5.0);
        double up = w0f.value(z);
        double dn = w0f.value(std::conj(z));
        CHECK(up == dn); // exact by reflection
        CHECK(up > 0.0);
    }
}

TEST_CASE("whitney cover on pw: uniform lengths in the kappa band") {
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    auto g = std::make_shared<LevelSetGeometry>(pw, std::exp(-2.0), std::exp(-1.0));
    auto cover = whitney_cover(*g, -4.0, 4.0, 0.25, 1.0);
    CHECK(cover.items.size() >= 8);
    double len0 = cover.items[0].b - cover.items[0].a;
    for (const auto& it : cover.items) {
        CHECK(it.b - it.a == doctest::Approx(len0)); // translation invariance
        CHECK(it.dist == doctest::Approx(0.5).epsilon(0.1));
        double len = it.b - it.a;
        CHECK(len <= 0.25 * it.dist * 1.05);
        CHECK(len >= 0.25 * it.dist / 4.0);
    }
    CHECK(cover.validate(*g).empty());
}

TEST_CASE("whitney cover on a single factor: lengths grow away from the zero") {
    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}}));
    auto g = std::make_shared<LevelSetGeometry>(fin, 0.1, 0.5);
    auto cover = whitney_cover(*g, -16.0, 16.0, 0.25, 1.0);
    CHECK(cover.validate(*g).empty());
    const auto* near0 = cover.find(0.05);
    const auto* far = cover.find(12.5);
    REQUIRE(near0 != nullptr);
    REQUIRE(far != nullptr);
    CHECK(near0->b - near0->a < far->b - far->a + 1e-12);
    CHECK(far->b - far->a == doctest::Approx(1.0)); // capped at L_max
}

TEST_CASE("whitney cover on the ls family shrinks near the real limit points") {
    auto ls = make_model(ZeroFamily::ls_family(0.3));
    auto g = std::make_shared<LevelSetGeometry>(ls, 0.25, 0.5);
    auto cover = whitney_cover(*g, 2.0, 26.0, 0.25, 1.0);
    CHECK(cover.validate(*g).empty());
    auto min_len_near = [&](double x0) {
        double best = 1e300;
        for (const auto& it : cover.items)
            if (it.b > x0 - 0.25 && it.a < x0 + 0.25) best = std::min(best, it.b - it.a);
        return best;
    };
    // intervals shrink like k^{-4 delta} near x = k - delta
    double l5 = min_len_near(5.0 - 0.3);
    double l20 = min_len_near(20.0 - 0.3);
    CHECK(l20 < l5);
    const auto* mid = cover.find(12.2); // between the spikes
    REQUIRE(mid != nullptr);
    CHECK(mid->b - mid->a > l20);
}

TEST_CASE("w_main examples") {
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    auto gpw = std::make_shared<LevelSetGeometry>(pw, std::exp(-2.0), std::exp(-1.0));
    auto wm = WeightField::w_main(gpw);
    // d_eps(x) = 1 so W = W0 (1 + 1) = 2 W0 and W0(x) = 1 on R
    for (double x : {0.0, 3.7})
        CHECK(wm.value({x, 0.0}) == doctest::Approx(2.0).epsilon(2e-2));

    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}}));
    auto gf5 = std::make_shared<LevelSetGeometry>(fin, 0.5, 0.7);
    auto wm5 = WeightField::w_main(gf5);
    // d_eps(0) = 1/3: W(0) = 1 * (1 + sqrt 3)
    CHECK(wm5.value({0.0, 0.0}) == doctest::Approx(1.0 + std::sqrt(3.0)).epsilon(2e-2));
    // z inside Omega_delta: indicator off
    auto gf = std::make_shared<LevelSetGeometry>(fin, 0.1, 0.5);
    auto wmf = WeightField::w_main(gf);
    auto w0f = WeightField::w0(fin);
    CHECK(wmf.value({0.0, 1.0}) == doctest::Approx(w0f.value({0.0, 1.0})));
}

TEST_CASE("w_tilde examples") {
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    auto g = std::make_shared<LevelSetGeometry>(pw, std::exp(-2.0), std::exp(-1.0));
    auto cover = std::make_shared<IntervalCover>(whitney_cover(*g, -4.0, 4.0, 0.25, 1.0));
    auto wt = WeightField::w_tilde(pw, cover);
    auto w0 = WeightField::w0(pw);

    double len = cover->items[0].b - cover->items[0].a;
    // inside a Carleson square exactly one indicator fires
    cplx z_in{0.21, 0.5 * len};
    CHECK(wt.value(z_in) ==
          doctest::Approx(w0.value(z_in) * (1.0 + 1.0 / std::sqrt(len))).epsilon(1e-12));
    // above all squares the weight reduces to W0
    cplx z_hi{0.21, 2.0 * len + 0.1};
    CHECK(wt.value(z_hi) == doctest::Approx(w0.value(z_hi)));
    // outside the covered range
    CHECK_THROWS_AS((void)wt.value({100.0, 0.1}), OutOfCoveredRange);
    auto wt_fb = WeightField::w_tilde(pw, cover, /*w0_fallback_outside=*/true);
    CHECK(wt_fb.value({100.0, 0.1}) == doctest::Approx(w0.value({100.0, 0.1})));
}

TEST_CASE("w_one1, w_one2, w2") {
    auto pw = make_model(ZeroFamily::pw_exponential(kPi));
    auto w12 = WeightField::w_one2(pw);
    auto w0 = WeightField::w0(pw);
    // 0 <= 0 <= 1/pi: W1 = W0 (1 + sqrt(pi)) on R
    CHECK(w12.value({2.0, 0.0}) ==
          doctest::Approx(w0.value({2.0, 0.0}) * (1.0 + std::sqrt(kPi))));
    // above the band the bump is off
    CHECK(w12.value({2.0, 0.5}) == doctest::Approx(w0.value({2.0, 0.5})));

    auto pw1 = make_model(ZeroFamily::pw_exponential(1.0));
    auto w2f = WeightField::w2(pw1);
    auto w01 = WeightField::w0(pw1);
    double expect = w01.value({0.0, 1.0}) *
                    (1.0 + std::sqrt((1.0 - std::exp(-4.0)) / (4.0 * kPi)));
    CHECK(w2f.value({0.0, 1.0}) == doctest::Approx(expect));

    // W2 >= w_one1 pointwise (indicator dropped)
    auto g = std::make_shared<LevelSetGeometry>(pw1, 0.05, 0.3);
    auto w11 = WeightField::w_one1(g);
    Rng rng(10002);
    for (int i = 0; i < 40; ++i) {
        cplx z = rng.in_box(-5.0, 5.0, 0.0, 3.0);
        CHECK(w2f.value(z) >= w11.value(z) - 1e-12);
    }
}

TEST_CASE("pw weights are mutually comparable on a band") {
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    auto g = std::make_shared<LevelSetGeometry>(pw, std::exp(-2.0), std::exp(-1.0));
    auto cover = std::make_shared<IntervalCover>(whitney_cover(*g, -8.0, 8.0, 0.25, 1.0));
    std::vector<WeightField> ws;
    ws.push_back(WeightField::w_main(g));
    ws.push_back(WeightField::w_tilde(pw, cover));
    ws.push_back(WeightField::w_one1(g));
    ws.push_back(WeightField::w_one2(pw));
    Rng rng(10003);
    for (int i = 0; i < 30; ++i) {
        cplx z = rng.in_box(-7.0, 7.0, -2.0, 2.0);
        std::vector<double> vals;
        for (auto& w : ws) vals.push_back(w.value(z));
        double lo = *std::min_element(vals.begin(), vals.end());
        double hi = *std::max_element(vals.begin(), vals.end());
        CHECK(lo > 0.0);
        CHECK(hi / lo < 10.0); // all reduce to W0 times bounded factors
    }
}

TEST_CASE("spectral data for pw models") {
    auto pw_pi = make_model(ZeroFamily::pw_exponential(kPi));
    auto sd = spectral_data(*pw_pi, -10.0, 10.0);
    CHECK(sd.nodes.size() == 20);
    for (double t : sd.nodes) {
        double frac = t - std::floor(t);
        CHECK(std::abs(frac - 0.5) < 1e-10); // t_n = n + 1/2
    }
    for (double mu : sd.masses) CHECK(mu == doctest::Approx(1.0 / kPi).epsilon(1e-12));

    auto pw_1 = make_model(ZeroFamily::pw_exponential(1.0));
    auto sd1 = spectral_data(*pw_1, -10.0, 10.0);
    for (double t : sd1.nodes) {
        double k = t / kPi - 0.5;
        CHECK(std::abs(k - std::round(k)) < 1e-10); // t_n = pi (n + 1/2)
    }
    for (double mu : sd1.masses) CHECK(mu == doctest::Approx(1.0).epsilon(1e-12));

    // (rn) partial sums: monotone and visibly saturating
    auto sd_big = spectral_data(*pw_pi, -50.0, 50.0);
    auto partials = sd_big.rn_condition_partials(6);
    REQUIRE(partials.size() >= 3);
    for (size_t i = 1; i < partials.size(); ++i) CHECK(partials[i] >= partials[i - 1]);
    double last_inc = partials.back() - partials[partials.size() - 2];
    double first_inc = partials[1] - partials[0];
    CHECK(last_inc < first_inc); // increments decay
}

TEST_CASE("spectral data for a finite-list model via phase counting") {
    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}}));
    auto sd = spectral_data(*fin, -10.0, 10.0);
    // total phase increase is arctan(10) - arctan(-10) < pi: exactly one node,
    // at the crossing x = 0 where Theta(0) = -1
    REQUIRE(sd.nodes.size() == 1);
    CHECK(std::abs(sd.nodes[0]) < 1e-10);
    CHECK(sd.masses[0] == doctest::Approx(1.0)); // 1/phi'(0) = 1
}

TEST_CASE("w_spec examples on pw a = pi") {
    auto pw = make_model(ZeroFamily::pw_exponential(kPi));
    auto sd = std::make_shared<SpectralData>(spectral_data(*pw, -20.0, 20.0));
    auto ws = WeightField::w_spec(pw, sd);
    auto w0 = WeightField::w0(pw);

    // outside all discs: W = W0
    double t0 = sd->nodes[10], r0 = sd->radii[10];
    CHECK(ws.value({t0 + 3.0 * r0, 0.0}) == doctest::Approx(w0.value({t0 + 3.0 * r0, 0.0})));
    // at the node itself the |z - t_n| factor vanishes
    CHECK(ws.value({t0, 0.0}) == doctest::Approx(w0.value({t0, 0.0})));
    // halfway into the disc: the radius cancels, W_T = sqrt(pi)/(2 |cos(pi z)|)
    double z = t0 + 0.5 * r0;
    double expect = w0.value({z, 0.0}) +
                    std::sqrt(kPi) * 0.5 / std::abs(std::cos(kPi * z));
    CHECK(ws.value({z, 0.0}) == doctest::Approx(expect).epsilon(1e-10));
    // outside the node range
    CHECK_THROWS_AS((void)ws.value({1000.0, 0.0}), OutOfCoveredRange);
}

TEST_CASE("weights positivity and symmetry across kinds") {
    auto m = make_model(ZeroFamily::finite_list({{0.0, 1.0}, {2.5, 0.6}}));
    auto g = std::make_shared<LevelSetGeometry>(m, 0.1, 0.5);
    auto cover = std::make_shared<IntervalCover>(whitney_cover(*g, -6.0, 6.0, 0.25, 1.0));
    auto sd = std::make_shared<SpectralData>(spectral_data(*m, -6.0, 6.0));
    std::vector<WeightField> ws;
    ws.push_back(WeightField::w0(m));
    ws.push_back(WeightField::w_main(g));
    ws.push_back(WeightField::w_tilde(m, cover));
    ws.push_back(WeightField::w_one1(g));
    ws.push_back(WeightField::w_one2(m));
    ws.push_back(WeightField::w2(m));
    ws.push_back(WeightField::w_spec(m, sd));
    Rng rng(10004);
    for (int i = 0; i < 25; ++i) {
        cplx z = rng.in_box(-5.5, 5.5, 0.001, 3.0);
        for (auto& w : ws) {
            double v = w.value(z);
            CHECK(v > 0.0);
            CHECK(v == w.value(std::conj(z)));
        }
    }
}
