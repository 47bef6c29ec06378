#include "doctest.h"

#include <cmath>
#include <complex>

#include "hblab/levelset.hpp"
#include "hblab/rng.hpp"

using namespace hblab;

namespace {
constexpr double kPi = 3.14159265358979323846;

// closed-form oracle: the sublevel set of a single factor b_i is the disc
// centered i(1+e^2)/(1-e^2) of radius 2e/(1-e^2)
double single_factor_dist(cplx z, double eps) {
    double yc = (1.0 + eps * eps) / (1.0 - eps * eps);
    double r = 2.0 * eps / (1.0 - eps * eps);
    return std::abs(z - cplx(0.0, yc)) - r;
}
} // namespace

TEST_CASE("d0 oracles") {
    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}, {2.0, 1.0}}));
    LevelSetGeometry g(fin, 0.1, 0.5);
    CHECK(g.d0({0.0, 0.0}) == doctest::Approx(1.0));

    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    LevelSetGeometry gpw(pw, 0.1, 0.5);
    CHECK(std::isinf(gpw.d0({0.0, 0.0})));

    auto ls = make_model(ZeroFamily::ls_family(0.3));
    LevelSetGeometry gls(ls, 0.1, 0.5);
    // direct enumeration oracle near x = 5.5 (zeros plus real limit points)
    double best = 1e300;
    for (long n = 1; n <= 30; ++n) {
        cplx zn = ls->zero(n);
        best = std::min(best, std::abs(cplx(5.5, 0.0) - zn));
        best = std::min(best, std::abs(5.5 - zn.real()));
    }
    best = std::min(best, std::abs(cplx(5.5, 0.0) - ls->zero(0)));
    CHECK(gls.d0({5.5, 0.0}) == doctest::Approx(best));
}

TEST_CASE("d_eps single-factor disc oracle") {
    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}}));
    {
        LevelSetGeometry g(fin, 0.5, 0.7);
        double lo = 0, hi = 0;
        double d = g.d_eps({0.0, 0.0}, &lo, &hi);
        CHECK(d == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
        CHECK(lo <= d);
        CHECK(hi >= d);
        CHECK(hi - lo <= 1e-4 * hi * 1.01);
    }
    {
        LevelSetGeometry g(fin, 0.3, 0.6);
        for (cplx z : {cplx(0.0, 0.0), cplx(1.0, 0.2), cplx(-0.5, 3.8)}) {
            double oracle = single_factor_dist(z, 0.3);
            CHECK(g.d_eps(z) == doctest::Approx(oracle).epsilon(2e-4));
        }
        // inside the sublevel set the distance is zero
        CHECK(g.d_eps({0.0, 1.2}) == 0.0);
    }
}

TEST_CASE("d_eps pw strip oracle") {
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    LevelSetGeometry g(pw, std::exp(-2.0), std::exp(-1.0));
    // Omega_eps = {y > 1}: distance from the real axis is exactly 1
    for (double x : {0.0, 17.3, -210.0})
        CHECK(g.d_eps({x, 0.0}) == doctest::Approx(1.0).epsilon(2e-4));
    CHECK(g.d_eps({5.0, 0.4}) == doctest::Approx(0.6).epsilon(3e-4));
    // acceptance form of the oracle: d_eps(x) = log(1/eps)/(2a)
    auto pw3 = make_model(ZeroFamily::pw_exponential(3.0));
    LevelSetGeometry g3(pw3, 0.05, 0.4);
    CHECK(g3.d_eps({1.0, 0.0}) ==
          doctest::Approx(std::log(1.0 / 0.05) / 6.0).epsilon(2e-4));
}

TEST_CASE("d_eps monotone in eps") {
    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}, {3.0, 0.5}}));
    LevelSetGeometry g1(fin, 0.1, 0.5);
    LevelSetGeometry g3(fin, 0.3, 0.5);
    Rng rng(9001);
    for (int i = 0; i < 12; ++i) {
        cplx z = rng.in_box(-5.0, 5.0, 0.0, 2.0);
        if (g1.abs_theta(z) < 0.5) continue;
        CHECK(g1.dist_to_level(z, 0.1) >= g3.dist_to_level(z, 0.3) - 1e-6);
    }
}

TEST_CASE("verify_lev_bounds oracle values") {
    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}}));
    LevelSetGeometry g(fin, 0.1, 0.5);
    auto rep = g.report({0.0, 0.0});
    // d_eps(0) = (1-0.1)/(1+0.1), min(d0, 1/knorm2) = min(1, pi) = 1
    CHECK(rep.d_eps == doctest::Approx(9.0 / 11.0).epsilon(1e-4));
    CHECK(rep.bound == doctest::Approx(1.0));
    CHECK(rep.ratio == doctest::Approx(9.0 / 11.0).epsilon(1e-4));

    // pw control: ratio = knorm2(x), constant in x
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    LevelSetGeometry gpw(pw, std::exp(-2.0), std::exp(-1.0));
    std::vector<cplx> xs = {{0.0, 0.0}, {10.0, 0.0}, {-44.0, 0.0}};
    auto st = gpw.verify_lev_bounds(xs);
    CHECK(st.count == 3);
    CHECK(st.max_ratio / st.min_ratio < 1.001);
    CHECK(st.min_ratio == doctest::Approx(1.0 / kPi).epsilon(2e-4));
}

TEST_CASE("random finite products: ratios bounded and positive") {
    Rng rng(9002);
    double lo = 1e300, hi = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform() * 8);
        std::vector<cplx> zs;
        for (int i = 0; i < n; ++i) zs.push_back(rng.in_box(-10.0, 10.0, 0.1, 5.0));
        auto m = make_model(ZeroFamily::finite_list(zs));
        LevelSetGeometry g(m, 0.1, 0.5);
        std::vector<cplx> samples;
        for (int i = 0; i < 10; ++i) samples.push_back(rng.in_box(-12.0, 12.0, 0.0, 6.0));
        auto st = g.verify_lev_bounds(samples);
        if (st.count == 0) continue;
        CHECK(st.min_ratio > 0.0);
        CHECK(std::isfinite(st.max_ratio));
        lo = std::min(lo, st.min_ratio);
        hi = std::max(hi, st.max_ratio);
    }
    CHECK(hi / lo < 200.0); // empirical spread, regression bound
}

TEST_CASE("ert2: height is controlled by the bound") {
    Rng rng(9003);
    double delta = 0.5;
    double C = (1.0 + delta) / (2.0 * delta);
    for (int trial = 0; trial < 8; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform() * 10);
        std::vector<cplx> zs;
        for (int i = 0; i < n; ++i) zs.push_back(rng.in_box(-8.0, 8.0, 0.2, 4.0));
        auto m = make_model(ZeroFamily::finite_list(zs));
        LevelSetGeometry g(m, 0.1, delta);
        for (int i = 0; i < 20; ++i) {
            cplx z = rng.in_box(-10.0, 10.0, 0.01, 8.0);
            if (g.abs_theta(z) < delta) continue;
            double cap = std::max(C, 1.0 / (4.0 * kPi)) * g.bound(z);
            CHECK(z.imag() <= cap * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("ert1 inequality in the Carleson-box regime") {
    // delta |z - conj z_n| <= |x - z_n| <= |z - conj z_n| for low points of
    // Omega_delta^c (the regime where the estimate is applied)
    Rng rng(9004);
    double delta = 0.5;
    for (int trial = 0; trial < 6; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform() * 8);
        std::vector<cplx> zs;
        for (int i = 0; i < n; ++i) zs.push_back(rng.in_box(-8.0, 8.0, 0.3, 3.0));
        auto m = make_model(ZeroFamily::finite_list(zs));
        LevelSetGeometry g(m, 0.1, delta);
        for (int i = 0; i < 12; ++i) {
            double x = rng.uniform(-9.0, 9.0);
            if (g.abs_theta({x, 0.0}) < delta) continue;
            double dd = g.dist_to_level({x, 0.0}, delta);
            cplx z{x, 0.25 * dd};
            if (g.abs_theta(z) < delta) continue;
            for (cplx zn : zs) {
                double a = std::abs(z - std::conj(zn));
                double b = std::abs(cplx(x, 0.0) - zn);
                CHECK(b <= a * (1.0 + 1e-12));
                CHECK(delta * a <= b * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("esti3: knorm2 vs |Theta'(x)| band on low points") {
    auto m = make_model(ZeroFamily::power_family(0.75));
    LevelSetGeometry g(m, 0.1, 0.5);
    KernelEval ke(m);
    double lo = 1e300, hi = 0.0;
    for (double x : {2.0, 5.0, 11.0, 23.0, 47.0, 95.0}) {
        if (g.abs_theta({x, 0.0}) < 0.5) continue;
        double dd = g.dist_to_level({x, 0.0}, 0.5);
        for (double s : {0.1, 0.4, 0.9}) {
            cplx z{x, s * dd};
            if (g.abs_theta(z) < 0.5) continue;
            double ratio = ke.knorm2(z) / (2.0 * m->phase_derivative(x));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    }
    CHECK(hi / lo <= 10.0);
}

TEST_CASE("one-component corollary: d_eps * knorm2 band on the power family") {
    auto m = make_model(ZeroFamily::power_family(0.75));
    LevelSetGeometry g(m, 0.1, 0.5);
    KernelEval ke(m);
    double lo = 1e300, hi = 0.0;
    for (double x : {1.5, 4.0, 9.0, 20.0, 45.0, 90.0}) {
        for (double y : {0.0, 0.05, 0.3, 1.0}) {
            cplx z{x, y};
            if (g.abs_theta(z) < 0.5) continue;
            double v = g.d_eps(z) * ke.knorm2(z);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    CHECK(lo > 0.0);
    CHECK(hi / lo <= 10.0);
}

TEST_CASE("doubling estimates") {
    auto pw = make_model(ZeroFamily::pw_exponential(1.0));
    LevelSetGeometry gpw(pw, 0.1, 0.5);
    CHECK(gpw.one_component_doubling(0.0, 10.0, 1.0, 16) == doctest::Approx(1.0));

    auto pow = make_model(ZeroFamily::power_family(0.75));
    LevelSetGeometry gp(pow, 0.1, 0.5);
    double est1 = gp.one_component_doubling(1.0, 1000.0, 1.0, 24);
    double est2 = gp.one_component_doubling(1.0, 1000.0, 0.5, 24);
    CHECK(std::isfinite(est1));
    CHECK(est1 < 16.0);              // locally doubling
    CHECK(est2 <= est1 * 2.0 + 1.0); // stable as the resolution halves

    // ls with delta > 1/2: phi' spikes at unit spacing make the sup grow with range
    auto ls = make_model(ZeroFamily::ls_family(0.6));
    LevelSetGeometry gls(ls, 0.1, 0.5);
    double small_range = gls.one_component_doubling(2.0, 20.0, 1.0, 18);
    double large_range = gls.one_component_doubling(2.0, 100.0, 1.0, 18);
    CHECK(large_range >= small_range * 0.99);
}

TEST_CASE("cached distance agrees with the exact path within its slack") {
    auto m = make_model(ZeroFamily::finite_list({{0.0, 1.0}, {4.0, 0.8}}));
    LevelSetGeometry g(m, 0.2, 0.5);
    Rng rng(9005);
    for (int i = 0; i < 10; ++i) {
        cplx z = rng.in_box(-5.0, 6.0, 0.0, 1.5);
        if (g.abs_theta(z) < 0.2) continue;
        double exact = g.d_eps(z);
        double cached = g.d_eps_cached(z);
        CHECK(cached == doctest::Approx(exact).epsilon(0.12));
        CHECK(g.d_eps_cached(z) == cached); // deterministic per key
    }
}

TEST_CASE("level curve sampling") {
    auto fin = make_model(ZeroFamily::finite_list({{0.0, 1.0}}));
    LevelSetGeometry g(fin, 0.5, 0.7);
    auto pts = g.level_curve_samples(-2.0, 2.0, 4.0, 40, 40);
    CHECK(pts.size() > 10);
    double yc = (1.0 + 0.25) / (1.0 - 0.25), r = 1.0 / (1.0 - 0.25);
    for (auto& p : pts) {
        CHECK(std::abs(p[2] - 0.5) < 1e-6);
        CHECK(std::abs(std::abs(cplx(p[0], p[1]) - cplx(0.0, yc)) - r) < 5e-3);
    }
}
