#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace hblab {

// Gauss-Legendre rule on [-1, 1]. Nodes are generated once per order by
// Newton iteration on P_n (accurate to ~1e-15) instead of hardcoded tables.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule make_gauss(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

inline const GaussRule& gauss_rule(int n) {
    switch (n) {
        case 6:  { static const GaussRule r = make_gauss(6);  return r; }
        case 10: { static const GaussRule r = make_gauss(10); return r; }
        case 12: { static const GaussRule r = make_gauss(12); return r; }
        case 16: { static const GaussRule r = make_gauss(16); return r; }
        case 20: { static const GaussRule r = make_gauss(20); return r; }
        case 24: { static const GaussRule r = make_gauss(24); return r; }
        case 32: { static const GaussRule r = make_gauss(32); return r; }
        case 40: { static const GaussRule r = make_gauss(40); return r; }
    }
    throw std::invalid_argument("unsupported Gauss order");
}

namespace detail {

template <typename F, typename T>
T gauss_apply(const F& f, double a, double b, const GaussRule& r) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    T acc = T{};
    for (size_t i = 0; i < r.nodes.size(); ++i)
        acc += T(r.weights[i] * h) * f(c + h * r.nodes[i]);
    return acc;
}

template <typename T>
struct AdaptiveIntegral {
    T value{};
    double err = 0.0;
    long evals = 0;
};

// Adaptive bisection with embedded GL10/GL20 error estimate.
template <typename T, typename F>
void adaptive_rec(const F& f, double a, double b, double tol,
                  AdaptiveIntegral<T>& out, int depth) {
    const GaussRule& lo = gauss_rule(10);
    const GaussRule& hi = gauss_rule(20);
    T q1 = gauss_apply<F, T>(f, a, b, lo);
    T q2 = gauss_apply<F, T>(f, a, b, hi);
    out.evals += 30;
    double e = std::abs(q2 - q1);
    if (e <= tol || depth >= 52) {
        out.value += q2;
        out.err += e;
        return;
    }
    double m = 0.5 * (a + b);
    adaptive_rec<T>(f, a, m, 0.5 * tol, out, depth + 1);
    adaptive_rec<T>(f, m, b, 0.5 * tol, out, depth + 1);
}

template <typename T, typename F>
AdaptiveIntegral<T> adaptive_integrate(const F& f, double a, double b, double abs_tol) {
    AdaptiveIntegral<T> out;
    if (a == b) return out;
    adaptive_rec<T>(f, a, b, std::max(abs_tol, 1e-300), out, 0);
    return out;
}

// Integral over [a, infinity) of a power-decaying integrand, computed in
// log coordinates t = a e^s where the decay becomes a smooth exponential:
// fixed-width s-blocks, each adaptive, stopped once a block's contribution
// drops below max(rel_tol * |total|, abs_floor); a geometric remainder
// estimate is folded into err.
template <typename T, typename F>
AdaptiveIntegral<T> integrate_tail(const F& f, double a, double rel_tol,
                                   double abs_floor = 0.0, int max_blocks = 96) {
    AdaptiveIntegral<T> out;
    auto g = [&](double s) -> T {
        double t = a * std::exp(s);
        T v = f(t);
        v *= t;
        return v;
    };
    const double block = 3.0;
    double prev = -1.0, cur = -1.0;
    for (int k = 0; k < max_blocks; ++k) {
        double scale = std::max(std::abs(out.value), 1e-300);
        auto w = adaptive_integrate<T>(g, block * k, block * (k + 1),
                                       std::max(rel_tol * scale * 0.25, abs_floor * 0.25));
        out.value += w.value;
        out.err += w.err;
        out.evals += w.evals;
        prev = cur;
        cur = std::abs(w.value);
        scale = std::max(std::abs(out.value), 1e-300);
        if (prev >= 0.0 && cur < prev && cur <= std::max(rel_tol * scale, abs_floor)) {
            double r = (prev > 0.0) ? cur / prev : 0.0;
            if (r < 0.95) out.err += cur * r / (1.0 - r);
            else out.err += cur * 20.0;
            return out;
        }
    }
    out.err += std::max(cur, 0.0) * 2.0;
    return out;
}

} // namespace detail
} // namespace hblab
