#include "hblab/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "hblab/gauss.hpp"

namespace hblab {

namespace {

struct Cell {
    double cx, cy, half;
    double mindist;
    bool operator>(const Cell& o) const { return mindist > o.mindist; }
};

double dist_to_rect(cplx z, double cx, double cy, double half) {
    double dx = std::max(std::abs(z.real() - cx) - half, 0.0);
    double dy = std::max(std::abs(z.imag() - cy) - half, 0.0);
    return std::hypot(dx, dy);
}

} // namespace

LevelSetGeometry::LevelSetGeometry(std::shared_ptr<const HermiteBiehlerModel> m, double eps,
                                   double delta)
    : model_(std::move(m)), kernel_(model_), eps_(eps), delta_(delta) {
    if (!(eps > 0.0 && eps < delta && delta < 1.0))
        throw std::invalid_argument("level-set geometry requires 0 < eps < delta < 1");
}

double LevelSetGeometry::abs_theta(cplx z) const {
    return std::exp(model_->log_abs_theta(z));
}

double LevelSetGeometry::d0(cplx z) const {
    return model_->nearest_zero_distance(z, /*include_real_limit_points=*/true);
}

double LevelSetGeometry::bound(cplx z) const {
    double k = kernel_.knorm2(z);
    double b = 1.0 / k;
    double dz = d0(z);
    return std::min(dz, b);
}

// outward quadtree sweep; returns the certified distance
double LevelSetGeometry::sweep(cplx z, double level, double rel_width, double* lo_out,
                               double* hi_out) const {
    if (abs_theta(z) < level) {
        if (lo_out) *lo_out = 0.0;
        if (hi_out) *hi_out = 0.0;
        return 0.0;
    }
    const double b = bound(z);
    if (!(b > 0.0) || !std::isfinite(b))
        throw WindowExhausted("search bound is not finite at the query point");

    auto bisect_crossing = [&](cplx a, cplx c) -> double {
        // |Theta(a)| >= level, |Theta(c)| < level; returns |z - p| for a point
        // p on the sublevel side with ||Theta(p)| - level| <= 1e-8
        double t_lo = 0.0, t_hi = 1.0;
        cplx d = c - a;
        for (int it = 0; it < 80; ++it) {
            double t = 0.5 * (t_lo + t_hi);
            double m = abs_theta(a + t * d);
            if (m < level) {
                t_hi = t;
                if (level - m <= 1e-8) break;
            } else {
                t_lo = t;
            }
        }
        return std::abs(a + t_hi * d - z);
    };

    double window = 4.0 * b;
    double best = std::numeric_limits<double>::infinity();
    bool floor_hit = false;

    for (int grow = 0; grow <= 6; ++grow) {
        std::priority_queue<Cell, std::vector<Cell>, std::greater<Cell>> heap;
        double root = b / 4.0;
        double x0 = z.real() - window, x1 = z.real() + window;
        double y1 = std::max(z.imag(), 0.0) + window;
        for (double cy = root / 2.0; cy < y1; cy += root)
            for (double cx = x0 + root / 2.0; cx < x1; cx += root)
                heap.push({cx, cy, root / 2.0, dist_to_rect(z, cx, cy, root / 2.0)});

        long pops = 0;
        while (!heap.empty()) {
            Cell c = heap.top();
            heap.pop();
            if (++pops > 2000000)
                throw WindowExhausted("cell budget exhausted in distance sweep");
            if (c.mindist >= best * (1.0 - rel_width)) break;

            double m = abs_theta({c.cx, c.cy});
            bool split = false;
            if (m < level) {
                best = std::min(best, bisect_crossing(z, {c.cx, c.cy}));
                split = true; // children may contain closer sublevel points
            } else {
                // pseudo-hyperbolic ball certificate at the cell center
                cplx cc{c.cx, c.cy};
                double rho = 0.0;
                for (int sx = -1; sx <= 1; sx += 2)
                    for (int sy = -1; sy <= 1; sy += 2) {
                        cplx w{c.cx + sx * c.half, std::max(c.cy + sy * c.half, 0.0)};
                        rho = std::max(rho, std::abs(w - cc) / std::abs(w - std::conj(cc)));
                    }
                rho = std::min(rho * 1.05, 1.0);
                bool clear = (rho < m) && ((m - rho) / (1.0 - m * rho) >= level);
                if (!clear && c.cy - c.half > 0.0) {
                    // Schwarz-Pick gradient bound |Theta'| <= 1/(2 Im w)
                    double diag = c.half * 2.8284271247461903;
                    double grad = 1.0 / (2.0 * (c.cy - c.half));
                    clear = (m - 0.5 * diag * grad >= level);
                }
                if (!clear) {
                    // boundary strip: 1 - |Theta(u+iv)|^2 = 4 pi v ||k||^2
                    // and 2 pi ||k_w||^2 <= sum 4 y_n/|u - z_n|^2 <= 4 phi'(u),
                    // so |Theta|^2 >= 1 - 8 v sup phi'. Clears cells hugging R
                    // where the hyperbolic certificate degenerates.
                    double v1 = c.cy + c.half;
                    double phimax = 0.0;
                    for (int q = -1; q <= 1; ++q)
                        phimax = std::max(
                            phimax, model_->phase_derivative(c.cx + q * c.half));
                    phimax *= 1.5;
                    clear = (1.0 - 8.0 * v1 * phimax >= level * level);
                }
                split = !clear;
            }
            if (split) {
                double floor_size =
                    std::isfinite(best) ? best * rel_width * 0.25 : b * 1e-7;
                if (c.half <= floor_size) {
                    floor_hit = true;
                    continue;
                }
                double h = c.half / 2.0;
                for (int sx = -1; sx <= 1; sx += 2)
                    for (int sy = -1; sy <= 1; sy += 2) {
                        double cx = c.cx + sx * h, cy = c.cy + sy * h;
                        if (cy + h <= 0.0) continue;
                        double md = dist_to_rect(z, cx, cy, h);
                        if (md < best * (1.0 - rel_width)) heap.push({cx, cy, h, md});
                    }
            }
        }
        if (std::isfinite(best)) break;
        window *= 2.0;
    }
    if (!std::isfinite(best))
        throw WindowExhausted("no sublevel point found within the theorem-backed window");

    (void)floor_hit;
    double lo = best * (1.0 - rel_width), hi = best;
    if (lo_out) *lo_out = lo;
    if (hi_out) *hi_out = hi;
    return 0.5 * (lo + hi);
}

double LevelSetGeometry::dist_to_level(cplx z, double level, double* lo, double* hi,
                                       double rel_width) const {
    if (z.imag() < 0.0) z = std::conj(z); // Omega lives in C+; treat symmetrically
    return sweep(z, level, rel_width, lo, hi);
}

double LevelSetGeometry::dist_to_level_cached(cplx z, double level) const {
    if (z.imag() < 0.0) z = std::conj(z);
    double b = bound(z);
    if (!(b > 0.0) || !std::isfinite(b)) return sweep(z, level, 0.02, nullptr, nullptr);
    int ex = std::ilogb(0.02 * b);
    double h = std::ldexp(1.0, ex);
    CacheKey key;
    key.ix = llround(z.real() / h);
    key.iy = std::max(llround(z.imag() / h), 0LL);
    key.level_exp = ex;
    key.which = (level == eps_) ? 0 : (level == delta_ ? 1 : 2);
    {
        std::shared_lock lk(cache_mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    cplx zq{key.ix * h, key.iy * h};
    double d = sweep(zq, level, 0.02, nullptr, nullptr);
    std::unique_lock lk(cache_mutex_);
    auto [it, ins] = cache_.try_emplace(key, d);
    return it->second;
}

DistanceReport LevelSetGeometry::report(cplx z) const {
    DistanceReport r;
    r.z = z;
    r.d0 = d0(z);
    r.d_eps = d_eps(z);
    r.bound = bound(z);
    r.ratio = r.d_eps / r.bound;
    return r;
}

RatioStats LevelSetGeometry::verify_lev_bounds(const std::vector<cplx>& samples) const {
    RatioStats st;
    st.min_ratio = std::numeric_limits<double>::infinity();
    st.max_ratio = 0.0;
    std::vector<double> ratios(samples.size(), -1.0);
    std::string first_error;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(samples.size()); ++i) {
        try {
            cplx z = samples[i];
            if (abs_theta(z) < delta_) continue; // not in Omega_delta^c
            double d = d_eps(z);
            ratios[i] = d / bound(z);
        } catch (const std::exception& e) {
            // exceptions must not unwind across the parallel region
#pragma omp critical
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) throw WindowExhausted(first_error);
    for (double r : ratios) {
        if (r < 0.0) {
            ++st.skipped;
            continue;
        }
        ++st.count;
        st.min_ratio = std::min(st.min_ratio, r);
        st.max_ratio = std::max(st.max_ratio, r);
    }
    const int nbins = 32;
    st.histogram.assign(nbins, {0.0, 0});
    for (int b = 0; b < nbins; ++b)
        st.histogram[b].first = std::pow(10.0, -4.0 + 8.0 * (b + 1) / nbins);
    for (double r : ratios) {
        if (r < 0.0) continue;
        int b = static_cast<int>((std::log10(std::max(r, 1e-12)) + 4.0) / 8.0 * nbins);
        b = std::clamp(b, 0, nbins - 1);
        ++st.histogram[b].second;
    }
    return st;
}

double LevelSetGeometry::one_component_doubling(double range_lo, double range_hi,
                                                double max_len, int positions,
                                                int levels) const {
    double sup = 1.0;
    for (int lev = 0; lev < levels; ++lev) {
        double len = max_len / std::pow(2.0, lev);
        for (int i = 0; i < positions; ++i) {
            double x = range_lo + (range_hi - range_lo) * (i + 0.5) / positions;
            if (x - len < range_lo - max_len || x + len > range_hi + max_len) continue;
            auto mu = [&](double a, double bb) {
                auto f = [&](double t) { return model_->phase_derivative(t); };
                return detail::adaptive_integrate<double>(f, a, bb, 1e-10 * (1.0 + bb - a))
                    .value;
            };
            double m1 = mu(x - len, x), m2 = mu(x, x + len);
            if (m1 <= 0.0 || m2 <= 0.0) continue;
            sup = std::max({sup, m1 / m2, m2 / m1});
        }
    }
    return sup;
}

std::vector<std::array<double, 3>> LevelSetGeometry::level_curve_samples(double x_lo,
                                                                         double x_hi,
                                                                         double y_hi, int nx,
                                                                         int ny) const {
    std::vector<std::array<double, 3>> out;
    double dx = (x_hi - x_lo) / nx, dy = y_hi / ny;
    auto refine = [&](cplx a, cplx bpt) {
        double ma = abs_theta(a);
        for (int it = 0; it < 60; ++it) {
            cplx mid = 0.5 * (a + bpt);
            double mm = abs_theta(mid);
            if ((mm < eps_) == (ma < eps_)) {
                a = mid;
                ma = mm;
            } else {
                bpt = mid;
            }
            if (std::abs(mm - eps_) < 1e-8) return mid;
        }
        return 0.5 * (a + bpt);
    };
    std::vector<double> vals((nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            vals[j * (nx + 1) + i] = abs_theta({x_lo + i * dx, 1e-9 + j * dy});
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            double v = vals[j * (nx + 1) + i];
            cplx a{x_lo + i * dx, 1e-9 + j * dy};
            if (i < nx) {
                double w = vals[j * (nx + 1) + i + 1];
                if ((v < eps_) != (w < eps_)) {
                    cplx p = refine(a, a + dx);
                    out.push_back({p.real(), p.imag(), abs_theta(p)});
                }
            }
            if (j < ny) {
                double w = vals[(j + 1) * (nx + 1) + i];
                if ((v < eps_) != (w < eps_)) {
                    cplx p = refine(a, a + cplx(0.0, dy));
                    out.push_back({p.real(), p.imag(), abs_theta(p)});
                }
            }
        }
    return out;
}

} // namespace hblab
