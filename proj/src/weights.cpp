#include "hblab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hblab/gauss.hpp"

namespace hblab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double knorm2_from(const HermiteBiehlerModel& m, cplx z, const ModelPointData& pd) {
    double y = z.imag();
    if (y <= 1e-9) return m.phase_derivative(z.real()) / kPi;
    return (1.0 - std::norm(pd.theta)) / (4.0 * kPi * y);
}
} // namespace

// ------------------------------------------------------------ IntervalCover

const IntervalCover::Item* IntervalCover::find(double x) const {
    if (items.empty() || x < items.front().a || x >= items.back().b) return nullptr;
    auto it = std::upper_bound(items.begin(), items.end(), x,
                               [](double v, const Item& item) { return v < item.b; });
    if (it == items.end()) return nullptr;
    return (x >= it->a && x < it->b) ? &*it : nullptr;
}

namespace {

// certified lower bound on dist(I, Omega_delta): sampled distances minus the
// Lipschitz slack of the sample spacing
double interval_dist_lo(const LevelSetGeometry& g, double a, double b, int samples,
                        bool exact) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        double x = a + (b - a) * i / (samples - 1);
        double d = exact ? g.dist_to_level(cplx(x, 0.0), g.delta())
                         : g.dist_to_level_cached(cplx(x, 0.0), g.delta());
        best = std::min(best, d);
    }
    double spacing = (b - a) / (samples - 1);
    return best - 0.5 * spacing;
}

bool square_contained(const LevelSetGeometry& g, double a, double b, double delta) {
    // S(2I) sampled on a 3x3 interior lattice
    double len = b - a;
    double a2 = a - 0.5 * len, b2 = b + 0.5 * len;
    double h2 = 2.0 * len;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double x = a2 + (b2 - a2) * (1.0 + 2.0 * i) / 6.0;
            double y = h2 * (1.0 + 2.0 * j) / 6.0;
            if (g.abs_theta({x, y}) < delta) return false;
        }
    return true;
}

void subdivide(const LevelSetGeometry& g, double a, double b, double kappa_eff,
               double delta, int depth, std::vector<IntervalCover::Item>& out) {
    if (depth > 40)
        throw ResolutionExceeded("Whitney bisection passed depth 40 (zero of Theta on R?)");
    double d_lo = interval_dist_lo(g, a, b, 3, /*exact=*/false);
    bool stop = (b - a) <= kappa_eff * d_lo && square_contained(g, a, b, delta);
    if (stop) {
        out.push_back({a, b, std::max(d_lo, 0.0)});
        return;
    }
    double m = 0.5 * (a + b);
    subdivide(g, a, m, kappa_eff, delta, depth + 1, out);
    subdivide(g, m, b, kappa_eff, delta, depth + 1, out);
}

} // namespace

IntervalCover whitney_cover(const LevelSetGeometry& g, double range_lo, double range_hi,
                            double kappa, double L_max) {
    if (!(range_hi > range_lo) || !(kappa > 0.0) || !(L_max > 0.0))
        throw std::invalid_argument("whitney_cover: bad range or parameters");
    IntervalCover cover;
    cover.kappa = kappa;
    cover.L_max = L_max;
    cover.delta = g.delta();
    long k_lo = static_cast<long>(std::floor(range_lo / L_max));
    long k_hi = static_cast<long>(std::ceil(range_hi / L_max));
    cover.range_lo = k_lo * L_max;
    cover.range_hi = k_hi * L_max;

    // the stopping threshold uses 0.85 kappa so the ~10 percent slack of the
    // cached distances cannot push |I| above the stated kappa dist band
    double kappa_eff = 0.85 * kappa;
    long n_roots = k_hi - k_lo;
    std::vector<std::vector<IntervalCover::Item>> parts(n_roots);
#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < n_roots; ++r) {
        double a = (k_lo + r) * L_max;
        subdivide(g, a, a + L_max, kappa_eff, g.delta(), 0, parts[r]);
    }
    for (auto& p : parts)
        cover.items.insert(cover.items.end(), p.begin(), p.end());
    return cover;
}

std::vector<std::string> IntervalCover::validate(const LevelSetGeometry& g,
                                                 int max_checks) const {
    std::vector<std::string> bad;
    auto complain = [&](const std::string& s) {
        if (bad.size() < 32) bad.push_back(s);
    };
    for (size_t i = 0; i + 1 < items.size(); ++i) {
        if (std::abs(items[i].b - items[i + 1].a) > 1e-12)
            complain("gap or overlap after interval " + std::to_string(i));
        double ratio = (items[i].b - items[i].a) / (items[i + 1].b - items[i + 1].a);
        if (ratio > 4.0 + 1e-9 || ratio < 0.25 - 1e-9)
            complain("neighbor length ratio out of [1/4,4] at " + std::to_string(i));
    }
    size_t stride = std::max<size_t>(1, items.size() / std::max(max_checks, 1));
    for (size_t i = 0; i < items.size(); i += stride) {
        const Item& it = items[i];
        double len = it.b - it.a;
        double d = interval_dist_lo(g, it.a, it.b, 5, /*exact=*/true);
        bool capped = std::abs(len - L_max) < 1e-12;
        if (len > kappa * d * (1.0 + 1e-9) && !(capped && len <= kappa * d * 4.0))
            complain("interval too long vs kappa dist at " + std::to_string(i));
        if (!capped && len < 0.25 * kappa * d)
            complain("interval too short vs kappa dist/4 at " + std::to_string(i));
        if (!square_contained(g, it.a, it.b, delta))
            complain("S(2I) escapes Omega_delta^c at " + std::to_string(i));
    }
    return bad;
}

// ------------------------------------------------------------ SpectralData

long SpectralData::find_disc(double x) const {
    if (nodes.empty()) return -1;
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
    long cand = -1;
    double best = std::numeric_limits<double>::infinity();
    for (long k = static_cast<long>(it - nodes.begin()) - 1;
         k <= static_cast<long>(it - nodes.begin()); ++k) {
        if (k < 0 || k >= static_cast<long>(nodes.size())) continue;
        double d = std::abs(x - nodes[k]);
        if (d < best) {
            best = d;
            cand = k;
        }
    }
    return cand;
}

std::vector<double> SpectralData::rn_condition_partials(int n_points) const {
    std::vector<double> out;
    size_t n = nodes.size();
    if (n < 2) return out;
    // cumulative over nodes ordered by |t_n|
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return std::abs(nodes[a]) < std::abs(nodes[b]);
    });
    double total = 0.0;
    size_t next_mark = n / n_points + 1;
    size_t done = 0;
    for (size_t oi = 0; oi < n; ++oi) {
        size_t i = order[oi];
        double inner = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = nodes[i] - nodes[j];
            inner += masses[j] / (d * d);
        }
        total += radii[i] * radii[i] / masses[i] * inner;
        if (++done >= next_mark) {
            out.push_back(total);
            next_mark += n / n_points + 1;
        }
    }
    out.push_back(total);
    return out;
}

SpectralData spectral_data(const HermiteBiehlerModel& m, double range_lo, double range_hi,
                           double r0_cap) {
    if (!(range_hi > range_lo)) throw std::invalid_argument("spectral_data: bad range");
    SpectralData sd;
    sd.range_lo = range_lo;
    sd.range_hi = range_hi;

    // march phi over the range; crossings of pi/2 mod pi are the nodes
    double t = range_lo;
    double phi = m.phase(range_lo);
    auto advance = [&](double from, double to, double phi_from) {
        auto f = [&](double s) { return m.phase_derivative(s); };
        double tol = 1e-12 * (1.0 + std::abs(to - from));
        return phi_from + detail::adaptive_integrate<double>(f, from, to, tol).value;
    };
    const double target0 = kPi / 2.0;
    while (t < range_hi) {
        double pd = m.phase_derivative(t);
        double h = std::min(0.4 * kPi / std::max(pd, 1e-12), (range_hi - t));
        h = std::min(h, 2.0);
        // the left-endpoint slope can undersample a bump inside the step
        h = std::min(h, 0.4 * kPi / std::max(m.phase_derivative(t + 0.5 * h), 1e-12));
        h = std::max(h, 1e-9 * (1.0 + std::abs(t)));
        double phi_next = advance(t, t + h, phi);
        // all targets pi/2 + k pi crossed within (phi, phi_next]
        double k_lo = std::ceil((phi - target0) / kPi + 1e-15);
        double k_hi = std::floor((phi_next - target0) / kPi);
        for (double k = k_lo; k <= k_hi; k += 1.0) {
            double target = target0 + k * kPi;
            // bracketed Newton: phi is monotone, so [s_lo, s_hi] always
            // straddles the crossing and bisection backs up wild steps
            double s_lo = t, s_hi = t + h;
            double s = t + h * (target - phi) / std::max(phi_next - phi, 1e-300);
            s = std::clamp(s, s_lo, s_hi);
            for (int it = 0; it < 90; ++it) {
                // re-anchored at the step start each time: no drift accumulates
                double err = advance(t, s, phi) - target;
                if (std::abs(err) < 5e-12) break;
                if (err > 0.0) s_hi = s;
                else s_lo = s;
                double snew = s - err / std::max(m.phase_derivative(s), 1e-300);
                if (!(snew > s_lo && snew < s_hi)) snew = 0.5 * (s_lo + s_hi);
                s = snew;
            }
            double check = std::abs(m.theta(cplx(s, 0.0)) + 1.0);
            if (check > 1e-8)
                throw RootBracketFailure("node refinement failed |Theta + 1| check");
            sd.nodes.push_back(s);
            sd.masses.push_back(1.0 / m.phase_derivative(s));
        }
        t += h;
        phi = phi_next;
    }
    if (sd.nodes.size() >= 2) {
        double min_gap = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i + 1 < sd.nodes.size(); ++i)
            min_gap = std::min(min_gap, sd.nodes[i + 1] - sd.nodes[i]);
        sd.r0 = std::min(r0_cap, min_gap / 4.0);
    } else {
        sd.r0 = r0_cap;
    }
    sd.radii.resize(sd.nodes.size());
    for (size_t i = 0; i < sd.nodes.size(); ++i) {
        double r = sd.r0 * std::min(1.0, 1.0 / (1.0 + std::abs(sd.nodes[i])));
        double gap = std::numeric_limits<double>::infinity();
        if (i > 0) gap = std::min(gap, sd.nodes[i] - sd.nodes[i - 1]);
        if (i + 1 < sd.nodes.size()) gap = std::min(gap, sd.nodes[i + 1] - sd.nodes[i]);
        sd.radii[i] = std::min(r, 0.49 * gap);
    }
    return sd;
}

// ------------------------------------------------------------- WeightField

WeightField WeightField::w0(std::shared_ptr<const HermiteBiehlerModel> m) {
    WeightField w;
    w.kind_ = WeightKind::W0;
    w.model_ = std::move(m);
    return w;
}

WeightField WeightField::w_main(std::shared_ptr<const LevelSetGeometry> g) {
    WeightField w;
    w.kind_ = WeightKind::WMain;
    w.geom_ = std::move(g);
    w.model_ = w.geom_->model_ptr();
    return w;
}

WeightField WeightField::w_tilde(std::shared_ptr<const HermiteBiehlerModel> m,
                                 std::shared_ptr<const IntervalCover> cover,
                                 bool w0_fallback_outside) {
    WeightField w;
    w.kind_ = WeightKind::WTilde;
    w.model_ = std::move(m);
    w.cover_ = std::move(cover);
    w.w0_fallback_ = w0_fallback_outside;
    return w;
}

WeightField WeightField::w_one1(std::shared_ptr<const LevelSetGeometry> g) {
    WeightField w;
    w.kind_ = WeightKind::WOne1;
    w.geom_ = std::move(g);
    w.model_ = w.geom_->model_ptr();
    return w;
}

WeightField WeightField::w_one2(std::shared_ptr<const HermiteBiehlerModel> m) {
    WeightField w;
    w.kind_ = WeightKind::WOne2;
    w.model_ = std::move(m);
    return w;
}

WeightField WeightField::w2(std::shared_ptr<const HermiteBiehlerModel> m) {
    WeightField w;
    w.kind_ = WeightKind::W2;
    w.model_ = std::move(m);
    return w;
}

WeightField WeightField::w_spec(std::shared_ptr<const HermiteBiehlerModel> m,
                                std::shared_ptr<const SpectralData> data,
                                bool w0_fallback_outside) {
    WeightField w;
    w.kind_ = WeightKind::WSpec;
    w.model_ = std::move(m);
    w.spec_ = std::move(data);
    w.w0_fallback_ = w0_fallback_outside;
    return w;
}

std::string WeightField::describe() const {
    switch (kind_) {
        case WeightKind::W0: return "W0";
        case WeightKind::WMain: return "W_main";
        case WeightKind::WTilde: return "W_tilde";
        case WeightKind::WOne1: return "W_one1";
        case WeightKind::WOne2: return "W_one2";
        case WeightKind::W2: return "W2";
        case WeightKind::WSpec: return "W_spec";
    }
    return "?";
}

double WeightField::weight_times_absE(cplx z, const ModelPointData& pd) const {
    double y = z.imag();
    double base = 1.0 / (1.0 + y); // |E| W0
    switch (kind_) {
        case WeightKind::W0:
            return base;
        case WeightKind::WMain: {
            if (std::abs(pd.theta) < geom_->delta()) return base;
            double d = geom_->d_eps_cached(z);
            if (d <= 0.0) return base; // on the boundary the indicator is off
            return base * (1.0 + 1.0 / std::sqrt(d));
        }
        case WeightKind::WTilde: {
            const IntervalCover::Item* it = cover_->find(z.real());
            if (!it) {
                if (w0_fallback_) return base;
                throw OutOfCoveredRange("w_tilde evaluated outside the cover range");
            }
            double len = it->b - it->a;
            if (y <= len) return base * (1.0 + 1.0 / std::sqrt(len));
            return base;
        }
        case WeightKind::WOne1: {
            if (std::abs(pd.theta) < geom_->delta()) return base;
            return base * (1.0 + std::sqrt(knorm2_from(*model_, z, pd)));
        }
        case WeightKind::WOne2: {
            double pdv = model_->phase_derivative(z.real());
            if (y <= 1.0 / pdv) return base * (1.0 + std::sqrt(pdv));
            return base;
        }
        case WeightKind::W2:
            return base * (1.0 + std::sqrt(knorm2_from(*model_, z, pd)));
        case WeightKind::WSpec: {
            if (z.real() < spec_->range_lo || z.real() > spec_->range_hi) {
                if (w0_fallback_) return base;
                throw OutOfCoveredRange("w_spec evaluated outside the node range");
            }
            long k = spec_->find_disc(z.real());
            if (k < 0) return base;
            double r = spec_->radii[k];
            cplx t{spec_->nodes[k], 0.0};
            double dist = std::abs(z - t);
            if (dist >= r || dist == 0.0) return base;
            // |E| W_T = mu^{-1/2} r^{-1} |z - t| * 2/|1 + Theta(z)|
            double one_plus = std::abs(1.0 + pd.theta);
            if (one_plus < 1e-300) return base; // exactly at a node of A
            double wt = dist * 2.0 / (std::sqrt(spec_->masses[k]) * r * one_plus);
            return base + wt;
        }
    }
    return base;
}

double WeightField::value(cplx z) const {
    if (z.imag() < 0.0) z = std::conj(z); // W(conj z) = W(z)
    ModelPointData pd{model_->theta(z)};
    double w = weight_times_absE(z, pd);
    return w * std::exp(-model_->log_E(z).real());
}

std::vector<Box> WeightField::feature_boxes(double x_lo, double x_hi, double y_hi) const {
    std::vector<Box> out;
    switch (kind_) {
        case WeightKind::W0:
        case WeightKind::W2:
        case WeightKind::WOne1:
            break;
        case WeightKind::WMain: {
            // strip under the Omega_delta boundary, sampled on a coarse grid
            int n = 48;
            for (int i = 0; i < n; ++i) {
                double a = x_lo + (x_hi - x_lo) * i / n;
                double b = x_lo + (x_hi - x_lo) * (i + 1) / n;
                double d = geom_->dist_to_level_cached(cplx(0.5 * (a + b), 0.0),
                                                       geom_->delta());
                out.push_back({a, b, 0.0, std::min(y_hi, 2.0 * d)});
            }
            break;
        }
        case WeightKind::WOne2: {
            int n = 48;
            for (int i = 0; i < n; ++i) {
                double a = x_lo + (x_hi - x_lo) * i / n;
                double b = x_lo + (x_hi - x_lo) * (i + 1) / n;
                double pdv = model_->phase_derivative(0.5 * (a + b));
                out.push_back({a, b, 0.0, std::min(y_hi, 2.0 / pdv)});
            }
            break;
        }
        case WeightKind::WTilde: {
            for (const auto& it : cover_->items) {
                if (it.b < x_lo || it.a > x_hi) continue;
                out.push_back({it.a, it.b, 0.0, std::min(y_hi, it.b - it.a)});
                if (out.size() >= 256) break;
            }
            break;
        }
        case WeightKind::WSpec: {
            for (size_t k = 0; k < spec_->nodes.size(); ++k) {
                double t = spec_->nodes[k], r = spec_->radii[k];
                if (t + r < x_lo || t - r > x_hi) continue;
                out.push_back({t - r, t + r, 0.0, std::min(y_hi, r)});
                if (out.size() >= 512) break;
            }
            break;
        }
    }
    return out;
}

} // namespace hblab
