#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <vector>

#include "hblab/hb_model.hpp"
#include "hblab/kernels.hpp"

namespace hblab {

struct DistanceReport {
    cplx z;
    double d0 = 0.0;
    double d_eps = 0.0;
    double bound = 0.0;  // min(d0, 1/knorm2)
    double ratio = 0.0;  // d_eps / bound
};

struct RatioStats {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    long count = 0;
    long skipped = 0;                                  // samples not in Omega_delta^c
    std::vector<std::pair<double, long>> histogram;    // (bin upper edge, count)
};

// Sublevel-set geometry of Theta: membership, the distances d_0 (to the
// spectrum) and d_eps (to Omega_eps), and the doubling diagnostic.
//
// Distances are certified-interval based: an outward quadtree sweep over
// cells ordered by distance, cleared by two rigorous certificates for inner
// functions (the pseudo-hyperbolic ball bound |Theta(w)| >= (m-rho)/(1-m rho)
// and the Schwarz-Pick gradient bound |Theta'| <= 1/(2 Im w)), with bisection
// refinement of every candidate crossing. Closed forms exist only for single
// factors and pw models; they are used as oracles in the tests, never here.
class LevelSetGeometry {
public:
    LevelSetGeometry(std::shared_ptr<const HermiteBiehlerModel> m, double eps, double delta);

    double eps() const { return eps_; }
    double delta() const { return delta_; }
    const HermiteBiehlerModel& model() const { return *model_; }
    std::shared_ptr<const HermiteBiehlerModel> model_ptr() const { return model_; }

    double abs_theta(cplx z) const;
    bool in_omega(cplx z, double level) const { return abs_theta(z) < level; }

    // distance to the spectrum (zero set plus its real limit points)
    double d0(cplx z) const;

    // min(d0, 1/knorm2), the Theorem-backed comparison quantity
    double bound(cplx z) const;

    // distance from z to {|Theta| < level}; returns the certified-interval
    // midpoint, optionally the interval itself. rel_width is the certified
    // relative width (1e-4 default per the distance contract).
    double dist_to_level(cplx z, double level, double* lo = nullptr, double* hi = nullptr,
                         double rel_width = 1e-4) const;

    double d_eps(cplx z, double* lo = nullptr, double* hi = nullptr) const {
        return dist_to_level(z, eps_, lo, hi);
    }

    // quantized deterministic cache (relative slack ~2 percent plus lattice
    // quantization); the workhorse behind weight evaluation
    double dist_to_level_cached(cplx z, double level) const;
    double d_eps_cached(cplx z) const { return dist_to_level_cached(z, eps_); }

    DistanceReport report(cplx z) const;

    // per-sample ratio d_eps / min(d0, 1/knorm2) over Omega_delta^c samples
    RatioStats verify_lev_bounds(const std::vector<cplx>& samples) const;

    // sup over adjacent equal-length interval pairs of mu_phi(I)/mu_phi(I'),
    // lengths max_len, max_len/2, ..., max_len/2^(levels-1)
    double one_component_doubling(double range_lo, double range_hi, double max_len,
                                  int positions, int levels = 3) const;

    // level-curve polyline samples (x, y, |Theta|) on a grid window
    std::vector<std::array<double, 3>> level_curve_samples(double x_lo, double x_hi,
                                                           double y_hi, int nx, int ny) const;

private:
    struct CacheKey {
        long long ix, iy;
        int level_exp;
        int which; // 0 = eps, 1 = delta, 2 = other
        bool operator<(const CacheKey& o) const {
            if (ix != o.ix) return ix < o.ix;
            if (iy != o.iy) return iy < o.iy;
            if (level_exp != o.level_exp) return level_exp < o.level_exp;
            return which < o.which;
        }
    };

    double sweep(cplx z, double level, double rel_width, double* lo, double* hi) const;

    std::shared_ptr<const HermiteBiehlerModel> model_;
    KernelEval kernel_;
    double eps_, delta_;

    mutable std::shared_mutex cache_mutex_;
    mutable std::map<CacheKey, double> cache_;
};

} // namespace hblab
