#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hblab/hb_model.hpp"
#include "hblab/levelset.hpp"

namespace hblab {

struct Box {
    double x_lo, x_hi, y_lo, y_hi;
};

// Whitney-type interval cover of a working range: dyadic stopping-time
// subdivision with |I| ~ dist(I, Omega_delta) and S(2I) inside Omega_delta^c.
struct IntervalCover {
    struct Item {
        double a, b;
        double dist; // certified lower bound on dist(I, Omega_delta)
    };
    std::vector<Item> items; // sorted, contiguous, disjoint interiors
    double kappa = 0.25;
    double L_max = 1.0;
    double range_lo = 0.0, range_hi = 0.0;
    double delta = 0.0;

    const Item* find(double x) const; // nullptr outside the range

    // programmatic invariant checks; returns human-readable violations
    std::vector<std::string> validate(const LevelSetGeometry& g, int max_checks = 200) const;
};

IntervalCover whitney_cover(const LevelSetGeometry& g, double range_lo, double range_hi,
                            double kappa = 0.25, double L_max = 1.0);

// Spectral data: real zeros t_n of A = (E+E#)/2 (phase crossings of pi/2 mod
// pi), masses 1/phi'(t_n), and disc radii satisfying the summability side
// condition.
struct SpectralData {
    std::vector<double> nodes;
    std::vector<double> masses;
    std::vector<double> radii;
    double r0 = 0.25;
    double range_lo = 0.0, range_hi = 0.0;

    long find_disc(double x) const; // index of the disc whose center is nearest, or -1

    // partial sums of sum_n (r_n^2/mu_n) sum_{j != n} mu_j/|t_n - t_j|^2
    std::vector<double> rn_condition_partials(int n_points = 8) const;
};

SpectralData spectral_data(const HermiteBiehlerModel& m, double range_lo, double range_hi,
                           double r0_cap = 0.25);

enum class WeightKind { W0, WMain, WTilde, WOne1, WOne2, W2, WSpec };

// A positive, conjugation-symmetric weight on C, evaluable pointwise. All
// evaluation happens on C+ u R; the lower half-plane is reached by
// reflection W(conj z) = W(z), which keeps the weight finite everywhere.
class WeightField {
public:
    static WeightField w0(std::shared_ptr<const HermiteBiehlerModel> m);
    static WeightField w_main(std::shared_ptr<const LevelSetGeometry> g);
    static WeightField w_tilde(std::shared_ptr<const HermiteBiehlerModel> m,
                               std::shared_ptr<const IntervalCover> cover,
                               bool w0_fallback_outside = false);
    static WeightField w_one1(std::shared_ptr<const LevelSetGeometry> g);
    static WeightField w_one2(std::shared_ptr<const HermiteBiehlerModel> m);
    static WeightField w2(std::shared_ptr<const HermiteBiehlerModel> m);
    static WeightField w_spec(std::shared_ptr<const HermiteBiehlerModel> m,
                              std::shared_ptr<const SpectralData> data,
                              bool w0_fallback_outside = false);

    WeightKind kind() const { return kind_; }
    std::string describe() const;
    const HermiteBiehlerModel& model() const { return *model_; }

    // W(z) anywhere in C
    double value(cplx z) const;

    // |E(z)| W(z) for z in C+ u R given the shared point data; this is what
    // area integrands consume, and it never needs |E| itself
    double weight_times_absE(cplx z, const ModelPointData& pd) const;

    // rectangles where the weight jumps inside the window, as refinement
    // hints for the area quadrature
    std::vector<Box> feature_boxes(double x_lo, double x_hi, double y_hi) const;

private:
    WeightField() = default;

    WeightKind kind_ = WeightKind::W0;
    std::shared_ptr<const HermiteBiehlerModel> model_;
    std::shared_ptr<const LevelSetGeometry> geom_;
    std::shared_ptr<const IntervalCover> cover_;
    std::shared_ptr<const SpectralData> spec_;
    bool w0_fallback_ = false;
};

} // namespace hblab
