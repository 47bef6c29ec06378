#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hblab/hb_model.hpp"

namespace hblab {

// Reproducing kernels of H(E) and of the model space K_Theta.
//
// Conventions: k_w(z) = (i/2pi)(1 - conj(Theta(w)) Theta(z))/(z - conj w),
// K_w(z) = E(z) conj(E(w)) k_w(z), so ||K_x||^2 = K_x(x) = |E(x)|^2 phi'(x)/pi
// and ||k_x||^2 = phi'(x)/pi on the real line.
class KernelEval {
public:
    explicit KernelEval(std::shared_ptr<const HermiteBiehlerModel> m) : model_(std::move(m)) {}

    // kernel of K_Theta; the removable diagonal z ~ conj(w) is evaluated by a
    // log-derivative expansion
    cplx k_small(cplx w, cplx z) const;

    // ||k_z||_2^2: (1 - |Theta|^2)/(4 pi Im z) off the axis, phi'(x)/pi on it
    double knorm2(cplx z) const;

    // kernel of H(E)
    cplx K_big(cplx w, cplx z) const;

    const HermiteBiehlerModel& model() const { return *model_; }
    std::shared_ptr<const HermiteBiehlerModel> model_ptr() const { return model_; }

    // core ratio (1 - conj(theta_w) theta_z)/(z - wbar) with cached data;
    // Lth/Lth2 are Theta'/Theta and its derivative at wbar
    static cplx kernel_ratio(cplx theta_w, cplx theta_z, cplx z, cplx wbar,
                             cplx Lth_wbar, cplx Lth2_wbar, double abs_theta_w);

private:
    std::shared_ptr<const HermiteBiehlerModel> model_;
};

// The test functions the norm experiments evaluate. All expose log-overflow
// safe ratios F/E and F#/E (the area integrals over the lower half-plane
// reduce to |F#/E| on the upper one).
class TestFunction {
public:
    enum class Kind { FN, GX, SincCombo, KernelCombo, ModulusProfile };

    // f_n(z) = E(z) sqrt(y_n) / (z - conj z_n); ||f_n||_E^2 = pi exactly
    static TestFunction f_n(std::shared_ptr<const HermiteBiehlerModel> m, long n);

    // g_x = K_x / conj(E(x)) = E(z) k_x(z); ||g_x||_E^2 = phi'(x)/pi
    static TestFunction g_x(std::shared_ptr<const HermiteBiehlerModel> m, double x);

    // finite combination of sinc kernels in PW_a (pw models only); real
    // coefficients and shifts, so F# = F
    static TestFunction sinc_combo(std::shared_ptr<const HermiteBiehlerModel> m,
                                   std::vector<double> shifts, std::vector<double> coeffs);

    // sum_j c_j K_{w_j} / ||K_{w_j}||, nodes in C+; normalized kernels keep
    // every magnitude representable
    static TestFunction kernel_combo(std::shared_ptr<const HermiteBiehlerModel> m,
                                     std::vector<cplx> nodes, std::vector<cplx> coeffs);

    // |f(z)| = (|x|+1)^{-1/2} log(|x|+2)^{-1} as a model-space modulus
    // profile; non-analytic, only |F/E| is defined
    static TestFunction modulus_profile(std::shared_ptr<const HermiteBiehlerModel> m);

    Kind kind() const { return kind_; }
    bool analytic() const { return kind_ != Kind::ModulusProfile; }
    std::string describe() const;

    cplx ratio(cplx z, const ModelPointData& pd) const;        // F/E
    cplx sharp_ratio(cplx z, const ModelPointData& pd) const;  // F#/E
    double abs2_pair(cplx z, const ModelPointData& pd) const;  // |F/E|^2 + |F#/E|^2
    cplx value(cplx z) const;                                  // F(z)

    // abscissae where the integrand needs refinement (kernel nodes, g_x
    // center, sinc shifts)
    std::vector<cplx> feature_points() const;

private:
    TestFunction() = default;

    Kind kind_ = Kind::GX;
    std::shared_ptr<const HermiteBiehlerModel> model_;

    // f_n
    cplx zn_{0.0, 0.0};
    double sqrt_y_ = 0.0;

    // g_x
    double x_ = 0.0;
    cplx theta_x_{0.0, 0.0};
    cplx Lth_x_{0.0, 0.0};
    cplx Lth2_x_{0.0, 0.0};

    // combos
    std::vector<double> shifts_;
    std::vector<double> rcoeffs_;
    double pw_a_ = 0.0;
    struct KNode {
        cplx w;
        cplx coeff;        // c_j * e^{-i arg E(w_j)} / sqrt(knorm2_j)
        cplx coeff_sharp;  // conj(c_j) * e^{+i arg E(w_j)} / sqrt(knorm2_j)
        cplx theta_w;
        cplx Lth_w, Lth2_w;
    };
    std::vector<KNode> knodes_;
};

} // namespace hblab
