#pragma once

#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "hblab/errors.hpp"

namespace hblab {

using cplx = std::complex<double>;

enum class FamilyKind { PwExponential, FiniteList, PowerFamily, LsFamily, CustomGenerator };

struct Truncation {
    long n_max = 100000;     // symmetric partial-product terms per side
    double tail_tol = 1e-6;  // relative tolerance for tail corrections
};

struct EvalInfo {
    double tail_abs_err = 0.0;
    long terms_used = 0;
};

// Zero data of a Hermite-Biehler function. Points z_n live in the upper
// half-plane; the zeros of E itself are their conjugates.
//
// The two-sided parametric families are generated by
//   x(t) = cx t^ex + dx,   y(t) = cy t^ey,   t = 1, 2, ...
// mirrored by z_{-n} = -conj(z_n), plus a finite list of explicit "core"
// points (n = 0 and friends). PowerFamily and LsFamily are presets of this
// form; CustomGenerator exposes it directly, with (ex, ey) doubling as the
// declared tail exponents.
struct ZeroFamily {
    FamilyKind kind = FamilyKind::PwExponential;

    double pw_type = 1.0;              // a > 0 for E(z) = e^{-iaz}
    std::vector<cplx> finite_zeros;    // explicit z_n, finite-list kind

    double cx = 1.0, ex = 0.0, dx = 0.0, cy = 1.0, ey = 0.0;
    std::vector<cplx> core;            // explicit extra zeros of the family
    double family_param = 0.0;         // alpha or delta, for reporting

    static ZeroFamily pw_exponential(double a);
    static ZeroFamily finite_list(std::vector<cplx> zeros);
    static ZeroFamily power_family(double alpha);     // z_n = |n|^a sgn n + i, z_0 = i
    static ZeroFamily ls_family(double delta);        // z_n = n - d + i n^{-4d}, z_0 = i
    static ZeroFamily custom_generator(double cx, double ex, double dx,
                                       double cy, double ey, std::vector<cplx> core);

    bool is_parametric() const {
        return kind == FamilyKind::PowerFamily || kind == FamilyKind::LsFamily ||
               kind == FamilyKind::CustomGenerator;
    }
};

// Single source of truth for E, E#, Theta = E#/E and the phase derivative.
//
// Conventions (recorded once, used everywhere):
//  * pw-exponential a:  E(z) = e^{-iaz}, Theta(z) = e^{2iaz}, tau = 2a.
//  * finite-list:       E(z) = e^{-i a_phase z} prod c_n (z - conj z_n) with
//    unimodular c_n chosen so that E#/E = e^{2i a_phase z} prod eps_n b_n,
//    eps_n = |z_n^2+1|/(z_n^2+1) (eps_n = 1 for z_n = i).
//  * parametric families: E(z) = lim_R prod_{|z_n|<=R} (1 - z/conj z_n), the
//    symmetric-limit product; tau = a_phase = 0, and Theta = E#/E carries the
//    constants conj(z_c)/z_c on core zeros.
//
// Evaluators pair n with -n, accumulate products in log scale, and close the
// sum with an Euler-Maclaurin tail on the paired log-factors. All evaluation
// is const and safe for concurrent use; the only internal mutability is a
// synchronized cache of local expansions ("charts") that accelerates
// near-real-axis evaluation for parametric families.
class HermiteBiehlerModel {
public:
    HermiteBiehlerModel(ZeroFamily family, double a_phase, Truncation trunc);

    // Theta(z) = e^{i tau z} prod eps_n (z - z_n)/(z - conj z_n).
    cplx theta(cplx z, EvalInfo* info = nullptr) const;

    // log|Theta(z)|; unlike theta() this also works far beyond the explicit
    // zero table (continuum/Euler-Maclaurin route), where only the modulus
    // is meaningful.
    double log_abs_theta(cplx z) const;

    // log E = (log|E|, arg E). For finite-list models the argument is the
    // branch obtained by summing per-factor principal arguments, smooth in x
    // along the real line; for infinite families the branch is unspecified.
    cplx log_E(cplx z, EvalInfo* info = nullptr) const;
    cplx log_E_sharp(cplx z) const;

    // (log_modulus, phase) of E at z.
    std::pair<double, double> eval_E(cplx z, EvalInfo* info = nullptr) const;

    // phi'(x) = a + sum_n y_n / |x - conj z_n|^2, strictly positive.
    double phase_derivative(double x, EvalInfo* info = nullptr) const;

    // phi(x) = phi(0) + int_0^x phi', increasing continuous; phi(0) = -arg E(0).
    double phase(double x, double rel_tol = 1e-10) const;

    // Theta'/Theta and its derivative; E'/E.
    cplx theta_log_deriv(cplx z) const;
    cplx theta_log_deriv2(cplx z) const;
    cplx E_log_deriv(cplx z) const;

    // A = (E + E#)/2 on the real line and its derivative, via |E| and phi.
    double A_real(double x) const;
    double A_prime_real(double x) const;

    // zero access. Finite lists are indexed 0..N-1; parametric families by
    // signed index (n = 0 is the first core zero when present).
    bool has_zeros() const;
    long max_index() const;
    cplx zero(long n) const;
    std::vector<cplx> core_zeros() const;
    std::vector<cplx> zeros_near(double x, double radius) const;

    // distance from z to the zero set; for families whose heights decay
    // (ey < 0) the real limit points x(n) are included, per the level-set
    // module's spectrum convention. Throws TailNotConvergent if the beyond-
    // table bound cannot certify the minimum.
    double nearest_zero_distance(cplx z, bool include_real_limit_points) const;

    double a_phase() const { return a_phase_; }
    double tau() const { return tau_; }
    const ZeroFamily& family() const { return family_; }
    const Truncation& truncation() const { return trunc_; }
    std::string describe() const;

    // largest |Re z| the direct product evaluation supports
    double direct_range() const;

    // parametric family continuous forms (t >= 1)
    double x_of_t(double t) const;
    double y_of_t(double t) const;

private:
    struct Chart;
    struct ProductEval {
        cplx log_e{0.0, 0.0};
        cplx log_theta{0.0, 0.0};
        double tail_err = 0.0;
        long terms = 0;
    };

    ProductEval eval_products(cplx z, bool want_e, bool want_theta) const;
    const Chart* chart_for(double x0_abs) const;
    bool chartable(cplx z) const;
    double log_abs_theta_far(cplx z) const;
    long explicit_cutoff(double az) const;

    cplx chart_log_theta(const Chart& ch, cplx z) const;
    cplx chart_Ltheta(const Chart& ch, cplx z) const;

    ZeroFamily family_;
    double a_phase_ = 0.0;
    double tau_ = 0.0;
    Truncation trunc_;
    bool mirror_symmetric_ = false;   // all core zeros on the imaginary axis

    // cached per-index data for parametric families, n = 1..n_max
    std::vector<double> zx_, zy_, rho_, p_, q_;
    double phi0_ = 0.0;               // -arg E(0)

    // Series tail tables. For cutoffs N on a dyadic grid, suffix sums
    //   T_e[g][j][k]  = sum_{n>N_g} p_n^j q_n^k            (1 <= j+k <= 6)
    //   T_phi[g][j][m] = sum_{n>N_g} y_n x_n^j / rho_n^{m+1} (j even <= m <= 8)
    // turn the tails of log-product and phase-derivative sums into short
    // polynomial evaluations whenever the expansion parameter is small.
    std::vector<long> series_grid_;
    std::vector<std::array<double, 49>> te_;   // [j*7+k]
    std::vector<std::array<double, 45>> tphi_; // [(j/2)*9+m]
    void build_series_tables();
    long series_cutoff_e(double az) const;   // grid index or -1
    long series_cutoff_phi(double ax) const; // grid index or -1

    mutable std::shared_mutex chart_mutex_;
    mutable std::unordered_map<long long, std::unique_ptr<Chart>> charts_;
};

// Per-point model data shared across a batch of integrand evaluations.
struct ModelPointData {
    cplx theta{0.0, 0.0};
};

std::shared_ptr<HermiteBiehlerModel> make_model(const ZeroFamily& fam, double a_phase = 0.0,
                                                Truncation trunc = {});

// model description files (External Interfaces)
class KVFile;
std::shared_ptr<HermiteBiehlerModel> model_from_file(const std::string& path);
std::shared_ptr<HermiteBiehlerModel> model_from_kv(const KVFile& kv, const std::string& prefix = "");

} // namespace hblab
