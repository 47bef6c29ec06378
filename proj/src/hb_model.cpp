#include "hblab/hb_model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include "hblab/gauss.hpp"

namespace hblab {

namespace {

constexpr long kNMin = 256;       // earliest Euler-Maclaurin handoff
constexpr int kChartOrder = 12;   // Taylor order of the far-field expansion
constexpr double kChartMinX = 16.0;
constexpr double kChartImMax = 0.9;

const cplx kI{0.0, 1.0};

struct ProdAcc {
    cplx prod{1.0, 0.0};
    double log_mag = 0.0;

    inline void mul(cplx f) {
        prod *= f;
        double m = std::norm(prod);
        if (m > 1e240 || (m < 1e-240 && m > 0.0)) {
            double r = std::sqrt(m);
            log_mag += std::log(r);
            prod /= r;
        }
    }

    cplx log() const { return std::log(prod) + cplx(log_mag, 0.0); }
};

// Euler-Maclaurin endpoint corrections f/2 - f'/12 + f'''/720 at t = first,
// derivatives by unit-step central differences.
template <typename T, typename F>
void em_endpoint(const F& f, double first, T& corr, double& err) {
    T f0 = f(first);
    T fm2 = f(first - 2.0), fm1 = f(first - 1.0);
    T fp1 = f(first + 1.0), fp2 = f(first + 2.0);
    T d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) * (1.0 / 12.0);
    T d3 = (-fm2 + 2.0 * fm1 - 2.0 * fp1 + fp2) * 0.5;
    corr = 0.5 * f0 - d1 * (1.0 / 12.0) + d3 * (1.0 / 720.0);
    err = std::abs(d3) * (1.0 / 720.0) * 0.5;
}

// Sum_{n=first}^inf f(n) for smooth decaying f defined on [first-2, inf).
template <typename T, typename F>
void em_tail(const F& f, double first, double rel_tol, double abs_floor,
             T& value, double& err) {
    auto integ = detail::integrate_tail<T, F>(f, first, rel_tol, abs_floor);
    T corr{};
    double cerr = 0.0;
    em_endpoint(f, first, corr, cerr);
    value = integ.value + corr;
    err = integ.err + cerr;
}

inline double sqr(double v) { return v * v; }

// log(1 + w) without the cancellation of forming 1 + w first; needed so the
// adaptive tail integrator is not chasing rounding noise when |w| is tiny.
inline cplx clog1p(cplx w) {
    double a = w.real(), b = w.imag();
    return {0.5 * std::log1p(2.0 * a + a * a + b * b), std::atan2(b, 1.0 + a)};
}

} // namespace

// ---------------------------------------------------------------- ZeroFamily

ZeroFamily ZeroFamily::pw_exponential(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("pw-exponential requires type a > 0");
    ZeroFamily f;
    f.kind = FamilyKind::PwExponential;
    f.pw_type = a;
    f.family_param = a;
    return f;
}

ZeroFamily ZeroFamily::finite_list(std::vector<cplx> zeros) {
    for (cplx z : zeros)
        if (!(z.imag() > 0.0))
            throw std::invalid_argument("finite-list zeros must satisfy Im z_n > 0 strictly");
    ZeroFamily f;
    f.kind = FamilyKind::FiniteList;
    f.finite_zeros = std::move(zeros);
    return f;
}

ZeroFamily ZeroFamily::power_family(double alpha) {
    if (!(alpha > 0.5 && alpha < 1.0))
        throw std::invalid_argument("power-family requires alpha in (1/2, 1)");
    ZeroFamily f;
    f.kind = FamilyKind::PowerFamily;
    f.cx = 1.0; f.ex = alpha; f.dx = 0.0;
    f.cy = 1.0; f.ey = 0.0;
    f.core = {cplx(0.0, 1.0)};
    f.family_param = alpha;
    return f;
}

ZeroFamily ZeroFamily::ls_family(double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("ls-family requires delta in (0, 1)");
    ZeroFamily f;
    f.kind = FamilyKind::LsFamily;
    f.cx = 1.0; f.ex = 1.0; f.dx = -delta;
    f.cy = 1.0; f.ey = -4.0 * delta;
    f.core = {cplx(0.0, 1.0)};
    f.family_param = delta;
    return f;
}

ZeroFamily ZeroFamily::custom_generator(double cx, double ex, double dx,
                                        double cy, double ey, std::vector<cplx> core) {
    ZeroFamily f;
    f.kind = FamilyKind::CustomGenerator;
    f.cx = cx; f.ex = ex; f.dx = dx; f.cy = cy; f.ey = ey;
    f.core = std::move(core);
    return f;
}

// ------------------------------------------------------ model construction

HermiteBiehlerModel::HermiteBiehlerModel(ZeroFamily family, double a_phase, Truncation trunc)
    : family_(std::move(family)), a_phase_(a_phase), trunc_(trunc) {
    if (a_phase_ < 0.0) throw std::invalid_argument("a_phase must be >= 0");
    tau_ = 2.0 * a_phase_;

    if (family_.kind == FamilyKind::PwExponential) {
        a_phase_ = family_.pw_type;
        tau_ = 2.0 * family_.pw_type;
        phi0_ = 0.0;
        return;
    }
    if (family_.kind == FamilyKind::FiniteList) {
        if (family_.finite_zeros.empty())
            throw std::invalid_argument("finite-list family needs at least one zero");
        phi0_ = -log_E(cplx(0.0, 0.0)).imag();
        return;
    }

    if (!(family_.cx > 0.0) || !(family_.ex > 0.0) || !(family_.cy > 0.0))
        throw std::invalid_argument("parametric family requires cx, ex, cy > 0");
    if (!(family_.cx + family_.dx > 0.0))
        throw std::invalid_argument("parametric family requires x(1) > 0");
    // Blaschke/Cartwright summability from the declared tail exponents:
    // sum y_n/(1+|z_n|^2) ~ sum t^(ey-2ex).
    if (!(family_.ey - 2.0 * family_.ex < -1.0))
        throw TailNotConvergent("declared tail exponents do not certify Blaschke summability");
    for (cplx c : family_.core)
        if (!(c.imag() > 0.0))
            throw std::invalid_argument("core zeros must satisfy Im z > 0");
    if (trunc_.n_max < 2 * kNMin) trunc_.n_max = 2 * kNMin;
    if (!(trunc_.tail_tol > 0.0)) trunc_.tail_tol = 1e-6;

    mirror_symmetric_ = true;
    for (cplx c : family_.core)
        if (std::abs(c.real()) > 1e-12) mirror_symmetric_ = false;

    long n = trunc_.n_max;
    zx_.resize(n + 1);
    zy_.resize(n + 1);
    rho_.resize(n + 1);
    p_.resize(n + 1);
    q_.resize(n + 1);
    for (long k = 1; k <= n; ++k) {
        double t = static_cast<double>(k);
        double x = x_of_t(t), y = y_of_t(t);
        zx_[k] = x;
        zy_[k] = y;
        double r = x * x + y * y;
        rho_[k] = r;
        p_[k] = y / r;
        q_[k] = 1.0 / r;
    }
    phi0_ = 0.0; // E(0) = prod(1 - 0) = 1 for the symmetric-limit product
    build_series_tables();
}

void HermiteBiehlerModel::build_series_tables() {
    const long n_max = trunc_.n_max;
    for (long g = 512; g < n_max; g *= 2) series_grid_.push_back(g);
    series_grid_.push_back(n_max);
    const size_t ng = series_grid_.size();
    te_.assign(ng, {});
    tphi_.assign(ng, {});

    // seed with the Euler-Maclaurin tails beyond the table
    std::array<double, 49> acc_e{};
    std::array<double, 45> acc_p{};
    double first = static_cast<double>(n_max + 1);
    for (int j = 0; j <= 6; ++j)
        for (int k = 0; k + j <= 6; ++k) {
            if (j + k == 0) continue;
            auto f = [&](double t) {
                double x = x_of_t(t), y = y_of_t(t);
                double r = x * x + y * y;
                return std::pow(y, j) / std::pow(r, j + k);
            };
            double v = 0.0, err = 0.0;
            em_tail(f, first, 1e-6, 1e-14, v, err);
            acc_e[j * 7 + k] = v;
        }
    for (int j = 0; j <= 8; j += 2)
        for (int m = j; m <= 8; ++m) {
            auto f = [&](double t) {
                double x = x_of_t(t), y = y_of_t(t);
                double r = x * x + y * y;
                return y * std::pow(x, j) / std::pow(r, m + 1);
            };
            double v = 0.0, err = 0.0;
            em_tail(f, first, 1e-6, 1e-14, v, err);
            acc_p[(j / 2) * 9 + m] = v;
        }

    // suffix-accumulate down the table, snapshotting at each grid cutoff
    long gi = static_cast<long>(ng) - 1;
    for (long n = n_max; n >= 1; --n) {
        if (gi >= 0 && n == series_grid_[gi]) {
            te_[gi] = acc_e;
            tphi_[gi] = acc_p;
            --gi;
        }
        double p = p_[n], q = q_[n];
        double pj[7], qk[7];
        pj[0] = qk[0] = 1.0;
        for (int i = 1; i <= 6; ++i) {
            pj[i] = pj[i - 1] * p;
            qk[i] = qk[i - 1] * q;
        }
        for (int j = 0; j <= 6; ++j)
            for (int k = 0; k + j <= 6; ++k) {
                if (j + k == 0) continue;
                acc_e[j * 7 + k] += pj[j] * qk[k];
            }
        double x = zx_[n], y = zy_[n];
        double invr = q; // 1/rho
        double xe[5];    // x^0, x^2, x^4, x^6, x^8
        xe[0] = 1.0;
        for (int i = 1; i <= 4; ++i) xe[i] = xe[i - 1] * x * x;
        double rp = invr; // 1/rho^{m+1}
        for (int m = 0; m <= 8; ++m) {
            for (int j = 0; j <= m; j += 2) acc_p[(j / 2) * 9 + m] += y * xe[j / 2] * rp;
            rp *= invr;
        }
    }
}

long HermiteBiehlerModel::series_cutoff_e(double az) const {
    for (size_t g = 0; g < series_grid_.size(); ++g) {
        long n = std::min(series_grid_[g] + 1, trunc_.n_max);
        double ub = (2.0 * zy_[n] * az + az * az) / rho_[n];
        if (ub <= 0.04) return static_cast<long>(g);
    }
    return -1;
}

long HermiteBiehlerModel::series_cutoff_phi(double ax) const {
    for (size_t g = 0; g < series_grid_.size(); ++g) {
        long n = std::min(series_grid_[g] + 1, trunc_.n_max);
        double ub = (2.0 * ax * zx_[n] + ax * ax) / rho_[n];
        if (ub <= 0.1) return static_cast<long>(g);
    }
    return -1;
}

std::shared_ptr<HermiteBiehlerModel> make_model(const ZeroFamily& fam, double a_phase,
                                                Truncation trunc) {
    return std::make_shared<HermiteBiehlerModel>(fam, a_phase, trunc);
}

double HermiteBiehlerModel::x_of_t(double t) const {
    return family_.cx * std::pow(t, family_.ex) + family_.dx;
}

double HermiteBiehlerModel::y_of_t(double t) const {
    return family_.cy * std::pow(t, family_.ey);
}

std::string HermiteBiehlerModel::describe() const {
    std::ostringstream os;
    switch (family_.kind) {
        case FamilyKind::PwExponential: os << "pw a=" << family_.pw_type; break;
        case FamilyKind::FiniteList: os << "finite N=" << family_.finite_zeros.size(); break;
        case FamilyKind::PowerFamily: os << "power alpha=" << family_.family_param; break;
        case FamilyKind::LsFamily: os << "ls delta=" << family_.family_param; break;
        case FamilyKind::CustomGenerator:
            os << "custom ex=" << family_.ex << " ey=" << family_.ey;
            break;
    }
    return os.str();
}

bool HermiteBiehlerModel::has_zeros() const {
    return family_.kind != FamilyKind::PwExponential;
}

long HermiteBiehlerModel::max_index() const {
    return family_.is_parametric() ? trunc_.n_max : 0;
}

cplx HermiteBiehlerModel::zero(long n) const {
    if (family_.kind == FamilyKind::FiniteList) {
        if (n < 0 || n >= static_cast<long>(family_.finite_zeros.size()))
            throw InvalidIndex("finite-list zero index out of range");
        return family_.finite_zeros[n];
    }
    if (!family_.is_parametric()) throw InvalidIndex("model has no zeros");
    if (n == 0) {
        if (family_.core.empty()) throw InvalidIndex("family has no core zero");
        return family_.core[0];
    }
    long k = std::labs(n);
    if (k > trunc_.n_max) throw InvalidIndex("zero index beyond truncation");
    double s = n > 0 ? 1.0 : -1.0;
    return {s * zx_[k], zy_[k]};
}

std::vector<cplx> HermiteBiehlerModel::core_zeros() const {
    if (family_.kind == FamilyKind::FiniteList) return family_.finite_zeros;
    return family_.core;
}

double HermiteBiehlerModel::direct_range() const {
    if (!family_.is_parametric()) return std::numeric_limits<double>::infinity();
    return (zx_[trunc_.n_max] - 10.0) / 1.5 - 1.0;
}

// ---------------------------------------------------------------- products

long HermiteBiehlerModel::explicit_cutoff(double az) const {
    double target = 1.5 * az + 10.0;
    double t = std::pow(std::max((target - family_.dx) / family_.cx, 1.0), 1.0 / family_.ex);
    long n = std::clamp(static_cast<long>(std::ceil(t)), kNMin, trunc_.n_max);
    auto u_at = [&](long k) { return (2.0 * zy_[k] * az + az * az) / rho_[k]; };
    while (u_at(n) > 0.6) {
        if (n >= trunc_.n_max)
            throw TailNotConvergent("evaluation point exceeds truncation budget");
        n = std::min(2 * n, trunc_.n_max);
    }
    return n;
}

HermiteBiehlerModel::ProductEval
HermiteBiehlerModel::eval_products(cplx z, bool want_e, bool want_theta) const {
    ProductEval out;
    if (family_.kind == FamilyKind::PwExponential) {
        double a = family_.pw_type;
        out.log_e = -kI * a * z;
        out.log_theta = 2.0 * kI * a * z;
        return out;
    }

    if (family_.kind == FamilyKind::FiniteList) {
        cplx log_e{0.0, 0.0};
        ProdAcc th;
        for (cplx zn : family_.finite_zeros) {
            cplx zbar = std::conj(zn);
            cplx fe = z - zbar;
            if (std::abs(fe) < 1e-280 * (1.0 + std::abs(z)))
                throw PoleHit("evaluation at a zero of E");
            // eps_n = |z_n^2+1|/(z_n^2+1); c_n unimodular with conj(c)/c = eps
            cplx w = zn * zn + 1.0;
            double aw = std::abs(w);
            cplx eps = (aw < 1e-14) ? cplx(1.0, 0.0) : cplx(aw, 0.0) / w;
            double carg = (aw < 1e-14) ? 0.0 : 0.5 * std::arg(w);
            if (want_e) log_e += std::log(fe) + cplx(0.0, carg);
            if (want_theta) th.mul(eps * (z - zn) / fe);
        }
        if (want_e) out.log_e = log_e - kI * a_phase_ * z;
        if (want_theta) out.log_theta = 2.0 * kI * a_phase_ * z + th.log();
        return out;
    }

    // parametric family: symmetric pairs n <-> -n plus core zeros.
    // E-pair:  (1 - z/conj z_n)(1 + z/z_n)      = 1 - (2i y_n z + z^2)/rho_n
    // E#-pair: (1 - z/z_n)(1 + z/conj z_n)      = 1 + (2i y_n z - z^2)/rho_n
    const double az = std::abs(z);
    const long grid = series_cutoff_e(az);
    const long ncut = (grid >= 0) ? series_grid_[grid] : explicit_cutoff(az);
    const cplx w1 = 2.0 * kI * z;
    const cplx w2 = z * z;

    ProdAcc pd, pu;
    const double* pp = p_.data();
    const double* qq = q_.data();
    for (long k = 1; k <= ncut; ++k) {
        cplx a = w1 * pp[k];
        cplx b = w2 * qq[k];
        cplx fd = 1.0 - a - b;
        if (std::norm(fd) < 1e-260) throw PoleHit("evaluation at a zero of E");
        pd.mul(fd);
        if (want_theta) pu.mul(1.0 + a - b);
    }
    out.terms = ncut;

    cplx tail_d{0.0, 0.0}, tail_u{0.0, 0.0};
    if (grid >= 0) {
        // series tails: log(1-u) = -sum u^m/m with u = w1 p + w2 q termwise,
        // expanded binomially against the suffix tables
        static const double binom[7][7] = {
            {1, 0, 0, 0, 0, 0, 0},      {1, 1, 0, 0, 0, 0, 0},
            {1, 2, 1, 0, 0, 0, 0},      {1, 3, 3, 1, 0, 0, 0},
            {1, 4, 6, 4, 1, 0, 0},      {1, 5, 10, 10, 5, 1, 0},
            {1, 6, 15, 20, 15, 6, 1}};
        cplx w1p[7], w2p[7];
        w1p[0] = w2p[0] = 1.0;
        for (int i = 1; i <= 6; ++i) {
            w1p[i] = w1p[i - 1] * w1;
            w2p[i] = w2p[i - 1] * w2;
        }
        const auto& T = te_[grid];
        for (int m = 1; m <= 6; ++m)
            for (int j = 0; j <= m; ++j) {
                int k = m - j;
                cplx base = (binom[m][j] / m) * w1p[j] * w2p[k] * T[j * 7 + k];
                tail_d -= base;
                if (want_theta) tail_u -= (j & 1) ? -base : base;
            }
        long nref = std::min(ncut + 1, trunc_.n_max);
        double ub = (2.0 * zy_[nref] * az + az * az) / rho_[nref];
        double s1 = std::abs(w1) * T[1 * 7 + 0] + std::abs(w2) * T[0 * 7 + 1];
        out.tail_err = std::pow(ub, 6) * s1 + 1e-13;
    } else {
        auto fam_d = [&](double t) -> cplx {
            double x = x_of_t(t), y = y_of_t(t);
            double r = x * x + y * y;
            return clog1p(-(w1 * y + w2) / r);
        };
        auto fam_u = [&](double t) -> cplx {
            double x = x_of_t(t), y = y_of_t(t);
            double r = x * x + y * y;
            return clog1p((w1 * y - w2) / r);
        };
        double err_d = 0.0, err_u = 0.0;
        em_tail(fam_d, static_cast<double>(ncut + 1), trunc_.tail_tol * 1e-3,
                trunc_.tail_tol * 1e-2, tail_d, err_d);
        if (want_theta)
            em_tail(fam_u, static_cast<double>(ncut + 1), trunc_.tail_tol * 1e-3,
                    trunc_.tail_tol * 1e-2, tail_u, err_u);
        out.tail_err = err_d + err_u;
    }

    cplx log_core_e{0.0, 0.0}, log_core_th{0.0, 0.0};
    for (cplx c : family_.core) {
        cplx fe = 1.0 - z / std::conj(c);
        if (std::abs(fe) < 1e-280) throw PoleHit("evaluation at a zero of E");
        if (want_e) log_core_e += std::log(fe);
        if (want_theta) log_core_th += std::log(1.0 - z / c) - std::log(fe);
    }

    cplx log_d = pd.log();
    if (want_e) out.log_e = log_d + tail_d + log_core_e;
    if (want_theta) out.log_theta = pu.log() - log_d + (tail_u - tail_d) + log_core_th;
    return out;
}

// ----------------------------------------------------------- chart machinery

// Local model of log Theta about a real center x0 > 0: the zeros within
// |x_n - x0| <= D are kept explicitly, everything else (both sides and the
// beyond-table tail) is folded into a Taylor polynomial in (z - x0). Valid in
// the disc |z - x0| <= 1.
struct HermiteBiehlerModel::Chart {
    double x0 = 0.0;
    double radius = 1.0;
    std::vector<cplx> near_zeros;          // same-side zeros kept explicit
    cplx coef[kChartOrder + 1];            // far-field Taylor coefficients
};

bool HermiteBiehlerModel::chartable(cplx z) const {
    if (!family_.is_parametric()) return false;
    double ax = std::abs(z.real());
    if (ax < kChartMinX || std::abs(z.imag()) > kChartImMax) return false;
    if (z.real() < 0.0 && !mirror_symmetric_) return false;
    return ax <= direct_range() - 2.0;
}

const HermiteBiehlerModel::Chart* HermiteBiehlerModel::chart_for(double x0_abs) const {
    long long key = llround(x0_abs);
    {
        std::shared_lock lk(chart_mutex_);
        auto it = charts_.find(key);
        if (it != charts_.end()) return it->second.get();
    }
    auto ch = std::make_unique<Chart>();
    double x0 = static_cast<double>(key);
    ch->x0 = x0;

    double t0 = std::pow(std::max((x0 - family_.dx) / family_.cx, 1.0), 1.0 / family_.ex);
    double spacing = family_.cx * family_.ex * std::pow(t0, family_.ex - 1.0);
    double D = std::clamp(40.0 * spacing, 9.0, 80.0);

    auto lo_it = std::lower_bound(zx_.begin() + 1, zx_.end(), x0 - D);
    auto hi_it = std::upper_bound(zx_.begin() + 1, zx_.end(), x0 + D);
    long n_lo = lo_it - zx_.begin();
    long n_hi = hi_it - zx_.begin() - 1;
    for (long k = std::max(1L, n_lo); k <= std::min(trunc_.n_max, n_hi); ++k)
        ch->near_zeros.push_back({zx_[k], zy_[k]});

    // far power sums S_k = sum (a^-k - conj(a)^-k) over all far zeros
    cplx S[kChartOrder + 1] = {};
    for (long k = 1; k <= trunc_.n_max; ++k) {
        bool near = (k >= n_lo && k <= n_hi);
        if (!near) {
            cplx a{zx_[k] - x0, zy_[k]};
            cplx inv = 1.0 / a;
            cplx pwr = inv;
            for (int j = 1; j <= kChartOrder; ++j) {
                S[j] += pwr - std::conj(pwr);
                pwr *= inv;
            }
        }
        cplx b{-zx_[k] - x0, zy_[k]};
        cplx invb = 1.0 / b;
        cplx pwrb = invb;
        for (int j = 1; j <= kChartOrder; ++j) {
            S[j] += pwrb - std::conj(pwrb);
            pwrb *= invb;
        }
    }
    for (int j = 1; j <= kChartOrder; ++j) {
        auto f = [&](double t) -> cplx {
            cplx a{x_of_t(t) - x0, y_of_t(t)};
            cplx b{-x_of_t(t) - x0, y_of_t(t)};
            cplx pa = std::pow(a, -j), pb = std::pow(b, -j);
            return (pa - std::conj(pa)) + (pb - std::conj(pb));
        };
        cplx tail{0.0, 0.0};
        double err = 0.0;
        em_tail(f, static_cast<double>(trunc_.n_max + 1), 1e-6, 1e-12, tail, err);
        S[j] += tail;
        ch->coef[j] = -S[j] / static_cast<double>(j);
    }

    // anchor c0 so that chart(x0) matches the direct product evaluation
    cplx direct = eval_products(cplx(x0, 0.0), false, true).log_theta;
    cplx near_part{0.0, 0.0};
    for (cplx zn : ch->near_zeros)
        near_part += std::log(cplx(x0, 0.0) - zn) - std::log(cplx(x0, 0.0) - std::conj(zn));
    for (cplx c : family_.core)
        near_part += std::log(1.0 - x0 / c) - std::log(1.0 - x0 / std::conj(c));
    ch->coef[0] = direct - near_part;

    std::unique_lock lk(chart_mutex_);
    auto [it, inserted] = charts_.try_emplace(key, std::move(ch));
    return it->second.get();
}

cplx HermiteBiehlerModel::chart_log_theta(const Chart& ch, cplx z) const {
    cplx d = z - ch.x0;
    cplx poly = ch.coef[kChartOrder];
    for (int j = kChartOrder - 1; j >= 0; --j) poly = poly * d + ch.coef[j];
    ProdAcc acc;
    for (cplx zn : ch.near_zeros) {
        cplx den = z - std::conj(zn);
        if (std::norm(den) < 1e-260) throw PoleHit("evaluation at a zero of E");
        acc.mul((z - zn) / den);
    }
    for (cplx c : family_.core) {
        cplx den = 1.0 - z / std::conj(c);
        if (std::norm(den) < 1e-260) throw PoleHit("evaluation at a zero of E");
        acc.mul((1.0 - z / c) / den);
    }
    return poly + acc.log();
}

cplx HermiteBiehlerModel::chart_Ltheta(const Chart& ch, cplx z) const {
    cplx d = z - ch.x0;
    // derivative of the far-field polynomial
    cplx dpoly = static_cast<double>(kChartOrder) * ch.coef[kChartOrder];
    for (int j = kChartOrder - 1; j >= 1; --j)
        dpoly = dpoly * d + static_cast<double>(j) * ch.coef[j];
    cplx s = dpoly;
    for (cplx zn : ch.near_zeros) s += 1.0 / (z - zn) - 1.0 / (z - std::conj(zn));
    for (cplx c : family_.core) s += 1.0 / (z - c) - 1.0 / (z - std::conj(c));
    return s;
}

// ------------------------------------------------------------- public evals

cplx HermiteBiehlerModel::theta(cplx z, EvalInfo* info) const {
    if (chartable(z)) {
        if (z.real() >= 0.0) {
            const Chart* ch = chart_for(z.real());
            if (info) { info->tail_abs_err = 1e-9; info->terms_used = 0; }
            return std::exp(chart_log_theta(*ch, z));
        }
        // Theta(-z) = 1/Theta(z) for mirror-symmetric families
        const Chart* ch = chart_for(-z.real());
        if (info) { info->tail_abs_err = 1e-9; info->terms_used = 0; }
        return std::exp(-chart_log_theta(*ch, -z));
    }
    auto pe = eval_products(z, false, true);
    if (info) { info->tail_abs_err = pe.tail_err; info->terms_used = pe.terms; }
    return std::exp(pe.log_theta);
}

cplx HermiteBiehlerModel::log_E(cplx z, EvalInfo* info) const {
    auto pe = eval_products(z, true, false);
    if (info) { info->tail_abs_err = pe.tail_err; info->terms_used = pe.terms; }
    return pe.log_e;
}

cplx HermiteBiehlerModel::log_E_sharp(cplx z) const {
    return std::conj(log_E(std::conj(z)));
}

std::pair<double, double> HermiteBiehlerModel::eval_E(cplx z, EvalInfo* info) const {
    cplx le = log_E(z, info);
    return {le.real(), le.imag()};
}

double HermiteBiehlerModel::log_abs_theta(cplx z) const {
    double y = z.imag();
    if (family_.kind == FamilyKind::PwExponential) return -2.0 * family_.pw_type * y;
    if (y == 0.0) return 0.0; // |Theta| = 1 on the real line
    if (family_.kind == FamilyKind::FiniteList) {
        double s = -2.0 * a_phase_ * y;
        for (cplx zn : family_.finite_zeros) {
            double den = std::norm(z - std::conj(zn));
            if (den < 1e-280) throw PoleHit("evaluation at a zero of E");
            s += 0.5 * std::log(std::norm(z - zn) / den);
        }
        return s;
    }
    if (y < 0.0) return -log_abs_theta(std::conj(z));
    if (std::abs(z.real()) > direct_range()) return log_abs_theta_far(z);
    if (chartable(z)) {
        if (z.real() >= 0.0) {
            const Chart* ch = chart_for(z.real());
            return chart_log_theta(*ch, z).real();
        }
        const Chart* ch = chart_for(-z.real());
        return -chart_log_theta(*ch, -z).real();
    }
    return eval_products(z, false, true).log_theta.real();
}

double HermiteBiehlerModel::phase_derivative(double x, EvalInfo* info) const {
    if (family_.kind == FamilyKind::PwExponential) {
        if (info) *info = {};
        return family_.pw_type;
    }
    if (family_.kind == FamilyKind::FiniteList) {
        double s = a_phase_;
        for (cplx zn : family_.finite_zeros)
            s += zn.imag() / (sqr(x - zn.real()) + sqr(zn.imag()));
        if (info) *info = {};
        return s;
    }
    if (chartable(cplx(x, 0.0))) {
        const Chart* ch = chart_for(std::abs(x));
        cplx L = chart_Ltheta(*ch, cplx(std::abs(x), 0.0)); // LTheta is even in x
        if (info) { info->tail_abs_err = 1e-9; info->terms_used = 0; }
        return 0.5 * L.imag(); // |Theta'(x)| = 2 phi'(x)
    }

    const double ax = std::abs(x);
    const long grid = series_cutoff_phi(ax);
    long ncut;
    if (grid >= 0) {
        ncut = series_grid_[grid];
    } else {
        double target = 2.0 * ax + 10.0;
        double t = std::pow(std::max((target - family_.dx) / family_.cx, 1.0), 1.0 / family_.ex);
        ncut = std::clamp(static_cast<long>(std::ceil(t)), kNMin, trunc_.n_max);
    }

    double s = a_phase_;
    for (long k = 1; k <= ncut; ++k) {
        double yk = zy_[k];
        s += yk / (sqr(x - zx_[k]) + yk * yk) + yk / (sqr(x + zx_[k]) + yk * yk);
    }
    for (cplx c : family_.core)
        s += c.imag() / (sqr(x - c.real()) + sqr(c.imag()));

    double tail = 0.0, err = 0.0;
    if (grid >= 0) {
        // 1/|x -+ z_n|^2 expanded geometrically in (+-2 x x_n - x^2)/rho_n;
        // the mirror pair keeps even powers only
        static const double binom[9][9] = {
            {1, 0, 0, 0, 0, 0, 0, 0, 0},       {1, 1, 0, 0, 0, 0, 0, 0, 0},
            {1, 2, 1, 0, 0, 0, 0, 0, 0},       {1, 3, 3, 1, 0, 0, 0, 0, 0},
            {1, 4, 6, 4, 1, 0, 0, 0, 0},       {1, 5, 10, 10, 5, 1, 0, 0, 0},
            {1, 6, 15, 20, 15, 6, 1, 0, 0},    {1, 7, 21, 35, 35, 21, 7, 1, 0},
            {1, 8, 28, 56, 70, 56, 28, 8, 1}};
        const auto& V = tphi_[grid];
        double tx2 = -x * x;
        double p2x[5]; // (2x)^0, (2x)^2, ...
        p2x[0] = 1.0;
        for (int i = 1; i <= 4; ++i) p2x[i] = p2x[i - 1] * 4.0 * x * x;
        for (int m = 0; m <= 8; ++m) {
            double mx = std::pow(tx2, 0); // placeholder, computed below
            for (int j = 0; j <= m; j += 2) {
                double c = 2.0 * binom[m][j] * p2x[j / 2];
                double pw = 1.0;
                for (int q = 0; q < m - j; ++q) pw *= tx2;
                tail += c * pw * V[(j / 2) * 9 + m];
            }
            (void)mx;
        }
        long nref = std::min(ncut + 1, trunc_.n_max);
        double ub = (2.0 * ax * zx_[nref] + ax * ax) / rho_[nref];
        err = std::pow(ub, 9) / std::max(1.0 - ub, 0.5) * 2.0 * V[0 * 9 + 0];
    } else {
        auto g = [&](double tt) -> double {
            double xt = x_of_t(tt), yt = y_of_t(tt);
            return yt / (sqr(x - xt) + yt * yt) + yt / (sqr(x + xt) + yt * yt);
        };
        em_tail(g, static_cast<double>(ncut + 1), trunc_.tail_tol * 0.1,
                trunc_.tail_tol * 1e-2, tail, err);
    }
    if (info) { info->tail_abs_err = err; info->terms_used = ncut; }
    return s + tail;
}

double HermiteBiehlerModel::phase(double x, double rel_tol) const {
    if (family_.kind == FamilyKind::PwExponential) return family_.pw_type * x + phi0_;
    if (x == 0.0) return phi0_;
    auto f = [this](double t) { return phase_derivative(t); };
    double scale = std::max(1.0, std::abs(x) * phase_derivative(0.0));
    auto integ = detail::adaptive_integrate<double>(f, 0.0, x, rel_tol * scale);
    return phi0_ + integ.value;
}

cplx HermiteBiehlerModel::theta_log_deriv(cplx z) const {
    if (family_.kind == FamilyKind::PwExponential) return cplx(0.0, 2.0 * family_.pw_type);
    if (family_.kind == FamilyKind::FiniteList) {
        cplx s{0.0, tau_};
        for (cplx zn : family_.finite_zeros)
            s += 1.0 / (z - zn) - 1.0 / (z - std::conj(zn));
        return s;
    }
    if (chartable(z)) {
        // log Theta(z) = -log Theta(-z) + const  =>  LTheta even
        cplx w = z.real() >= 0.0 ? z : -z;
        const Chart* ch = chart_for(w.real());
        return chart_Ltheta(*ch, w);
    }
    const double az = std::abs(z);
    const long ncut = explicit_cutoff(az);
    cplx s{0.0, 0.0};
    for (long k = 1; k <= ncut; ++k) {
        cplx zn{zx_[k], zy_[k]};
        cplx zb = std::conj(zn);
        s += 1.0 / (z - zn) - 1.0 / (z - zb);
        s += 1.0 / (z + zb) - 1.0 / (z + zn);
    }
    for (cplx c : family_.core) s += 1.0 / (z - c) - 1.0 / (z - std::conj(c));
    auto f = [&](double t) -> cplx {
        cplx zn{x_of_t(t), y_of_t(t)};
        cplx zb = std::conj(zn);
        return 1.0 / (z - zn) - 1.0 / (z - zb) + 1.0 / (z + zb) - 1.0 / (z + zn);
    };
    cplx tail{0.0, 0.0};
    double err = 0.0;
    em_tail(f, static_cast<double>(ncut + 1), trunc_.tail_tol * 0.1,
            trunc_.tail_tol * 1e-2, tail, err);
    return s + tail;
}

cplx HermiteBiehlerModel::theta_log_deriv2(cplx z) const {
    if (family_.kind == FamilyKind::PwExponential) return cplx(0.0, 0.0);
    auto term = [&](cplx zn) {
        cplx a = 1.0 / (z - zn), b = 1.0 / (z - std::conj(zn));
        return b * b - a * a; // d/dz [1/(z-zn) - 1/(z-conj zn)]
    };
    if (family_.kind == FamilyKind::FiniteList) {
        cplx s{0.0, 0.0};
        for (cplx zn : family_.finite_zeros) s += term(zn);
        return s;
    }
    const double az = std::abs(z);
    const long ncut = explicit_cutoff(az);
    cplx s{0.0, 0.0};
    for (long k = 1; k <= ncut; ++k) {
        s += term(cplx(zx_[k], zy_[k])) + term(cplx(-zx_[k], zy_[k]));
    }
    for (cplx c : family_.core) s += term(c);
    auto f = [&](double t) -> cplx {
        double xt = x_of_t(t), yt = y_of_t(t);
        return term(cplx(xt, yt)) + term(cplx(-xt, yt));
    };
    cplx tail{0.0, 0.0};
    double err = 0.0;
    em_tail(f, static_cast<double>(ncut + 1), trunc_.tail_tol * 0.1,
            trunc_.tail_tol * 1e-2, tail, err);
    return s + tail;
}

cplx HermiteBiehlerModel::E_log_deriv(cplx z) const {
    if (family_.kind == FamilyKind::PwExponential) return cplx(0.0, -family_.pw_type);
    if (family_.kind == FamilyKind::FiniteList) {
        cplx s{0.0, -a_phase_};
        for (cplx zn : family_.finite_zeros) s += 1.0 / (z - std::conj(zn));
        return s;
    }
    const double az = std::abs(z);
    const long ncut = explicit_cutoff(az);
    cplx s{0.0, 0.0};
    for (long k = 1; k <= ncut; ++k) {
        cplx zn{zx_[k], zy_[k]};
        s += 1.0 / (z - std::conj(zn)) + 1.0 / (z + zn);
    }
    for (cplx c : family_.core) s += 1.0 / (z - std::conj(c));
    auto f = [&](double t) -> cplx {
        cplx zn{x_of_t(t), y_of_t(t)};
        return 1.0 / (z - std::conj(zn)) + 1.0 / (z + zn);
    };
    cplx tail{0.0, 0.0};
    double err = 0.0;
    em_tail(f, static_cast<double>(ncut + 1), trunc_.tail_tol * 0.1,
            trunc_.tail_tol * 1e-2, tail, err);
    return s + tail;
}

double HermiteBiehlerModel::A_real(double x) const {
    auto [lm, ph] = eval_E(cplx(x, 0.0));
    (void)ph;
    return std::exp(lm) * std::cos(phase(x));
}

double HermiteBiehlerModel::A_prime_real(double x) const {
    auto [lm, ph] = eval_E(cplx(x, 0.0));
    (void)ph;
    double phi = phase(x);
    cplx L = E_log_deriv(cplx(x, 0.0));
    return std::exp(lm) * (L.real() * std::cos(phi) - phase_derivative(x) * std::sin(phi));
}

std::vector<cplx> HermiteBiehlerModel::zeros_near(double x, double radius) const {
    std::vector<cplx> out;
    if (family_.kind == FamilyKind::PwExponential) return out;
    if (family_.kind == FamilyKind::FiniteList) {
        for (cplx zn : family_.finite_zeros)
            if (std::abs(zn.real() - x) <= radius) out.push_back(zn);
        return out;
    }
    for (cplx c : family_.core)
        if (std::abs(c.real() - x) <= radius) out.push_back(c);
    for (int side = -1; side <= 1; side += 2) {
        double lo = side > 0 ? x - radius : -(x + radius);
        double hi = side > 0 ? x + radius : -(x - radius);
        if (hi < zx_[1] || lo > zx_[trunc_.n_max]) continue;
        auto it_lo = std::lower_bound(zx_.begin() + 1, zx_.end(), lo);
        auto it_hi = std::upper_bound(zx_.begin() + 1, zx_.end(), hi);
        long k_lo = it_lo - zx_.begin();
        long k_hi = it_hi - zx_.begin() - 1;
        for (long k = std::max(1L, k_lo); k <= std::min(trunc_.n_max, k_hi); ++k)
            out.push_back({side * zx_[k], zy_[k]});
    }
    return out;
}

double HermiteBiehlerModel::nearest_zero_distance(cplx z, bool include_real_limit_points) const {
    if (family_.kind == FamilyKind::PwExponential)
        return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    if (family_.kind == FamilyKind::FiniteList) {
        for (cplx zn : family_.finite_zeros) best = std::min(best, std::abs(z - zn));
        return best;
    }
    for (cplx c : family_.core) best = std::min(best, std::abs(z - c));
    bool limits = include_real_limit_points && family_.ey < 0.0;

    for (int side = -1; side <= 1; side += 2) {
        double xq = side > 0 ? z.real() : -z.real();
        auto it = std::lower_bound(zx_.begin() + 1, zx_.end(), xq);
        long k0 = it - zx_.begin();
        for (long k = std::max(1L, k0 - 4); k <= std::min(trunc_.n_max, k0 + 4); ++k) {
            best = std::min(best, std::hypot(z.real() - side * zx_[k], z.imag() - zy_[k]));
            if (limits)
                best = std::min(best, std::hypot(z.real() - side * zx_[k], z.imag()));
        }
    }
    double beyond = x_of_t(static_cast<double>(trunc_.n_max + 1)) - std::abs(z.real());
    if (beyond < best)
        throw TailNotConvergent("zero table too short to certify nearest-zero distance");
    return best;
}

// ------------------------------------------------------------ far continuum

// log|Theta| far beyond the zero table: continuum/Euler-Maclaurin form of
// sum log|b_n(z)|, valid where the summand varies slowly on unit index scale.
double HermiteBiehlerModel::log_abs_theta_far(cplx z) const {
    double x = std::abs(z.real());
    double y = z.imag();
    if (y == 0.0) return 0.0;
    if (y < 0.0) return -log_abs_theta_far(std::conj(z));

    auto pair_term = [&](double xt, double yt) -> double {
        double gp = 4.0 * y * yt / (sqr(x - xt) + sqr(y + yt));
        double gm = 4.0 * y * yt / (sqr(x + xt) + sqr(y + yt));
        double lp = std::log1p(-std::min(gp, 1.0 - 1e-14));
        double lm = std::log1p(-std::min(gm, 1.0 - 1e-14));
        return 0.5 * (lp + lm);
    };
    const long n0 = std::min<long>(1024, trunc_.n_max / 2);
    double s = 0.0;
    for (long k = 1; k <= n0; ++k) s += pair_term(zx_[k], zy_[k]);
    for (cplx c : family_.core) {
        double num = sqr(x - c.real()) + sqr(y - c.imag());
        double den = sqr(x - c.real()) + sqr(y + c.imag());
        s += 0.5 * std::log(num / den);
    }

    auto h = [&](double t) -> double { return pair_term(x_of_t(t), y_of_t(t)); };
    // Integrals of h are taken in s = x(t) coordinates so the resonance at
    // x(t) = x keeps its O(1+y) width instead of vanishing inside windows of
    // width ~t.
    auto H = [&](double sv) -> double {
        double t = std::pow((sv - family_.dx) / family_.cx, 1.0 / family_.ex);
        double dtds = t / (family_.ex * (sv - family_.dx));
        return pair_term(sv, y_of_t(t)) * dtds;
    };
    // dyadic pieces of integral of H over [lo, hi], anchored at the
    // resonance abscissa x (edges at x - 2^k U resp. x + 2^k U)
    auto anchored_left = [&](double lo, double hi) -> double {
        double total = 0.0;
        double U = std::max(x - hi, 1e-9);
        double edge = hi;
        for (int k = 0; edge > lo && k < 90; ++k) {
            double next = std::max(lo, x - std::ldexp(U, k + 1));
            total += detail::adaptive_integrate<double>(H, next, edge, 1e-11).value;
            edge = next;
        }
        return total;
    };
    auto anchored_right = [&](double lo) -> double {
        double total = 0.0;
        double U = std::max(lo - x, 1e-9);
        double edge = lo;
        double prevw = -1.0;
        for (int k = 0; k < 90; ++k) {
            double next = x + std::ldexp(U, k + 1);
            double w = detail::adaptive_integrate<double>(H, edge, next, 1e-11).value;
            total += w;
            edge = next;
            double aw = std::abs(w);
            if (prevw >= 0.0 && aw < prevw && aw < 1e-11) break;
            prevw = aw;
        }
        return total;
    };

    const double t_lo = static_cast<double>(n0 + 1);
    const double s0 = x_of_t(t_lo);
    double tstar = std::pow(std::max((x - family_.dx) / family_.cx, 1.0), 1.0 / family_.ex);
    double xp = family_.cx * family_.ex * std::pow(tstar, family_.ex - 1.0);
    double width = (y + y_of_t(std::max(tstar, 1.0)) + 1e-12) / xp; // peak width in index units

    double tail = 0.0;
    if (tstar <= t_lo + 4.0 && x <= s0) {
        // resonance inside the explicit range: plain decaying tail
        double v = 0.0, err = 0.0;
        em_tail(h, t_lo, 1e-7, 1e-10, v, err);
        tail = v;
    } else if (width >= 32.0) {
        // peak wide in index units: pure integral route with endpoint terms
        double corr = 0.0, cerr = 0.0;
        em_endpoint(h, t_lo, corr, cerr);
        double s_hi = x - 64.0 * (1.0 + y);
        if (s_hi <= s0) {
            tail = corr + detail::adaptive_integrate<double>(H, s0, x + 64.0 * (1.0 + y), 1e-10).value +
                   anchored_right(x + 64.0 * (1.0 + y));
        } else {
            tail = corr + anchored_left(s0, s_hi) +
                   detail::adaptive_integrate<double>(H, s_hi, x + 64.0 * (1.0 + y), 1e-10).value +
                   anchored_right(x + 64.0 * (1.0 + y));
        }
    } else {
        // narrow peak: sum the resonant indices discretely, Euler-Maclaurin
        // on both smooth flanks
        double M = 256.0 + 32.0 * width;
        double T1 = std::floor(tstar - M), T2 = std::floor(tstar + M);
        if (T2 > 4.5e15)
            throw TailNotConvergent("far-field resonance beyond integer-resolvable range");
        double mid_from = std::max(t_lo, T1 + 1.0);
        double mid_sum = 0.0;
        for (double n = mid_from; n <= T2; n += 1.0) mid_sum += h(n);
        double left = 0.0;
        if (T1 >= t_lo + 4.0) {
            // sum_{n=t_lo}^{T1} h(n) = int + (h(a)+h(b))/2 + (h'(b)-h'(a))/12 - ...
            double integral = anchored_left(s0, x_of_t(T1));
            double ca = 0.0, ea = 0.0, cb = 0.0, eb = 0.0;
            em_endpoint(h, t_lo, ca, ea);
            // em_endpoint gives f/2 - f'/12 + f'''/720, the a-end form;
            // the b-end enters with opposite derivative signs
            double hb = h(T1);
            double d1b = (h(T1 - 2.0) - 8.0 * h(T1 - 1.0) + 8.0 * h(T1 + 1.0) - h(T1 + 2.0)) / 12.0;
            double d3b = (-h(T1 - 2.0) + 2.0 * h(T1 - 1.0) - 2.0 * h(T1 + 1.0) + h(T1 + 2.0)) / 2.0;
            cb = 0.5 * hb + d1b / 12.0 - d3b / 720.0;
            left = integral + ca + cb;
            (void)ea; (void)eb;
        }
        double right = 0.0;
        {
            double corr = 0.0, cerr = 0.0;
            em_endpoint(h, T2 + 1.0, corr, cerr);
            right = corr + anchored_right(x_of_t(T2 + 1.0));
        }
        tail = left + mid_sum + right;
    }
    return s + tail;
}

} // namespace hblab
