#include "hblab/kernels.hpp"

#include <cmath>
#include <sstream>

namespace hblab {

namespace {
constexpr double kPi = 3.14159265358979323846;
const cplx kI{0.0, 1.0};

cplx csinc(cplx w) {
    if (std::abs(w) < 1e-4) {
        cplx w2 = w * w;
        return 1.0 - w2 / 6.0 + w2 * w2 / 120.0;
    }
    return std::sin(w) / w;
}
} // namespace

cplx KernelEval::kernel_ratio(cplx theta_w, cplx theta_z, cplx z, cplx wbar,
                              cplx Lth_wbar, cplx Lth2_wbar, double abs_theta_w) {
    cplx h = z - wbar;
    double ah = std::abs(h);
    double scale = 1.0 + std::abs(z);
    if (ah < 1e-12 * scale) {
        if (abs_theta_w < 1e-15)
            throw PoleHit("kernel pole: z = conj(w) with Theta(w) = 0");
        return -(Lth_wbar + 0.5 * h * (Lth_wbar * Lth_wbar + Lth2_wbar));
    }
    if (ah < 1e-4 * scale && std::abs(Lth_wbar) * ah < 0.05 && abs_theta_w > 1e-15) {
        return -(Lth_wbar + 0.5 * h * (Lth_wbar * Lth_wbar + Lth2_wbar));
    }
    return (1.0 - std::conj(theta_w) * theta_z) / h;
}

cplx KernelEval::k_small(cplx w, cplx z) const {
    cplx wbar = std::conj(w);
    cplx theta_w = model_->theta(w);
    cplx h = z - wbar;
    double scale = 1.0 + std::abs(z);
    if (std::abs(h) < 1e-4 * scale) {
        // near the removable diagonal: expand via Theta'/Theta at conj(w)
        cplx Lth = model_->theta_log_deriv(wbar);
        cplx Lth2 = model_->theta_log_deriv2(wbar);
        return (kI / (2.0 * kPi)) *
               kernel_ratio(theta_w, cplx{0.0, 0.0}, z, wbar, Lth, Lth2, std::abs(theta_w));
    }
    cplx theta_z = model_->theta(z);
    return (kI / (2.0 * kPi)) * (1.0 - std::conj(theta_w) * theta_z) / h;
}

double KernelEval::knorm2(cplx z) const {
    double y = z.imag();
    if (y < -1e-12) throw std::invalid_argument("knorm2 requires Im z >= 0");
    if (y <= 1e-12) return model_->phase_derivative(z.real()) / kPi;
    double la = model_->log_abs_theta(z);
    return -std::expm1(2.0 * la) / (4.0 * kPi * y);
}

cplx KernelEval::K_big(cplx w, cplx z) const {
    cplx le = model_->log_E(z) + std::conj(model_->log_E(w));
    return std::exp(le) * k_small(w, z);
}

// ------------------------------------------------------------ TestFunction

TestFunction TestFunction::f_n(std::shared_ptr<const HermiteBiehlerModel> m, long n) {
    TestFunction f;
    f.kind_ = Kind::FN;
    f.model_ = std::move(m);
    f.zn_ = f.model_->zero(n); // throws InvalidIndex when out of range
    f.sqrt_y_ = std::sqrt(f.zn_.imag());
    return f;
}

TestFunction TestFunction::g_x(std::shared_ptr<const HermiteBiehlerModel> m, double x) {
    TestFunction f;
    f.kind_ = Kind::GX;
    f.model_ = std::move(m);
    f.x_ = x;
    f.theta_x_ = f.model_->theta(cplx(x, 0.0));
    f.Lth_x_ = f.model_->theta_log_deriv(cplx(x, 0.0));
    f.Lth2_x_ = f.model_->theta_log_deriv2(cplx(x, 0.0));
    return f;
}

TestFunction TestFunction::sinc_combo(std::shared_ptr<const HermiteBiehlerModel> m,
                                      std::vector<double> shifts, std::vector<double> coeffs) {
    if (m->family().kind != FamilyKind::PwExponential)
        throw std::invalid_argument("sinc combinations require a pw-exponential model");
    if (shifts.size() != coeffs.size())
        throw std::invalid_argument("sinc combo size mismatch");
    TestFunction f;
    f.kind_ = Kind::SincCombo;
    f.pw_a_ = m->family().pw_type;
    f.model_ = std::move(m);
    f.shifts_ = std::move(shifts);
    f.rcoeffs_ = std::move(coeffs);
    return f;
}

TestFunction TestFunction::kernel_combo(std::shared_ptr<const HermiteBiehlerModel> m,
                                        std::vector<cplx> nodes, std::vector<cplx> coeffs) {
    if (nodes.size() != coeffs.size())
        throw std::invalid_argument("kernel combo size mismatch");
    TestFunction f;
    f.kind_ = Kind::KernelCombo;
    f.model_ = std::move(m);
    KernelEval ke(f.model_);
    for (size_t j = 0; j < nodes.size(); ++j) {
        cplx w = nodes[j];
        if (!(w.imag() > 0.0))
            throw std::invalid_argument("kernel combo nodes must lie in C+");
        KNode node;
        node.w = w;
        node.theta_w = f.model_->theta(w);
        node.Lth_w = f.model_->theta_log_deriv(w);
        node.Lth2_w = f.model_->theta_log_deriv2(w);
        double arg_e = f.model_->log_E(w).imag();
        double inv_norm = 1.0 / std::sqrt(ke.knorm2(w));
        node.coeff = coeffs[j] * std::exp(cplx(0.0, -arg_e)) * inv_norm;
        node.coeff_sharp = std::conj(coeffs[j]) * std::exp(cplx(0.0, arg_e)) * inv_norm;
        f.knodes_.push_back(node);
    }
    return f;
}

TestFunction TestFunction::modulus_profile(std::shared_ptr<const HermiteBiehlerModel> m) {
    TestFunction f;
    f.kind_ = Kind::ModulusProfile;
    f.model_ = std::move(m);
    return f;
}

std::string TestFunction::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::FN: os << "f_n at " << zn_.real() << "+" << zn_.imag() << "i"; break;
        case Kind::GX: os << "g_x x=" << x_; break;
        case Kind::SincCombo: os << "sinc combo n=" << shifts_.size(); break;
        case Kind::KernelCombo: os << "kernel combo n=" << knodes_.size(); break;
        case Kind::ModulusProfile: os << "modulus profile"; break;
    }
    return os.str();
}

cplx TestFunction::ratio(cplx z, const ModelPointData& pd) const {
    switch (kind_) {
        case Kind::FN:
            return sqrt_y_ / (z - std::conj(zn_));
        case Kind::GX:
            return (kI / (2.0 * kPi)) *
                   KernelEval::kernel_ratio(theta_x_, pd.theta, z, cplx(x_, 0.0), Lth_x_,
                                            Lth2_x_, std::abs(theta_x_));
        case Kind::SincCombo: {
            cplx s{0.0, 0.0};
            for (size_t j = 0; j < shifts_.size(); ++j)
                s += rcoeffs_[j] * csinc(pw_a_ * (z - shifts_[j]));
            return s * std::exp(kI * pw_a_ * z);
        }
        case Kind::KernelCombo: {
            cplx s{0.0, 0.0};
            for (const KNode& n : knodes_) {
                cplx h = z - std::conj(n.w);
                s += n.coeff * (kI / (2.0 * kPi)) * (1.0 - std::conj(n.theta_w) * pd.theta) / h;
            }
            return s;
        }
        case Kind::ModulusProfile:
            throw std::logic_error("modulus profile is not analytic; use abs2_pair");
    }
    return {};
}

cplx TestFunction::sharp_ratio(cplx z, const ModelPointData& pd) const {
    switch (kind_) {
        case Kind::FN:
            return pd.theta * sqrt_y_ / (z - zn_);
        case Kind::GX: {
            // g_x#/E = (-i/2pi) (Theta(z) - Theta(x)) / (z - x)
            cplx h = z - x_;
            double scale = 1.0 + std::abs(z);
            if (std::abs(h) < 1e-4 * scale && std::abs(Lth_x_) * std::abs(h) < 0.05) {
                cplx d = theta_x_ * (Lth_x_ + 0.5 * h * (Lth_x_ * Lth_x_ + Lth2_x_));
                return (-kI / (2.0 * kPi)) * d;
            }
            return (-kI / (2.0 * kPi)) * (pd.theta - theta_x_) / h;
        }
        case Kind::SincCombo:
            return ratio(z, pd); // real coefficients and real shifts: F# = F
        case Kind::KernelCombo: {
            cplx s{0.0, 0.0};
            for (const KNode& n : knodes_) {
                cplx h = z - n.w;
                double scale = 1.0 + std::abs(z);
                cplx term;
                if (std::abs(h) < 1e-4 * scale && std::abs(n.Lth_w) * std::abs(h) < 0.05) {
                    term = -n.theta_w * (n.Lth_w + 0.5 * h * (n.Lth_w * n.Lth_w + n.Lth2_w));
                } else {
                    term = (n.theta_w - pd.theta) / h;
                }
                s += n.coeff_sharp * (kI / (2.0 * kPi)) * term;
            }
            return s;
        }
        case Kind::ModulusProfile:
            throw std::logic_error("modulus profile is not analytic; use abs2_pair");
    }
    return {};
}

double TestFunction::abs2_pair(cplx z, const ModelPointData& pd) const {
    if (kind_ == Kind::ModulusProfile) {
        double ax = std::abs(z.real());
        double p = 1.0 / (std::sqrt(ax + 1.0) * std::log(ax + 2.0));
        return 2.0 * p * p; // the profile depends on |x| only, |F#| = |F|
    }
    return std::norm(ratio(z, pd)) + std::norm(sharp_ratio(z, pd));
}

cplx TestFunction::value(cplx z) const {
    if (kind_ == Kind::ModulusProfile)
        throw std::logic_error("modulus profile has no pointwise complex value");
    if (kind_ == Kind::SincCombo) {
        cplx s{0.0, 0.0};
        for (size_t j = 0; j < shifts_.size(); ++j)
            s += rcoeffs_[j] * csinc(pw_a_ * (z - shifts_[j]));
        return s;
    }
    ModelPointData pd{model_->theta(z)};
    return std::exp(model_->log_E(z)) * ratio(z, pd);
}

std::vector<cplx> TestFunction::feature_points() const {
    std::vector<cplx> out;
    switch (kind_) {
        case Kind::FN: out.push_back(cplx(zn_.real(), 0.0)); break;
        case Kind::GX: out.push_back(cplx(x_, 0.0)); break;
        case Kind::SincCombo:
            for (double s : shifts_) out.push_back(cplx(s, 0.0));
            break;
        case Kind::KernelCombo:
            for (const KNode& n : knodes_) out.push_back(n.w);
            break;
        case Kind::ModulusProfile: break;
    }
    return out;
}

} // namespace hblab
