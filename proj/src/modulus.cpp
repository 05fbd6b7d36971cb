#include "jumpsde/modulus.hpp"

#include "jumpsde/quadrature.hpp"
#include "jumpsde/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace jumpsde {

const char* to_string(ModRole r) {
    switch (r) {
        case ModRole::Zeta: return "zeta";
        case ModRole::Rho: return "rho";
        case ModRole::Varrho: return "varrho";
        case ModRole::Vartheta: return "vartheta";
        case ModRole::Psi: return "psi";
    }
    return "?";
}

const char* to_string(Admissible a) {
    switch (a) {
        case Admissible::Proven: return "proven";
        case Admissible::Refuted: return "refuted";
        case Admissible::Inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(ModFamily f) {
    switch (f) {
        case ModFamily::Constant: return "constant";
        case ModFamily::Linear: return "linear";
        case ModFamily::Power: return "power";
        case ModFamily::RLogInv: return "r_log_inv";
        case ModFamily::RLogLogInv: return "r_loglog_inv";
        case ModFamily::RLogInvLogLogInv: return "r_log_inv_loglog_inv";
        case ModFamily::LogGrowth: return "log_growth";
        case ModFamily::LogLogGrowth: return "loglog_growth";
        case ModFamily::User: return "user";
    }
    return "?";
}

ModulusFunction ModulusFunction::constant(double c, ModRole role) { return {ModFamily::Constant, role, c, 0.0}; }
ModulusFunction ModulusFunction::linear(double c, ModRole role) { return {ModFamily::Linear, role, c, 1.0}; }
ModulusFunction ModulusFunction::power(double c, double p, ModRole role) {
    if (!(p > 0.0)) throw InvalidArgument("power modulus needs p > 0");
    return {ModFamily::Power, role, c, p};
}
ModulusFunction ModulusFunction::r_log_inv(double c, ModRole role) { return {ModFamily::RLogInv, role, c, 1.0}; }
ModulusFunction ModulusFunction::r_loglog_inv(double c, ModRole role) {
    return {ModFamily::RLogLogInv, role, c, 1.0};
}
ModulusFunction ModulusFunction::r_log_inv_loglog_inv(double c, ModRole role) {
    return {ModFamily::RLogInvLogLogInv, role, c, 1.0};
}
ModulusFunction ModulusFunction::log_growth() { return {ModFamily::LogGrowth, ModRole::Zeta, 1.0, 0.0}; }
ModulusFunction ModulusFunction::loglog_growth() { return {ModFamily::LogLogGrowth, ModRole::Zeta, 1.0, 0.0}; }

ModulusFunction ModulusFunction::user(std::function<double(double)> f, std::string expr, ModRole role) {
    ModulusFunction m(ModFamily::User, role, 1.0, 0.0);
    m.user_ = std::move(f);
    m.expr_ = std::move(expr);
    return m;
}

namespace {

// g(r) and g'(r) for the small-r log families, valid for 0 < r < 1/e^e.
double log_family(ModFamily f, double r, double* deriv) {
    const double L = std::log(1.0 / r);
    const double LL = std::log(L);
    switch (f) {
        case ModFamily::RLogInv:
            if (deriv) *deriv = L - 1.0;
            return r * L;
        case ModFamily::RLogLogInv:
            if (deriv) *deriv = LL - 1.0 / L;
            return r * LL;
        default:
            if (deriv) *deriv = L * LL - LL - 1.0;
            return r * L * LL;
    }
}

}  // namespace

double ModulusFunction::base(double r) const {
    switch (family_) {
        case ModFamily::Constant: return 1.0;
        case ModFamily::Linear: return r;
        case ModFamily::Power: return std::pow(r, p_);
        case ModFamily::RLogInv:
        case ModFamily::RLogLogInv:
        case ModFamily::RLogInvLogLogInv: {
            if (r <= 0.0) return 0.0;
            if (r <= kLogCut) return log_family(family_, r, nullptr);
            double slope = 0.0;
            const double v = log_family(family_, kLogCut, &slope);
            return v + slope * (r - kLogCut);
        }
        case ModFamily::LogGrowth: return r > M_E ? std::log(r) : 1.0;
        case ModFamily::LogLogGrowth: {
            if (r <= M_E) return 1.0;
            return std::max(1.0, std::log(r) * std::log(std::log(r)));
        }
        case ModFamily::User: return user_(r);
    }
    return 0.0;
}

double ModulusFunction::operator()(double r) const { return c_ * base(r); }

Admissible ModulusFunction::admissible() const {
    using A = Admissible;
    const bool log_small = family_ == ModFamily::RLogInv || family_ == ModFamily::RLogLogInv ||
                           family_ == ModFamily::RLogInvLogLogInv;
    const bool growth = family_ == ModFamily::LogGrowth || family_ == ModFamily::LogLogGrowth;
    if (family_ == ModFamily::User) return A::Inconclusive;
    switch (role_) {
        case ModRole::Zeta:
            // int_0^inf dr / (r zeta(r) + 1) = inf
            if (family_ == ModFamily::Constant) return c_ > 0.0 ? A::Proven : A::Refuted;
            if (growth) return A::Proven;
            return A::Refuted;
        case ModRole::Rho:
        case ModRole::Varrho:
            // int_0+ dr / rho(r) = inf
            if (c_ <= 0.0) return A::Refuted;
            if (family_ == ModFamily::Linear || log_small) return A::Proven;
            if (family_ == ModFamily::Power) return p_ >= 1.0 ? A::Proven : A::Refuted;
            return A::Refuted;
        case ModRole::Vartheta:
            // vartheta(r) -> 0 as r -> 0
            if (family_ == ModFamily::Linear || log_small) return A::Proven;
            if (family_ == ModFamily::Power) return A::Proven;
            return A::Refuted;
        case ModRole::Psi:
            // nondecreasing, concave, vanishing only at 0
            if (c_ <= 0.0) return A::Refuted;
            if (family_ == ModFamily::Linear || log_small) return A::Proven;
            if (family_ == ModFamily::Power) return p_ <= 1.0 ? A::Proven : A::Refuted;
            return A::Refuted;
    }
    return A::Inconclusive;
}

std::string ModulusFunction::describe() const {
    std::ostringstream os;
    os << to_string(family_);
    if (family_ == ModFamily::User) {
        os << "(" << expr_ << ")";
    } else if (family_ == ModFamily::Power) {
        os << "(c=" << c_ << ",p=" << p_ << ")";
    } else if (family_ != ModFamily::LogGrowth && family_ != ModFamily::LogLogGrowth) {
        os << "(c=" << c_ << ")";
    }
    os << " role=" << to_string(role_) << " admissible=" << to_string(admissible());
    return os.str();
}

DivergenceProbe ModulusFunction::divergence_probe() const {
    // Integrand of the role's condition and the direction of the critical end.
    std::function<double(double)> g;
    bool toward_zero = true;
    switch (role_) {
        case ModRole::Zeta:
            g = [this](double r) { return 1.0 / (r * (*this)(r) + 1.0); };
            toward_zero = false;
            break;
        case ModRole::Psi:
            g = [this](double r) { return 1.0 / (*this)(r); };
            toward_zero = false;
            break;
        default:
            g = [this](double r) { return 1.0 / (*this)(r); };
            break;
    }
    // Partial integrals over successive decades, 12 in total.
    std::vector<double> partial;
    double acc = 0.0;
    QuadOptions opt;
    opt.rel_tol = 1e-8;
    for (int k = 0; k < 12; ++k) {
        const double a = toward_zero ? std::pow(10.0, -k - 1) : std::pow(10.0, k);
        const double b = toward_zero ? std::pow(10.0, -k) : std::pow(10.0, k + 1);
        acc += integrate_dyadic(g, a, b, opt).value;
        partial.push_back(acc);
    }
    // Least-squares slope of partial integral against decade index, last 6.
    const int n = 6;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 12 - n; k < 12; ++k) {
        sx += k;
        sy += partial[k];
        sxx += double(k) * k;
        sxy += k * partial[k];
    }
    DivergenceProbe out;
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.last_partial = partial.back();
    // A convergent integral has decade increments shrinking geometrically;
    // flag divergence when the last increment is not small next to the total.
    const double last_inc = partial[11] - partial[10];
    out.looks_divergent = last_inc > 1e-3 * std::max(1.0, std::abs(partial.back()));
    return out;
}

ModulusSpotCheck spot_check(const ModulusFunction& m, double r_max, int n) {
    ModulusSpotCheck out;
    double prev = m(0.0);
    for (int i = 1; i <= n; ++i) {
        // log-spaced from 1e-8 up to r_max
        const double r = 1e-8 * std::pow(r_max / 1e-8, double(i) / n);
        const double v = m(r);
        if (v < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
            if (out.nondecreasing) out.worst_r = r;
            out.nondecreasing = false;
        }
        if ((m.role() == ModRole::Rho || m.role() == ModRole::Varrho) && !(v > 0.0)) {
            if (out.positive) out.worst_r = r;
            out.positive = false;
        }
        if (m.role() == ModRole::Varrho) {
            const double rhs = (1.0 + r) * (1.0 + r) * m(r / (1.0 + r));
            if (v > rhs * (1.0 + 1e-12)) {
                if (out.varrho_bound) out.worst_r = r;
                out.varrho_bound = false;
            }
        }
        prev = v;
    }
    return out;
}

double phi_lyapunov(const ModulusFunction& zeta, double r) {
    if (r < 0.0 || !std::isfinite(r)) throw InvalidArgument("phi_lyapunov: r must be finite and >= 0");
    if (r == 0.0) return 1.0;
    const auto g = [&zeta](double z) { return 1.0 / (z * zeta(z) + 1.0); };
    QuadOptions opt;
    opt.rel_tol = 1e-12;
    // dyadic panels from r downward to a tiny cutoff, the rest is ~ its length
    double exponent = 0.0;
    const double lo = std::min(r, 1e-3);
    exponent += integrate_interval(g, 0.0, lo, opt).value;
    if (r > lo) exponent += integrate_dyadic(g, lo, r, opt).value;
    return std::exp(exponent);
}

}  // namespace jumpsde
