#pragma once

#include <functional>
#include <string>

namespace jumpsde {

enum class ModRole { Zeta, Rho, Varrho, Vartheta, Psi };
enum class Admissible { Proven, Refuted, Inconclusive };

enum class ModFamily {
    Constant,          // c
    Linear,            // c r
    Power,             // c r^p
    RLogInv,           // c r log(1/r)
    RLogLogInv,        // c r log(log(1/r))
    RLogInvLogLogInv,  // c r log(1/r) log(log(1/r))
    LogGrowth,         // max(1, log r)
    LogLogGrowth,      // max(1, log r log(log r))
    User,
};

const char* to_string(ModRole r);
const char* to_string(Admissible a);
const char* to_string(ModFamily f);

/// Result of the partial-integral probe used on user expressions.
struct DivergenceProbe {
    double slope = 0.0;       ///< d(partial integral)/d(log10 of the cutoff), last decades
    double last_partial = 0.0;
    bool looks_divergent = false;
};

/// A scalar modulus function (the ζ, ρ, ϱ, ϑ, ψ of the growth and
/// continuity conditions). Immutable.
///
/// The r log(1/r) type families are only increasing and concave near zero.
/// Beyond `kLogCut` they continue along their tangent line, which keeps them
/// nondecreasing and concave on all of [0, inf).
class ModulusFunction {
public:
    static constexpr double kLogCut = 0.01;

    static ModulusFunction constant(double c, ModRole role);
    static ModulusFunction linear(double c, ModRole role);
    static ModulusFunction power(double c, double p, ModRole role);
    static ModulusFunction r_log_inv(double c, ModRole role);
    static ModulusFunction r_loglog_inv(double c, ModRole role);
    static ModulusFunction r_log_inv_loglog_inv(double c, ModRole role);
    static ModulusFunction log_growth();
    static ModulusFunction loglog_growth();
    static ModulusFunction user(std::function<double(double)> f, std::string expr, ModRole role);

    double operator()(double r) const;

    ModFamily family() const { return family_; }
    ModRole role() const { return role_; }
    double coefficient() const { return c_; }
    double exponent() const { return p_; }
    /// Verdict on the integral condition attached to the role. Shipped
    /// families carry a fixed verdict; user expressions are always
    /// inconclusive (see divergence_probe()).
    Admissible admissible() const;
    std::string describe() const;

    /// Partial integrals of the role's integral condition over 12 decades
    /// toward the critical end (0 for rho/varrho, inf for zeta/psi).
    DivergenceProbe divergence_probe() const;

private:
    ModulusFunction(ModFamily f, ModRole r, double c, double p) : family_(f), role_(r), c_(c), p_(p) {}
    double base(double r) const;

    ModFamily family_;
    ModRole role_;
    double c_ = 1.0;
    double p_ = 1.0;
    std::function<double(double)> user_;
    std::string expr_;
};

/// Grid spot-checks of the structural invariants: nondecreasing, positive for
/// r > 0 (rho/varrho), and the (1+r)^2 self-similarity bound for varrho.
struct ModulusSpotCheck {
    bool nondecreasing = true;
    bool positive = true;
    bool varrho_bound = true;
    double worst_r = 0.0;  ///< first offending grid point, if any
};
ModulusSpotCheck spot_check(const ModulusFunction& m, double r_max = 100.0, int n = 400);

/// phi(r) = exp(int_0^r dz / (z zeta(z) + 1)).
double phi_lyapunov(const ModulusFunction& zeta, double r);

}  // namespace jumpsde
