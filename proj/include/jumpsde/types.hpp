#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace jumpsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library. The `module()` tag names
/// the component that raised it so the CLI can prefix diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}
    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

#define JUMPSDE_DEFINE_ERROR(Name, Module)                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(Module, what) {}      \
    }

JUMPSDE_DEFINE_ERROR(QuadratureDivergence, "quadrature");
JUMPSDE_DEFINE_ERROR(NonFinite, "model-core");
JUMPSDE_DEFINE_ERROR(InfiniteLargeMass, "levy-measure");
JUMPSDE_DEFINE_ERROR(SliceMassOverflow, "levy-measure");
JUMPSDE_DEFINE_ERROR(NotPSD, "coupling");
JUMPSDE_DEFINE_ERROR(SingularRadius, "coupling");
JUMPSDE_DEFINE_ERROR(NoClosedForm, "simulator");
JUMPSDE_DEFINE_ERROR(SizeMismatch, "analysis");
JUMPSDE_DEFINE_ERROR(InvalidArgument, "jumpsde");

#undef JUMPSDE_DEFINE_ERROR

/// Real signed power sign(x)|x|^p. Fractional powers of negative coordinates
/// in the built-in models are read this way, so x^{1/3} is odd and
/// x^{2/3} = (x^{1/3})^2 is even.
inline double spow(double x, double p) {
    if (x == 0.0) return 0.0;
    const double m = std::pow(std::abs(x), p);
    return x < 0.0 ? -m : m;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace jumpsde
