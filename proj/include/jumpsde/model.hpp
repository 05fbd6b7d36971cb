#pragma once

#include "jumpsde/levy_measure.hpp"
#include "jumpsde/test_function.hpp"
#include "jumpsde/types.hpp"

#include <functional>
#include <string>

namespace jumpsde {

/// Jump amplitude c(x, u). When J and k are set the kernel is separable,
/// c(x, u) = J(x) k(u), and compensator integrals reduce to J(x) int k dnu.
struct JumpKernel {
    std::function<Vec(const Vec&, const Vec&)> c;
    std::function<Mat(const Vec&)> J;
    std::function<Vec(const Vec&)> k;
    int k_dim = 0;
    bool radial_mark = false;  ///< c depends on u only through |u|

    static JumpKernel none();
    static JumpKernel general(std::function<Vec(const Vec&, const Vec&)> c, bool radial_mark = false);
    static JumpKernel separable(std::function<Mat(const Vec&)> J, std::function<Vec(const Vec&)> k, int k_dim,
                                bool radial_mark = false);

    bool is_zero() const { return !c; }
    bool is_separable() const { return static_cast<bool>(J); }
    Vec operator()(const Vec& x, const Vec& u) const;
};

/// Tags for the built-ins whose strong solution is known in closed form.
enum class ClosedForm { None, Zero, Brownian, LinearODE, Geometric };

/// The SDE dX = b dt + sigma dW + int_{U0} c dNtilde + int_{U \ U0} c dN (or
/// dNtilde when compensate_large is set). Immutable and safe to share.
struct Model {
    std::string name;
    std::string origin;  ///< one-line description for listings
    int d = 1;
    int noise_dim = 1;  ///< columns of sigma
    std::function<Vec(const Vec&)> drift;
    std::function<Mat(const Vec&)> diffusion;  ///< empty means sigma == 0
    JumpKernel jump;
    LevyMeasure levy;
    bool compensate_large = true;

    ClosedForm closed_form = ClosedForm::None;
    double cf_a = 0.0;  ///< drift rate of the closed-form built-ins
    double cf_s = 0.0;  ///< noise scale of the closed-form built-ins

    Vec b(const Vec& x) const;
    Mat sigma(const Vec& x) const;
    Vec c(const Vec& x, const Vec& u) const { return jump(x, u); }
    bool has_diffusion() const { return static_cast<bool>(diffusion); }
    bool has_jumps() const { return !jump.is_zero() && !levy.is_zero(); }
    Mat a(const Vec& x) const;  ///< sigma sigma^T

    /// Throws InvalidArgument if the pieces disagree on dimensions.
    void validate() const;
};

struct GeneratorValue {
    double value = 0.0;
    double drift = 0.0;
    double diffusion = 0.0;
    double jump = 0.0;
    double quad_error = 0.0;
};

/// L f(x) = <Df, b> + 1/2 tr(sigma sigma^T D^2 f) + jump integral.
GeneratorValue apply_generator(const Model& m, const TestFunction& f, const Vec& x,
                               const LevyQuadOptions& opt = {});

/// int_{U0} |c(x,u)|^2 nu(du) (the small part; the large part is added when
/// `whole` is set).
QuadResult jump_second_moment(const Model& m, const Vec& x, bool whole = false, const LevyQuadOptions& opt = {});

/// Continuity probe of x -> int |c(x,u)|^2 nu(du) along random segments.
/// Returns the largest jump of the map between neighbouring grid points
/// divided by the segment step.
double second_moment_continuity_probe(const Model& m, double radius, int n_segments, std::uint64_t seed);

}  // namespace jumpsde
