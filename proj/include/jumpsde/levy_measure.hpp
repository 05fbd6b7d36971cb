#pragma once

#include "jumpsde/quadrature.hpp"
#include "jumpsde/rng.hpp"
#include "jumpsde/types.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace jumpsde {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// nu(du) = g(|u|) du on R^dim. With `alpha` set the density is the power law
/// scale * |u|^-(dim + alpha), and masses and quantiles are closed-form.
struct RadialDensity {
    int dim = 1;
    bool power_law = false;
    double alpha = 0.0;
    double scale = 1.0;
    std::function<double(double)> g;
    std::string label;
};

struct AtomList {
    std::vector<Vec> points;
    std::vector<double> masses;
};

/// Lebesgue measure on [0, length) x [0, 1]; marks are (xi, eta).
struct ProductSlab {
    double length = 1.0;
};

/// User density on an axis-aligned box.
struct BoxDensity {
    Vec lo;
    Vec hi;
    std::function<double(const Vec&)> density;
};

struct LevyQuadOptions {
    QuadOptions radial;
    int angular = 32;  ///< angles in d=2; d=3 uses angular/4 x angular/2
};

/// A sigma-finite measure on the mark space, optionally restricted to a
/// radial window r_lo < |u| <= r_hi, together with the small/large split
/// radius. Immutable; all "modifiers" return copies.
class LevyMeasure {
public:
    using Desc = std::variant<RadialDensity, AtomList, ProductSlab, BoxDensity>;

    LevyMeasure() : LevyMeasure(zero(1)) {}

    static LevyMeasure zero(int dim);
    /// scale * |u|^-(dim+alpha) du on r_lo < |u| <= r_hi.
    static LevyMeasure power_law(int dim, double alpha, double r_lo, double r_hi, double scale = 1.0);
    static LevyMeasure radial(int dim, std::function<double(double)> g, double r_lo, double r_hi,
                              std::string label = "radial");
    /// Uniform density on the ball of the given radius with the given total mass.
    static LevyMeasure uniform_ball(int dim, double radius, double total_mass);
    static LevyMeasure atoms(std::vector<Vec> points, std::vector<double> masses);
    static LevyMeasure product_slab(double length);
    static LevyMeasure box_density(Vec lo, Vec hi, std::function<double(const Vec&)> density);

    const Desc& desc() const { return desc_; }
    int mark_dim() const;
    double r_lo() const { return lo_; }
    double r_hi() const { return hi_; }
    double threshold() const { return threshold_; }
    bool is_zero() const;
    bool is_radial() const { return std::holds_alternative<RadialDensity>(desc_); }
    std::string describe() const;

    LevyMeasure with_threshold(double t) const;
    /// Intersect the radial window with (lo, hi].
    LevyMeasure restrict(double lo, double hi) const;
    /// (nu restricted to |u| <= t, nu restricted to |u| > t). Throws
    /// InfiniteLargeMass when the second part has infinite mass.
    std::pair<LevyMeasure, LevyMeasure> split(double t) const;
    LevyMeasure small() const { return restrict(0.0, threshold_); }
    LevyMeasure large() const { return restrict(threshold_, kInf); }

    /// Total mass inside the window; +inf when it is not finite.
    double mass() const;
    /// Mass of r0 < |u| <= r1 (intersected with the window).
    double mass_between(double r0, double r1) const { return restrict(r0, r1).mass(); }
    /// nu(U \ U0) for the current split; throws InfiniteLargeMass if infinite.
    double large_mass() const;

    /// int f(u) nu(du) over the window. With radial_only the integrand is
    /// assumed to depend on |u| alone and a single direction is used.
    QuadResult integrate(const std::function<double(const Vec&)>& f, bool radial_only = false,
                         const LevyQuadOptions& opt = {}) const;
    /// int f(|u|) nu(du).
    QuadResult integrate_radius(const std::function<double(double)>& f, const QuadOptions& opt = {}) const;
    /// Componentwise vector integral.
    Vec integrate_vec(const std::function<Vec(const Vec&)>& f, int out_dim, bool radial_only = false,
                      const LevyQuadOptions& opt = {}) const;

    /// int (1 ^ |u|^2) nu(du); finite for a Levy measure.
    double levy_moment() const;

    /// Radial mass density m(r) with nu(r < |u| <= r + dr) = m(r) dr, for
    /// radial descriptions.
    double radial_mass_density(double r) const;

private:
    explicit LevyMeasure(Desc d) : desc_(std::move(d)) {}

    Desc desc_;
    double lo_ = 0.0;
    double hi_ = kInf;
    double threshold_ = 1.0;
};

/// Unit-sphere surface area in R^d.
double sphere_area(int d);

/// Uniform direction on S^{d-1} from normals.
Vec random_direction(int d, Stream& s);
/// Uniform direction on S^{d-1} from d-1 (d = 1..3) or d (d > 3) uniforms.
Vec direction_from_uniforms(int d, const double* u);
/// Inverse of the normalized radial CDF of r^-(1+alpha) dr on (a, b].
double power_law_quantile(double alpha, double a, double b, double u);

/// Draws marks from nu restricted to its window, normalized by the mass.
/// The window must have finite mass.
class MarkSampler {
public:
    explicit MarkSampler(const LevyMeasure& m);
    double mass() const { return mass_; }
    Vec sample(Stream& s) const;
    /// Radius with the radial law of the window (radial descriptions only).
    double sample_radius(double u) const;

private:
    LevyMeasure m_;
    double mass_ = 0.0;
    // radial: tabulated cumulative mass for non power-law densities
    std::vector<double> r_nodes_;
    std::vector<double> cdf_;
    // atoms
    std::vector<double> atom_cdf_;
    std::vector<int> atom_index_;
    // box density: cell grid with per-cell mass and density bound
    std::vector<double> cell_cdf_;
    std::vector<double> cell_bound_;
    int cells_per_axis_ = 0;
};

/// Poisson arrivals of the large-jump part on [0, T].
struct JumpEvent {
    double time;
    Vec mark;
};
std::vector<JumpEvent> sample_large_jumps(const LevyMeasure& m, double horizon, Stream& times, Stream& marks);

}  // namespace jumpsde
