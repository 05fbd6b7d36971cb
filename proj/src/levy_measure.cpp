#include "jumpsde/levy_measure.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace jumpsde {

double sphere_area(int d) { return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d); }

Vec random_direction(int d, Stream& s) {
    Vec v(d);
    double n2 = 0.0;
    do {
        for (int i = 0; i < d; ++i) v[i] = s.normal();
        n2 = v.squaredNorm();
    } while (n2 == 0.0);
    return v / std::sqrt(n2);
}

namespace {

struct DirectionRule {
    std::vector<Vec> dirs;
    std::vector<double> w;  // averaging weights, sum to 1
};

DirectionRule direction_rule(int d, int angular, bool radial_only) {
    DirectionRule rule;
    if (radial_only) {
        Vec e = Vec::Zero(d);
        e[0] = 1.0;
        rule.dirs.push_back(e);
        rule.w.push_back(1.0);
        return rule;
    }
    if (d == 1) {
        rule.dirs = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
        rule.w = {0.5, 0.5};
    } else if (d == 2) {
        const int n = std::max(4, 2 * angular);
        for (int k = 0; k < n; ++k) {
            const double a = 2.0 * M_PI * (k + 0.5) / n;
            Vec v(2);
            v << std::cos(a), std::sin(a);
            rule.dirs.push_back(v);
            rule.w.push_back(1.0 / n);
        }
    } else if (d == 3) {
        const int nt = std::max(2, angular / 4);
        const int np = std::max(4, angular / 2);
        std::vector<double> x(nt), wt(nt);
        gauss_legendre(nt, x.data(), wt.data());
        for (int i = 0; i < nt; ++i) {
            const double ct = x[i];
            const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
            for (int k = 0; k < np; ++k) {
                const double a = 2.0 * M_PI * (k + 0.5) / np;
                Vec v(3);
                v << st * std::cos(a), st * std::sin(a), ct;
                rule.dirs.push_back(v);
                rule.w.push_back(0.5 * wt[i] / np);
            }
        }
    } else {
        // antipodal pseudo-random pairs, fixed seed
        Stream s(0x5eed, static_cast<std::uint64_t>(d), Substream::Auxiliary);
        const int n = std::max(16, 4 * angular);
        for (int k = 0; k < n; ++k) {
            Vec v = random_direction(d, s);
            rule.dirs.push_back(v);
            rule.dirs.push_back(-v);
            rule.w.push_back(0.5 / n);
            rule.w.push_back(0.5 / n);
        }
    }
    return rule;
}

// Mass of the power-law radial measure on (a, b].
double power_mass(const RadialDensity& r, double a, double b) {
    const double c = sphere_area(r.dim) * r.scale;
    const double al = r.alpha;
    if (al == 0.0) {
        if (a == 0.0 || std::isinf(b)) return kInf;
        return c * std::log(b / a);
    }
    const double fa = (a == 0.0) ? (al > 0 ? kInf : 0.0) : std::pow(a, -al);
    const double fb = std::isinf(b) ? (al > 0 ? 0.0 : kInf) : std::pow(b, -al);
    if (std::isinf(fa) || std::isinf(fb)) return kInf;
    return c * (fa - fb) / al;
}

// Inverse of the normalized power-law radial CDF on (a, b].
double power_quantile(double alpha, double a, double b, double u) {
    if (alpha == 0.0) return a * std::pow(b / a, u);
    const double fa = (a == 0.0) ? 0.0 : std::pow(a, -alpha);
    const double fb = std::isinf(b) ? 0.0 : std::pow(b, -alpha);
    return std::pow(fa - u * (fa - fb), -1.0 / alpha);
}

}  // namespace

double power_law_quantile(double alpha, double a, double b, double u) { return power_quantile(alpha, a, b, u); }

Vec direction_from_uniforms(int d, const double* u) {
    Vec v(d);
    if (d == 1) {
        v[0] = u[0] < 0.5 ? -1.0 : 1.0;
    } else if (d == 2) {
        const double a = 2.0 * M_PI * u[0];
        v << std::cos(a), std::sin(a);
    } else if (d == 3) {
        const double z = 2.0 * u[0] - 1.0;
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = 2.0 * M_PI * u[1];
        v << s * std::cos(a), s * std::sin(a), z;
    } else {
        for (int i = 0; i < d; ++i) v[i] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u[i] - 1.0);
        const double n = v.norm();
        if (n == 0.0) return Vec::Unit(d, 0);
        v /= n;
    }
    return v;
}

namespace {

bool in_window(double r, double lo, double hi) { return r > lo && r <= hi; }

// Axis breakpoints refined geometrically toward 0 when 0 lies in [lo, hi].
std::vector<double> axis_breaks(double lo, double hi, int levels) {
    std::vector<double> b = {lo, hi};
    if (lo < 0.0 && hi > 0.0) b.push_back(0.0);
    const double h = std::max(std::abs(lo), std::abs(hi));
    for (int k = 1; k <= levels; ++k) {
        const double p = h * std::ldexp(1.0, -k);
        if (p < hi && p > lo) b.push_back(p);
        if (-p < hi && -p > lo) b.push_back(-p);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

// Distance range from the origin to the points of an axis-aligned cell.
std::pair<double, double> cell_radii(const Vec& a, const Vec& b) {
    double near = 0.0, far = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const double lo = std::min(std::abs(a[i]), std::abs(b[i]));
        const double hi = std::max(std::abs(a[i]), std::abs(b[i]));
        if (a[i] > 0.0 || b[i] < 0.0) near += lo * lo;
        far += hi * hi;
    }
    return {std::sqrt(near), std::sqrt(far)};
}

// Tensor Gauss-Legendre on one cell; f already carries the window indicator.
double cell_gl(const Vec& a, const Vec& b, const std::function<double(const Vec&)>& f, const double* x,
               const double* w, int n) {
    const int d = static_cast<int>(a.size());
    std::vector<int> idx(d, 0);
    Vec u(d);
    double total = 0.0;
    while (true) {
        double wt = 1.0;
        for (int i = 0; i < d; ++i) {
            const double h = 0.5 * (b[i] - a[i]);
            u[i] = a[i] + h * (1.0 + x[idx[i]]);
            wt *= h * w[idx[i]];
        }
        total += wt * f(u);
        int i = 0;
        while (i < d && ++idx[i] == n) idx[i++] = 0;
        if (i == d) break;
    }
    return total;
}

// Cells cut by the window boundary are bisected along every axis until
// `depth` runs out; the remaining cut cells count toward the error.
void refine_cell(const Vec& a, const Vec& b, double wlo, double whi, int depth,
                 const std::function<double(const Vec&)>& f, const double* x, const double* w, int n,
                 QuadResult& q) {
    const auto [near, far] = cell_radii(a, b);
    if (far <= wlo || near > whi) return;
    const bool cut = near <= wlo || far > whi;
    if (!cut || depth == 0) {
        const double v = cell_gl(a, b, f, x, w, n);
        q.value += v;
        if (cut) q.error += std::abs(v);
        return;
    }
    const int d = static_cast<int>(a.size());
    Vec lo(d), hi(d);
    for (long m = 0; m < (1L << d); ++m) {
        for (int i = 0; i < d; ++i) {
            const double mid = 0.5 * (a[i] + b[i]);
            lo[i] = (m >> i) & 1 ? mid : a[i];
            hi[i] = (m >> i) & 1 ? b[i] : mid;
        }
        refine_cell(lo, hi, wlo, whi, depth - 1, f, x, w, n, q);
    }
}

int box_levels(int d) { return d <= 2 ? 10 : (d == 3 ? 5 : 2); }
int box_refine_depth(int d) { return d <= 2 ? 9 : (d == 3 ? 4 : 1); }

}  // namespace

LevyMeasure LevyMeasure::zero(int dim) {
    RadialDensity r;
    r.dim = dim;
    r.power_law = true;
    r.scale = 0.0;
    r.label = "zero";
    return LevyMeasure{Desc{r}};
}

LevyMeasure LevyMeasure::power_law(int dim, double alpha, double r_lo, double r_hi, double scale) {
    RadialDensity r;
    r.dim = dim;
    r.power_law = true;
    r.alpha = alpha;
    r.scale = scale;
    r.label = "power_law";
    LevyMeasure m{Desc{r}};
    m.lo_ = r_lo;
    m.hi_ = r_hi;
    return m;
}

LevyMeasure LevyMeasure::radial(int dim, std::function<double(double)> g, double r_lo, double r_hi,
                                std::string label) {
    RadialDensity r;
    r.dim = dim;
    r.g = std::move(g);
    r.label = std::move(label);
    LevyMeasure m{Desc{r}};
    m.lo_ = r_lo;
    m.hi_ = r_hi;
    return m;
}

LevyMeasure LevyMeasure::uniform_ball(int dim, double radius, double total_mass) {
    const double vol = sphere_area(dim) * std::pow(radius, dim) / dim;
    LevyMeasure m = power_law(dim, -static_cast<double>(dim), 0.0, radius, total_mass / vol);
    std::get<RadialDensity>(m.desc_).label = "uniform_ball";
    return m;
}

LevyMeasure LevyMeasure::atoms(std::vector<Vec> points, std::vector<double> masses) {
    if (points.size() != masses.size()) throw InvalidArgument("atoms: points and masses differ in length");
    for (double w : masses) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("atoms: masses must be finite and >= 0");
    }
    if (!points.empty()) {
        for (const Vec& p : points) {
            if (p.size() != points[0].size()) throw InvalidArgument("atoms: inconsistent dimensions");
        }
    }
    return LevyMeasure{Desc{AtomList{std::move(points), std::move(masses)}}};
}

LevyMeasure LevyMeasure::product_slab(double length) {
    LevyMeasure m{Desc{ProductSlab{length}}};
    m.threshold_ = 0.0;  // finite mass: everything counts as large
    return m;
}

LevyMeasure LevyMeasure::box_density(Vec lo, Vec hi, std::function<double(const Vec&)> density) {
    if (lo.size() != hi.size()) throw InvalidArgument("box_density: bounds differ in dimension");
    return LevyMeasure{Desc{BoxDensity{std::move(lo), std::move(hi), std::move(density)}}};
}

int LevyMeasure::mark_dim() const {
    return std::visit(
        [](const auto& d) -> int {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, RadialDensity>) {
                return d.dim;
            } else if constexpr (std::is_same_v<T, AtomList>) {
                return d.points.empty() ? 1 : static_cast<int>(d.points[0].size());
            } else if constexpr (std::is_same_v<T, ProductSlab>) {
                return 2;
            } else {
                return static_cast<int>(d.lo.size());
            }
        },
        desc_);
}

bool LevyMeasure::is_zero() const {
    if (hi_ <= lo_) return true;
    if (auto* r = std::get_if<RadialDensity>(&desc_)) return r->power_law && r->scale == 0.0;
    if (auto* a = std::get_if<AtomList>(&desc_)) {
        for (std::size_t i = 0; i < a->points.size(); ++i) {
            if (a->masses[i] > 0.0 && in_window(a->points[i].norm(), lo_, hi_)) return false;
        }
        return true;
    }
    return false;
}

std::string LevyMeasure::describe() const {
    std::ostringstream os;
    std::visit(
        [&os](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, RadialDensity>) {
                os << d.label << "(dim=" << d.dim;
                if (d.power_law) os << ", alpha=" << d.alpha << ", scale=" << d.scale;
                os << ")";
            } else if constexpr (std::is_same_v<T, AtomList>) {
                os << "atoms(n=" << d.points.size() << ")";
            } else if constexpr (std::is_same_v<T, ProductSlab>) {
                os << "product_slab(length=" << d.length << ")";
            } else {
                os << "box_density(dim=" << d.lo.size() << ")";
            }
        },
        desc_);
    os << " window=(" << lo_ << ", " << hi_ << "] split=" << threshold_;
    return os.str();
}

LevyMeasure LevyMeasure::with_threshold(double t) const {
    LevyMeasure m = *this;
    m.threshold_ = t;
    return m;
}

LevyMeasure LevyMeasure::restrict(double lo, double hi) const {
    LevyMeasure m = *this;
    if (std::holds_alternative<ProductSlab>(desc_)) return m;
    m.lo_ = std::max(lo_, lo);
    m.hi_ = std::min(hi_, hi);
    if (m.hi_ < m.lo_) m.hi_ = m.lo_;
    return m;
}

std::pair<LevyMeasure, LevyMeasure> LevyMeasure::split(double t) const {
    LevyMeasure s = restrict(0.0, t).with_threshold(t);
    LevyMeasure l = restrict(t, kInf).with_threshold(t);
    if (std::isinf(l.mass())) {
        throw InfiniteLargeMass("nu(|u| > " + std::to_string(t) + ") is infinite for " + describe());
    }
    return {s, l};
}

double LevyMeasure::mass() const {
    if (hi_ <= lo_) return 0.0;
    return std::visit(
        [this](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, RadialDensity>) {
                if (d.power_law) return d.scale == 0.0 ? 0.0 : power_mass(d, lo_, hi_);
                try {
                    return integrate_radius([](double) { return 1.0; }).value;
                } catch (const QuadratureDivergence&) {
                    return kInf;
                }
            } else if constexpr (std::is_same_v<T, AtomList>) {
                double s = 0.0;
                for (std::size_t i = 0; i < d.points.size(); ++i) {
                    if (in_window(d.points[i].norm(), lo_, hi_)) s += d.masses[i];
                }
                return s;
            } else if constexpr (std::is_same_v<T, ProductSlab>) {
                return d.length;
            } else {
                return integrate([](const Vec&) { return 1.0; }).value;
            }
        },
        desc_);
}

double LevyMeasure::large_mass() const {
    const double m = large().mass();
    if (std::isinf(m)) throw InfiniteLargeMass("infinite mass beyond split radius " + std::to_string(threshold_));
    return m;
}

double LevyMeasure::radial_mass_density(double r) const {
    const auto* d = std::get_if<RadialDensity>(&desc_);
    if (!d) throw InvalidArgument("radial_mass_density needs a radial measure");
    if (!in_window(r, lo_, hi_)) return 0.0;
    if (d->power_law) return sphere_area(d->dim) * d->scale * std::pow(r, -1.0 - d->alpha);
    return sphere_area(d->dim) * std::pow(r, d->dim - 1) * d->g(r);
}

QuadResult LevyMeasure::integrate_radius(const std::function<double(double)>& f, const QuadOptions& opt) const {
    if (hi_ <= lo_) return {};
    if (const auto* d = std::get_if<RadialDensity>(&desc_)) {
        if (d->power_law && d->scale == 0.0) return {};
        const auto m = [this, &f](double r) { return radial_mass_density(r) * f(r); };
        return integrate_dyadic(m, lo_, hi_, opt);
    }
    return integrate([&f](const Vec& u) { return f(u.norm()); });
}

QuadResult LevyMeasure::integrate(const std::function<double(const Vec&)>& f, bool radial_only,
                                  const LevyQuadOptions& opt) const {
    if (hi_ <= lo_) return {};
    return std::visit(
        [&](const auto& d) -> QuadResult {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, RadialDensity>) {
                if (d.power_law && d.scale == 0.0) return {};
                const DirectionRule rule = direction_rule(d.dim, opt.angular, radial_only);
                const auto inner = [&](double r) {
                    double avg = 0.0;
                    for (std::size_t k = 0; k < rule.dirs.size(); ++k) avg += rule.w[k] * f(r * rule.dirs[k]);
                    return radial_mass_density(r) * avg;
                };
                return integrate_dyadic(inner, lo_, hi_, opt.radial);
            } else if constexpr (std::is_same_v<T, AtomList>) {
                QuadResult q;
                for (std::size_t i = 0; i < d.points.size(); ++i) {
                    if (in_window(d.points[i].norm(), lo_, hi_)) q.value += d.masses[i] * f(d.points[i]);
                }
                return q;
            } else if constexpr (std::is_same_v<T, ProductSlab>) {
                const int n = 16;
                std::vector<double> x(n), w(n);
                gauss_legendre(n, x.data(), w.data());
                QuadResult q;
                Vec u(2);
                const int cells = static_cast<int>(std::ceil(d.length));
                for (int k = 0; k < cells; ++k) {
                    const double a = k;
                    const double b = std::min(d.length, k + 1.0);
                    for (int i = 0; i < n; ++i) {
                        u[0] = 0.5 * (a + b) + 0.5 * (b - a) * x[i];
                        for (int j = 0; j < n; ++j) {
                            u[1] = 0.5 + 0.5 * x[j];
                            q.value += 0.25 * (b - a) * w[i] * w[j] * f(u);
                        }
                    }
                }
                return q;
            } else {
                const int dim = static_cast<int>(d.lo.size());
                std::vector<std::vector<double>> br(dim);
                for (int i = 0; i < dim; ++i) br[i] = axis_breaks(d.lo[i], d.hi[i], box_levels(dim));
                const int n = 6;
                double x[n], w[n];
                gauss_legendre(n, x, w);
                const auto g = [&](const Vec& u) {
                    return in_window(u.norm(), lo_, hi_) ? d.density(u) * f(u) : 0.0;
                };
                QuadResult q;
                std::vector<std::size_t> idx(dim, 0);
                Vec a(dim), b(dim);
                while (true) {
                    for (int i = 0; i < dim; ++i) {
                        a[i] = br[i][idx[i]];
                        b[i] = br[i][idx[i] + 1];
                    }
                    refine_cell(a, b, lo_, hi_, box_refine_depth(dim), g, x, w, n, q);
                    int i = 0;
                    while (i < dim && ++idx[i] + 1 == br[i].size()) idx[i++] = 0;
                    if (i == dim) break;
                }
                if (!std::isfinite(q.value)) throw QuadratureDivergence("box density integral is not finite");
                return q;
            }
        },
        desc_);
}

Vec LevyMeasure::integrate_vec(const std::function<Vec(const Vec&)>& f, int out_dim, bool radial_only,
                               const LevyQuadOptions& opt) const {
    Vec out(out_dim);
    for (int i = 0; i < out_dim; ++i) {
        out[i] = integrate([&f, i](const Vec& u) { return f(u)[i]; }, radial_only, opt).value;
    }
    return out;
}

double LevyMeasure::levy_moment() const {
    return integrate_radius([](double r) { return std::min(1.0, r * r); }).value;
}

// ---------------------------------------------------------------------------

MarkSampler::MarkSampler(const LevyMeasure& m) : m_(m) {
    mass_ = m.is_zero() ? 0.0 : m.mass();
    if (std::isinf(mass_)) throw InfiniteLargeMass("cannot sample a window of infinite mass: " + m.describe());
    if (mass_ == 0.0) return;
    const double lo = m.r_lo();
    const double hi = m.r_hi();
    if (const auto* d = std::get_if<RadialDensity>(&m.desc())) {
        if (d->power_law) return;
        // tabulate the cumulative radial mass on 2048 nodes
        double top = hi;
        if (std::isinf(top)) {
            top = std::max(1.0, 2.0 * lo);
            while (m.mass_between(top, kInf) > 1e-13 * mass_) top *= 2.0;
        }
        const int n = 2048;
        r_nodes_.resize(n + 1);
        for (int i = 0; i <= n; ++i) {
            const double s = double(i) / n;
            if (lo > 0.0 && top / lo > 10.0) {
                r_nodes_[i] = lo * std::pow(top / lo, s);
            } else {
                r_nodes_[i] = lo + (top - lo) * s * s;
            }
        }
        cdf_.assign(n + 1, 0.0);
        const auto dens = [&m](double r) { return m.radial_mass_density(r); };
        QuadOptions opt;
        opt.rel_tol = 1e-10;
        for (int i = 1; i <= n; ++i) {
            cdf_[i] = cdf_[i - 1] + integrate_interval(dens, r_nodes_[i - 1], r_nodes_[i], opt).value;
        }
        for (double& c : cdf_) c /= cdf_.back();
        return;
    }
    if (const auto* a = std::get_if<AtomList>(&m.desc())) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a->points.size(); ++i) {
            if (a->masses[i] > 0.0 && in_window(a->points[i].norm(), lo, hi)) {
                acc += a->masses[i];
                atom_cdf_.push_back(acc);
                atom_index_.push_back(static_cast<int>(i));
            }
        }
        for (double& c : atom_cdf_) c /= acc;
        return;
    }
    if (const auto* b = std::get_if<BoxDensity>(&m.desc())) {
        const int dim = static_cast<int>(b->lo.size());
        cells_per_axis_ = dim == 1 ? 256 : dim == 2 ? 64 : dim == 3 ? 16 : 4;
        const long ncell = static_cast<long>(std::pow(cells_per_axis_, dim));
        cell_cdf_.resize(ncell);
        cell_bound_.resize(ncell);
        const int q = 3;
        double xg[3], wg[3];
        gauss_legendre(q, xg, wg);
        Vec u(dim), clo(dim), chi(dim);
        double acc = 0.0;
        for (long c = 0; c < ncell; ++c) {
            long rem = c;
            for (int i = 0; i < dim; ++i) {
                const int k = static_cast<int>(rem % cells_per_axis_);
                rem /= cells_per_axis_;
                const double h = (b->hi[i] - b->lo[i]) / cells_per_axis_;
                clo[i] = b->lo[i] + k * h;
                chi[i] = clo[i] + h;
            }
            double cm = 0.0, bound = 0.0;
            const long nq = static_cast<long>(std::pow(q, dim));
            for (long j = 0; j < nq; ++j) {
                long r2 = j;
                double w = 1.0;
                for (int i = 0; i < dim; ++i) {
                    const int k = static_cast<int>(r2 % q);
                    r2 /= q;
                    const double h = 0.5 * (chi[i] - clo[i]);
                    u[i] = clo[i] + h * (1.0 + xg[k]);
                    w *= h * wg[k];
                }
                const double v = in_window(u.norm(), lo, hi) ? b->density(u) : 0.0;
                cm += w * v;
                bound = std::max(bound, v);
            }
            acc += cm;
            cell_cdf_[c] = acc;
            cell_bound_[c] = 2.0 * bound;
        }
        for (double& c : cell_cdf_) c /= acc;
    }
}

double MarkSampler::sample_radius(double u) const {
    const auto* d = std::get_if<RadialDensity>(&m_.desc());
    if (!d) throw InvalidArgument("sample_radius needs a radial measure");
    if (d->power_law) return power_quantile(d->alpha, m_.r_lo(), m_.r_hi(), u);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t i = std::clamp<std::size_t>(it - cdf_.begin(), 1, cdf_.size() - 1);
    const double c0 = cdf_[i - 1], c1 = cdf_[i];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return r_nodes_[i - 1] + t * (r_nodes_[i] - r_nodes_[i - 1]);
}

Vec MarkSampler::sample(Stream& s) const {
    if (mass_ == 0.0) throw InvalidArgument("sampling a zero measure");
    if (const auto* d = std::get_if<RadialDensity>(&m_.desc())) {
        const double r = sample_radius(s.uniform());
        return r * random_direction(d->dim, s);
    }
    if (const auto* a = std::get_if<AtomList>(&m_.desc())) {
        const double u = s.uniform();
        const auto it = std::lower_bound(atom_cdf_.begin(), atom_cdf_.end(), u);
        const std::size_t k = std::min<std::size_t>(it - atom_cdf_.begin(), atom_cdf_.size() - 1);
        return a->points[atom_index_[k]];
    }
    if (const auto* p = std::get_if<ProductSlab>(&m_.desc())) {
        Vec u(2);
        u[0] = p->length * s.uniform();
        u[1] = s.uniform();
        return u;
    }
    const auto& b = std::get<BoxDensity>(m_.desc());
    const int dim = static_cast<int>(b.lo.size());
    Vec u(dim);
    for (int attempt = 0;; ++attempt) {
        const double v = s.uniform();
        const auto it = std::lower_bound(cell_cdf_.begin(), cell_cdf_.end(), v);
        long c = std::min<long>(it - cell_cdf_.begin(), static_cast<long>(cell_cdf_.size()) - 1);
        const long cell = c;
        for (int i = 0; i < dim; ++i) {
            const int k = static_cast<int>(c % cells_per_axis_);
            c /= cells_per_axis_;
            const double h = (b.hi[i] - b.lo[i]) / cells_per_axis_;
            u[i] = b.lo[i] + (k + s.uniform()) * h;
        }
        const double dens = in_window(u.norm(), m_.r_lo(), m_.r_hi()) ? b.density(u) : 0.0;
        if (attempt > 1000 || s.uniform() * cell_bound_[cell] <= dens) return u;
    }
}

std::vector<JumpEvent> sample_large_jumps(const LevyMeasure& m, double horizon, Stream& times, Stream& marks) {
    const LevyMeasure large = m.large();
    std::vector<JumpEvent> out;
    if (large.is_zero()) return out;
    const MarkSampler sampler(large);
    const double rate = sampler.mass();
    if (rate == 0.0) return out;
    double t = times.exponential(rate);
    while (t <= horizon) {
        out.push_back({t, sampler.sample(marks)});
        t += times.exponential(rate);
    }
    return out;
}

}  // namespace jumpsde
