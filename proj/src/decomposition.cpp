#include "jumpsde/decomposition.hpp"

#include "jumpsde/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace jumpsde {

namespace {

// k roughly independent uniforms from the binary digits of v in [0, 1):
// digit j goes to output j mod k.
void split_uniforms(double v, int k, double* out) {
    const auto bits = static_cast<std::uint64_t>(std::ldexp(v, 52));
    const int per = 52 / k;
    for (int i = 0; i < k; ++i) {
        std::uint64_t w = 0;
        for (int j = 0; j < per; ++j) w |= ((bits >> (51 - (j * k + i))) & 1u) << (per - 1 - j);
        out[i] = (static_cast<double>(w) + 0.5) * std::ldexp(1.0, -per);
    }
}

int direction_uniforms(int d) { return d <= 3 ? std::max(1, d - 1) : d; }

}  // namespace

double KernelDecomposition::AtState::Radial::quantile(double q) const {
    q = std::clamp(q, 0.0, total);
    if (closed_form) return power_law_quantile(alpha, lo, hi, q / total);
    const auto it = std::lower_bound(cum.begin(), cum.end(), q);
    const std::size_t i = std::clamp<std::size_t>(it - cum.begin(), 1, cum.size() - 1);
    const double c0 = cum[i - 1], c1 = cum[i];
    const double t = c1 > c0 ? (q - c0) / (c1 - c0) : 0.5;
    return r[i - 1] + t * (r[i] - r[i - 1]);
}

double KernelDecomposition::AtState::lambda(double xi) const {
    if (!(xi >= 0.0)) return 0.0;
    const auto k = static_cast<std::size_t>(xi);
    return k < slabs_.size() ? slabs_[k].mass : 0.0;
}

Vec KernelDecomposition::AtState::gamma(double xi) const {
    if (!(xi >= 0.0) || static_cast<std::size_t>(xi) >= slabs_.size()) return Vec::Zero(dim_);
    const Slab& s = slabs_[static_cast<std::size_t>(xi)];
    if (s.atom) return s.point;
    const int nd = direction_uniforms(dim_);
    double u[64];
    split_uniforms(xi - std::floor(xi), 1 + nd, u);
    const Radial& rad = radial_[s.component];
    const double r = rad.quantile(s.m0 + u[0] * s.mass);
    return r * direction_from_uniforms(dim_, u + 1);
}

Vec KernelDecomposition::AtState::c(const Vec& u) const {
    if (u.size() != 2) throw InvalidArgument("decomposition marks are (xi, eta)");
    if (u[1] > lambda(u[0])) return Vec::Zero(dim_);
    return gamma(u[0]);
}

KernelDecomposition::KernelDecomposition(int dim, StateKernel nu, DecompositionOptions opt)
    : dim_(dim), nu_(std::move(nu)), opt_(opt) {
    if (dim < 1 || dim > 60) throw InvalidArgument("decomposition dimension out of range");
    if (!nu_) throw InvalidArgument("decomposition needs a kernel");
    if (opt_.max_slabs < 1) throw InvalidArgument("max_slabs must be positive");
}

KernelDecomposition::AtState KernelDecomposition::at(const Vec& x) const {
    AtState st;
    st.dim_ = dim_;
    const std::vector<LevyMeasure> parts = nu_(x);
    for (const LevyMeasure& part : parts) {
        if (part.is_zero()) continue;
        if (const auto* a = std::get_if<AtomList>(&part.desc())) {
            for (std::size_t i = 0; i < a->points.size(); ++i) {
                const double r = a->points[i].norm();
                if (a->masses[i] <= 0.0 || r == 0.0 || r <= part.r_lo() || r > part.r_hi()) continue;
                if (a->points[i].size() != dim_) throw InvalidArgument("atom dimension does not match the state");
                if (a->masses[i] > 1.0 + 1e-12) {
                    throw SliceMassOverflow("atom of mass " + std::to_string(a->masses[i]) +
                                            " cannot be cut into sets of mass <= 1");
                }
                Slab s;
                s.atom = true;
                s.point = a->points[i];
                s.mass = std::min(1.0, a->masses[i]);
                st.slabs_.push_back(std::move(s));
            }
            continue;
        }
        const auto* d = std::get_if<RadialDensity>(&part.desc());
        if (!d) throw InvalidArgument("state kernels must be radial densities or atom lists");
        if (d->dim != dim_) throw InvalidArgument("radial density dimension does not match the state");

        LevyMeasure m = part;
        if (std::isinf(m.mass())) {
            if (opt_.truncation > 0.0) m = m.restrict(opt_.truncation, kInf);
            if (std::isinf(m.mass())) {
                throw SliceMassOverflow("nu(x, .) has infinite mass that no finite partition into mass-1 sets covers; "
                                        "set a truncation radius");
            }
        }
        AtState::Radial rad;
        rad.m = m;
        rad.lo = m.r_lo();
        rad.hi = m.r_hi();
        rad.total = m.mass();
        if (rad.total <= 0.0) continue;
        rad.closed_form = d->power_law;
        rad.alpha = d->alpha;
        double top = rad.hi;
        if (!rad.closed_form) {
            if (std::isinf(top)) {
                top = std::max(1.0, 2.0 * rad.lo);
                while (m.mass_between(top, kInf) > 1e-13 * rad.total) top *= 2.0;
            }
            const int n = opt_.table_nodes;
            rad.r.resize(n + 1);
            for (int i = 0; i <= n; ++i) {
                const double s = double(i) / n;
                rad.r[i] = (rad.lo > 0.0 && top / rad.lo > 10.0) ? rad.lo * std::pow(top / rad.lo, s)
                                                                 : rad.lo + (top - rad.lo) * s * s;
            }
            rad.cum.assign(n + 1, 0.0);
            const auto dens = [&m](double r) { return m.radial_mass_density(r); };
            for (int i = 1; i <= n; ++i) {
                rad.cum[i] = rad.cum[i - 1] + integrate_interval(dens, rad.r[i - 1], rad.r[i]).value;
            }
            rad.total = rad.cum.back();
        }
        const auto cum_at = [&](double r) {
            if (r <= rad.lo) return 0.0;
            if (r >= rad.hi) return rad.total;
            if (rad.closed_form) return m.mass_between(rad.lo, r);
            if (r >= rad.r.back()) return rad.total;
            const auto it = std::upper_bound(rad.r.begin(), rad.r.end(), r);
            const std::size_t i = it - rad.r.begin();
            const double t = (r - rad.r[i - 1]) / (rad.r[i] - rad.r[i - 1]);
            return rad.cum[i - 1] + t * (rad.cum[i] - rad.cum[i - 1]);
        };

        // geometric annuli: halving inward from the outer radius (or from 1
        // when unbounded), doubling outward until the tail has mass <= 1
        std::vector<double> b;
        const double start = std::isinf(rad.hi) ? std::max(1.0, 2.0 * rad.lo) : rad.hi;
        b.push_back(start);
        for (double r = start / 2; r > rad.lo && b.size() < 200; r /= 2) b.push_back(r);
        b.push_back(rad.lo);
        std::reverse(b.begin(), b.end());
        if (std::isinf(rad.hi)) {
            double r = start;
            while (rad.total - cum_at(r) > 1.0) {
                r *= 2;
                b.push_back(r);
            }
            b.push_back(kInf);
        }
        const int comp = static_cast<int>(st.radial_.size());
        for (std::size_t i = 0; i + 1 < b.size(); ++i) {
            const double c0 = cum_at(b[i]);
            const double c1 = std::isinf(b[i + 1]) ? rad.total : cum_at(b[i + 1]);
            const double mi = c1 - c0;
            if (mi <= 0.0) continue;
            const int pieces = static_cast<int>(std::ceil(mi - 1e-12));
            if (static_cast<long>(st.slabs_.size()) + pieces > opt_.max_slabs) {
                throw SliceMassOverflow("partition of nu(x, .) needs more than " + std::to_string(opt_.max_slabs) +
                                        " slabs of mass <= 1");
            }
            for (int j = 0; j < pieces; ++j) {
                Slab s;
                s.component = comp;
                s.m0 = c0 + j * mi / pieces;
                s.mass = mi / pieces;
                st.slabs_.push_back(std::move(s));
            }
        }
        st.radial_.push_back(std::move(rad));
    }
    if (static_cast<long>(st.slabs_.size()) > opt_.max_slabs) {
        throw SliceMassOverflow("partition of nu(x, .) needs more than " + std::to_string(opt_.max_slabs) + " slabs");
    }
    return st;
}

Vec KernelDecomposition::first_moment(const Vec& x) const {
    Vec out = Vec::Zero(dim_);
    for (const LevyMeasure& part : nu_(x)) {
        if (const auto* a = std::get_if<AtomList>(&part.desc())) {
            for (std::size_t i = 0; i < a->points.size(); ++i) {
                const double r = a->points[i].norm();
                if (r > 0.0 && r > part.r_lo() && r <= part.r_hi()) out += a->masses[i] * a->points[i];
            }
        }
        // radial densities are symmetric: no first moment
    }
    return out;
}

double KernelDecomposition::second_moment(const Vec& x) const {
    double out = 0.0;
    for (const LevyMeasure& part : nu_(x)) {
        if (part.is_zero()) continue;
        if (const auto* a = std::get_if<AtomList>(&part.desc())) {
            for (std::size_t i = 0; i < a->points.size(); ++i) {
                const double r = a->points[i].norm();
                if (r > 0.0 && r > part.r_lo() && r <= part.r_hi()) out += a->masses[i] * r * r;
            }
            continue;
        }
        LevyMeasure m = part;
        if (std::isinf(m.mass()) && opt_.truncation > 0.0) m = m.restrict(opt_.truncation, kInf);
        out += m.integrate_radius([](double r) { return r * r; }).value;
    }
    return out;
}

LevyMeasure KernelDecomposition::mark_measure() const {
    return LevyMeasure::product_slab(opt_.max_slabs).with_threshold(0.0);
}

std::shared_ptr<const KernelDecomposition> build_decomposition(int dim, StateKernel nu, DecompositionOptions opt) {
    return std::make_shared<const KernelDecomposition>(dim, std::move(nu), opt);
}

Model decomposition_model(std::string name, int d, std::function<Vec(const Vec&)> drift,
                          std::function<Mat(const Vec&)> diffusion,
                          std::shared_ptr<const KernelDecomposition> dec) {
    if (!dec || dec->dim() != d) throw InvalidArgument("decomposition dimension does not match the model");
    Model m;
    m.name = std::move(name);
    m.origin = "state-dependent kernel via slab decomposition";
    m.d = d;
    m.noise_dim = d;
    m.drift = [b = std::move(drift), dec, d](const Vec& x) -> Vec {
        Vec v = b ? b(x) : Vec::Zero(d);
        return v - dec->first_moment(x);
    };
    m.diffusion = std::move(diffusion);
    m.jump = JumpKernel::general([dec](const Vec& x, const Vec& u) { return dec->c(x, u); });
    m.levy = dec->mark_measure();
    m.compensate_large = false;
    m.validate();
    return m;
}

Model levy_ito_model(int d, std::function<Mat(const Vec&)> psi, const Vec& b, const Mat& Q, const LevyMeasure& nu,
                     double tol) {
    if (b.size() != d || Q.rows() != d || Q.cols() != d) throw InvalidArgument("Levy triplet dimension mismatch");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
        throw InvalidArgument("Q must be symmetric");
    }
    const Mat s = sqrt_spd(Q, tol);
    if (!psi) psi = [d](const Vec&) -> Mat { return Mat::Identity(d, d); };
    Model m;
    m.name = "levy-driven";
    m.origin = "dX = psi(X-) dL";
    m.d = d;
    m.noise_dim = d;
    m.drift = [psi, b](const Vec& x) -> Vec { return psi(x) * b; };
    if (!Q.isZero(0.0)) m.diffusion = [psi, s](const Vec& x) -> Mat { return psi(x) * s; };
    if (!nu.is_zero()) {
        if (nu.mark_dim() != d) throw InvalidArgument("Levy measure must live on R^d");
        m.jump = JumpKernel::separable(psi, [](const Vec& u) { return u; }, d);
        m.levy = nu.with_threshold(1.0);
    } else {
        m.levy = LevyMeasure::zero(d);
    }
    m.compensate_large = false;
    m.validate();
    return m;
}

}  // namespace jumpsde
