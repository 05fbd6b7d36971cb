#include "jumpsde/model.hpp"

#include <cmath>

namespace jumpsde {

JumpKernel JumpKernel::none() { return {}; }

JumpKernel JumpKernel::general(std::function<Vec(const Vec&, const Vec&)> c, bool radial_mark) {
    JumpKernel k;
    k.c = std::move(c);
    k.radial_mark = radial_mark;
    return k;
}

JumpKernel JumpKernel::separable(std::function<Mat(const Vec&)> J, std::function<Vec(const Vec&)> kf, int k_dim,
                                 bool radial_mark) {
    JumpKernel k;
    k.J = std::move(J);
    k.k = std::move(kf);
    k.k_dim = k_dim;
    k.radial_mark = radial_mark;
    k.c = [JJ = k.J, kk = k.k](const Vec& x, const Vec& u) -> Vec { return JJ(x) * kk(u); };
    return k;
}

Vec JumpKernel::operator()(const Vec& x, const Vec& u) const {
    if (!c) return Vec::Zero(x.size());
    return c(x, u);
}

Vec Model::b(const Vec& x) const {
    Vec v = drift ? drift(x) : Vec::Zero(d);
    if (!v.allFinite()) throw NonFinite(name + ": drift is not finite at the probe point");
    return v;
}

Mat Model::sigma(const Vec& x) const {
    if (!diffusion) return Mat::Zero(d, noise_dim);
    Mat s = diffusion(x);
    if (!s.allFinite()) throw NonFinite(name + ": diffusion is not finite at the probe point");
    return s;
}

Mat Model::a(const Vec& x) const {
    const Mat s = sigma(x);
    return s * s.transpose();
}

void Model::validate() const {
    if (d < 1) throw InvalidArgument("model dimension must be >= 1");
    const Vec x = Vec::Zero(d);
    Vec probe = Vec::Constant(d, 0.5);
    if (drift && drift(probe).size() != d) throw InvalidArgument(name + ": drift has the wrong dimension");
    if (diffusion) {
        const Mat s = diffusion(probe);
        if (s.rows() != d || s.cols() != noise_dim) throw InvalidArgument(name + ": diffusion has the wrong shape");
    }
    if (!jump.is_zero() && !levy.is_zero()) {
        Vec u = Vec::Zero(levy.mark_dim());
        u[0] = 0.5 * std::min(1.0, levy.r_hi());
        if (jump(probe, u).size() != d) throw InvalidArgument(name + ": jump amplitude has the wrong dimension");
    }
    (void)x;
}

namespace {

// Jump part of L f at x over one window of nu.
QuadResult jump_part(const Model& m, const LevyMeasure& part, const TestFunction& f, const Vec& x, const Vec& df,
                     double fx, bool compensated, const LevyQuadOptions& opt) {
    if (part.is_zero()) return {};
    const auto g = [&](const Vec& u) {
        const Vec c = m.c(x, u);
        double v = f(x + c) - fx;
        if (compensated) v -= df.dot(c);
        return v;
    };
    return part.integrate(g, m.jump.radial_mark, opt);
}

}  // namespace

GeneratorValue apply_generator(const Model& m, const TestFunction& f, const Vec& x, const LevyQuadOptions& opt) {
    if (!x.allFinite()) throw InvalidArgument("apply_generator: x is not finite");
    GeneratorValue out;
    const Vec df = f.gradient(x);
    out.drift = df.dot(m.b(x));
    if (m.has_diffusion()) {
        const Mat s = m.sigma(x);
        out.diffusion = 0.5 * (s * s.transpose()).cwiseProduct(f.hessian(x)).sum();
    }
    if (m.has_jumps()) {
        const double fx = f(x);
        const QuadResult small = jump_part(m, m.levy.small(), f, x, df, fx, true, opt);
        const QuadResult large = jump_part(m, m.levy.large(), f, x, df, fx, m.compensate_large, opt);
        out.jump = small.value + large.value;
        out.quad_error = small.error + large.error;
        if (!std::isfinite(out.jump)) throw NonFinite(m.name + ": jump integral is not finite");
    }
    out.value = out.drift + out.diffusion + out.jump;
    return out;
}

QuadResult jump_second_moment(const Model& m, const Vec& x, bool whole, const LevyQuadOptions& opt) {
    if (!m.has_jumps()) return {};
    const LevyMeasure part = whole ? m.levy : m.levy.small();
    return part.integrate([&](const Vec& u) { return m.c(x, u).squaredNorm(); }, m.jump.radial_mark, opt);
}

double second_moment_continuity_probe(const Model& m, double radius, int n_segments, std::uint64_t seed) {
    Stream s(seed, 0, Substream::Auxiliary);
    double worst = 0.0;
    const int steps = 16;
    for (int k = 0; k < n_segments; ++k) {
        const Vec a = radius * s.uniform() * random_direction(m.d, s);
        const Vec b = radius * s.uniform() * random_direction(m.d, s);
        const double len = (b - a).norm() / steps;
        if (len == 0.0) continue;
        double prev = jump_second_moment(m, a).value;
        for (int i = 1; i <= steps; ++i) {
            const double v = jump_second_moment(m, a + (b - a) * (double(i) / steps)).value;
            worst = std::max(worst, std::abs(v - prev) / len);
            prev = v;
        }
    }
    return worst;
}

}  // namespace jumpsde
