#include "jumpsde/coupling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace jumpsde {

Mat sqrt_spd(const Mat& a, double tol) {
    if (a.rows() != a.cols()) throw InvalidArgument("sqrt_spd needs a square matrix");
    const Mat s = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    if (es.info() != Eigen::Success) throw NotPSD("eigendecomposition failed");
    Vec ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "matrix has eigenvalue %.6g < -%.3g", ev[i], tol);
            throw NotPSD(buf);
        }
        ev[i] = std::sqrt(std::max(0.0, ev[i]));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

const char* to_string(CouplingKind k) { return k == CouplingKind::Synchronous ? "synchronous" : "reflection"; }

CouplingKind coupling_from_string(const std::string& s) {
    if (s == "synchronous" || s == "basic" || s == "sync") return CouplingKind::Synchronous;
    if (s == "reflection") return CouplingKind::Reflection;
    throw InvalidArgument("unknown coupling '" + s + "' (synchronous, reflection)");
}

Vec CoupledEnsemble::x_end(long i) const {
    const std::size_t nt = cfg.store == StoreMode::Full ? times.size() : 1;
    return Eigen::Map<const Vec>(x_states.data() + (i * nt + nt - 1) * d, d);
}

Vec CoupledEnsemble::z_end(long i) const {
    const std::size_t nt = cfg.store == StoreMode::Full ? times.size() : 1;
    return Eigen::Map<const Vec>(z_states.data() + (i * nt + nt - 1) * d, d);
}

namespace {

Mat reflected_sigma(const Model& m, const Vec& x, double lambda0) {
    const Mat a = m.a(x) - lambda0 * Mat::Identity(m.d, m.d);
    return sqrt_spd(a, 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()));
}

Mat mirror(const Vec& e) { return Mat::Identity(e.size(), e.size()) - 2.0 * e * e.transpose(); }

}  // namespace

Vec pair_diffusion_increment(const Model& m, const CouplingScheme& scheme, const Vec& x, const Vec& z, const Vec& w1,
                             const Vec& w2) {
    const int d = m.d;
    Vec out = Vec::Zero(2 * d);
    if (!m.has_diffusion()) return out;
    if (scheme.kind == CouplingKind::Synchronous) {
        out.head(d) = m.sigma(x) * w1;
        out.tail(d) = m.sigma(z) * w1;
        return out;
    }
    const double r = (x - z).norm();
    const Vec e = r > 0.0 ? Vec((x - z) / r) : Vec::Unit(d, 0);
    const double sl = std::sqrt(scheme.lambda0);
    out.head(d) = sl * w1 + reflected_sigma(m, x, scheme.lambda0) * w2;
    out.tail(d) = sl * (mirror(e) * w1) + reflected_sigma(m, z, scheme.lambda0) * w2;
    return out;
}

Mat pair_diffusion_matrix(const Model& m, const CouplingScheme& scheme, const Vec& x, const Vec& z) {
    const int d = m.d;
    Mat A = Mat::Zero(2 * d, 2 * d);
    if (!m.has_diffusion()) return A;
    A.topLeftCorner(d, d) = m.a(x);
    A.bottomRightCorner(d, d) = m.a(z);
    Mat g;
    if (scheme.kind == CouplingKind::Synchronous) {
        g = m.sigma(x) * m.sigma(z).transpose();
    } else {
        const double r = (x - z).norm();
        const Vec e = r > 0.0 ? Vec((x - z) / r) : Vec::Unit(d, 0);
        g = scheme.lambda0 * mirror(e) +
            reflected_sigma(m, x, scheme.lambda0) * reflected_sigma(m, z, scheme.lambda0).transpose();
    }
    A.topRightCorner(d, d) = g;
    A.bottomLeftCorner(d, d) = g.transpose();
    return A;
}

// ---------------------------------------------------------------------------

CoupledEnsemble couple(const Model& m, const Vec& x0, const Vec& z0, const CouplingScheme& scheme,
                       const SimConfig& cfg) {
    cfg.validate(x0);
    cfg.validate(z0);
    if (x0.size() != m.d || z0.size() != m.d) throw InvalidArgument("start points do not match the model dimension");
    if (!(scheme.glue_radius >= 0.0)) throw InvalidArgument("glue radius must be >= 0");
    const bool refl = scheme.kind == CouplingKind::Reflection;
    if (refl) {
        if (!(scheme.lambda0 >= 0.0)) throw InvalidArgument("lambda0 must be >= 0");
        if (m.has_diffusion() && m.noise_dim != m.d) throw InvalidArgument("reflection needs a square diffusion matrix");
        if (!m.has_diffusion() && scheme.lambda0 > 0.0) throw NotPSD("a(x) = 0 is below lambda0 I");
        reflected_sigma(m, x0, scheme.lambda0);
        reflected_sigma(m, z0, scheme.lambda0);
    }
    const StepKernel K(m, cfg);
    const int d = m.d;
    const int q = refl ? d : m.noise_dim;
    const long N = cfg.n_paths;
    const std::vector<long> keep = cfg.stored_steps();
    const bool full = cfg.store == StoreMode::Full;
    const std::size_t nt = full ? keep.size() : 1;

    CoupledEnsemble e;
    e.d = d;
    e.scheme = scheme;
    e.cfg = cfg;
    if (e.cfg.store == StoreMode::Running) e.cfg.store = StoreMode::Endpoints;
    for (long k : keep) e.times.push_back(cfg.time(k));
    e.x_states.assign(N * nt * d, 0.0);
    e.z_states.assign(N * nt * d, 0.0);
    e.coupling_time.assign(N, std::numeric_limits<double>::infinity());
    e.max_separation.assign(N, 0.0);
    e.min_separation.assign(N, 0.0);
    e.x_status.assign(N, PathStatus::NotRun);
    e.z_status.assign(N, PathStatus::NotRun);
    const double R = cfg.explosion_radius;
    const auto blown = [R](const Vec& v) { return !v.allFinite() || v.norm() > R; };

    e.cancelled = !parallel_blocks(N, 64, cfg.threads, cfg.cancel, [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            PathStreams rs(cfg.master_seed, static_cast<std::uint64_t>(i));
            Vec x = x0, z = z0;
            Vec w1(q), w2(q);
            PathStatus sx = PathStatus::Alive, sz = PathStatus::Alive;
            double tc = std::numeric_limits<double>::infinity();
            double sep = (x - z).norm();
            double maxs = sep, mins = sep;
            bool glued = sep <= scheme.glue_radius;
            if (glued) {
                z = x;
                tc = 0.0;
                mins = 0.0;
            }
            double next_jump = K.has_jumps() ? rs.jump_times.exponential(K.jump_rate()) : kInf;
            std::size_t ki = 0;
            double* xs = e.x_states.data() + i * nt * d;
            double* zs = e.z_states.data() + i * nt * d;
            const auto store = [&] {
                std::copy(x.data(), x.data() + d, xs + ki * d);
                std::copy(z.data(), z.data() + d, zs + ki * d);
                ++ki;
            };
            if (full) store();
            const auto check = [&](double t, const Vec* e_old) {
                if (blown(x)) sx = x.allFinite() ? PathStatus::Exploded : PathStatus::NonFinite;
                if (blown(z)) sz = z.allFinite() ? PathStatus::Exploded : PathStatus::NonFinite;
                if (glued) return;
                const double s = (x - z).norm();
                maxs = std::max(maxs, s);
                mins = std::min(mins, s);
                const bool crossed = e_old && (x - z).dot(*e_old) <= 0.0;
                if (s <= scheme.glue_radius || crossed) {
                    glued = true;
                    tc = t;
                    mins = std::min(mins, s);
                    z = x;
                    sz = sx;
                }
            };
            const long n = cfg.n_steps();
            for (long k = 0; k < n; ++k) {
                const double t0 = cfg.time(k), t1 = cfg.time(k + 1), h = t1 - t0;
                if (sx == PathStatus::Alive && sz == PathStatus::Alive) {
                    if (m.has_diffusion()) {
                        const double sh = std::sqrt(h);
                        for (int j = 0; j < q; ++j) w1[j] = sh * rs.brownian.normal();
                        if (refl) {
                            for (int j = 0; j < q; ++j) w2[j] = sh * rs.brownian2.normal();
                        }
                    }
                    double s = t0;
                    while (sx == PathStatus::Alive && sz == PathStatus::Alive) {
                        const double t_end = std::min(next_jump, t1);
                        const double l = t_end - s;
                        if (l > 0.0) {
                            const double f = l / h;
                            Vec e_old;
                            const bool use_e = refl && !glued;
                            if (use_e) e_old = (x - z) / (x - z).norm();
                            Vec dx = K.drift(x, l) * l, dz;
                            if (m.has_diffusion()) {
                                if (refl) {
                                    const Vec inc = pair_diffusion_increment(m, scheme, x, glued ? x : z, w1, w2);
                                    dx += f * inc.head(d);
                                    if (!glued) dz = K.drift(z, l) * l + f * inc.tail(d);
                                } else {
                                    dx += m.sigma(x) * (w1 * f);
                                    if (!glued) dz = K.drift(z, l) * l + m.sigma(z) * (w1 * f);
                                }
                            } else if (!glued) {
                                dz = K.drift(z, l) * l;
                            }
                            x += dx;
                            if (glued) {
                                z = x;
                            } else {
                                z += dz;
                            }
                            check(t_end, use_e ? &e_old : nullptr);
                        }
                        s = t_end;
                        if (next_jump > t1 || sx != PathStatus::Alive || sz != PathStatus::Alive) break;
                        const Vec u = K.sample_mark(rs.jump_marks);
                        const Vec cx = m.c(x, u);
                        if (glued) {
                            x += cx;
                            z = x;
                        } else {
                            z += m.c(z, u);
                            x += cx;
                        }
                        check(next_jump, nullptr);
                        next_jump += rs.jump_times.exponential(K.jump_rate());
                    }
                }
                if (full && ki < keep.size() && keep[ki] == k + 1) store();
            }
            if (!full) store();
            e.coupling_time[i] = tc;
            e.max_separation[i] = maxs;
            e.min_separation[i] = glued ? 0.0 : mins;
            e.x_status[i] = sx;
            e.z_status[i] = sz;
        }
    });
    return e;
}

// ---------------------------------------------------------------------------

namespace {

TwoPointValue two_point(const Model& m, const RadialFunction& F, const Vec& x, const Vec& z, const Mat& A,
                        const LevyQuadOptions& opt) {
    const Vec D = x - z;
    const double r = D.norm();
    if (r < 1e-12) throw SingularRadius("two-point operator needs |x - z| >= 1e-12");
    const Vec e = D / r;
    const double F1 = F.dF(r);
    const double F2 = F.d2F(r);
    const Vec db = m.b(x) - m.b(z);
    const double B = D.dot(db);
    TwoPointValue out;
    const double Abar = e.dot(A * e);
    out.diffusion = 0.5 * F2 * Abar + F1 / (2.0 * r) * (A.trace() - Abar);
    out.drift = F1 / r * B;
    if (m.has_jumps()) {
        const double Fr = F.F(r);
        const auto part = [&](const LevyMeasure& nu, bool compensated) -> QuadResult {
            if (nu.is_zero()) return {};
            const auto g = [&](const Vec& u) {
                const Vec dc = m.c(x, u) - m.c(z, u);
                double v = F.F((D + dc).norm()) - Fr;
                if (compensated) v -= F1 / r * D.dot(dc);
                return v;
            };
            return nu.integrate(g, m.jump.radial_mark, opt);
        };
        QuadResult q = part(m.levy.small(), true);
        q += part(m.levy.large(), m.compensate_large);
        out.jump = q.value;
        out.quad_error = q.error;
    }
    out.value = out.diffusion + out.drift + out.jump;
    return out;
}

}  // namespace

TwoPointValue basic_coupling_generator(const Model& m, const RadialFunction& V, const Vec& x, const Vec& z,
                                       const LevyQuadOptions& opt) {
    Mat A = Mat::Zero(m.d, m.d);
    if (m.has_diffusion()) {
        const Mat ds = m.sigma(x) - m.sigma(z);
        A = ds * ds.transpose();
    }
    return two_point(m, V, x, z, A, opt);
}

TwoPointValue reflection_generator(const Model& m, const RadialFunction& F, double lambda0, const Vec& x,
                                   const Vec& z, const LevyQuadOptions& opt) {
    if (!(lambda0 >= 0.0)) throw InvalidArgument("lambda0 must be >= 0");
    CouplingScheme s;
    s.kind = CouplingKind::Reflection;
    s.lambda0 = lambda0;
    if (!m.has_diffusion()) {
        if (lambda0 > 0.0) throw NotPSD("a(x) = 0 is below lambda0 I");
        return two_point(m, F, x, z, Mat::Zero(m.d, m.d), opt);
    }
    if ((x - z).norm() < 1e-12) throw SingularRadius("two-point operator needs |x - z| >= 1e-12");
    const Mat P = pair_diffusion_matrix(m, s, x, z);
    const int d = m.d;
    const Mat g = P.topRightCorner(d, d);
    const Mat A = P.topLeftCorner(d, d) + P.bottomRightCorner(d, d) - g - g.transpose();
    return two_point(m, F, x, z, A, opt);
}

double estimate_lambda0(const Model& m, const std::vector<Vec>& points) {
    if (!m.has_diffusion() || points.empty()) return 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (const Vec& x : points) {
        Eigen::SelfAdjointEigenSolver<Mat> es(m.a(x), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues()[0]);
    }
    return std::max(0.0, 0.99 * lo);
}

void write_coupling_csv(const CoupledEnsemble& e, std::ostream& os) {
    os << "pair_id,T,max_separation,glued\n";
    char buf[96];
    for (long i = 0; i < e.n_pairs(); ++i) {
        if (e.x_status[i] == PathStatus::NotRun) continue;
        if (e.glued(i)) {
            std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,true\n", i, e.coupling_time[i], e.max_separation[i]);
        } else {
            std::snprintf(buf, sizeof buf, "%ld,inf,%.17g,false\n", i, e.max_separation[i]);
        }
        os << buf;
    }
}

}  // namespace jumpsde
