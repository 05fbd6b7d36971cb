#include "jumpsde/verifier.hpp"

#include "jumpsde/rng.hpp"
#include "jumpsde/simulator.hpp"
#include "jumpsde/stats.hpp"

#include <algorithm>
#include <cmath>

namespace jumpsde {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// probe sets

ProbeSet ProbeSet::grid(int d, long per_axis, double R) {
    if (d < 1 || per_axis < 1) throw InvalidArgument("grid probes need d >= 1 and per_axis >= 1");
    ProbeSet p;
    p.kind = Kind::Grid;
    p.d = d;
    p.count = per_axis;
    p.radius = R;
    return p;
}

ProbeSet ProbeSet::ball(int d, long count, double R, std::uint64_t seed) {
    if (d < 1 || count < 0 || !(R > 0.0)) throw InvalidArgument("ball probes need d >= 1, count >= 0, R > 0");
    ProbeSet p;
    p.kind = Kind::Ball;
    p.d = d;
    p.count = count;
    p.radius = R;
    p.seed = seed;
    return p;
}

ProbeSet ProbeSet::pairs(int d, long count, double R, double delta0, std::uint64_t seed, double min_sep) {
    if (!(delta0 > 0.0) || !(min_sep > 0.0) || min_sep > delta0 || !(R > delta0)) {
        throw InvalidArgument("pair probes need 0 < min_sep <= delta0 < R");
    }
    ProbeSet p = ball(d, count, R, seed);
    p.kind = Kind::Pairs;
    p.delta0 = delta0;
    p.min_sep = min_sep;
    return p;
}

ProbeSet ProbeSet::explicit_points(std::vector<Vec> xs) {
    ProbeSet p;
    p.kind = Kind::Explicit;
    p.d = xs.empty() ? 1 : static_cast<int>(xs[0].size());
    p.count = static_cast<long>(xs.size());
    p.xs = std::move(xs);
    return p;
}

ProbeSet ProbeSet::explicit_pairs(std::vector<Vec> xs, std::vector<Vec> zs) {
    if (xs.size() != zs.size()) throw SizeMismatch("explicit pairs need as many z as x");
    ProbeSet p = explicit_points(std::move(xs));
    p.zs = std::move(zs);
    return p;
}

std::vector<Vec> ProbeSet::points() const {
    std::vector<Vec> out;
    switch (kind) {
        case Kind::Explicit: return xs;
        case Kind::Grid: {
            std::vector<double> axis(count);
            for (long k = 0; k < count; ++k) axis[k] = count == 1 ? 0.0 : -radius + 2.0 * radius * k / (count - 1);
            std::vector<long> idx(d, 0);
            while (true) {
                Vec x(d);
                for (int i = 0; i < d; ++i) x[i] = axis[idx[i]];
                out.push_back(x);
                int i = 0;
                while (i < d && ++idx[i] == count) idx[i++] = 0;
                if (i == d) break;
            }
            return out;
        }
        case Kind::Ball: {
            Stream s(seed, 0, Substream::Auxiliary);
            for (long i = 0; i < count; ++i) out.push_back(radius * std::pow(s.uniform(), 1.0 / d) * random_direction(d, s));
            return out;
        }
        case Kind::Pairs: {
            for (auto& pr : pair_list()) out.push_back(pr.first);
            return out;
        }
    }
    return out;
}

std::vector<std::pair<Vec, Vec>> ProbeSet::pair_list() const {
    std::vector<std::pair<Vec, Vec>> out;
    if (kind == Kind::Explicit) {
        if (zs.size() != xs.size()) throw InvalidArgument("probe set holds points, not pairs");
        for (std::size_t i = 0; i < xs.size(); ++i) out.emplace_back(xs[i], zs[i]);
        return out;
    }
    if (kind != Kind::Pairs) throw InvalidArgument("probe set holds points, not pairs");
    Stream s(seed, 0, Substream::Auxiliary);
    const double l0 = std::log(min_sep), l1 = std::log(delta0);
    for (long i = 0; i < count; ++i) {
        Vec x = radius * std::pow(s.uniform(), 1.0 / d) * random_direction(d, s);
        // stratified in log-separation
        const double sep = std::exp(l0 + (l1 - l0) * (i + s.uniform()) / count);
        const Vec e = random_direction(d, s);
        Vec z = x + sep * e;
        if (z.norm() > radius) z = x - sep * e;
        if (z.norm() > radius) {
            x *= (radius - sep) / x.norm();
            z = x + sep * e;
        }
        out.emplace_back(std::move(x), std::move(z));
    }
    return out;
}

json ProbeSet::describe() const {
    static const char* names[] = {"grid", "uniform-ball", "pairs", "explicit"};
    json j;
    j["kind"] = names[static_cast<int>(kind)];
    j["d"] = d;
    j["count"] = count;
    if (kind != Kind::Explicit) j["radius"] = radius;
    if (kind == Kind::Pairs) {
        j["delta0"] = delta0;
        j["min_separation"] = min_sep;
    }
    if (kind == Kind::Ball || kind == Kind::Pairs) j["seed"] = seed;
    return j;
}

// ---------------------------------------------------------------------------
// reports

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Holds: return "holds-on-probes";
        case CheckStatus::Violated: return "violated";
        case CheckStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vec& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
    return a;
}

}  // namespace

json CheckReport::to_json() const {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["check"] = check;
    j["status"] = to_string(status);
    j["margin"] = num(margin);
    if (witness) {
        json w;
        w["x"] = vec_json(witness->x);
        if (witness->z.size() > 0) w["z"] = vec_json(witness->z);
        w["lhs"] = num(witness->lhs);
        w["rhs"] = num(witness->rhs);
        w["margin"] = num(witness->margin);
        j["witness"] = w;
    } else {
        j["witness"] = nullptr;
    }
    j["params"] = params;
    j["n_probes"] = n_probes;
    j["n_violated"] = n_violated;
    j["n_failed"] = n_failed;
    j["notes"] = notes;
    if (!sub.empty()) {
        json s = json::array();
        for (const auto& r : sub) s.push_back(r.to_json());
        j["subchecks"] = s;
    }
    return j;
}

// ---------------------------------------------------------------------------
// evaluation machinery

namespace {

constexpr double kRound = 64.0 * 2.220446049250313e-16;

// One probe: lhs <= kappa * unit. `scale` bounds the magnitude of the terms
// that were summed into lhs (for the roundoff floor).
struct Term {
    double lhs = 0.0;
    double unit = 0.0;
    double scale = 0.0;
    double qerr = 0.0;
    bool failed = false;
    std::string why;
};

using PairEval = std::function<Term(const Vec&, const Vec&)>;

std::vector<Term> evaluate(const std::vector<Vec>& xs, const std::vector<Vec>& zs, const PairEval& eval,
                           const VerifyOptions& opt) {
    const long n = static_cast<long>(xs.size());
    std::vector<Term> out(n);
    static const Vec none;
    parallel_blocks(n, 16, opt.threads, nullptr, [&](long b, long e) {
        for (long i = b; i < e; ++i) {
            try {
                out[i] = eval(xs[i], zs.empty() ? none : zs[i]);
                if (!std::isfinite(out[i].lhs)) {
                    out[i].failed = true;
                    out[i].why = "left side is not finite";
                }
            } catch (const QuadratureDivergence& err) {
                out[i].failed = true;
                out[i].why = err.what();
            } catch (const NonFinite& err) {
                out[i].failed = true;
                out[i].why = err.what();
            } catch (const NotPSD& err) {
                out[i].failed = true;
                out[i].why = err.what();
            }
        }
    });
    return out;
}

// Checks lhs <= kappa * unit over the probes. With no kappa, the smallest
// nonnegative one that works is fitted. `kappa_name` null: kappa is fixed and
// not reported.
CheckReport kappa_check(const std::string& name, const std::vector<Vec>& xs, const std::vector<Vec>& zs,
                        const std::vector<Term>& t, std::optional<double> kappa, const char* kappa_name,
                        const VerifyOptions& opt) {
    CheckReport r;
    r.check = name;
    r.n_probes = static_cast<long>(t.size());
    bool unbounded = false;
    long unbounded_at = -1;
    double k = kappa.value_or(0.0);
    if (!kappa) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i].failed) continue;
            const double floor = opt.tol + t[i].qerr + kRound * t[i].scale;
            if (t[i].unit > 0.0) {
                k = std::max(k, t[i].lhs / t[i].unit);
            } else if (t[i].lhs > floor && unbounded_at < 0) {
                unbounded = true;
                unbounded_at = static_cast<long>(i);
            }
        }
        if (unbounded) r.notes.push_back("no finite constant: the left side is positive where the right side vanishes");
    }
    if (kappa_name) {
        r.params[kappa_name] = num(k);
        r.params[std::string(kappa_name) + "_fitted"] = !kappa.has_value();
    }
    long worst = -1;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].failed) {
            if (r.n_failed++ == 0) r.notes.push_back("quadrature failed at some probes: " + t[i].why);
            continue;
        }
        const double rhs = k * t[i].unit;
        const double m = t[i].lhs - rhs;
        const double floor = opt.tol + t[i].qerr + kRound * (t[i].scale + std::abs(rhs));
        if (m > floor) ++r.n_violated;
        if (worst < 0 || m > r.margin) {
            r.margin = m;
            worst = static_cast<long>(i);
        }
    }
    if (worst >= 0) {
        Witness w;
        w.x = xs[worst];
        if (!zs.empty()) w.z = zs[worst];
        w.lhs = t[worst].lhs;
        w.rhs = k * t[worst].unit;
        w.margin = r.margin;
        r.witness = w;
    }
    if (r.n_violated > 0) {
        r.status = CheckStatus::Violated;
    } else if (r.n_failed > 0 || unbounded || r.n_probes == 0) {
        r.status = CheckStatus::Inconclusive;
        if (r.n_probes == 0) r.notes.push_back("empty probe set");
    }
    return r;
}

CheckReport combine(const std::string& name, std::vector<CheckReport> subs) {
    CheckReport r;
    r.check = name;
    bool any_incon = false;
    for (const auto& s : subs) {
        r.n_probes += s.n_probes;
        r.n_violated += s.n_violated;
        r.n_failed += s.n_failed;
        if (s.status == CheckStatus::Violated) r.status = CheckStatus::Violated;
        if (s.status == CheckStatus::Inconclusive) any_incon = true;
        if (s.witness && (!r.witness || s.margin > r.margin)) {
            r.margin = s.margin;
            r.witness = s.witness;
        }
    }
    if (r.status != CheckStatus::Violated && any_incon) r.status = CheckStatus::Inconclusive;
    r.sub = std::move(subs);
    return r;
}

void split_pairs(const ProbeSet& p, std::vector<Vec>& xs, std::vector<Vec>& zs) {
    for (auto& pr : p.pair_list()) {
        xs.push_back(std::move(pr.first));
        zs.push_back(std::move(pr.second));
    }
}

void require_role(const ModulusFunction& f, ModRole role) {
    if (f.role() != role) {
        throw InvalidArgument(std::string("modulus has role ") + to_string(f.role()) + ", expected " + to_string(role));
    }
}

void admissibility_note(CheckReport& r, const ModulusFunction& f) {
    r.params["modulus"] = f.describe();
    const Admissible a = f.admissible();
    r.params["modulus_admissible"] = to_string(a);
    if (a == Admissible::Refuted) {
        r.notes.push_back("the modulus fails its integral condition; the inequality alone proves nothing");
        if (r.status == CheckStatus::Holds) r.status = CheckStatus::Inconclusive;
    } else if (a == Admissible::Inconclusive) {
        const DivergenceProbe p = f.divergence_probe();
        r.notes.push_back(std::string("integral condition of the user modulus not decided; partial-integral probe ") +
                          (p.looks_divergent ? "looks divergent" : "looks convergent"));
    }
}

double frob2(const Mat& m) { return m.squaredNorm(); }

double lambda_min(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

const LevyMeasure& jump_region(const Model& m, const VerifyOptions& opt, LevyMeasure& store) {
    if (!opt.small_jumps_only) return m.levy;
    store = m.levy.small();
    return store;
}

// Pieces of the difference of coefficients at a pair.
struct PairDiff {
    double r = 0.0;
    double drift2 = 0.0;   // 2 <x - z, b(x) - b(z)>
    double sig2 = 0.0;     // |sigma(x) - sigma(z)|^2
    double scale = 0.0;
};

PairDiff pair_diff(const Model& m, const Vec& x, const Vec& z) {
    PairDiff p;
    const Vec dx = x - z;
    p.r = dx.norm();
    const Vec bx = m.b(x), bz = m.b(z);
    p.drift2 = 2.0 * dx.dot(bx - bz);
    p.scale = 2.0 * p.r * (bx.norm() + bz.norm());
    if (m.has_diffusion()) {
        const Mat sx = m.sigma(x), sz = m.sigma(z);
        p.sig2 = frob2(sx - sz);
        p.scale += frob2(sx) + frob2(sz);
    }
    return p;
}

QuadResult jump_diff(const Model& m, const LevyMeasure& nu, const Vec& x, const Vec& z, int kind, double r,
                     const LevyQuadOptions& q) {
    if (!m.has_jumps() || nu.is_zero()) return {};
    return nu.integrate(
        [&](const Vec& u) {
            const double dc = (m.c(x, u) - m.c(z, u)).norm();
            if (kind == 1) return dc;
            if (kind == 2) return dc * dc;
            return std::min(dc * dc, 4.0 * r * dc);
        },
        m.jump.radial_mark, q);
}

// Separation decades where the per-pair ratio lhs/unit keeps growing as the
// separation shrinks; returns the fitted log-log slope or 0.
double diagonal_blowup(const std::vector<Vec>& xs, const std::vector<Vec>& zs, const std::vector<Term>& t) {
    std::vector<double> best(40, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].failed || !(t[i].unit > 0.0) || !(t[i].lhs > 0.0)) continue;
        const double r = (xs[i] - zs[i]).norm();
        const int k = std::clamp(static_cast<int>(std::floor(-std::log10(r))), 0, 39);
        best[k] = std::max(best[k], t[i].lhs / t[i].unit);
    }
    std::vector<double> lx, ly;
    for (int k = 0; k < 40; ++k) {
        if (best[k] > 0.0) {
            lx.push_back(-(k + 0.5));
            ly.push_back(std::log10(best[k]));
        }
    }
    if (lx.size() < 3) return 0.0;
    const LinearFit f = least_squares(lx, ly);
    return f.slope < -0.5 && f.r2 > 0.8 ? f.slope : 0.0;
}

void blowup_note(CheckReport& r, const std::vector<Vec>& xs, const std::vector<Vec>& zs, const std::vector<Term>& t,
                 bool fitted) {
    if (!fitted) return;
    const double s = diagonal_blowup(xs, zs, t);
    if (s == 0.0) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "fitted constant grows like |x-z|^%.2f toward the diagonal; no finite constant", s);
    r.notes.push_back(buf);
    r.params["diagonal_slope"] = s;
    if (r.status == CheckStatus::Holds) r.status = CheckStatus::Inconclusive;
}

}  // namespace

// ---------------------------------------------------------------------------

CheckReport check_nonexplosion(const Model& m, const ModulusFunction& zeta, std::optional<double> kappa,
                               const ProbeSet& probes, const VerifyOptions& opt) {
    require_role(zeta, ModRole::Zeta);
    if (kappa && !(*kappa >= 0.0)) throw InvalidArgument("kappa must be >= 0");
    LevyMeasure store;
    const LevyMeasure& nu = jump_region(m, opt, store);
    const auto eval = [&](const Vec& x, const Vec&) {
        Term t;
        const Vec b = m.b(x);
        t.lhs = 2.0 * x.dot(b);
        t.scale = std::abs(t.lhs);
        if (m.has_diffusion()) {
            const double s = frob2(m.sigma(x));
            t.lhs += s;
            t.scale += s;
        }
        if (m.has_jumps() && !nu.is_zero()) {
            const QuadResult q = nu.integrate([&](const Vec& u) { return m.c(x, u).squaredNorm(); }, m.jump.radial_mark,
                                              opt.quad);
            t.lhs += q.value;
            t.scale += std::abs(q.value);
            t.qerr = q.error;
        }
        const double r2 = x.squaredNorm();
        t.unit = r2 * zeta(r2) + 1.0;
        return t;
    };
    const std::vector<Vec> xs = probes.points();
    const auto terms = evaluate(xs, {}, eval, opt);
    CheckReport r = kappa_check("nonexplosion", xs, {}, terms, kappa, "kappa", opt);
    r.params["probes"] = probes.describe();
    r.params["jump_region"] = opt.small_jumps_only ? "small" : "all";

    // a fitted kappa only means something if it stays put further out
    if (!kappa && r.witness) {
        double rmax = 0.0;
        for (const Vec& x : xs) rmax = std::max(rmax, x.norm());
        Vec dir = r.witness->x.norm() > 0 ? Vec(r.witness->x.normalized()) : Vec(Vec::Ones(m.d).normalized());
        if (rmax == 0.0) rmax = 1.0;
        std::vector<double> ratio;
        for (int k = 1; k <= 6; ++k) {
            try {
                const Term t = eval(std::ldexp(rmax, k) * dir, Vec());
                if (!std::isfinite(t.lhs)) break;
                ratio.push_back(t.lhs / t.unit);
            } catch (const Error&) {
                break;
            }
        }
        const std::size_t n = ratio.size();
        if (n >= 4 && ratio[n - 1] > 0 && ratio[n - 1] > 4.0 * std::max(ratio[n - 4], r.params["kappa"].get<double>()) &&
            ratio[n - 1] > ratio[n - 2] && ratio[n - 2] > ratio[n - 3]) {
            r.notes.push_back("the needed kappa keeps growing along the ray through the worst probe");
            r.params["ray_ratio_far"] = ratio[n - 1];
            if (r.status == CheckStatus::Holds) r.status = CheckStatus::Inconclusive;
        }
    }
    admissibility_note(r, zeta);
    return r;
}

CheckReport check_pathwise_A(const Model& m, const ModulusFunction& rho, std::optional<double> kappa_R,
                             const ProbeSet& probes, const VerifyOptions& opt) {
    require_role(rho, ModRole::Rho);
    LevyMeasure store;
    const LevyMeasure& nu = jump_region(m, opt, store);
    std::vector<Vec> xs, zs;
    split_pairs(probes, xs, zs);
    const auto coeff = evaluate(xs, zs,
                                [&](const Vec& x, const Vec& z) {
                                    const PairDiff p = pair_diff(m, z, x);
                                    Term t;
                                    t.lhs = p.drift2 + p.sig2;
                                    t.scale = p.scale;
                                    t.unit = p.r * rho(p.r);
                                    return t;
                                },
                                opt);
    const auto jump = evaluate(xs, zs,
                               [&](const Vec& x, const Vec& z) {
                                   Term t;
                                   const double r = (x - z).norm();
                                   const QuadResult q = jump_diff(m, nu, z, x, 1, r, opt.quad);
                                   t.lhs = q.value;
                                   t.scale = std::abs(q.value);
                                   t.qerr = q.error;
                                   t.unit = rho(r);
                                   return t;
                               },
                               opt);
    std::optional<double> k = kappa_R;
    if (!k) {
        // one constant for both displays
        const double ka = kappa_check("", xs, zs, coeff, std::nullopt, "k", opt).params["k"].get<double>();
        const double kb = kappa_check("", xs, zs, jump, std::nullopt, "k", opt).params["k"].get<double>();
        k = std::max(ka, kb);
    }
    CheckReport a = kappa_check("pathwise-A drift/diffusion", xs, zs, coeff, k, "kappa_R", opt);
    CheckReport b = kappa_check("pathwise-A jump first moment", xs, zs, jump, k, "kappa_R", opt);
    if (b.n_failed > 0) {
        b.notes.insert(b.notes.begin(), "int |c(z,u) - c(x,u)| nu(du) diverges or failed; reported, not guessed");
    }
    blowup_note(a, xs, zs, coeff, !kappa_R);
    blowup_note(b, xs, zs, jump, !kappa_R);

    // Hoelder exponent of the drift/diffusion part: |lhs| ~ r^(1+p)
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < coeff.size(); ++i) {
        if (coeff[i].failed || coeff[i].lhs == 0.0) continue;
        lx.push_back(std::log((xs[i] - zs[i]).norm()));
        ly.push_back(std::log(std::abs(coeff[i].lhs)));
    }
    CheckReport r = combine("pathwise-A", {a, b});
    r.params["kappa_R"] = num(*k);
    r.params["kappa_R_fitted"] = !kappa_R.has_value();
    if (lx.size() >= 3) {
        const LinearFit f = least_squares(lx, ly);
        r.params["fitted_rho_exponent"] = f.slope - 1.0;
        r.params["fitted_rho_exponent_r2"] = f.r2;
    }
    r.params["probes"] = probes.describe();
    admissibility_note(r, rho);
    return r;
}

CheckReport check_pathwise_B(const Model& m, const ModulusFunction& varrho, std::optional<double> kappa_R,
                             const ProbeSet& probes, const VerifyOptions& opt) {
    require_role(varrho, ModRole::Varrho);
    const ModulusSpotCheck sc = spot_check(varrho);
    if (!sc.varrho_bound || !sc.positive) {
        throw InvalidArgument("varrho fails the (1 + r)^2 varrho(r / (1 + r)) probe near r = " + std::to_string(sc.worst_r));
    }
    LevyMeasure store;
    const LevyMeasure& nu = jump_region(m, opt, store);
    std::vector<Vec> xs, zs;
    split_pairs(probes, xs, zs);
    const auto terms = evaluate(xs, zs,
                                [&](const Vec& x, const Vec& z) {
                                    const PairDiff p = pair_diff(m, x, z);
                                    const QuadResult q = jump_diff(m, nu, x, z, 2, p.r, opt.quad);
                                    Term t;
                                    t.lhs = p.drift2 + p.sig2 + q.value;
                                    t.scale = p.scale + std::abs(q.value);
                                    t.qerr = q.error;
                                    t.unit = varrho(p.r * p.r);
                                    return t;
                                },
                                opt);
    CheckReport r = kappa_check("pathwise-B", xs, zs, terms, kappa_R, "kappa_R", opt);
    blowup_note(r, xs, zs, terms, !kappa_R);
    r.params["probes"] = probes.describe();
    admissibility_note(r, varrho);
    return r;
}

CheckReport check_feller(const Model& m, const ModulusFunction& varrho, std::optional<double> kappa_R,
                         const ProbeSet& probes, const VerifyOptions& opt) {
    require_role(varrho, ModRole::Varrho);
    LevyMeasure store;
    const LevyMeasure& nu = jump_region(m, opt, store);
    std::vector<Vec> xs, zs;
    split_pairs(probes, xs, zs);
    const auto terms = evaluate(xs, zs,
                                [&](const Vec& x, const Vec& z) {
                                    const PairDiff p = pair_diff(m, x, z);
                                    const QuadResult q = jump_diff(m, nu, x, z, 3, p.r, opt.quad);
                                    Term t;
                                    t.lhs = p.drift2 + p.sig2 + q.value;
                                    t.scale = p.scale + std::abs(q.value);
                                    t.qerr = q.error;
                                    t.unit = 2.0 * p.r * varrho(p.r);
                                    return t;
                                },
                                opt);
    CheckReport r = kappa_check("feller", xs, zs, terms, kappa_R, "kappa_R", opt);
    blowup_note(r, xs, zs, terms, !kappa_R);
    // the uncapped second moment at the worst pair, for contrast
    if (r.witness && m.has_jumps()) {
        try {
            const QuadResult q = jump_diff(m, nu, r.witness->x, r.witness->z, 2, 0.0, opt.quad);
            r.params["uncapped_jump_second_moment"] = num(q.value);
        } catch (const QuadratureDivergence&) {
            r.params["uncapped_jump_second_moment"] = "diverges";
        }
    }
    r.params["probes"] = probes.describe();
    admissibility_note(r, varrho);
    return r;
}

CheckReport check_strong_feller(const Model& m, double lambda0, const ModulusFunction& vartheta,
                                std::optional<double> kappa0, const ProbeSet& probes, const VerifyOptions& opt) {
    require_role(vartheta, ModRole::Vartheta);
    if (!(lambda0 > 0.0)) throw InvalidArgument("lambda0 must be > 0");
    // vartheta(r) -> 0: nonincreasing toward 0 over 300 decades, ending well below the start
    {
        double prev = vartheta(1e-2);
        const double first = prev;
        for (int k = 3; k <= 300; ++k) {
            const double v = vartheta(std::pow(10.0, -k));
            if (v > prev * (1 + 1e-12) + 1e-300) throw InvalidArgument("vartheta is not nonincreasing toward 0");
            prev = v;
        }
        if (!(prev <= 1e-2 * first) && first > 0) throw InvalidArgument("vartheta does not tend to 0 at 0");
    }
    LevyMeasure store;
    const LevyMeasure& nu = jump_region(m, opt, store);
    std::vector<Vec> xs, zs;
    split_pairs(probes, xs, zs);

    std::vector<Vec> pts = xs;
    pts.insert(pts.end(), zs.begin(), zs.end());
    const auto ell = evaluate(pts, {},
                              [&](const Vec& x, const Vec&) {
                                  Term t;
                                  const double lm = m.has_diffusion() ? lambda_min(m.a(x)) : 0.0;
                                  t.lhs = lambda0 - lm;
                                  t.scale = std::abs(lm) + lambda0;
                                  return t;
                              },
                              opt);
    CheckReport e = kappa_check("ellipticity", pts, {}, ell, 0.0, nullptr, opt);
    e.params["lambda0"] = lambda0;

    const auto terms = evaluate(xs, zs,
                                [&](const Vec& x, const Vec& z) {
                                    PairDiff p = pair_diff(m, x, z);
                                    if (m.has_diffusion()) {
                                        const Mat I = Mat::Identity(m.d, m.d);
                                        const Mat sx = sqrt_spd(m.a(x) - lambda0 * I);
                                        const Mat sz = sqrt_spd(m.a(z) - lambda0 * I);
                                        p.sig2 = frob2(sx - sz);
                                    } else {
                                        throw NotPSD("a(x) = 0 is below lambda0 I");
                                    }
                                    const QuadResult q = jump_diff(m, nu, x, z, 3, p.r, opt.quad);
                                    Term t;
                                    t.lhs = p.drift2 + p.sig2 + q.value;
                                    t.scale = p.scale + std::abs(q.value);
                                    t.qerr = q.error;
                                    t.unit = 2.0 * p.r * vartheta(p.r);
                                    return t;
                                },
                                opt);
    CheckReport mod = kappa_check("strong-feller modulus", xs, zs, terms, kappa0, "kappa0", opt);
    blowup_note(mod, xs, zs, terms, !kappa0);
    CheckReport r = combine("strong-feller", {e, mod});
    r.params["lambda0"] = lambda0;
    if (mod.params.contains("kappa0")) r.params["kappa0"] = mod.params["kappa0"];
    r.params["probes"] = probes.describe();
    r.params["modulus"] = vartheta.describe();
    return r;
}

CheckReport check_nonconfluence(const Model& m, const RadialFunction& V, std::optional<ModulusFunction> psi,
                                const ProbeSet& probes, const VerifyOptions& opt) {
    if (psi) require_role(*psi, ModRole::Psi);
    // condition (i): V nonincreasing near 0 with V(0+) = inf
    {
        double prev = V.F(1e-1), first_inc = 0.0, inc = 0.0;
        for (int k = 2; k <= 12; ++k) {
            const double v = V.F(std::pow(10.0, -k));
            inc = v - prev;
            if (!(inc > 0.0)) throw InvalidArgument("V must increase toward 0");
            if (k == 2) first_inc = inc;
            prev = v;
        }
        if (inc < 0.5 * first_inc) throw InvalidArgument("V does not appear to blow up at 0");
    }
    std::vector<Vec> xs, zs;
    split_pairs(probes, xs, zs);
    const auto terms = evaluate(xs, zs,
                                [&](const Vec& x, const Vec& z) {
                                    const TwoPointValue g = basic_coupling_generator(m, V, x, z, opt.quad);
                                    const double v = V.F((x - z).norm());
                                    Term t;
                                    t.lhs = g.value;
                                    t.scale = std::abs(g.diffusion) + std::abs(g.drift) + std::abs(g.jump) + v;
                                    t.qerr = g.quad_error;
                                    t.unit = psi ? (*psi)(v) : v;
                                    return t;
                                },
                                opt);
    CheckReport gen = kappa_check("nonconfluence generator", xs, zs, terms, psi ? std::optional<double>(1.0) : std::nullopt,
                                  psi ? nullptr : "K", opt);
    if (psi) gen.params["psi"] = psi->describe();
    std::vector<CheckReport> subs{gen};

    if (m.has_jumps()) {
        LevyMeasure active = m.levy;
        if (std::isinf(active.mass())) active = active.restrict(opt.mark_truncation, kInf);
        const double mass = active.mass();
        std::vector<Term> bad(xs.size());
        if (mass > 0.0 && std::isfinite(mass)) {
            const MarkSampler sampler(active);
            parallel_blocks(static_cast<long>(xs.size()), 16, opt.threads, nullptr, [&](long b, long e) {
                for (long i = b; i < e; ++i) {
                    Stream s(opt.seed, static_cast<std::uint64_t>(i), Substream::JumpMarks);
                    const Vec dx = xs[i] - zs[i];
                    const double r = dx.norm();
                    long hit = 0;
                    for (int k = 0; k < opt.n_marks; ++k) {
                        const Vec u = sampler.sample(s);
                        if ((dx + m.c(xs[i], u) - m.c(zs[i], u)).norm() <= opt.delta * r) ++hit;
                    }
                    bad[i].lhs = static_cast<double>(hit) / opt.n_marks;
                }
            });
        }
        CheckReport inj = kappa_check("jump injectivity", xs, zs, bad, 0.0, nullptr, opt);
        double worst = 0.0;
        for (const auto& t : bad) worst = std::max(worst, t.lhs);
        inj.params["delta"] = opt.delta;
        inj.params["marks_per_pair"] = opt.n_marks;
        inj.params["sampled_mass"] = num(mass);
        inj.params["max_bad_fraction"] = worst;
        inj.params["bad_mass_estimate"] = num(worst * mass);
        if (mass != m.levy.mass()) inj.notes.push_back("marks sampled on |u| > " + std::to_string(opt.mark_truncation));
        subs.push_back(inj);
    }
    CheckReport r = combine("nonconfluence", std::move(subs));
    if (gen.params.contains("K")) r.params["K"] = gen.params["K"];
    double rmin = kInf, rmax = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        rmin = std::min(rmin, (xs[i] - zs[i]).norm());
        rmax = std::max(rmax, (xs[i] - zs[i]).norm());
    }
    r.params["V"] = V.name;
    r.params["separation_range"] = json::array({num(rmin), num(rmax)});
    r.notes.push_back("the generator condition is required for every separation; only the probed range was checked");
    r.params["probes"] = probes.describe();
    return r;
}

CheckReport check_drift_ergodicity(const Model& m, const TestFunction& V, std::optional<double> alpha,
                                   std::optional<double> beta, const ProbeSet& probes, const VerifyOptions& opt) {
    if (alpha && !(*alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
    const std::vector<Vec> xs = probes.points();
    std::vector<Term> raw = evaluate(xs, {},
                                     [&](const Vec& x, const Vec&) {
                                         const GeneratorValue g = apply_generator(m, V, x, opt.quad);
                                         Term t;
                                         t.lhs = g.value;
                                         t.unit = V(x);
                                         t.qerr = g.quad_error;
                                         t.scale = std::abs(g.drift) + std::abs(g.diffusion) + std::abs(g.jump);
                                         return t;
                                     },
                                     opt);
    double a = alpha.value_or(0.0);
    json extra;
    extra["LV_origin"] = nullptr;
    try {
        extra["LV_origin"] = num(apply_generator(m, V, Vec::Zero(m.d), opt.quad).value);
    } catch (const Error&) {
    }

    if (!alpha) {
        double rmax = 0.0;
        for (const Vec& x : xs) rmax = std::max(rmax, x.norm());
        double lo = kInf;
        long at = -1;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (raw[i].failed || xs[i].norm() < 0.8 * rmax || !(raw[i].unit > 0.0)) continue;
            const double q = -raw[i].lhs / raw[i].unit;
            if (q < lo) {
                lo = q;
                at = static_cast<long>(i);
            }
        }
        if (at < 0 || !(lo > 0.0)) {
            CheckReport r;
            r.check = "drift-ergodicity";
            r.status = at < 0 ? CheckStatus::Inconclusive : CheckStatus::Violated;
            r.n_probes = static_cast<long>(xs.size());
            if (at >= 0) {
                r.n_violated = 1;
                r.margin = -lo;
                Witness w;
                w.x = xs[at];
                w.lhs = raw[at].lhs;
                w.rhs = 0.0;
                w.margin = -lo;
                r.witness = w;
                r.notes.push_back("LV / V is not negative on the outer shell: no alpha > 0 works there");
            } else {
                r.notes.push_back("no usable probes on the outer shell");
            }
            r.params["alpha"] = nullptr;
            r.params["LV_origin"] = extra["LV_origin"];
            r.params["V"] = V.name();
            r.params["probes"] = probes.describe();
            return r;
        }
        a = 0.5 * lo;
    }
    std::vector<Term> t = raw;
    for (auto& x : t) {
        if (x.failed) continue;
        x.lhs += a * x.unit;
        x.scale += a * std::abs(x.unit);
        x.unit = 1.0;
    }
    CheckReport r = kappa_check("drift-ergodicity", xs, {}, t, beta, "beta", opt);
    r.params["alpha"] = a;
    r.params["alpha_fitted"] = !alpha.has_value();
    r.params["LV_origin"] = extra["LV_origin"];
    r.params["V"] = V.name();
    r.params["probes"] = probes.describe();
    return r;
}

CheckReport check_levy_driven(const std::function<Mat(const Vec&)>& psi, const Mat& Q,
                              const LevyDrivenConditions& cond, const ProbeSet& probes, const VerifyOptions& opt) {
    if (!psi) throw InvalidArgument("psi is required");
    std::vector<Vec> xs, zs;
    split_pairs(probes, xs, zs);
    std::vector<CheckReport> subs;
    if (cond.zeta) {
        require_role(*cond.zeta, ModRole::Zeta);
        const auto t = evaluate(xs, {},
                                [&](const Vec& x, const Vec&) {
                                    Term r;
                                    r.lhs = frob2(psi(x));
                                    r.scale = r.lhs;
                                    const double r2 = x.squaredNorm();
                                    r.unit = r2 * (*cond.zeta)(r2) + 1.0;
                                    return r;
                                },
                                opt);
        CheckReport g = kappa_check("psi growth", xs, {}, t, cond.K, "K", opt);
        admissibility_note(g, *cond.zeta);
        subs.push_back(g);
    }
    if (cond.varrho) {
        require_role(*cond.varrho, ModRole::Varrho);
        const auto t = evaluate(xs, zs,
                                [&](const Vec& x, const Vec& z) {
                                    Term r;
                                    r.lhs = frob2(psi(x) - psi(z));
                                    r.scale = frob2(psi(x)) + frob2(psi(z));
                                    const double s = (x - z).norm();
                                    r.unit = (*cond.varrho)(s * s);
                                    return r;
                                },
                                opt);
        CheckReport g = kappa_check("psi modulus", xs, zs, t, cond.K, "K", opt);
        blowup_note(g, xs, zs, t, !cond.K);
        admissibility_note(g, *cond.varrho);
        subs.push_back(g);
    }
    if (cond.lambda0) {
        const auto t = evaluate(xs, {},
                                [&](const Vec& x, const Vec&) {
                                    Term r;
                                    const Mat p = psi(x);
                                    const double lm = lambda_min(p * Q * p.transpose());
                                    r.lhs = *cond.lambda0 - lm;
                                    r.scale = std::abs(lm) + *cond.lambda0;
                                    return r;
                                },
                                opt);
        CheckReport g = kappa_check("psi ellipticity", xs, {}, t, 0.0, nullptr, opt);
        g.params["lambda0"] = *cond.lambda0;
        subs.push_back(g);
    }
    if (subs.empty()) throw InvalidArgument("check_levy_driven: no condition selected");
    CheckReport r = combine("levy-driven", std::move(subs));
    r.params["probes"] = probes.describe();
    return r;
}

InverseSquareBound inverse_square_bound(const Vec& x, const Vec& y, double delta) {
    if (!(delta > 0.0)) throw InvalidArgument("delta must be > 0");
    InverseSquareBound b;
    b.K = std::max(2.0, 2.0 / (delta * delta));
    const double nx2 = x.squaredNorm();
    const double nxy2 = (x + y).squaredNorm();
    b.applicable = nx2 > 0.0 && nxy2 >= delta * delta * nx2;
    if (nx2 == 0.0 || nxy2 == 0.0) return b;
    const double xy = x.dot(y);
    b.lhs = 1.0 / nxy2 - 1.0 / nx2 + 2.0 * xy / (nx2 * nx2);
    b.rhs = b.K * std::max(y.squaredNorm(), std::abs(xy)) / (nx2 * nx2);
    return b;
}

}  // namespace jumpsde
