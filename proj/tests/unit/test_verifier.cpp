#include "doctest.h"

#include "jumpsde/builtin.hpp"
#include "jumpsde/verifier.hpp"

#include <cmath>

using namespace jumpsde;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

double example1_growth(const Vec& x) {
    double v = 3.0;
    for (int j = 0; j < 3; ++j) {
        const double a = std::abs(x[j]);
        v += -(16.0 / 9.0) * std::pow(a, 4) - std::pow(a, 4.0 / 3.0) + std::sqrt(2.0) * std::pow(a, 2.0 / 3.0);
    }
    return v;
}

Model drift_only(int d, std::function<Vec(const Vec&)> b) {
    Model m;
    m.name = "drift-only";
    m.d = d;
    m.noise_dim = d;
    m.drift = std::move(b);
    m.levy = LevyMeasure::zero(d);
    return m;
}

VerifyOptions serial() {
    VerifyOptions o;
    o.threads = 1;
    return o;
}

}  // namespace

TEST_CASE("probe sets") {
    const auto g = ProbeSet::grid(2, 5, 1.0).points();
    CHECK(g.size() == 25);
    CHECK(g.front() == v2(-1, -1));
    CHECK(g.back() == v2(1, 1));
    const auto p = ProbeSet::pairs(3, 500, 2.0, 0.1, 4).pair_list();
    double lo = 1, hi = 0;
    for (const auto& [x, z] : p) {
        CHECK(std::max(x.norm(), z.norm()) <= 2.0 + 1e-12);
        const double s = (x - z).norm();
        CHECK(s > 0.0);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    CHECK(lo < 1e-7);
    CHECK(hi > 0.05);
    CHECK(hi <= 0.1 + 1e-12);
    CHECK_THROWS_AS(ProbeSet::ball(2, 10, 1.0).pair_list(), InvalidArgument);
}

TEST_CASE("nonexplosion on Example 1") {
    const auto zeta = ModulusFunction::constant(1.0, ModRole::Zeta);
    auto pts = ProbeSet::ball(3, 300, 10.0, 1).points();
    pts.push_back(Vec::Zero(3));  // LHS(0) = 3 forces kappa >= 3
    const auto probes = ProbeSet::explicit_points(pts);
    const auto r = check_nonexplosion(example1(), zeta, std::nullopt, probes, serial());
    CHECK(r.status == CheckStatus::Holds);
    // oracle: maximize the closed form over the same probes
    double k = 0;
    for (const Vec& x : probes.points()) k = std::max(k, example1_growth(x) / (x.squaredNorm() + 1));
    CHECK(r.params["kappa"].get<double>() == doctest::Approx(k).epsilon(1e-7));
    CHECK(r.params["kappa"].get<double>() >= 3.0 - 1e-9);
    CHECK(r.params["kappa"].get<double>() <= 3.0 + 3.0 * std::sqrt(2.0));
    // the worst probe is near the origin
    CHECK(r.witness->x.norm() < 2.0);

    const auto z = check_nonexplosion(zero_model(2), zeta, 0.0, ProbeSet::ball(2, 50, 3.0), serial());
    CHECK(z.status == CheckStatus::Holds);
    CHECK(z.margin == 0.0);
}

TEST_CASE("nonexplosion flags the cubic drift") {
    const auto zeta = ModulusFunction::constant(1.0, ModRole::Zeta);
    std::vector<Vec> ray;
    for (double r : {1.0, 2.0, 4.0, 8.0}) ray.push_back(v2(r, r));
    const auto r = check_nonexplosion(cubic_explosion(), zeta, 10.0, ProbeSet::explicit_points(ray), serial());
    CHECK(r.status == CheckStatus::Violated);
    CHECK(r.witness->x == v2(8, 8));
    // 2 <x, x^3> = 4 r^4 on the ray
    CHECK(r.margin == doctest::Approx(4 * std::pow(8.0, 4) - 10.0 * (128 + 1)).epsilon(1e-12));
    // fitted kappa: fine on the probes, but growing further out
    const auto f = check_nonexplosion(cubic_explosion(), zeta, std::nullopt, ProbeSet::ball(2, 200, 3.0), serial());
    CHECK(f.status == CheckStatus::Inconclusive);
}

TEST_CASE("witnesses re-evaluate to their margin") {
    const auto zeta = ModulusFunction::constant(1.0, ModRole::Zeta);
    const auto r = check_nonexplosion(example1(), zeta, 3.0, ProbeSet::ball(3, 100, 2.0, 3), serial());
    const auto again = check_nonexplosion(example1(), zeta, 3.0, ProbeSet::explicit_points({r.witness->x}), serial());
    CHECK(std::abs(again.margin - r.margin) <= 1e-12);

    const auto varrho = ModulusFunction::linear(1.0, ModRole::Varrho);
    const auto b = check_pathwise_B(example2(), varrho, 1.0, ProbeSet::pairs(3, 100, 3.0, 0.1, 5), serial());
    const auto b2 = check_pathwise_B(example2(), varrho, 1.0,
                                     ProbeSet::explicit_pairs({b.witness->x}, {b.witness->z}), serial());
    CHECK(std::abs(b2.margin - b.margin) <= 1e-12);
}

TEST_CASE("fitted constants are monotone in the probe set") {
    const auto zeta = ModulusFunction::constant(1.0, ModRole::Zeta);
    const auto small = ProbeSet::ball(3, 50, 4.0, 8);
    auto pts = small.points();
    const double k1 = check_nonexplosion(example2(), zeta, std::nullopt, small, serial()).params["kappa"].get<double>();
    for (const Vec& x : ProbeSet::ball(3, 50, 4.0, 9).points()) pts.push_back(x);
    const double k2 = check_nonexplosion(example2(), zeta, std::nullopt, ProbeSet::explicit_points(pts), serial())
                          .params["kappa"]
                          .get<double>();
    CHECK(k2 >= k1);
}

TEST_CASE("pathwise A") {
    const auto rho = ModulusFunction::linear(1.0, ModRole::Rho);
    const Model m = example1();
    // the jump part at one pair: |dgamma| int |u| nu, int |u| nu = 4 pi / (1 - alpha)
    const Vec x = Vec::Constant(3, 0.5), z = Vec::Constant(3, 0.5) + Vec::Unit(3, 0) * 1e-3;
    const auto r = check_pathwise_A(m, rho, 1e6, ProbeSet::explicit_pairs({x}, {z}), serial());
    const double g = example_gamma(0.5);
    const double dg = g * std::abs(std::pow(0.5, 2.0 / 3.0) - std::pow(0.5 + 1e-3, 2.0 / 3.0));
    CHECK(r.sub[1].witness->lhs == doctest::Approx(dg * 4 * M_PI / 0.5).epsilon(1e-9));
    // the drift/diffusion part is nonpositive
    CHECK(r.sub[0].witness->lhs <= 0.0);

    const auto big = check_pathwise_A(m, rho, std::nullopt, ProbeSet::pairs(3, 200, 3.0, 0.1, 2), serial());
    CHECK(big.sub[0].status != CheckStatus::Violated);
    CHECK(big.sub[0].margin <= 1e-9);

    // alpha >= 1: the first-moment integral diverges and is reported as such
    const auto div = check_pathwise_A(example1(1.2), rho, 1.0, ProbeSet::explicit_pairs({x}, {z}), serial());
    CHECK(div.status == CheckStatus::Inconclusive);
    CHECK(div.sub[1].n_failed == 1);

    // sqrt drift: |<x - z, b(x) - b(z)>| ~ r^1.5 from the origin
    const Model h = drift_only(2, [](const Vec& y) {
        Vec b(2);
        b << -spow(y[0], 0.5), -spow(y[1], 0.5);
        return b;
    });
    std::vector<Vec> xs, zs;
    for (int k = 1; k <= 8; ++k) {
        xs.push_back(Vec::Zero(2));
        zs.push_back(std::pow(10.0, -k) * v2(0.6, 0.8));
    }
    const auto hp = check_pathwise_A(h, rho, std::nullopt, ProbeSet::explicit_pairs(xs, zs), serial());
    CHECK(hp.params["fitted_rho_exponent"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("pathwise B on the worked examples") {
    const auto varrho = ModulusFunction::linear(1.0, ModRole::Varrho);
    const auto probes = ProbeSet::pairs(3, 1000, 3.0, 0.5, 7);
    const auto r = check_pathwise_B(example1(), varrho, std::nullopt, probes, serial());
    CHECK(r.status == CheckStatus::Holds);
    CHECK(r.params["kappa_R"].get<double>() == 0.0);
    CHECK(r.margin <= 1e-9);
    const auto r2 = check_pathwise_B(example2(), varrho, std::nullopt, probes, serial());
    CHECK(r2.status == CheckStatus::Holds);
    // a varrho failing the (1 + r)^2 bound is rejected up front
    const auto bad = ModulusFunction::power(1.0, 3.0, ModRole::Varrho);
    CHECK_THROWS_AS(check_pathwise_B(example1(), bad, 1.0, probes, serial()), InvalidArgument);
    CHECK_THROWS_AS(check_pathwise_B(example1(), ModulusFunction::linear(1, ModRole::Rho), 1.0, probes), InvalidArgument);
}

TEST_CASE("Feller check caps the jump integral") {
    // c(x, u) = (1 + sin(x1)/2) u, nu = |u|^-(2 + 1.5) du on all of R^2
    const double alpha = 1.5;
    Model m;
    m.name = "stable-multiplicative";
    m.d = 2;
    m.noise_dim = 2;
    m.drift = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
    m.jump = JumpKernel::separable([](const Vec& x) -> Mat { return (1 + 0.5 * std::sin(x[0])) * Mat::Identity(2, 2); },
                                   [](const Vec& u) -> Vec { return u; }, 2);
    m.levy = LevyMeasure::power_law(2, alpha, 0, kInf);
    const Vec x = v2(0.3, 0.1), z = v2(0.35, 0.1);
    const auto varrho = ModulusFunction::linear(1.0, ModRole::Varrho);
    const auto r = check_feller(m, varrho, std::nullopt, ProbeSet::explicit_pairs({x}, {z}), serial());
    // oracle: 2 pi [d^2 r*^(2-a)/(2-a) + 4 s d r*^(1-a)/(a-1)], r* = 4 s / d
    const double s = 0.05, dl = 0.5 * std::abs(std::sin(0.3) - std::sin(0.35));
    const double rs = 4 * s / dl;
    const double capped =
        2 * M_PI * (dl * dl * std::pow(rs, 2 - alpha) / (2 - alpha) + 4 * s * dl * std::pow(rs, 1 - alpha) / (alpha - 1));
    CHECK(r.witness->lhs == doctest::Approx(capped).epsilon(1e-7));
    CHECK(r.params["uncapped_jump_second_moment"] == "diverges");
    CHECK(r.status == CheckStatus::Holds);

    const auto e1 = check_feller(example1(), varrho, std::nullopt, ProbeSet::pairs(3, 200, 3.0, 0.1, 1), serial());
    CHECK(e1.status != CheckStatus::Violated);
    const auto z0 = check_feller(zero_model(2), varrho, 0.0, ProbeSet::pairs(2, 50, 3.0, 0.1, 1), serial());
    CHECK(z0.status == CheckStatus::Holds);
    CHECK(z0.margin == 0.0);
}

TEST_CASE("strong Feller") {
    const auto th = ModulusFunction::linear(1.0, ModRole::Vartheta);
    const auto probes = ProbeSet::pairs(3, 200, 3.0, 0.1, 11);
    const auto r = check_strong_feller(example2(), 3.0, th, std::nullopt, probes, serial());
    CHECK(r.sub[0].status == CheckStatus::Holds);
    CHECK(r.sub[0].margin == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.status != CheckStatus::Violated);

    const auto z = check_strong_feller(zero_model(3), 1.0, th, std::nullopt, probes, serial());
    CHECK(z.status == CheckStatus::Violated);
    CHECK(z.sub[0].margin == 1.0);

    const auto o = check_strong_feller(ou(2), 1.0, th, std::nullopt, ProbeSet::pairs(2, 200, 3.0, 0.1, 11), serial());
    CHECK(o.status == CheckStatus::Holds);
    CHECK(check_strong_feller(ou(2), 1.5, th, 1.0, ProbeSet::pairs(2, 20, 3.0, 0.1, 11), serial()).status ==
          CheckStatus::Violated);
    CHECK_THROWS_AS(check_strong_feller(ou(2), 1.0, ModulusFunction::constant(1, ModRole::Vartheta), 1.0,
                                        ProbeSet::pairs(2, 20, 3.0, 0.1, 11)),
                    InvalidArgument);
}

TEST_CASE("non-confluence") {
    const auto V = RadialFunction::inverse_square();
    const auto probes = ProbeSet::pairs(2, 300, 3.0, 1.0, 13, 1e-4);
    const auto r = check_nonconfluence(ou_jumps(), V, std::nullopt, probes, serial());
    CHECK(r.status == CheckStatus::Holds);
    CHECK(r.sub[1].params["max_bad_fraction"].get<double>() == 0.0);
    CHECK(std::isfinite(r.params["K"].get<double>()));

    // strong contraction: generator of V = 2 / (eps r^2) > psi(V) = V
    const double eps = 1e-3;
    const Model pull = drift_only(2, [eps](const Vec& x) -> Vec { return -x / eps; });
    const auto psi = ModulusFunction::linear(1.0, ModRole::Psi);
    const auto p = check_nonconfluence(pull, V, psi, probes, serial());
    CHECK(p.status == CheckStatus::Violated);
    const double rr = (p.witness->x - p.witness->z).norm();
    CHECK(p.witness->lhs == doctest::Approx(2 / (eps * rr * rr)).epsilon(1e-9));

    const auto b = check_nonconfluence(brownian(2), V, psi, probes, serial());
    CHECK(b.status == CheckStatus::Holds);
    CHECK(b.sub[0].witness->lhs == 0.0);

    CHECK_THROWS_AS(check_nonconfluence(brownian(2), RadialFunction::bounded(), psi, probes), InvalidArgument);
}

TEST_CASE("drift condition for ergodicity") {
    const auto V = TestFunction::abs2();
    const auto probes = ProbeSet::ball(3, 300, 5.0, 17);
    const auto r = check_drift_ergodicity(example2(), V, std::nullopt, std::nullopt, probes, serial());
    CHECK(r.status == CheckStatus::Holds);
    CHECK(r.params["LV_origin"].get<double>() == doctest::Approx(42.0).epsilon(1e-10));
    CHECK(r.params["alpha"].get<double>() > 0.0);
    CHECK(r.params["beta"].get<double>() >= 42.0 - 1e-9);

    const auto given = check_drift_ergodicity(example2(), V, 1.0, 42.0, ProbeSet::explicit_points({Vec::Zero(3)}), serial());
    CHECK(given.status == CheckStatus::Holds);
    CHECK(given.margin == doctest::Approx(0.0).epsilon(1e-9));

    const auto bm = check_drift_ergodicity(brownian(3), V, std::nullopt, std::nullopt, probes, serial());
    CHECK(bm.status == CheckStatus::Violated);
    const auto js = nlohmann::json::parse(r.to_json().dump());
    CHECK(js["schema_version"] == 1);
    CHECK(js["status"] == "holds-on-probes");
    CHECK(js.contains("witness"));
    CHECK(js["params"]["LV_origin"].get<double>() == doctest::Approx(42.0));
}

TEST_CASE("Levy-driven front end") {
    const auto probes = ProbeSet::pairs(2, 2000, 1.0, 0.1, 19, 1e-6);
    LevyDrivenConditions c;
    c.zeta = ModulusFunction::constant(1.0, ModRole::Zeta);
    c.varrho = ModulusFunction::linear(1.0, ModRole::Varrho);
    c.lambda0 = 1.0;
    const Mat Q = Mat::Identity(2, 2);
    const auto id = check_levy_driven([](const Vec&) -> Mat { return Mat::Identity(2, 2); }, Q, c, probes, serial());
    CHECK(id.status == CheckStatus::Holds);

    c.lambda0.reset();
    const auto lin = check_levy_driven([](const Vec& x) -> Mat { return (1 + x.norm()) * Mat::Identity(2, 2); }, Q, c,
                                       probes, serial());
    CHECK(lin.status == CheckStatus::Holds);
    // |psi(x) - psi(z)|^2 = d (|x| - |z|)^2 <= d |x - z|^2
    CHECK(lin.sub[1].params["K"].get<double>() <= 2.0 + 1e-9);

    c.K = 1.0;
    const auto sg = check_levy_driven(
        [](const Vec& x) -> Mat {
            Mat p = Mat::Zero(2, 2);
            p(0, 0) = x[0] > 0 ? 1 : -1;
            p(1, 1) = x[1] > 0 ? 1 : -1;
            return p;
        },
        Q, c, probes, serial());
    CHECK(sg.sub[1].status == CheckStatus::Violated);
    const Vec wx = sg.sub[1].witness->x, wz = sg.sub[1].witness->z;
    CHECK(((wx[0] > 0) != (wz[0] > 0) || (wx[1] > 0) != (wz[1] > 0)));
}

TEST_CASE("inverse-square three-case bound") {
    Stream s(23, 0, Substream::Auxiliary);
    const double delta = 0.5;
    long used = 0;
    for (int i = 0; i < 20000; ++i) {
        const int d = 1 + i % 3;
        Vec x(d), y(d);
        for (int j = 0; j < d; ++j) {
            x[j] = s.normal();
            y[j] = s.normal() * std::exp(2 * s.normal());
        }
        const auto b = inverse_square_bound(x, y, delta);
        CHECK(b.K == 8.0);
        if (!b.applicable) continue;
        ++used;
        CHECK(b.lhs <= b.rhs * (1 + 1e-12) + 1e-300);
    }
    CHECK(used > 10000);
    // equality in case 1 along y parallel to x, to second order
    const auto e = inverse_square_bound(v2(1, 0), v2(1e-4, 0), delta);
    CHECK(e.lhs == doctest::Approx(3e-8).epsilon(1e-3));
}
