#include "doctest.h"

#include "jumpsde/builtin.hpp"
#include "jumpsde/coupling.hpp"
#include "jumpsde/decomposition.hpp"
#include "jumpsde/simulator.hpp"
#include "jumpsde/stats.hpp"

#include <cmath>
#include <sstream>

using namespace jumpsde;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}
Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

}  // namespace

// --- decomposition --------------------------------------------------------

TEST_CASE("decomposition of a single atom") {
    const Vec y = v2(0.3, -0.4);
    auto dec = build_decomposition(2, [y](const Vec&) { return std::vector<LevyMeasure>{LevyMeasure::atoms({y}, {0.7})}; });
    const auto st = dec->at(Vec::Zero(2));
    REQUIRE(st.slabs().size() == 1);
    for (double xi : {0.0, 0.25, 0.999}) {
        CHECK(st.lambda(xi) == 0.7);
        CHECK((st.gamma(xi) - y).norm() == 0.0);
    }
    CHECK(st.lambda(1.5) == 0.0);
    CHECK(st.c(v2(0.5, 0.69)).isApprox(y));
    CHECK(st.c(v2(0.5, 0.71)).norm() == 0.0);

    auto heavy = build_decomposition(2, [y](const Vec&) { return std::vector<LevyMeasure>{LevyMeasure::atoms({y}, {1.5})}; });
    CHECK_THROWS_AS(heavy->at(Vec::Zero(2)), SliceMassOverflow);
}

TEST_CASE("decomposition reads a state-dependent atom off directly") {
    auto dec = build_decomposition(3, [](const Vec& x) {
        const double r = x.norm();
        return std::vector<LevyMeasure>{LevyMeasure::atoms({x / r}, {std::min(r, 1.0)})};
    });
    const Vec x = v3(2, 0, 0);
    CHECK(dec->lambda(x, 0.3) == 1.0);
    CHECK((dec->gamma(x, 0.3) - v3(1, 0, 0)).norm() == 0.0);
    CHECK(dec->lambda(v3(0, 0.25, 0), 0.1) == 0.25);
}

TEST_CASE("decomposition of an infinite-activity density needs a cut") {
    const auto nu = [](const Vec&) { return std::vector<LevyMeasure>{LevyMeasure::power_law(2, 1.0, 0, 1)}; };
    CHECK_THROWS_AS(build_decomposition(2, nu)->at(Vec::Zero(2)), SliceMassOverflow);
    DecompositionOptions o;
    o.truncation = 0.2;
    const auto st = build_decomposition(2, nu, o)->at(Vec::Zero(2));
    double total = 0;
    for (const auto& s : st.slabs()) {
        CHECK(s.mass <= 1.0);
        total += s.mass;
    }
    // 2 pi (0.2^-1 - 1)
    CHECK(total == doctest::Approx(8 * M_PI).epsilon(1e-12));
    o.max_slabs = 10;
    CHECK_THROWS_AS(build_decomposition(2, nu, o)->at(Vec::Zero(2)), SliceMassOverflow);
}

TEST_CASE("decomposition reproduces a radial law") {
    // general (tabulated) density exp(-r) r^-3 on (0.1, inf) in R^3
    const auto nu = [](const Vec&) {
        return std::vector<LevyMeasure>{
            LevyMeasure::radial(3, [](double r) { return std::exp(-r) / (r * r * r); }, 0.1, kInf)};
    };
    auto dec = build_decomposition(3, nu);
    const auto st = dec->at(Vec::Zero(3));
    const double L = static_cast<double>(st.slabs().size());
    const LevyMeasure ref = nu(Vec())[0];
    const double total = ref.mass();
    Stream s(77, 0, Substream::Auxiliary);
    std::vector<double> radii;
    while (radii.size() < 10000) {
        const Vec c = st.c(v2(L * s.uniform(), s.uniform()));
        if (c.norm() > 0) radii.push_back(c.norm());
    }
    const auto cdf = [&](double r) { return ref.mass_between(0.1, r) / total; };
    CHECK(ks_test(radii, cdf) > 0.01);
}

TEST_CASE("levy_ito_model") {
    const auto bm = levy_ito_model(2, nullptr, Vec::Zero(2), Mat::Identity(2, 2), LevyMeasure::zero(2));
    CHECK(bm.b(v2(1, 2)).norm() == 0.0);
    CHECK((bm.sigma(v2(1, 2)) - Mat::Identity(2, 2)).norm() < 1e-14);
    CHECK_FALSE(bm.has_jumps());
    Mat bad(2, 2);
    bad << 1, 0, 0, -1;
    CHECK_THROWS_AS(levy_ito_model(2, nullptr, Vec::Zero(2), bad, LevyMeasure::zero(2)), NotPSD);

    // psi = diag(x), 1-stable radial measure: int |diag(x) u|^2 = |x|^2 int u_1^2 = |x|^2 pi
    const auto psi = [](const Vec& x) -> Mat { return x.cwiseMax(-5.0).cwiseMin(5.0).asDiagonal(); };
    const auto st = levy_ito_model(2, psi, Vec::Zero(2), Mat::Zero(2, 2), LevyMeasure::power_law(2, 1.0, 0, kInf));
    const Vec x = v2(0.6, -1.1);
    CHECK(jump_second_moment(st, x).value == doctest::Approx(x.squaredNorm() * M_PI).epsilon(1e-8));

    // psi = I, drift only: straight line
    const auto line = levy_ito_model(2, nullptr, v2(1.0, -2.0), Mat::Zero(2, 2), LevyMeasure::zero(2));
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.5;
    cfg.scheme = Scheme::Euler;
    cfg.n_paths = 3;
    const auto e = simulate(line, v2(0.5, 0.5), cfg);
    CHECK((e.endpoint(2) - v2(2.0, -2.5)).norm() < 1e-12);
}

// --- simulator ------------------------------------------------------------

TEST_CASE("OU mean") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_paths = 10000;
    cfg.master_seed = 5;
    const auto e = simulate(ou(2), v2(1, 0), cfg);
    std::vector<double> a, b;
    for (long i = 0; i < e.n_paths(); ++i) {
        a.push_back(e.endpoint(i)[0]);
        b.push_back(e.endpoint(i)[1]);
    }
    CHECK(std::abs(mean(a) - std::exp(-1.0)) < 4 * standard_error(a));
    CHECK(std::abs(mean(b)) < 4 * standard_error(b));
}

TEST_CASE("cubic ODE explodes near t = 1/8") {
    SimConfig cfg;
    cfg.dt = 1e-4;
    cfg.n_paths = 4;
    cfg.scheme = Scheme::Euler;
    const auto r = explosion_probability(cubic_explosion(), v2(2, 2), cfg);
    CHECK(r.estimate == 1.0);
    CHECK(r.min_time >= 0.115);
    CHECK(r.max_time <= 0.135);
}

TEST_CASE("zero model stays put and never explodes") {
    SimConfig cfg;
    cfg.n_paths = 10;
    cfg.store = StoreMode::Full;
    cfg.dt = 0.1;
    const auto e = simulate(zero_model(3), v3(1, 2, 3), cfg);
    for (long i = 0; i < 10; ++i) {
        CHECK(e.status[i] == PathStatus::Alive);
        for (std::size_t k = 0; k < e.times.size(); ++k) CHECK((e.state(i, k) - v3(1, 2, 3)).norm() == 0.0);
    }
    CHECK(explosion_probability(zero_model(3), v3(1, 2, 3), cfg).estimate == 0.0);
}

TEST_CASE("determinism under any worker count, and replay") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.n_paths = 300;
    cfg.master_seed = 99;
    cfg.store = StoreMode::Full;
    cfg.store_every = 10;
    cfg.threads = 1;
    const Model m = ou_jumps();
    const auto a = simulate(m, v2(0.5, 0.5), cfg);
    cfg.threads = 4;
    const auto b = simulate(m, v2(0.5, 0.5), cfg);
    CHECK(a.states == b.states);
    const auto tr = replay(m, v2(0.5, 0.5), cfg, 123);
    for (std::size_t k = 0; k < tr.states.size(); ++k) CHECK((tr.states[k] - a.state(123, k)).norm() == 0.0);

    cfg.store = StoreMode::Running;
    cfg.threads = 1;
    const auto r1 = simulate(m, v2(0.5, 0.5), cfg);
    cfg.threads = 3;
    const auto r2 = simulate(m, v2(0.5, 0.5), cfg);
    CHECK(r1.run_mean == r2.run_mean);
    CHECK(r1.run_var == r2.run_var);
}

TEST_CASE("compensated jumps have mean zero") {
    // c(x, u) = u, nu = 2 delta_{0.5} inside the compensated region
    Vec y(1);
    y << 0.5;
    const auto m = levy_ito_model(1, nullptr, Vec::Zero(1), Mat::Zero(1, 1), LevyMeasure::atoms({y}, {2.0}));
    Model cm = m;
    cm.compensate_large = true;
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 2.0;
    cfg.n_paths = 20000;
    const auto e = simulate(cm, Vec::Zero(1), cfg);
    std::vector<double> v;
    for (long i = 0; i < e.n_paths(); ++i) v.push_back(e.endpoint(i)[0]);
    CHECK(std::abs(mean(v)) < 4 * standard_error(v));

    // infinite activity, symmetric: truncated sampling plus compensator
    const auto st = levy_ito_model(1, nullptr, Vec::Zero(1), Mat::Zero(1, 1), LevyMeasure::power_law(1, 0.8, 0, 1));
    cfg.n_paths = 5000;
    const auto e2 = simulate(st, Vec::Zero(1), cfg);
    v.clear();
    for (long i = 0; i < e2.n_paths(); ++i) v.push_back(e2.endpoint(i)[0]);
    CHECK(std::abs(mean(v)) < 4 * standard_error(v));
}

TEST_CASE("tamed and plain Euler agree per step when |b| dt is small") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 1e-3;
    cfg.n_paths = 100;
    cfg.scheme = Scheme::Euler;
    const auto a = simulate(ou(2), v2(1.5, -2.0), cfg);
    cfg.scheme = Scheme::TamedEuler;
    const auto b = simulate(ou(2), v2(1.5, -2.0), cfg);
    for (long i = 0; i < 100; ++i) CHECK((a.endpoint(i) - b.endpoint(i)).norm() < 1e-5);
}

TEST_CASE("exploded paths are frozen") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 0.3;
    cfg.n_paths = 2;
    cfg.scheme = Scheme::Euler;
    cfg.store = StoreMode::Full;
    const auto e = simulate(cubic_explosion(), v2(2, 2), cfg);
    REQUIRE(e.status[0] == PathStatus::Exploded);
    const Vec last = e.endpoint(0);
    CHECK(last.norm() > cfg.explosion_radius);
    for (std::size_t k = 0; k < e.times.size(); ++k) {
        if (e.times[k] > e.event_time[0]) CHECK((e.state(0, k) - last).norm() == 0.0);
    }
}

TEST_CASE("strong error ladder") {
    SimConfig cfg;
    cfg.n_paths = 200;
    cfg.horizon = 1.0;
    cfg.scheme = Scheme::Euler;
    const auto lin = strong_error(linear_ode(2, -1.0), v2(1, 1), cfg, {0.1, 0.05, 0.025, 0.0125});
    CHECK(lin.slope >= 0.9);
    CHECK(lin.slope <= 1.1);
    const auto zero = strong_error(zero_model(2), v2(1, 1), cfg, {0.1, 0.05, 0.025, 0.0125});
    for (const auto& r : zero.rows) CHECK(r.rms == 0.0);
    CHECK_THROWS_AS(strong_error(ou_jumps(), v2(1, 1), cfg, {0.1, 0.05}), NoClosedForm);
}

TEST_CASE("ensemble file formats") {
    SimConfig cfg;
    cfg.dt = 0.1;
    cfg.n_paths = 5;
    cfg.store = StoreMode::Full;
    const auto e = simulate(ou(2), v2(1, 0), cfg);
    std::stringstream bin;
    write_ensemble_binary(e, bin);
    const auto back = read_ensemble_binary(bin);
    CHECK(back.d == 2);
    CHECK(back.times == e.times);
    CHECK(back.states == e.states);
    CHECK(back.status == e.status);
    std::stringstream csv;
    write_paths_csv(e, csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "path_id,t,x_1,x_2,status");
    int rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    CHECK(rows == 5 * 11);
}

// --- coupling ---------------------------------------------------------------

TEST_CASE("sqrt_spd") {
    CHECK((sqrt_spd(4 * Mat::Identity(3, 3)) - 2 * Mat::Identity(3, 3)).norm() < 1e-14);
    const Mat J = Mat::Ones(3, 3);
    CHECK((sqrt_spd(11 * J) - std::sqrt(11.0 / 3.0) * J).norm() < 1e-12);
    CHECK(std::sqrt(11.0 / 3.0) == doctest::Approx(1.91485).epsilon(1e-5));
    Mat d(2, 2);
    d << 1, 0, 0, 2;
    Mat r(2, 2);
    r << 1, 0, 0, std::sqrt(2.0);
    CHECK((sqrt_spd(d) - r).norm() < 1e-14);
    CHECK_THROWS_AS(sqrt_spd(-d), NotPSD);
    Mat tiny(2, 2);
    tiny << 1, 0, 0, -1e-13;
    CHECK(sqrt_spd(tiny)(1, 1) == 0.0);
}

TEST_CASE("coupled pairs") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;
    cfg.n_paths = 50;
    CouplingScheme sync;
    const auto same = couple(ou_jumps(), v2(1, 0), v2(1, 0), sync, cfg);
    for (long i = 0; i < 50; ++i) {
        CHECK(same.coupling_time[i] == 0.0);
        CHECK((same.x_end(i) - same.z_end(i)).norm() == 0.0);
    }

    // the synchronous X marginal is path-by-path the simulate() path
    const auto e = simulate(ou_jumps(), v2(1, 0), cfg);
    const auto p = couple(ou_jumps(), v2(1, 0), v2(-1, 0), sync, cfg);
    for (long i = 0; i < 50; ++i) CHECK((p.x_end(i) - e.endpoint(i)).norm() == 0.0);
}

TEST_CASE("reflection coupling of OU couples") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 10.0;
    cfg.n_paths = 1000;
    CouplingScheme s;
    s.kind = CouplingKind::Reflection;
    s.lambda0 = 1.0;
    const auto p = couple(ou(2), v2(1, 0), v2(-1, 0), s, cfg);
    long hit = 0;
    for (long i = 0; i < p.n_pairs(); ++i) hit += p.glued(i);
    CHECK(hit > 990);

    // larger glue radius never couples later on shared noise
    cfg.horizon = 2.0;
    cfg.n_paths = 200;
    s.glue_radius = 1e-6;
    const auto g1 = couple(ou(2), v2(1, 0), v2(-1, 0), s, cfg);
    s.glue_radius = 1e-2;
    const auto g2 = couple(ou(2), v2(1, 0), v2(-1, 0), s, cfg);
    for (long i = 0; i < 200; ++i) CHECK(g2.coupling_time[i] <= g1.coupling_time[i]);
}

TEST_CASE("reflection marginal matches simulate") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;
    cfg.n_paths = 10000;
    CouplingScheme s;
    s.kind = CouplingKind::Reflection;
    s.lambda0 = 1.0;
    s.glue_radius = 0.0;
    const auto p = couple(ou(2), v2(1, 0), v2(-1, 0), s, cfg);
    SimConfig c2 = cfg;
    c2.master_seed = 1234;
    const auto e = simulate(ou(2), v2(1, 0), c2);
    std::vector<double> a, b;
    for (long i = 0; i < 10000; ++i) {
        a.push_back(p.x_end(i)[0]);
        b.push_back(e.endpoint(i)[0]);
    }
    CHECK(ks_test_2(a, b) > 0.01);
}

TEST_CASE("pair increment covariance equals the pair diffusion matrix") {
    const Model m = example2();
    CouplingScheme s;
    s.kind = CouplingKind::Reflection;
    s.lambda0 = 3.0;
    const Vec x = v3(0.2, -0.1, 0.5), z = v3(-0.3, 0.4, 0.1);
    const Mat target = pair_diffusion_matrix(m, s, x, z);
    Stream rs(3, 0, Substream::Auxiliary);
    const int n = 100000;
    Mat acc = Mat::Zero(6, 6), acc2 = Mat::Zero(6, 6);
    Vec w1(3), w2(3);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < 3; ++j) w1[j] = rs.normal();
        for (int j = 0; j < 3; ++j) w2[j] = rs.normal();
        const Vec inc = pair_diffusion_increment(m, s, x, z, w1, w2);
        const Mat o = inc * inc.transpose();
        acc += o;
        acc2 += o.cwiseProduct(o);
    }
    const Mat cov = acc / n;
    const Mat var = acc2 / n - cov.cwiseProduct(cov);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) CHECK(std::abs(cov(i, j) - target(i, j)) <= 3 * std::sqrt(var(i, j) / n) + 1e-12);
    }
    // the reflection part: X and Z see mirrored lambda0 noise
    const Vec e = (x - z).normalized();
    const Mat g = target.topRightCorner(3, 3);
    const Mat sl = sqrt_spd(m.a(x) - 3 * Mat::Identity(3, 3));
    CHECK((g - (3 * (Mat::Identity(3, 3) - 2 * e * e.transpose()) + sl * sl.transpose())).norm() < 1e-10);
}

TEST_CASE("synchronous difference of a constant-noise OU follows the drift flow") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;
    cfg.n_paths = 20;
    cfg.scheme = Scheme::Euler;
    const auto p = couple(ou(2), v2(1, 0.5), v2(0, 0), CouplingScheme{}, cfg);
    const Vec expect = v2(1, 0.5) * std::pow(1 - cfg.dt, 100);
    for (long i = 0; i < 20; ++i) CHECK((p.x_end(i) - p.z_end(i) - expect).norm() < 1e-6);
}

TEST_CASE("synchronous Example 1 pairs stay close") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 1.0;
    cfg.n_paths = 100;
    const Vec x0 = v3(1, 1, 1);
    const Vec z0 = x0 + v3(1e-3, 0, 0);
    const auto p = couple(example1(), x0, z0, CouplingScheme{}, cfg);
    double s = 0;
    for (long i = 0; i < 100; ++i) s += (p.x_end(i) - p.z_end(i)).norm();
    CHECK(s / 100 < 1e-2);
}

TEST_CASE("two-point operators") {
    const RadialFunction F = RadialFunction::bounded();
    const RadialFunction sq = RadialFunction::square();
    // constant sigma, no drift, no jumps: nothing moves the difference
    const Model bm = brownian(2);
    CHECK(basic_coupling_generator(bm, F, v2(0.3, 0.1), v2(-0.2, 0.4)).value == 0.0);
    // OU with V = r^2: -2 r^2
    const Vec x = v2(0.7, 0.2), z = v2(0.1, -0.3);
    CHECK(basic_coupling_generator(ou(2), sq, x, z).value == doctest::Approx(-2 * (x - z).squaredNorm()).epsilon(1e-12));
    CHECK_THROWS_AS(basic_coupling_generator(ou(2), sq, x, x), SingularRadius);

    // ou_jumps: |dc|^2 = (sin x1 - sin z1)^2 |u|^2 / 4, int |u|^2 nu = 1/2
    const auto v = basic_coupling_generator(ou_jumps(), sq, x, z);
    const double ds = std::sin(x[0]) - std::sin(z[0]);
    CHECK(v.value == doctest::Approx(-2 * (x - z).squaredNorm() + ds * ds / 8).epsilon(1e-8));

    // reflection, OU, lambda0 = 1, r = 0.1
    const auto w = reflection_generator(ou(2), F, 1.0, v2(0.05, 0), v2(-0.05, 0));
    CHECK(std::abs(w.value - (-4 / std::pow(1.1, 3) - 0.1 / std::pow(1.1, 2))) < 1e-12);
    CHECK(w.value == doctest::Approx(-3.0879).epsilon(1e-4));
    // a = lambda0 I, b = 0: only 2 lambda0 F''
    const auto bw = reflection_generator(brownian(2), F, 1.0, v2(0.2, 0), v2(0, 0));
    CHECK(bw.value == doctest::Approx(2 * F.d2F(0.2)).epsilon(1e-12));
    CHECK_THROWS_AS(reflection_generator(brownian(2), F, 2.0, v2(0.2, 0), v2(0, 0)), NotPSD);
    CHECK(estimate_lambda0(example2(), {v3(0, 0, 0), v3(1, 2, 3)}) == doctest::Approx(2.97).epsilon(1e-10));
}
