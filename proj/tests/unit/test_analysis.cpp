#include "doctest.h"

#include "oracles.hpp"

#include "jumpsde/analysis.hpp"
#include "jumpsde/builtin.hpp"
#include "jumpsde/rng.hpp"

#include <cmath>
#include <sstream>

using namespace jumpsde;

namespace {

std::vector<Vec> gaussian_cloud(int n, int d, std::uint64_t seed, double shift = 0.0) {
    Stream s(seed, 7, Substream::Auxiliary);
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) {
        Vec v(d);
        for (int j = 0; j < d; ++j) v[j] = s.normal() + shift;
        out.push_back(v);
    }
    return out;
}

Mat cost_matrix(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    Mat C(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) C(i, j) = bounded_metric(a[i], b[j]);
    }
    return C;
}

SimConfig quick(long n, double dt = 1e-2) {
    SimConfig c;
    c.n_paths = n;
    c.dt = dt;
    c.master_seed = 11;
    return c;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("bounded Wasserstein: trivial values") {
    const auto pts = gaussian_cloud(50, 3, 1);
    const EmpiricalLaw a = EmpiricalLaw::uniform(pts);
    CHECK(wasserstein_bounded(a, a) == 0.0);

    Vec x(2), z(2);
    x << 0.0, 0.0;
    z << 3.0, 4.0;
    const double w = wasserstein_bounded(EmpiricalLaw::uniform({x}), EmpiricalLaw::uniform({z}));
    CHECK(w == doctest::Approx(5.0 / 6.0).epsilon(1e-14));

    CHECK_THROWS_AS(wasserstein_bounded(a, EmpiricalLaw::uniform(gaussian_cloud(49, 3, 2))), SizeMismatch);
}

TEST_CASE("bounded Wasserstein: Hungarian matches independent oracles") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto a = gaussian_cloud(7, 2, 10 + s), b = gaussian_cloud(7, 2, 20 + s, 0.5);
        double total = 0.0;
        solve_assignment(cost_matrix(a, b), &total);
        CHECK(total == doctest::Approx(oracle::assignment_exhaustive(cost_matrix(a, b))).epsilon(1e-12));
    }
    const auto a = gaussian_cloud(64, 3, 31), b = gaussian_cloud(64, 3, 32);
    const double w = wasserstein_bounded(EmpiricalLaw::uniform(a), EmpiricalLaw::uniform(b));
    CHECK(w == doctest::Approx(oracle::assignment_min_cost_flow(cost_matrix(a, b)) / 64).epsilon(1e-12));
}

TEST_CASE("bounded Wasserstein: metric properties") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto a = EmpiricalLaw::uniform(gaussian_cloud(40, 2, 100 + s));
        const auto b = EmpiricalLaw::uniform(gaussian_cloud(40, 2, 200 + s, 0.3));
        const auto c = EmpiricalLaw::uniform(gaussian_cloud(40, 2, 300 + s, -0.5));
        const double ab = wasserstein_bounded(a, b), ba = wasserstein_bounded(b, a);
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(ab <= wasserstein_bounded(a, c) + wasserstein_bounded(c, b) + 1e-12);
        CHECK(ab > 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("bounded Wasserstein: sliced estimator above the cutoff") {
    const auto a = EmpiricalLaw::uniform(gaussian_cloud(300, 2, 5));
    WassersteinOptions o;
    o.exact_cutoff = 100;
    const WassersteinResult self = wasserstein_bounded_detail(a, a, o);
    CHECK_FALSE(self.exact);
    CHECK(self.value == 0.0);
    const auto far = EmpiricalLaw::uniform(gaussian_cloud(300, 2, 6, 20.0));
    const WassersteinResult r = wasserstein_bounded_detail(a, far, o);
    // shift of 20 sqrt(2) in the bounded metric, up to the sample spread
    CHECK(r.value == doctest::Approx(28.28 / 29.28).epsilon(0.01));
    CHECK(r.mc_error >= 0.0);
}

TEST_CASE("feller probe: Example 1 shrinks to the noise floor") {
    Vec x(3);
    x << 0.5, -0.3, 0.2;
    const FellerProbe p = feller_probe(example1(), x, 1.0, {}, quick(256));
    REQUIRE(p.rows.size() == 4);
    CHECK(p.decreasing);
    CHECK_FALSE(p.stalled);
    CHECK(p.rows.back().distance <= 2.0 * p.noise_floor);

    // z = x gives the self-distance
    const FellerProbe s = feller_probe(example1(), x, 1.0, {0.0}, quick(256));
    CHECK(s.rows[0].distance <= 2.0 * s.noise_floor);
}

TEST_CASE("feller probe: discontinuous jump coefficient stalls") {
    const FellerProbe p = feller_probe(nonfeller_demo(), Vec::Zero(2), 1.0, {}, quick(256));
    CHECK(p.stalled);
    CHECK(p.rows.back().distance > 0.2);
}

TEST_CASE("strong Feller probe") {
    const Model m = ou(2);
    StrongFellerOptions o;
    o.radii = {0.1, 0.05};

    SUBCASE("constant f") {
        const StrongFellerProbe p = strong_feller_probe(m, TestFunction::constant(1.0), Vec::Zero(2), 1.0, o, quick(500));
        for (const auto& r : p.rows) CHECK(r.diff == 0.0);
        CHECK(p.fitted_constant == 0.0);
    }
    SUBCASE("OU against the Gaussian transition") {
        const StrongFellerProbe p =
            strong_feller_probe(m, TestFunction::half_space_indicator(0), Vec::Zero(2), 1.0, o, quick(20000));
        const double st = std::sqrt((1.0 - std::exp(-2.0)) / 2.0);
        double num = 0.0, den = 0.0;
        for (double h : o.radii) {
            num += normal_cdf(h * std::exp(-1.0) / st) - 0.5;
            den += h;
        }
        CHECK(std::abs(p.fitted_constant - num / den) <= 4.0 * p.fitted_se + 0.01 * num / den);
        CHECK_FALSE(p.diverging);
    }
    SUBCASE("deterministic flow") {
        StrongFellerOptions d = o;
        d.radii = {1e-1, 1e-2, 1e-3};
        const StrongFellerProbe p =
            strong_feller_probe(linear_ode(2, -1.0), TestFunction::half_space_indicator(0), Vec::Zero(2), 1.0, d, quick(50));
        CHECK(p.diverging);
        CHECK(p.log_slope == doctest::Approx(-1.0).epsilon(1e-9));
    }
    SUBCASE("coupling bound") {
        StrongFellerOptions d = o;
        d.beta = 1.5;
        d.delta = 0.5;
        const StrongFellerProbe p =
            strong_feller_probe(m, TestFunction::half_space_indicator(0), Vec::Zero(2), 2.0, d, quick(200));
        REQUIRE(p.bound);
        CHECK(*p.bound == doctest::Approx(2.0 * (1.0 / 3.0 + 3.0)));
    }
}

TEST_CASE("reflection beta for OU with lambda0 = 1") {
    // L F(r) = -4/(1+r)^3 - r/(1+r)^2 is increasing, so the max sits at r = delta
    const double beta = reflection_beta(ou(2), 1.0, 0.5, Vec::Zero(2));
    CHECK(beta == doctest::Approx(4.0 / 3.375 + 0.5 / 2.25).epsilon(1e-9));
}

TEST_CASE("confluence probe") {
    CouplingScheme sync;
    SUBCASE("same start") {
        const ConfluenceProbe p = confluence_probe(ou_jumps(), Vec::Zero(2), Vec::Zero(2), sync, quick(20));
        for (double s : p.min_separation) CHECK(s == 0.0);
        CHECK(p.glued == p.n_pairs);
    }
    SUBCASE("OU with jumps stays apart") {
        Vec z(2);
        z << 1.0, 0.0;
        SimConfig c = quick(100);
        c.horizon = 2.0;
        const ConfluenceProbe p = confluence_probe(ou_jumps(), Vec::Zero(2), z, sync, c);
        CHECK(p.glued == 0);
        CHECK(p.ci_hi > 0.0);
        CHECK(p.quantiles[0] > 0.0);
    }
    SUBCASE("confluence demo meets") {
        Vec x(2), z(2);
        x << 0.5, 0.0;
        z << -0.5, 0.2;
        CouplingScheme s;
        s.glue_radius = 1e-3;
        SimConfig c = quick(100);
        c.horizon = 2.0;
        const ConfluenceProbe p = confluence_probe(confluence_demo(), x, z, s, c);
        CHECK(p.hit_fraction > 0.0);
        const auto cdf = coupling_time_cdf(p.coupling_time, {0.0, 2.0});
        CHECK(cdf[1] == doctest::Approx(p.hit_fraction));
    }
}

TEST_CASE("partition distance") {
    const auto a = gaussian_cloud(400, 2, 1);
    CHECK(partition_distance(a, a, TestFunction::abs2(), 4) == 0.0);
    // a point mass far out sits in one corner cell, whose reference mass is
    // at most 1/4 (one quantile slab per axis), with f = 201 there
    std::vector<Vec> far(10, Vec::Constant(2, 10.0));
    const double d = partition_distance(far, a, TestFunction::abs2(), 4);
    CHECK(d >= 0.75 * 201.0);
}

TEST_CASE("ergodicity fit") {
    ErgodicityOptions o;
    for (int k = 0; k <= 30; ++k) o.times.push_back(0.1 * k);
    o.reference_horizon = 8.0;
    SUBCASE("OU rate") {
        const ErgodicityFit f = ergodicity_fit(ou(2), {Vec::Constant(2, 3.0)}, TestFunction::abs2(), o, quick(2000));
        CHECK(f.theta >= std::exp(-2.0));
        CHECK(f.theta < 1.0);
        CHECK_FALSE(f.non_stationary);
        CHECK_FALSE(f.non_ergodic);
        CHECK(f.n_fit >= 3);
    }
    SUBCASE("Brownian motion") {
        const ErgodicityFit f = ergodicity_fit(brownian(2), {Vec::Zero(2)}, TestFunction::abs2(), o, quick(2000));
        CHECK(f.non_stationary);
        CHECK(f.non_ergodic);
    }
}

TEST_CASE("irreducibility probe") {
    Vec x(2);
    x << 0.3, 0.0;
    SimConfig c = quick(400);
    const auto near = irreducibility_probe(ou_jumps(), x, 1.0, {{x, 100.0}}, c);
    CHECK(near[0].estimate == 1.0);
    Vec off(2);
    off << 0.0, 1.0;
    const auto none = irreducibility_probe(linear_ode(2, -1.0), x, 1.0, {{off, 0.1}}, c);
    CHECK(none[0].hits == 0);
    CHECK(none[0].ci_hi > 0.0);
    std::ostringstream os;
    write_hits_csv(none, os);
    CHECK(os.str().rfind("center,radius,hits,n,estimate,ci_lo,ci_hi\n0;1,", 0) == 0);
}

TEST_CASE("Feynman-Kac") {
    CauchyProblem p;
    p.model = brownian(3);
    p.T = 1.0;
    p.f = [](const Vec& y) { return y.squaredNorm(); };
    Vec x(3);
    x << 0.5, -1.0, 0.2;
    const SimConfig c = quick(20000, 0.05);

    SUBCASE("heat") {
        const FeynmanKacResult r = feynman_kac(p, 0.25, x, c);
        CHECK(std::abs(r.estimate - (x.squaredNorm() + 3 * 0.75)) <= 4 * r.se);
        CHECK(r.n_exploded == 0);
    }
    SUBCASE("constant killing") {
        p.rho = [](double, const Vec&) { return 0.7; };
        const FeynmanKacResult r = feynman_kac(p, 0.0, x, c);
        CHECK(std::abs(r.estimate - std::exp(-0.7) * (x.squaredNorm() + 3.0)) <= 4 * r.se);
    }
    SUBCASE("unit source") {
        p.f = [](const Vec&) { return 0.0; };
        p.g = [](double, const Vec&) { return -1.0; };
        const FeynmanKacResult r = feynman_kac(p, 0.3, x, quick(100, 0.05));
        CHECK(r.estimate == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("unit payoff") {
        p.f = [](const Vec&) { return 1.0; };
        const FeynmanKacResult r = feynman_kac(p, 0.0, x, quick(100, 0.05));
        CHECK(r.estimate == 1.0);
        CHECK(r.se == 0.0);
    }
    SUBCASE("negative killing") {
        p.rho = [](double, const Vec&) { return -1.0; };
        CHECK_THROWS_AS(feynman_kac(p, 0.0, x, quick(10)), InvalidArgument);
    }
    SUBCASE("explosion warning") {
        CauchyProblem q;
        q.model = cubic_explosion();
        q.T = 1.0;
        q.f = [](const Vec&) { return 1.0; };
        SimConfig e = quick(10, 1e-3);
        e.scheme = Scheme::Euler;
        e.explosion_radius = 1e6;
        const Vec z = Vec::Constant(2, 0.1);
        q.model = cubic_explosion();
        CHECK_THROWS_AS(feynman_kac(q, 0.0, Vec::Constant(2, 2.0), e), InvalidArgument);
        const FeynmanKacResult ok = feynman_kac(q, 0.0, z, e);
        CHECK(ok.n_exploded == 0);
    }
}
