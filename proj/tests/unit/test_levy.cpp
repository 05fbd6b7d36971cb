#include "doctest.h"

#include "jumpsde/levy_measure.hpp"
#include "jumpsde/stats.hpp"

#include <cmath>

using namespace jumpsde;

TEST_CASE("split of power-law measures") {
    const double alpha = 0.5;
    // unit-ball support: nothing beyond radius 1
    const auto ball = LevyMeasure::power_law(3, alpha, 0, 1);
    const auto [s0, l0] = ball.split(1.0);
    CHECK(l0.mass() == 0.0);
    CHECK(std::isinf(s0.mass()));
    // full space, tail mass 4 pi / alpha
    for (double a : {0.5, 1.0, 1.5}) {
        const auto full = LevyMeasure::power_law(3, a, 0, kInf);
        const auto [s, l] = full.split(1.0);
        CHECK(l.mass() == doctest::Approx(4 * M_PI / a).epsilon(1e-12));
        // same through the generic radial path
        const auto g = LevyMeasure::radial(3, [a](double r) { return std::pow(r, -3 - a); }, 1.0, kInf);
        CHECK(g.mass() == doctest::Approx(4 * M_PI / a).epsilon(1e-8));
        (void)s;
    }
    CHECK_THROWS_AS(LevyMeasure::power_law(3, 0.5, 0, kInf).split(0.0), InfiniteLargeMass);
}

TEST_CASE("split preserves masses of disjoint annuli") {
    const auto m = LevyMeasure::radial(2, [](double r) { return std::exp(-r) / (r * r); }, 0, kInf);
    const auto [s, l] = m.split(0.7);
    for (auto [a, b] : {std::pair{0.1, 0.5}, std::pair{0.5, 2.0}, std::pair{1.0, 9.0}, std::pair{0.2, 0.7}}) {
        const double whole = m.mass_between(a, b);
        CHECK(s.mass_between(a, b) + l.mass_between(a, b) == doctest::Approx(whole).epsilon(1e-9));
    }
}

TEST_CASE("atom split") {
    Vec y(2);
    y << 3.0, 4.0;
    const auto m = LevyMeasure::atoms({y}, {2.5});
    const auto [s, l] = m.split(4.0);
    CHECK(s.is_zero());
    CHECK(l.mass() == 2.5);
}

TEST_CASE("radial moments by quadrature") {
    for (double a : {0.25, 0.5, 0.9}) {
        const auto m = LevyMeasure::power_law(3, a, 0, 1);
        CHECK(m.integrate_radius([](double r) { return r * r; }).value ==
              doctest::Approx(4 * M_PI / (2 - a)).epsilon(1e-9));
        CHECK(m.integrate_radius([](double r) { return r; }).value ==
              doctest::Approx(4 * M_PI / (1 - a)).epsilon(1e-8));
        CHECK(m.levy_moment() == doctest::Approx(4 * M_PI / (2 - a)).epsilon(1e-9));
    }
    // first moment diverges for alpha >= 1
    CHECK_THROWS_AS(LevyMeasure::power_law(3, 1.2, 0, 1).integrate_radius([](double r) { return r; }),
                    QuadratureDivergence);
    // angular rules integrate |u|^2 and u_1^2 exactly
    const auto b2 = LevyMeasure::uniform_ball(2, 1.0, 1.0);
    CHECK(b2.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b2.integrate([](const Vec& u) { return u[0] * u[0]; }).value == doctest::Approx(0.25).epsilon(1e-10));
    const auto b3 = LevyMeasure::power_law(3, 0.5, 0, 1);
    CHECK(b3.integrate([](const Vec& u) { return u[2] * u[2]; }).value ==
          doctest::Approx(4 * M_PI / 1.5 / 3).epsilon(1e-9));
}

TEST_CASE("box density integrates like the radial form") {
    // uniform density 1 on [-1,1]^2, window |u| <= 1: area pi
    const Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
    const auto m = LevyMeasure::box_density(lo, hi, [](const Vec&) { return 1.0; });
    CHECK(m.mass() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(m.restrict(0, 1).mass() == doctest::Approx(M_PI).epsilon(2e-3));
}

TEST_CASE("sample_large_jumps counts and arrivals") {
    Vec y(2);
    y << 2.0, 0.0;
    const auto atom = LevyMeasure::atoms({y}, {2.0}).with_threshold(1.0);
    double total = 0;
    const int reps = 100000;
    Stream t(9, 0, Substream::JumpTimes), mk(9, 0, Substream::JumpMarks);
    for (int i = 0; i < reps; ++i) {
        const auto ev = sample_large_jumps(atom, 1.0, t, mk);
        total += ev.size();
    }
    CHECK(std::abs(total / reps - 2.0) < 0.05);

    const auto tail = LevyMeasure::power_law(3, 1.0, 0, kInf);
    double tot2 = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto ev = sample_large_jumps(tail, 1.0, t, mk);
        tot2 += ev.size();
        for (const auto& e : ev) REQUIRE(e.mark.norm() > 1.0);
    }
    CHECK(std::abs(tot2 / 20000 - 4 * M_PI) < 4 * std::sqrt(4 * M_PI / 20000));

    // empty measure
    CHECK(sample_large_jumps(LevyMeasure::power_law(3, 0.5, 0, 1), 5.0, t, mk).empty());
    // exponential inter-arrivals at rate 2
    const double rate = 2.0;
    std::vector<double> g2;
    const auto ev = sample_large_jumps(atom, 5000.0, t, mk);
    for (std::size_t k = 1; k < ev.size(); ++k) g2.push_back(ev[k].time - ev[k - 1].time);
    CHECK(ks_test(g2, [&](double g) { return 1 - std::exp(-rate * g); }) > 0.01);
}

TEST_CASE("radial samplers follow the radial law") {
    Stream s(21, 0, Substream::JumpMarks);
    // power law on (0.2, 1] in R^3, closed-form quantiles
    const auto pl = LevyMeasure::power_law(3, 0.5, 0.2, 1.0);
    const MarkSampler a(pl);
    // general radial g: same law through the tabulated inverse CDF
    const auto gl = LevyMeasure::radial(3, [](double r) { return std::pow(r, -3.5); }, 0.2, 1.0);
    const MarkSampler b(gl);
    CHECK(a.mass() == doctest::Approx(b.mass()).epsilon(1e-9));
    const auto cdf = [](double r) {
        return std::clamp((std::pow(0.2, -0.5) - std::pow(r, -0.5)) / (std::pow(0.2, -0.5) - 1.0), 0.0, 1.0);
    };
    std::vector<double> ra, rb;
    for (int i = 0; i < 10000; ++i) {
        ra.push_back(a.sample(s).norm());
        rb.push_back(b.sample(s).norm());
    }
    CHECK(ks_test(ra, cdf) > 0.01);
    CHECK(ks_test(rb, cdf) > 0.01);

    // atoms: chi-square on the cell frequencies
    Vec p(1), q(1);
    p << 1.0;
    q << -2.0;
    const MarkSampler at(LevyMeasure::atoms({p, q}, {0.3, 0.9}));
    int np = 0;
    for (int i = 0; i < 20000; ++i) np += at.sample(s)[0] > 0;
    const double e = 20000 * 0.25;
    const double chi = (np - e) * (np - e) / e + (np - e) * (np - e) / (20000 - e);
    CHECK(chi2_sf(chi, 1) > 0.001);
}
