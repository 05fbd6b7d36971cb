#include "doctest.h"

#include "jumpsde/builtin.hpp"
#include "jumpsde/expr.hpp"
#include "jumpsde/rng.hpp"
#include "jumpsde/scenario.hpp"

#include <cmath>

using namespace jumpsde;

namespace {

const char* kExample1Coefficients = R"(
# Example 1 without jumps, written out by hand
[model]
d = 3
b1 = -spow(x1,1/3) - x1^3
b2 = -spow(x2,1/3) - x2^3
b3 = -spow(x3,1/3) - x3^3
σ11 = abs(x1)^(2/3)/sqrt(2) + 1
s12 = x2^2/3
s13 = x3^2/3
s21 = x1^2/3
s22 = abs(x2)^(2/3)/sqrt(2) + 1
s23 = x3^2/3
s31 = x1^2/3
s32 = x2^2/3
s33 = abs(x3)^(2/3)/sqrt(2) + 1

[sim]
x0 = 1, 1, 1
)";

}  // namespace

TEST_CASE("expr: arithmetic and precedence") {
    const ExprSymbols s{2};
    Vec x(2);
    x << 2.0, -3.0;
    CHECK(Expr::parse("1 + 2*3", s)(x) == 7.0);
    CHECK(Expr::parse("2^3^2", s)(x) == 512.0);
    CHECK(Expr::parse("-2^2", s)(x) == -4.0);
    CHECK(Expr::parse("8/4/2", s)(x) == 1.0);
    CHECK(Expr::parse("x1*x2", s)(x) == -6.0);
    CHECK(Expr::parse("|x|", s)(x) == doctest::Approx(std::sqrt(13.0)));
    CHECK(Expr::parse("norm", s)(x) == doctest::Approx(std::sqrt(13.0)));
    CHECK(Expr::parse("spow(x2, 1/3)", s)(x) == doctest::Approx(-std::cbrt(3.0)));
    CHECK(Expr::parse("max(x1, x2) + min(x1, x2)", s)(x) == -1.0);
    CHECK(Expr::parse("sign(x2) * abs(x2)", s)(x) == -3.0);
    CHECK(Expr::parse("cos(pi)", s)(x) == doctest::Approx(-1.0));
}

TEST_CASE("expr: the Example 1 drift string matches the built-in drift") {
    const Expr b1 = Expr::parse("-spow(x1,1/3) - x1^3", {3});
    const Model m = example1();
    Stream rs(5, 0, Substream::Auxiliary);
    for (int k = 0; k < 200; ++k) {
        Vec x(3);
        for (int j = 0; j < 3; ++j) x[j] = 3.0 * rs.normal();
        CHECK(b1(x) == doctest::Approx(m.b(x)[0]).epsilon(1e-14));
    }
}

TEST_CASE("expr: sigma entry at x1 = 1") {
    const Expr s = Expr::parse("spow(x1,2/3)/sqrt(2) + 1", {3});
    Vec x = Vec::Zero(3);
    x[0] = 1.0;
    // 1/sqrt(2) + 1
    CHECK(s(x) == doctest::Approx(1.7071067811865475).epsilon(1e-15));
}

TEST_CASE("expr: diagnostics") {
    CHECK_THROWS_AS(Expr::parse("x9", {3}), DimensionMismatch);
    CHECK_THROWS_AS(Expr::parse("x0", {3}), UnknownSymbol);
    CHECK_THROWS_AS(Expr::parse("y + 1", {3}), UnknownSymbol);
    CHECK_THROWS_AS(Expr::parse("foo(x1)", {3}), UnknownSymbol);
    CHECK_THROWS_AS(Expr::parse("t", {3}), UnknownSymbol);
    CHECK_NOTHROW(Expr::parse("t", {3, true}));
    CHECK_THROWS_AS(Expr::parse("(x1 + 1", {3}), SyntaxError);
    CHECK_THROWS_AS(Expr::parse("x1 +", {3}), SyntaxError);
    CHECK_THROWS_AS(Expr::parse("spow(x1)", {3}), SyntaxError);
    try {
        Expr::parse("x1 + * 2", {3});
        FAIL("no throw");
    } catch (const SyntaxError& e) {
        CHECK(e.position() == 5);
    }
    const Vec z = Vec::Zero(3);
    CHECK_THROWS_AS(Expr::parse("1/x1", {3})(z), EvalError);
    CHECK_THROWS_AS(Expr::parse("log(x1)", {3})(z), EvalError);
    Vec neg = Vec::Constant(3, -1.0);
    CHECK_THROWS_AS(Expr::parse("sqrt(x1)", {3})(neg), EvalError);
    CHECK_THROWS_AS(Expr::parse("x1^0.5", {3})(neg), EvalError);
    CHECK(Expr::parse("spow(x1, 0.5)", {3})(neg) == -1.0);
}

TEST_CASE("expr: printing is canonical and round-trips") {
    const ExprSymbols s{3, true};
    for (const char* src : {"-spow(x1,1/3) - x1^3", "(x1 + x2)*(x3 - 1)", "x1 - (x2 - x3)", "x1/(x2*x3)",
                            "(-x1)^2", "-(x1^2)", "2^(1/3)", "exp(-t*|x|^2)", "1e-3*x1", "0.1 + 0.2",
                            "(x1^2)^3", "x1 - -x2"}) {
        const std::string once = Expr::parse(src, s).to_string();
        CHECK(Expr::parse(once, s).to_string() == once);
    }
    CHECK(Expr::parse("((x1))+(x2*x3)", s).to_string() == "x1 + x2*x3");
    CHECK(Expr::parse("x1-(x2-x3)", s).to_string() == "x1 - (x2 - x3)");
    CHECK(Expr::parse("-spow(x1,1/3)-x1^3", s).to_string() == "-spow(x1, 1/3) - x1^3");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-8) == "1e-08");
    CHECK(std::strtod(format_number(M_PI).c_str(), nullptr) == M_PI);
}

TEST_CASE("scenario: hand-written Example 1 coefficients match the built-in") {
    const Scenario s = parse_scenario(kExample1Coefficients);
    const Model m = s.model();
    const Model ref = example1();
    CHECK(m.d == 3);
    CHECK_FALSE(m.has_jumps());
    Stream rs(9, 0, Substream::Auxiliary);
    for (int k = 0; k < 100; ++k) {
        Vec x(3);
        for (int j = 0; j < 3; ++j) x[j] = 2.0 * rs.normal();
        CHECK((m.b(x) - ref.b(x)).norm() <= 1e-12 * (1.0 + ref.b(x).norm()));
        CHECK((m.sigma(x) - ref.sigma(x)).norm() <= 1e-12 * (1.0 + ref.sigma(x).norm()));
    }
    CHECK(s.x0() == Vec::Ones(3));
}

TEST_CASE("scenario: defaults are filled and normalization is idempotent") {
    const Scenario s = parse_scenario(kExample1Coefficients);
    CHECK(s.get("sim", "dt") == "0.001");
    CHECK(s.get("sim", "scheme") == "tamed-euler");
    CHECK(s.get("model", "s12") == "x2^2/3");
    CHECK(std::find(s.defaulted.begin(), s.defaulted.end(), "sim.dt") != s.defaulted.end());
    const std::string once = normalize_scenario(kExample1Coefficients);
    CHECK(normalize_scenario(once) == once);
    CHECK(once.find("s11 = abs(x1)^(2/3)/sqrt(2) + 1\n") != std::string::npos);
}

TEST_CASE("scenario: built-ins, levy sections and point lists") {
    const Scenario b = parse_scenario("[model]\nbuiltin = OU\nd = 4\n[sim]\nhorizon = 2\n");
    CHECK(b.dim() == 4);
    CHECK(b.model().d == 4);
    CHECK(b.sim().horizon == 2.0);
    CHECK(b.x0() == Vec::Zero(4));

    const Scenario j = parse_scenario(
        "[model]\nd = 2\nb1 = -x1\nb2 = -x2\njump = scaled\njump_amp = 0.5\n"
        "[levy]\nfamily = atoms\natoms = 1 0 : 2; 0 -1 : 0.5\n");
    const Model m = j.model();
    CHECK(m.has_jumps());
    CHECK(m.levy.mass() == doctest::Approx(2.5));
    Vec x = Vec::Zero(2), u(2);
    u << 1.0, 0.0;
    CHECK(m.c(x, u)[0] == 0.5);
    CHECK(j.get("levy", "atoms") == "1 0 : 2; 0 -1 : 0.5");

    const auto pts = parse_point_list("1 2 : 0.5; 3 4 : 1", 2);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].first[1] == 4.0);
    CHECK(pts[1].second == 1.0);
    CHECK_THROWS_AS(parse_point_list("1 2 3 : 1", 2), DimensionMismatch);
}

TEST_CASE("scenario: diagnostics carry the line number") {
    const auto msg = [](const std::string& text) {
        try {
            parse_scenario(text);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK_THROWS_AS(parse_scenario("[model]\nd = 3\nb1 = x9\n"), DimensionMismatch);
    CHECK(msg("[model]\nd = 3\nb1 = x9\n").rfind("line 3:", 0) == 0);
    CHECK(msg("[model]\nd = 2\n[sim]\nfoo = 1\n").rfind("line 4:", 0) == 0);
    CHECK_THROWS_AS(parse_scenario("[model]\nd = 2\n[sim]\nfoo = 1\n"), UnknownSymbol);
    CHECK_THROWS_AS(parse_scenario("[modle]\n"), UnknownSymbol);
    CHECK_THROWS_AS(parse_scenario("[model]\nd = 2\nd = 3\n"), SyntaxError);
    CHECK_THROWS_AS(parse_scenario("[model]\nd = 2\n[sim]\nx0 = 1, 2, 3\n"), DimensionMismatch);
    CHECK_THROWS_AS(parse_scenario("[model]\nd = 2\n[sim]\nscheme = rk4\n"), UnknownSymbol);
    CHECK_THROWS_AS(parse_scenario("[model]\nd = 2\ns31 = 1\n"), DimensionMismatch);
    CHECK_THROWS_AS(parse_scenario("[model]\nbuiltin = Example1\nd = 2\n"), DimensionMismatch);
    CHECK_THROWS_AS(parse_scenario("[sim]\ndt = 0.1\n"), SyntaxError);
}
