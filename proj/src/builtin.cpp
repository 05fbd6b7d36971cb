#include "jumpsde/builtin.hpp"

#include <cmath>

namespace jumpsde {

double example_gamma(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidArgument("alpha must lie in (0, 2)");
    return std::sqrt((2.0 - alpha) / (8.0 * M_PI));
}

namespace {

Vec example_drift(const Vec& x) {
    Vec b(x.size());
    for (long j = 0; j < x.size(); ++j) b[j] = -spow(x[j], 1.0 / 3.0) - x[j] * x[j] * x[j];
    return b;
}

JumpKernel example_jump(double gamma) {
    return JumpKernel::separable(
        [gamma](const Vec& x) -> Mat {
            Mat J(x.size(), 1);
            for (long j = 0; j < x.size(); ++j) J(j, 0) = gamma * std::pow(std::abs(x[j]), 2.0 / 3.0);
            return J;
        },
        [](const Vec& u) -> Vec { return Vec::Constant(1, u.norm()); }, 1, true);
}

}  // namespace

Model example1(double alpha) {
    Model m;
    m.name = "Example1";
    m.origin = "growth and pathwise-uniqueness example: Hoelder drift -x^{1/3}-x^3, fast-growing sigma";
    m.d = 3;
    m.noise_dim = 3;
    m.drift = example_drift;
    m.diffusion = [](const Vec& x) -> Mat {
        Mat s(3, 3);
        for (int j = 0; j < 3; ++j) {
            for (int i = 0; i < 3; ++i) {
                s(i, j) = i == j ? std::pow(std::abs(x[j]), 2.0 / 3.0) / std::sqrt(2.0) + 1.0 : x[j] * x[j] / 3.0;
            }
        }
        return s;
    };
    m.jump = example_jump(example_gamma(alpha));
    m.levy = LevyMeasure::power_law(3, alpha, 0.0, 1.0);
    return m;
}

Model example2(double alpha) {
    Model m;
    m.name = "Example2";
    m.origin = "ergodicity example: same drift and jumps, constant sigma with sigma sigma^T eigenvalues {3,3,36}";
    m.d = 3;
    m.noise_dim = 3;
    m.drift = example_drift;
    Mat s(3, 3);
    s << 3, 1, 2, 2, 3, 1, 1, 2, 3;
    m.diffusion = [s](const Vec&) -> Mat { return s; };
    m.jump = example_jump(example_gamma(alpha));
    m.levy = LevyMeasure::power_law(3, alpha, 0.0, 1.0);
    return m;
}

Model ou_jumps() {
    Model m;
    m.name = "OU-with-jumps";
    m.origin = "Lipschitz OU with bounded state-dependent jumps; |x-z+dc| >= |x-z|/2, so distinct paths never meet";
    m.d = 2;
    m.noise_dim = 2;
    m.drift = [](const Vec& x) -> Vec { return -x; };
    m.diffusion = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
    m.jump = JumpKernel::separable(
        [](const Vec& x) -> Mat { return (1.0 + 0.5 * std::sin(x[0])) * Mat::Identity(2, 2); },
        [](const Vec& u) -> Vec { return u; }, 2, false);
    m.levy = LevyMeasure::uniform_ball(2, 1.0, 1.0);
    return m;
}

Model cubic_explosion() {
    Model m;
    m.name = "CubicExplosion";
    m.origin = "x' = x^3 componentwise; from x0 the ODE blows up at 1/(2 x0^2)";
    m.d = 2;
    m.noise_dim = 2;
    m.drift = [](const Vec& x) -> Vec { return x.array().cube().matrix(); };
    m.levy = LevyMeasure::zero(2);
    return m;
}

Model ou(int d, double theta, double s) {
    Model m;
    m.name = "OU";
    m.origin = "Ornstein-Uhlenbeck dX = -theta X dt + s dW";
    m.d = d;
    m.noise_dim = d;
    m.drift = [theta](const Vec& x) -> Vec { return -theta * x; };
    m.diffusion = [d, s](const Vec&) -> Mat { return s * Mat::Identity(d, d); };
    m.levy = LevyMeasure::zero(d);
    return m;
}

Model brownian(int d, double s) {
    Model m;
    m.name = "Brownian";
    m.origin = "scaled Brownian motion";
    m.d = d;
    m.noise_dim = d;
    m.drift = [d](const Vec&) -> Vec { return Vec::Zero(d); };
    m.diffusion = [d, s](const Vec&) -> Mat { return s * Mat::Identity(d, d); };
    m.levy = LevyMeasure::zero(d);
    m.closed_form = ClosedForm::Brownian;
    m.cf_s = s;
    return m;
}

Model zero_model(int d) {
    Model m;
    m.name = "Zero";
    m.origin = "b = 0, sigma = 0, c = 0";
    m.d = d;
    m.noise_dim = d;
    m.drift = [d](const Vec&) -> Vec { return Vec::Zero(d); };
    m.levy = LevyMeasure::zero(d);
    m.closed_form = ClosedForm::Zero;
    return m;
}

Model geometric(int d, double a, double s) {
    Model m;
    m.name = "Geometric";
    m.origin = "componentwise geometric Brownian motion";
    m.d = d;
    m.noise_dim = d;
    m.drift = [a](const Vec& x) -> Vec { return a * x; };
    m.diffusion = [s](const Vec& x) -> Mat { return (s * x).asDiagonal(); };
    m.levy = LevyMeasure::zero(d);
    m.closed_form = ClosedForm::Geometric;
    m.cf_a = a;
    m.cf_s = s;
    return m;
}

Model linear_ode(int d, double a) {
    Model m;
    m.name = "LinearODE";
    m.origin = "x' = a x";
    m.d = d;
    m.noise_dim = d;
    m.drift = [a](const Vec& x) -> Vec { return a * x; };
    m.levy = LevyMeasure::zero(d);
    m.closed_form = ClosedForm::LinearODE;
    m.cf_a = a;
    return m;
}

Model confluence_demo() {
    Model m;
    m.name = "ConfluenceDemo";
    m.origin = "finite-time pull to 0 with sqrt(|x|) noise; the conditions for non-confluence fail";
    m.d = 2;
    m.noise_dim = 2;
    m.drift = [](const Vec& x) -> Vec {
        Vec b(2);
        for (int j = 0; j < 2; ++j) b[j] = -3.0 * spow(x[j], 1.0 / 3.0);
        return b;
    };
    m.diffusion = [](const Vec& x) -> Mat {
        Vec s(2);
        for (int j = 0; j < 2; ++j) s[j] = 0.1 * std::sqrt(std::abs(x[j]));
        return s.asDiagonal();
    };
    m.levy = LevyMeasure::zero(2);
    return m;
}

Model nonfeller_demo() {
    Model m;
    m.name = "NonFellerDemo";
    m.origin = "jump direction sign(x1): the kernel is discontinuous across x1 = 0";
    m.d = 2;
    m.noise_dim = 2;
    m.drift = [](const Vec&) -> Vec { return Vec::Zero(2); };
    m.jump = JumpKernel::general([](const Vec& x, const Vec& u) -> Vec {
        const double s = x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0);
        return s * u;
    });
    Vec a(2);
    a << 1.0, 0.0;
    m.levy = LevyMeasure::atoms({a}, {1.0});
    return m;
}

std::vector<Model> builtin_models() { return {example1(), example2(), ou_jumps(), cubic_explosion()}; }

std::vector<std::string> builtin_names() {
    return {"Example1", "Example2", "OU-with-jumps", "CubicExplosion", "OU",          "Brownian",
            "Zero",     "Geometric", "LinearODE",    "ConfluenceDemo", "NonFellerDemo"};
}

Model builtin_by_name(const std::string& name, int d) {
    if (name == "Example1") return example1();
    if (name == "Example2") return example2();
    if (name == "OU-with-jumps") return ou_jumps();
    if (name == "CubicExplosion") return cubic_explosion();
    if (name == "OU") return ou(d);
    if (name == "Brownian") return brownian(d);
    if (name == "Zero") return zero_model(d);
    if (name == "Geometric") return geometric(d, 1.0, 0.5);
    if (name == "LinearODE") return linear_ode(d, -1.0);
    if (name == "ConfluenceDemo") return confluence_demo();
    if (name == "NonFellerDemo") return nonfeller_demo();
    throw InvalidArgument("unknown built-in model '" + name + "'");
}

}  // namespace jumpsde
