#include "jumpsde/test_function.hpp"

#include <cmath>
#include <limits>

namespace jumpsde {

double fd_step(double xi, bool second_order) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double base = second_order ? std::pow(eps, 0.25) : std::cbrt(eps);
    return base * std::max(1.0, std::abs(xi));
}

TestFunction::TestFunction(std::string name, Scalar f, Gradient g, Hessian h)
    : name_(std::move(name)), f_(std::move(f)), g_(std::move(g)), h_(std::move(h)) {}

TestFunction TestFunction::abs2() {
    return {"abs2", [](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) -> Vec { return 2.0 * x; },
            [](const Vec& x) -> Mat { return 2.0 * Mat::Identity(x.size(), x.size()); }};
}

TestFunction TestFunction::linear(const Vec& a) {
    return {"linear", [a](const Vec& x) { return a.dot(x); }, [a](const Vec&) -> Vec { return a; },
            [a](const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); }};
}

TestFunction TestFunction::coordinate(int i) {
    return {"x" + std::to_string(i + 1), [i](const Vec& x) { return x[i]; },
            [i](const Vec& x) -> Vec {
                Vec g = Vec::Zero(x.size());
                g[i] = 1.0;
                return g;
            },
            [](const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); }};
}

TestFunction TestFunction::constant(double c) {
    return {"const", [c](const Vec&) { return c; }, [](const Vec& x) -> Vec { return Vec::Zero(x.size()); },
            [](const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); }};
}

TestFunction TestFunction::quartic() {
    return {"quartic", [](const Vec& x) { return x.array().pow(4).sum(); },
            [](const Vec& x) -> Vec { return 4.0 * x.array().pow(3).matrix(); },
            [](const Vec& x) -> Mat { return (12.0 * x.array().square()).matrix().asDiagonal(); }};
}

TestFunction TestFunction::gaussian_bump(double s) {
    const double s2 = s * s;
    return {"gaussian_bump", [s2](const Vec& x) { return std::exp(-x.squaredNorm() / (2 * s2)); },
            [s2](const Vec& x) -> Vec { return -std::exp(-x.squaredNorm() / (2 * s2)) / s2 * x; },
            [s2](const Vec& x) -> Mat {
                const double e = std::exp(-x.squaredNorm() / (2 * s2));
                const long d = x.size();
                return e * (x * x.transpose() / (s2 * s2) - Mat::Identity(d, d) / s2);
            }};
}

TestFunction TestFunction::half_space_indicator(int i) {
    return {"indicator_x" + std::to_string(i + 1) + "_pos", [i](const Vec& x) { return x[i] > 0.0 ? 1.0 : 0.0; }};
}

Vec TestFunction::gradient(const Vec& x) const { return g_ ? g_(x) : fd_gradient(x); }
Mat TestFunction::hessian(const Vec& x) const { return h_ ? h_(x) : fd_hessian(x); }

Vec TestFunction::fd_gradient(const Vec& x) const {
    const long d = x.size();
    Vec g(d);
    Vec y = x;
    for (long i = 0; i < d; ++i) {
        const double h = fd_step(x[i], false);
        y[i] = x[i] + h;
        const double fp = f_(y);
        y[i] = x[i] - h;
        const double fm = f_(y);
        y[i] = x[i];
        g[i] = (fp - fm) / (2 * h);
    }
    return g;
}

Mat TestFunction::fd_hessian(const Vec& x) const {
    const long d = x.size();
    Mat H(d, d);
    Vec y = x;
    const double f0 = f_(x);
    for (long i = 0; i < d; ++i) {
        const double hi = fd_step(x[i], true);
        y[i] = x[i] + hi;
        const double fp = f_(y);
        y[i] = x[i] - hi;
        const double fm = f_(y);
        y[i] = x[i];
        H(i, i) = (fp - 2 * f0 + fm) / (hi * hi);
        for (long j = 0; j < i; ++j) {
            const double hj = fd_step(x[j], true);
            double s = 0.0;
            for (int a : {1, -1}) {
                for (int b : {1, -1}) {
                    y[i] = x[i] + a * hi;
                    y[j] = x[j] + b * hj;
                    s += a * b * f_(y);
                }
            }
            y[i] = x[i];
            y[j] = x[j];
            H(i, j) = H(j, i) = s / (4 * hi * hj);
        }
    }
    return H;
}

RadialFunction RadialFunction::square() {
    return {"r2", [](double r) { return r * r; }, [](double r) { return 2 * r; }, [](double) { return 2.0; }};
}

RadialFunction RadialFunction::inverse_square() {
    return {"r-2", [](double r) { return 1.0 / (r * r); }, [](double r) { return -2.0 / (r * r * r); },
            [](double r) { return 6.0 / (r * r * r * r); }};
}

RadialFunction RadialFunction::bounded() {
    return {"r/(1+r)", [](double r) { return r / (1 + r); }, [](double r) { return 1.0 / ((1 + r) * (1 + r)); },
            [](double r) { return -2.0 / ((1 + r) * (1 + r) * (1 + r)); }};
}

RadialFunction RadialFunction::identity() {
    return {"r", [](double r) { return r; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

RadialFunction RadialFunction::numeric(std::string name, std::function<double(double)> F) {
    auto d1 = [F](double r) {
        const double h = fd_step(r, false) * std::min(1.0, r);
        return (F(r + h) - F(r - h)) / (2 * h);
    };
    auto d2 = [F](double r) {
        const double h = fd_step(r, true) * std::min(1.0, r);
        return (F(r + h) - 2 * F(r) + F(r - h)) / (h * h);
    };
    return {std::move(name), F, d1, d2};
}

}  // namespace jumpsde
