#pragma once

#include "jumpsde/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace jumpsde {

/// Central finite-difference step for coordinate i at x.
double fd_step(double xi, bool second_order);

/// Scalar field f(x) with gradient and Hessian. Built-ins carry analytic
/// derivatives; everything else falls back to central differences.
class TestFunction {
public:
    using Scalar = std::function<double(const Vec&)>;
    using Gradient = std::function<Vec(const Vec&)>;
    using Hessian = std::function<Mat(const Vec&)>;

    TestFunction(std::string name, Scalar f, Gradient g = {}, Hessian h = {});

    static TestFunction abs2();                        ///< |x|^2
    static TestFunction linear(const Vec& a);          ///< <a, x>
    static TestFunction coordinate(int i);             ///< x_i
    static TestFunction constant(double c);
    static TestFunction quartic();                     ///< sum x_j^4
    static TestFunction gaussian_bump(double s);       ///< exp(-|x|^2 / (2 s^2))
    static TestFunction half_space_indicator(int i);   ///< 1{x_i > 0}, no derivatives

    double operator()(const Vec& x) const { return f_(x); }
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;
    Vec fd_gradient(const Vec& x) const;
    Mat fd_hessian(const Vec& x) const;

    bool analytic() const { return static_cast<bool>(g_) && static_cast<bool>(h_); }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    Scalar f_;
    Gradient g_;
    Hessian h_;
};

/// Radial profile F(r) with F' and F'' for the two-point operators.
struct RadialFunction {
    std::string name;
    std::function<double(double)> F;
    std::function<double(double)> dF;
    std::function<double(double)> d2F;

    static RadialFunction square();            ///< r^2
    static RadialFunction inverse_square();    ///< r^-2
    static RadialFunction bounded();           ///< r / (1 + r)
    static RadialFunction identity();          ///< r
    /// Derivatives by central differences.
    static RadialFunction numeric(std::string name, std::function<double(double)> F);
};

}  // namespace jumpsde
