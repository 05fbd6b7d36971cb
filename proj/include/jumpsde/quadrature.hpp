#pragma once

#include <functional>
#include <limits>

namespace jumpsde {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  ///< absolute error estimate

    QuadResult& operator+=(const QuadResult& o) {
        value += o.value;
        error += o.error;
        return *this;
    }
};

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_shells = 400;
    int min_shells = 24;   ///< dyadic shells always visited before a stop test
    int max_depth = 12;    ///< Gauss-Kronrod bisection depth per panel
};

/// Adaptive G7-K15 on a finite interval.
QuadResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                              const QuadOptions& opt = {});

/// Integral of f over (lo, hi) where either end may be a singular point
/// (lo == 0) or infinite (hi == inf). The range is cut into dyadic shells that
/// are summed until the contributions die out; a geometric tail correction is
/// added from the observed shell ratio. Throws QuadratureDivergence when the
/// shell contributions stop decaying.
QuadResult integrate_dyadic(const std::function<double(double)>& f, double lo, double hi,
                            const QuadOptions& opt = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, double* nodes, double* weights);

}  // namespace jumpsde
