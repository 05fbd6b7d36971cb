#include "jumpsde/quadrature.hpp"

#include "jumpsde/types.hpp"

#include <cmath>
#include <vector>

namespace jumpsde {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

QuadResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double fsum = f(c - dx) + f(c + dx);
        resk += kWgk[j] * fsum;
        if (j % 2 == 1) resg += kWg[j / 2] * fsum;
    }
    const double value = resk * h;
    const double err = std::abs((resk - resg) * h);
    if (!std::isfinite(value)) {
        throw QuadratureDivergence("integrand is not finite on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    return {value, std::max(err, 50.0 * 2.2e-16 * std::abs(value))};
}

QuadResult adapt(const std::function<double(double)>& f, double a, double b, const QuadResult& whole, double tol,
                 int depth) {
    if (whole.error <= tol || depth == 0) return whole;
    const double m = 0.5 * (a + b);
    const QuadResult left = gk15(f, a, m);
    const QuadResult right = gk15(f, m, b);
    // halving did not shrink the estimate: the error is roundoff in f
    if (left.error + right.error >= whole.error) {
        QuadResult out = left;
        out += right;
        out.error = std::max(out.error, whole.error);
        return out;
    }
    QuadResult out = adapt(f, a, m, left, 0.5 * tol, depth - 1);
    out += adapt(f, m, b, right, 0.5 * tol, depth - 1);
    return out;
}

}  // namespace

QuadResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                              const QuadOptions& opt) {
    if (a == b) return {};
    const QuadResult whole = gk15(f, a, b);
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(whole.value));
    return adapt(f, a, b, whole, tol, opt.max_depth);
}

namespace {

// Sums shell contributions produced by `shell(k)` for k = 0, 1, ... until they
// decay below tolerance.
template <class ShellFn>
QuadResult sum_shells(ShellFn&& shell, const QuadOptions& opt, const char* where) {
    QuadResult total;
    std::vector<double> mags;
    mags.reserve(64);
    for (int k = 0; k < opt.max_shells; ++k) {
        const QuadResult c = shell(k);
        total += c;
        mags.push_back(std::abs(c.value));
        if (k + 1 < opt.min_shells || k < 8) continue;

        const double recent = mags[k] + mags[k - 1];
        if (recent == 0.0) {
            // two identically-zero shells past the minimum; nothing left.
            return total;
        }
        const double older = mags[k - 7] + mags[k - 8];
        const double ratio = older > 0.0 ? std::pow(recent / older, 1.0 / 7.0) : 0.0;
        if (ratio >= 0.999) {
            throw QuadratureDivergence(std::string("dyadic shell contributions do not decay (") + where +
                                       ", ratio " + std::to_string(ratio) + ")");
        }
        const double tail = mags[k] * ratio / (1.0 - ratio);
        const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(total.value));
        if (tail <= target) {
            const double signed_tail = c.value * ratio / (1.0 - ratio);
            total.value += signed_tail;
            total.error += std::abs(signed_tail);
            return total;
        }
    }
    const std::size_t n = mags.size();
    const double recent = mags[n - 1] + mags[n - 2];
    const double older = mags[n - 8] + mags[n - 9];
    const double ratio = older > 0.0 ? std::pow(recent / older, 1.0 / 7.0) : 0.0;
    if (ratio >= 0.999 || !std::isfinite(ratio)) {
        throw QuadratureDivergence(std::string("shell budget exhausted without decay (") + where + ")");
    }
    const double tail = mags[n - 1] * ratio / (1.0 - ratio);
    total.value += tail;
    total.error += tail;
    return total;
}

}  // namespace

QuadResult integrate_dyadic(const std::function<double(double)>& f, double lo, double hi,
                            const QuadOptions& opt) {
    if (!(hi > lo)) return {};
    const bool open_hi = std::isinf(hi);
    if (lo > 0.0 && !open_hi) {
        QuadResult total;
        double a = lo;
        while (a < hi) {
            const double b = std::min(hi, 2.0 * a);
            total += integrate_interval(f, a, b, opt);
            a = b;
        }
        return total;
    }
    QuadResult total;
    if (open_hi) {
        const double pivot = lo > 0.0 ? lo : 1.0;
        if (lo == 0.0) total += integrate_dyadic(f, 0.0, pivot, opt);
        total += sum_shells(
            [&](int k) {
                const double a = std::ldexp(pivot, k);
                return integrate_interval(f, a, 2.0 * a, opt);
            },
            opt, "outer tail");
        return total;
    }
    // lo == 0, hi finite: inward shells toward the singular end.
    return sum_shells(
        [&](int k) {
            const double b = std::ldexp(hi, -k);
            return integrate_interval(f, 0.5 * b, b, opt);
        },
        opt, "inner singular end");
}

void gauss_legendre(int n, double* nodes, double* weights) {
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

}  // namespace jumpsde
