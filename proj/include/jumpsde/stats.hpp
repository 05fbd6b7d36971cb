#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace jumpsde {

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// One-sample KS statistic of `x` against a continuous CDF; sorts a copy.
double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf);
/// p-value with Stephens' finite-n correction, n the effective sample size.
double ks_pvalue(double D, double n);
double ks_test(const std::vector<double>& x, const std::function<double(double)>& cdf);
/// Two-sample KS p-value.
double ks_test_2(std::vector<double> a, std::vector<double> b);

/// Wilson score interval for k successes in n trials at ~95% (z = 1.96).
std::pair<double, double> wilson_interval(long k, long n, double z = 1.959963984540054);

/// Upper-tail chi-square probability.
double chi2_sf(double x, double dof);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_se = 0.0;
};
/// Ordinary (or weighted) least squares of y on x.
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& w = {});

double mean(const std::vector<double>& v);
/// Sample standard error of the mean.
double standard_error(const std::vector<double>& v);

}  // namespace jumpsde
