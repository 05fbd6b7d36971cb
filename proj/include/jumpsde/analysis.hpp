#pragma once

#include "jumpsde/coupling.hpp"
#include "jumpsde/model.hpp"
#include "jumpsde/simulator.hpp"
#include "jumpsde/test_function.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace jumpsde {

struct Provenance {
    std::string model;
    double t = 0.0;
    Vec x0;
    std::uint64_t seed = 0;
};

/// Weighted point cloud standing in for P(t, x, .).
struct EmpiricalLaw {
    std::vector<Vec> points;
    std::vector<double> weights;
    Provenance provenance;

    /// Uniform weights. Throws InvalidArgument on non-finite points.
    static EmpiricalLaw uniform(std::vector<Vec> points, Provenance p = {});
    /// Alive endpoints of an ensemble.
    static EmpiricalLaw from_ensemble(const PathEnsemble& e, const std::string& model = "");

    long size() const { return static_cast<long>(points.size()); }
    int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
    bool uniform_weights() const;
    /// Throws InvalidArgument unless weights sum to 1 and points are finite.
    void validate() const;
};

/// d(x, y) = |x - y| / (1 + |x - y|).
double bounded_metric(const Vec& x, const Vec& y);

/// Minimum-cost perfect matching of a square cost matrix (Hungarian
/// algorithm with potentials, O(n^3)). Returns the column of each row.
std::vector<int> solve_assignment(const Mat& cost, double* total = nullptr);

struct WassersteinOptions {
    long exact_cutoff = 4096;   ///< larger n uses the sliced estimator
    int projections = 128;
    std::uint64_t seed = 0;
};
struct WassersteinResult {
    double value = 0.0;
    double mc_error = 0.0;      ///< standard error over projections (sliced only)
    bool exact = true;
    long n = 0;
};
/// Optimal transport cost under the bounded metric between two uniform
/// empirical laws with the same number of points. Throws SizeMismatch.
WassersteinResult wasserstein_bounded_detail(const EmpiricalLaw& mu, const EmpiricalLaw& nu,
                                             const WassersteinOptions& opt = {});
double wasserstein_bounded(const EmpiricalLaw& mu, const EmpiricalLaw& nu, const WassersteinOptions& opt = {});

/// Endpoints of simulate(m, x, cfg with horizon t) as a law.
EmpiricalLaw sample_law(const Model& m, const Vec& x, double t, const SimConfig& cfg);

// ---------------------------------------------------------------------------

struct FellerRow {
    double separation = 0.0;
    double distance = 0.0;
};
struct FellerProbe {
    std::vector<FellerRow> rows;
    double noise_floor = 0.0;    ///< W_d between two independent ensembles from x
    double trend = 0.0;          ///< Kendall tau of distance against separation
    bool decreasing = false;     ///< trend > 0
    bool stalled = false;        ///< last rung above 2 x noise floor
    std::vector<std::string> notes;
    nlohmann::ordered_json to_json() const;
};
/// W_d(P(t,x,.), P(t,z,.)) for z = x + h e on the ladder h in `radii`
/// (default 1e-1 .. 1e-4), with independent noise for each law.
FellerProbe feller_probe(const Model& m, const Vec& x, double t, std::vector<double> radii, const SimConfig& cfg,
                         Vec direction = {});

struct StrongFellerRow {
    double separation = 0.0;
    double px = 0.0;             ///< P_t f(x)
    double pz = 0.0;
    double diff = 0.0;           ///< |P_t f(x) - P_t f(z)|
    double ratio = 0.0;          ///< diff / separation
    double se = 0.0;             ///< standard error of ratio
};
struct StrongFellerOptions {
    std::vector<double> radii{1e-1, 5e-2, 2e-2, 1e-2};
    Vec direction;               ///< default e1
    double f_sup = 1.0;          ///< sup |f|
    std::optional<double> beta;  ///< reflection contraction rate on (0, delta]
    std::optional<double> delta;
};
struct StrongFellerProbe {
    std::vector<StrongFellerRow> rows;
    double fitted_constant = 0.0;   ///< sum diff / sum separation over the ladder
    double fitted_se = 0.0;
    double max_ratio = 0.0;
    double log_slope = 0.0;         ///< of ratio against separation
    bool diverging = false;         ///< log_slope < -0.5
    std::optional<double> bound;    ///< 2 |f| (1/(t beta) + (1 + delta)/delta)
    std::vector<std::string> notes;
    nlohmann::ordered_json to_json() const;
};
/// Difference quotients of P_t f with common random numbers for x and z.
StrongFellerProbe strong_feller_probe(const Model& m, const TestFunction& f, const Vec& x, double t,
                                      const StrongFellerOptions& opt, const SimConfig& cfg);

/// beta = -max of the reflection generator of F(r) = r/(1+r) over a
/// log grid of r in [r_min, delta] along `direction` from x. Not positive
/// means no contraction on that range.
double reflection_beta(const Model& m, double lambda0, double delta, const Vec& x, double r_min = 1e-3,
                       int n_grid = 200, Vec direction = {});

// ---------------------------------------------------------------------------

struct ConfluenceProbe {
    long n_pairs = 0;
    long glued = 0;
    double hit_fraction = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double glue_radius = 0.0;
    std::vector<double> min_separation;   ///< per pair
    std::vector<double> coupling_time;    ///< per pair, +inf when not glued
    /// min, 5%, 50%, 95%, max of min_separation
    std::vector<double> quantiles;
    nlohmann::ordered_json to_json() const;
};
ConfluenceProbe confluence_probe(const Model& m, const Vec& x0, const Vec& z0, const CouplingScheme& scheme,
                                 const SimConfig& cfg);

/// Empirical P(coupling time <= s) at each s.
std::vector<double> coupling_time_cdf(const std::vector<double>& coupling_time, const std::vector<double>& s);

// ---------------------------------------------------------------------------

enum class ErgodicitySurrogate { Partition, Wasserstein };

struct ErgodicityOptions {
    std::vector<double> times;        ///< ascending, starting at 0
    double reference_horizon = 0.0;   ///< 0: 2 x last time
    int cells_per_axis = 4;
    ErgodicitySurrogate surrogate = ErgodicitySurrogate::Partition;
    double nonstationary_p = 0.01;
};
struct ErgodicityFit {
    std::vector<double> times;
    std::vector<double> distance;     ///< max over starting points
    double noise_floor = 0.0;
    double theta = 1.0;
    double intercept = 0.0;
    double r2 = 0.0;
    long n_fit = 0;                   ///< points above 2 x noise floor used in the fit
    double ks_pvalue = 1.0;           ///< reference law at T/2 against T
    bool non_stationary = false;
    bool non_ergodic = false;
    std::string surrogate;
    std::vector<std::string> notes;
    nlohmann::ordered_json to_json() const;
};
/// Fits ||mu_t - pi||_f ~ Theta theta^t with f = V + 1, where pi is the
/// law of a long-run ensemble. The partition surrogate sums
/// |mu(A) - pi(A)| max_A f over quantile cells of pi.
ErgodicityFit ergodicity_fit(const Model& m, const std::vector<Vec>& x0s, const TestFunction& V,
                             const ErgodicityOptions& opt, const SimConfig& cfg);
/// The partition surrogate between two samples, cells from `reference`.
double partition_distance(const std::vector<Vec>& mu, const std::vector<Vec>& reference, const TestFunction& V,
                          int cells_per_axis);

// ---------------------------------------------------------------------------

struct TargetBall {
    Vec center;
    double radius = 0.0;
};
struct HitRow {
    Vec center;
    double radius = 0.0;
    long hits = 0;
    long n = 0;
    double estimate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};
/// P{|X(t) - a| <= r} with Wilson intervals. Exploded paths count as misses.
std::vector<HitRow> irreducibility_probe(const Model& m, const Vec& x, double t, const std::vector<TargetBall>& targets,
                                         const SimConfig& cfg);

// ---------------------------------------------------------------------------

/// du/dt + L u - rho u = g on [0, T), u(T, .) = f.
struct CauchyProblem {
    Model model;
    double T = 1.0;
    std::function<double(const Vec&)> f;
    std::function<double(double, const Vec&)> rho;   ///< empty: 0
    std::function<double(double, const Vec&)> g;     ///< empty: 0
};
struct FeynmanKacResult {
    double estimate = 0.0;
    double se = 0.0;
    long n_used = 0;
    long n_exploded = 0;
    double exploded_fraction = 0.0;
    std::vector<std::string> warnings;
};
/// Monte Carlo mean of exp(-int_t^T rho) f(X_T) - int_t^T exp(-int_t^s rho) g(s, X_s) ds
/// for X started at (t, x); both integrals use the trapezoid rule on the
/// simulation grid. Exploded paths are excluded and reported. Throws
/// InvalidArgument for t > T, negative rho or non-finite f, g.
FeynmanKacResult feynman_kac(const CauchyProblem& p, double t, const Vec& x, const SimConfig& cfg);

// ---------------------------------------------------------------------------

/// separation,distance
void write_feller_csv(const FellerProbe& p, std::ostream& os);
/// separation,px,pz,diff,ratio,se
void write_strong_feller_csv(const StrongFellerProbe& p, std::ostream& os);
/// t,distance
void write_ergodicity_csv(const ErgodicityFit& f, std::ostream& os);
/// center,radius,hits,n,estimate,ci_lo,ci_hi (center as ';'-joined coordinates)
void write_hits_csv(const std::vector<HitRow>& rows, std::ostream& os);

}  // namespace jumpsde
