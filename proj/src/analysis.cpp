#include "jumpsde/analysis.hpp"

#include "jumpsde/rng.hpp"
#include "jumpsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace jumpsde {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) { return splitmix64(seed ^ splitmix64(tag + 1)); }

Vec unit_direction(Vec dir, int d) {
    if (dir.size() == 0) {
        dir = Vec::Zero(d);
        dir[0] = 1.0;
    }
    if (dir.size() != d) throw InvalidArgument("direction has the wrong dimension");
    const double n = dir.norm();
    if (!(n > 0.0)) throw InvalidArgument("direction must be nonzero");
    return dir / n;
}

std::vector<double> default_ladder() { return {1e-1, 1e-2, 1e-3, 1e-4}; }

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long conc = 0, disc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = (a[i] - a[j]) * (b[i] - b[j]);
            if (s > 0) ++conc;
            if (s < 0) ++disc;
        }
    }
    const long tot = conc + disc;
    return tot == 0 ? 0.0 : static_cast<double>(conc - disc) / tot;
}

double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * (s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double w = pos - lo;
    return (1 - w) * s[lo] + w * s[hi];
}

// States of all paths at the grid steps `steps`, alive paths only.
std::vector<std::vector<Vec>> states_at(const Model& m, const Vec& x0, const SimConfig& cfg,
                                        const std::vector<long>& steps) {
    const long N = cfg.n_paths;
    const int d = m.d;
    std::unordered_map<long, std::size_t> slot;
    for (std::size_t j = 0; j < steps.size(); ++j) slot[steps[j]] = j;
    std::vector<double> buf(steps.size() * N * d, 0.0);
    std::vector<double> dead(N, std::numeric_limits<double>::infinity());
    simulate_visit(
        m, x0, cfg,
        [&](long i, long k, const Vec& x) {
            const auto it = slot.find(k);
            if (it == slot.end()) return;
            std::copy(x.data(), x.data() + d, buf.begin() + (it->second * N + i) * d);
        },
        [&](long i, PathStatus st, double te) {
            if (st != PathStatus::Alive) dead[i] = te;
        });
    std::vector<std::vector<Vec>> out(steps.size());
    for (std::size_t j = 0; j < steps.size(); ++j) {
        const double t = cfg.time(steps[j]);
        for (long i = 0; i < N; ++i) {
            if (t >= dead[i]) continue;
            out[j].push_back(Eigen::Map<const Vec>(buf.data() + (j * N + i) * d, d));
        }
    }
    return out;
}

long step_of(const SimConfig& cfg, double t) {
    const long k = std::lround(t / cfg.dt);
    if (std::abs(k * cfg.dt - t) > 1e-9 * std::max(1.0, t) && std::abs(t - cfg.horizon) > 1e-12) {
        throw InvalidArgument("time " + std::to_string(t) + " is not on the simulation grid");
    }
    return std::min(k, cfg.n_steps());
}

}  // namespace

// ---------------------------------------------------------------------------

EmpiricalLaw EmpiricalLaw::uniform(std::vector<Vec> points, Provenance p) {
    EmpiricalLaw l;
    l.points = std::move(points);
    l.weights.assign(l.points.size(), l.points.empty() ? 0.0 : 1.0 / l.points.size());
    l.provenance = std::move(p);
    l.validate();
    return l;
}

EmpiricalLaw EmpiricalLaw::from_ensemble(const PathEnsemble& e, const std::string& model) {
    Provenance p;
    p.model = model;
    p.t = e.cfg.horizon;
    p.x0 = e.x0;
    p.seed = e.cfg.master_seed;
    return uniform(e.endpoints(true), std::move(p));
}

bool EmpiricalLaw::uniform_weights() const {
    if (weights.empty()) return true;
    const double w = 1.0 / weights.size();
    return std::all_of(weights.begin(), weights.end(), [&](double v) { return std::abs(v - w) <= 1e-12 * w; });
}

void EmpiricalLaw::validate() const {
    if (weights.size() != points.size()) throw InvalidArgument("one weight per point required");
    if (points.empty()) return;
    const int d = dim();
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != d) throw InvalidArgument("points of mixed dimension");
        if (!points[i].allFinite()) throw InvalidArgument("empirical law contains a non-finite point");
        if (!(weights[i] >= 0.0)) throw InvalidArgument("negative weight");
        s += weights[i];
    }
    if (std::abs(s - 1.0) > 1e-9) throw InvalidArgument("weights must sum to 1");
}

double bounded_metric(const Vec& x, const Vec& y) {
    const double r = (x - y).norm();
    return r / (1.0 + r);
}

std::vector<int> solve_assignment(const Mat& cost, double* total) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw SizeMismatch("assignment cost matrix must be square");
    // shortest augmenting paths with row/column potentials, 1-based
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row(n);
    for (int j = 1; j <= n; ++j) row[p[j] - 1] = j - 1;
    if (total) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += cost(i, row[i]);
        *total = s;
    }
    return row;
}

WassersteinResult wasserstein_bounded_detail(const EmpiricalLaw& mu, const EmpiricalLaw& nu,
                                             const WassersteinOptions& opt) {
    mu.validate();
    nu.validate();
    if (mu.size() != nu.size()) {
        throw SizeMismatch("laws have " + std::to_string(mu.size()) + " and " + std::to_string(nu.size()) +
                           " points");
    }
    if (!mu.uniform_weights() || !nu.uniform_weights()) throw InvalidArgument("wasserstein_bounded needs uniform weights");
    const long n = mu.size();
    WassersteinResult r;
    r.n = n;
    if (n == 0) return r;
    if (mu.dim() != nu.dim()) throw SizeMismatch("laws live in different dimensions");
    if (n <= opt.exact_cutoff) {
        Mat C(n, n);
        for (long i = 0; i < n; ++i) {
            for (long j = 0; j < n; ++j) C(i, j) = bounded_metric(mu.points[i], nu.points[j]);
        }
        double total = 0.0;
        solve_assignment(C, &total);
        r.value = std::max(0.0, total / n);
        return r;
    }
    // sliced: sorted matching of the projections, cost evaluated in R^d
    r.exact = false;
    const int d = mu.dim();
    const int k = std::max(1, opt.projections);
    Stream rs(opt.seed, 0, Substream::Auxiliary);
    std::vector<double> vals(k);
    std::vector<long> ia(n), ib(n);
    std::vector<double> pa(n), pb(n);
    for (int p = 0; p < k; ++p) {
        Vec th(d);
        for (int j = 0; j < d; ++j) th[j] = rs.normal();
        th /= th.norm();
        for (long i = 0; i < n; ++i) {
            pa[i] = th.dot(mu.points[i]);
            pb[i] = th.dot(nu.points[i]);
        }
        std::iota(ia.begin(), ia.end(), 0);
        std::iota(ib.begin(), ib.end(), 0);
        std::sort(ia.begin(), ia.end(), [&](long a, long b) { return pa[a] < pa[b]; });
        std::sort(ib.begin(), ib.end(), [&](long a, long b) { return pb[a] < pb[b]; });
        double s = 0.0;
        for (long i = 0; i < n; ++i) s += bounded_metric(mu.points[ia[i]], nu.points[ib[i]]);
        vals[p] = s / n;
    }
    r.value = mean(vals);
    r.mc_error = k > 1 ? standard_error(vals) : 0.0;
    return r;
}

double wasserstein_bounded(const EmpiricalLaw& mu, const EmpiricalLaw& nu, const WassersteinOptions& opt) {
    return wasserstein_bounded_detail(mu, nu, opt).value;
}

EmpiricalLaw sample_law(const Model& m, const Vec& x, double t, const SimConfig& cfg) {
    SimConfig c = cfg;
    c.horizon = t;
    c.store = StoreMode::Endpoints;
    return EmpiricalLaw::from_ensemble(simulate(m, x, c), m.name);
}

// ---------------------------------------------------------------------------

namespace {

// Trims the larger law so both have the same number of points.
std::pair<EmpiricalLaw, EmpiricalLaw> equalize(EmpiricalLaw a, EmpiricalLaw b, std::vector<std::string>& notes) {
    const long n = std::min(a.size(), b.size());
    if (a.size() != b.size()) {
        notes.push_back("exploded paths removed; laws trimmed to " + std::to_string(n) + " points");
        a.points.resize(n);
        b.points.resize(n);
        a = EmpiricalLaw::uniform(std::move(a.points), a.provenance);
        b = EmpiricalLaw::uniform(std::move(b.points), b.provenance);
    }
    return {std::move(a), std::move(b)};
}

}  // namespace

FellerProbe feller_probe(const Model& m, const Vec& x, double t, std::vector<double> radii, const SimConfig& cfg,
                         Vec direction) {
    if (radii.empty()) radii = default_ladder();
    const Vec e = unit_direction(std::move(direction), m.d);
    FellerProbe out;
    const auto law = [&](const Vec& p, std::uint64_t tag) {
        SimConfig c = cfg;
        c.master_seed = derive_seed(cfg.master_seed, tag);
        return sample_law(m, p, t, c);
    };
    const EmpiricalLaw base = law(x, 0);
    {
        auto [a, b] = equalize(base, law(x, 1), out.notes);
        out.noise_floor = wasserstein_bounded(a, b);
    }
    std::vector<double> seps, dists;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        auto [a, b] = equalize(base, law(x + radii[k] * e, 2 + k), out.notes);
        FellerRow row;
        row.separation = radii[k];
        row.distance = wasserstein_bounded(a, b);
        out.rows.push_back(row);
        seps.push_back(row.separation);
        dists.push_back(row.distance);
    }
    out.trend = kendall_tau(seps, dists);
    out.decreasing = out.trend > 0.0;
    out.stalled = out.rows.back().distance > 2.0 * out.noise_floor;
    if (out.stalled) out.notes.push_back("last rung stays above twice the noise floor: no Feller continuity evidence");
    return out;
}

nlohmann::ordered_json FellerProbe::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["probe"] = "feller";
    j["noise_floor"] = noise_floor;
    j["trend"] = trend;
    j["decreasing"] = decreasing;
    j["stalled"] = stalled;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) j["rows"].push_back({{"separation", r.separation}, {"distance", r.distance}});
    j["notes"] = notes;
    return j;
}

StrongFellerProbe strong_feller_probe(const Model& m, const TestFunction& f, const Vec& x, double t,
                                      const StrongFellerOptions& opt, const SimConfig& cfg) {
    if (opt.radii.empty()) throw InvalidArgument("strong_feller_probe needs at least one separation");
    if (!(t > 0.0)) throw InvalidArgument("strong_feller_probe needs t > 0");
    const Vec e = unit_direction(opt.direction, m.d);
    SimConfig c = cfg;
    c.horizon = t;
    c.store = StoreMode::Endpoints;
    // common random numbers: one seed for x and every z
    const PathEnsemble ex = simulate(m, x, c);
    StrongFellerProbe out;
    double sum_diff = 0.0, sum_h = 0.0, sum_var = 0.0;
    std::vector<double> lh, lr;
    for (double h : opt.radii) {
        if (!(h > 0.0)) throw InvalidArgument("separations must be positive");
        const PathEnsemble ez = simulate(m, x + h * e, c);
        std::vector<double> d, fx, fz;
        for (long i = 0; i < ex.n_paths(); ++i) {
            if (ex.status[i] != PathStatus::Alive || ez.status[i] != PathStatus::Alive) continue;
            const double a = f(ex.endpoint(i)), b = f(ez.endpoint(i));
            fx.push_back(a);
            fz.push_back(b);
            d.push_back(a - b);
        }
        StrongFellerRow row;
        row.separation = h;
        row.px = mean(fx);
        row.pz = mean(fz);
        row.diff = std::abs(mean(d));
        row.ratio = row.diff / h;
        const double se = d.size() > 1 ? standard_error(d) : 0.0;
        row.se = se / h;
        out.rows.push_back(row);
        sum_diff += row.diff;
        sum_h += h;
        sum_var += se * se;
        out.max_ratio = std::max(out.max_ratio, row.ratio);
        if (row.ratio > 0.0) {
            lh.push_back(std::log(h));
            lr.push_back(std::log(row.ratio));
        }
    }
    out.fitted_constant = sum_diff / sum_h;
    out.fitted_se = std::sqrt(sum_var) / sum_h;
    if (lh.size() >= 2) out.log_slope = least_squares(lh, lr).slope;
    out.diverging = out.log_slope < -0.5;
    if (out.diverging) out.notes.push_back("difference quotient grows as the separation shrinks: no strong Feller smoothing");
    if (opt.beta && opt.delta) {
        if (!(*opt.beta > 0.0) || !(*opt.delta > 0.0)) {
            out.notes.push_back("beta and delta must be positive for the coupling bound");
        } else {
            out.bound = 2.0 * opt.f_sup * (1.0 / (t * *opt.beta) + (1.0 + *opt.delta) / *opt.delta);
            if (out.fitted_constant > *out.bound) out.notes.push_back("fitted constant exceeds the coupling bound");
        }
    }
    return out;
}

nlohmann::ordered_json StrongFellerProbe::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["probe"] = "strong-feller";
    j["fitted_constant"] = fitted_constant;
    j["fitted_se"] = fitted_se;
    j["max_ratio"] = max_ratio;
    j["log_slope"] = log_slope;
    j["diverging"] = diverging;
    j["bound"] = bound ? nlohmann::ordered_json(*bound) : nlohmann::ordered_json(nullptr);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"separation", r.separation},
                             {"px", r.px},
                             {"pz", r.pz},
                             {"diff", r.diff},
                             {"ratio", r.ratio},
                             {"se", r.se}});
    }
    j["notes"] = notes;
    return j;
}

double reflection_beta(const Model& m, double lambda0, double delta, const Vec& x, double r_min, int n_grid,
                       Vec direction) {
    if (!(r_min > 0.0) || !(delta > r_min) || n_grid < 2) throw InvalidArgument("need 0 < r_min < delta and n_grid >= 2");
    const Vec e = unit_direction(std::move(direction), m.d);
    const RadialFunction F = RadialFunction::bounded();
    double worst = -std::numeric_limits<double>::infinity();
    const double a = std::log(r_min), b = std::log(delta);
    for (int k = 0; k < n_grid; ++k) {
        const double r = std::exp(a + (b - a) * k / (n_grid - 1));
        const TwoPointValue v = reflection_generator(m, F, lambda0, x, x + r * e);
        worst = std::max(worst, v.value + v.quad_error);
    }
    return -worst;
}

// ---------------------------------------------------------------------------

ConfluenceProbe confluence_probe(const Model& m, const Vec& x0, const Vec& z0, const CouplingScheme& scheme,
                                 const SimConfig& cfg) {
    SimConfig c = cfg;
    c.store = StoreMode::Endpoints;
    const CoupledEnsemble e = couple(m, x0, z0, scheme, c);
    ConfluenceProbe out;
    out.glue_radius = scheme.glue_radius;
    for (long i = 0; i < e.n_pairs(); ++i) {
        if (e.x_status[i] == PathStatus::NotRun) continue;
        ++out.n_pairs;
        if (e.glued(i)) ++out.glued;
        out.min_separation.push_back(e.min_separation[i]);
        out.coupling_time.push_back(e.coupling_time[i]);
    }
    out.hit_fraction = out.n_pairs ? static_cast<double>(out.glued) / out.n_pairs : 0.0;
    std::tie(out.ci_lo, out.ci_hi) = wilson_interval(out.glued, out.n_pairs);
    std::vector<double> s = out.min_separation;
    std::sort(s.begin(), s.end());
    for (double q : {0.0, 0.05, 0.5, 0.95, 1.0}) out.quantiles.push_back(quantile_sorted(s, q));
    return out;
}

nlohmann::ordered_json ConfluenceProbe::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["probe"] = "confluence";
    j["n_pairs"] = n_pairs;
    j["glued"] = glued;
    j["hit_fraction"] = hit_fraction;
    j["ci"] = {ci_lo, ci_hi};
    j["glue_radius"] = glue_radius;
    j["min_separation_quantiles"] = {{"min", quantiles[0]},
                                     {"q05", quantiles[1]},
                                     {"median", quantiles[2]},
                                     {"q95", quantiles[3]},
                                     {"max", quantiles[4]}};
    return j;
}

std::vector<double> coupling_time_cdf(const std::vector<double>& coupling_time, const std::vector<double>& s) {
    std::vector<double> sorted = coupling_time;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    for (double v : s) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
        out.push_back(sorted.empty() ? 0.0 : static_cast<double>(it - sorted.begin()) / sorted.size());
    }
    return out;
}

// ---------------------------------------------------------------------------

double partition_distance(const std::vector<Vec>& mu, const std::vector<Vec>& reference, const TestFunction& V,
                          int cells_per_axis) {
    if (mu.empty() || reference.empty()) throw InvalidArgument("partition_distance needs non-empty samples");
    if (cells_per_axis < 1) throw InvalidArgument("cells_per_axis must be >= 1");
    const int d = static_cast<int>(reference[0].size());
    const int k = cells_per_axis;
    // interior edges per axis at the reference quantiles j/k
    std::vector<std::vector<double>> edges(d);
    std::vector<double> col(reference.size());
    for (int a = 0; a < d; ++a) {
        for (std::size_t i = 0; i < reference.size(); ++i) col[i] = reference[i][a];
        std::sort(col.begin(), col.end());
        for (int j = 1; j < k; ++j) edges[a].push_back(quantile_sorted(col, static_cast<double>(j) / k));
    }
    const auto cell = [&](const Vec& x) {
        long id = 0;
        for (int a = 0; a < d; ++a) {
            const long b = std::upper_bound(edges[a].begin(), edges[a].end(), x[a]) - edges[a].begin();
            id = id * k + b;
        }
        return id;
    };
    struct Cell {
        double pm = 0.0, pr = 0.0, fmax = 0.0;
    };
    std::unordered_map<long, Cell> cells;
    for (const Vec& x : mu) {
        Cell& c = cells[cell(x)];
        c.pm += 1.0 / mu.size();
        c.fmax = std::max(c.fmax, std::abs(V(x)) + 1.0);
    }
    for (const Vec& x : reference) {
        Cell& c = cells[cell(x)];
        c.pr += 1.0 / reference.size();
        c.fmax = std::max(c.fmax, std::abs(V(x)) + 1.0);
    }
    // sum in cell-id order so the result does not depend on hashing
    std::vector<long> ids;
    for (const auto& kv : cells) ids.push_back(kv.first);
    std::sort(ids.begin(), ids.end());
    double s = 0.0;
    for (long id : ids) {
        const Cell& c = cells[id];
        s += std::abs(c.pm - c.pr) * c.fmax;
    }
    return s;
}

ErgodicityFit ergodicity_fit(const Model& m, const std::vector<Vec>& x0s, const TestFunction& V,
                             const ErgodicityOptions& opt, const SimConfig& cfg) {
    if (x0s.empty()) throw InvalidArgument("ergodicity_fit needs at least one starting point");
    if (opt.times.size() < 3) throw InvalidArgument("ergodicity_fit needs at least three times");
    if (!std::is_sorted(opt.times.begin(), opt.times.end()) || opt.times.front() < 0.0) {
        throw InvalidArgument("times must be ascending and >= 0");
    }
    ErgodicityFit out;
    out.times = opt.times;
    out.surrogate = opt.surrogate == ErgodicitySurrogate::Partition ? "partition" : "wasserstein";

    const auto distance = [&](const std::vector<Vec>& a, const std::vector<Vec>& ref) {
        if (opt.surrogate == ErgodicitySurrogate::Partition) return partition_distance(a, ref, V, opt.cells_per_axis);
        const long n = static_cast<long>(std::min(a.size(), ref.size()));
        const EmpiricalLaw la = EmpiricalLaw::uniform({a.begin(), a.begin() + n});
        const EmpiricalLaw lr = EmpiricalLaw::uniform({ref.begin(), ref.begin() + n});
        return wasserstein_bounded(la, lr);
    };

    // reference: two independent long-run ensembles, each read at T/2 and T
    const double Tref = opt.reference_horizon > 0.0 ? opt.reference_horizon : 2.0 * opt.times.back();
    SimConfig rc = cfg;
    rc.horizon = Tref;
    const long half = rc.n_steps() / 2;
    std::vector<std::vector<Vec>> refA, refB;
    rc.master_seed = derive_seed(cfg.master_seed, 101);
    refA = states_at(m, x0s[0], rc, {half, rc.n_steps()});
    rc.master_seed = derive_seed(cfg.master_seed, 102);
    refB = states_at(m, x0s[0], rc, {half, rc.n_steps()});
    if (refA[1].empty() || refB[1].empty()) throw InvalidArgument("every reference path exploded");

    std::vector<double> va, vb;
    for (const Vec& x : refA[0]) va.push_back(V(x));
    for (const Vec& x : refB[1]) vb.push_back(V(x));
    out.ks_pvalue = ks_test_2(va, vb);
    out.non_stationary = out.ks_pvalue < opt.nonstationary_p;
    if (out.non_stationary) out.notes.push_back("reference law still drifts between T/2 and T (NonStationary)");
    out.noise_floor = distance(refB[1], refA[1]);

    SimConfig c = cfg;
    c.horizon = opt.times.back();
    std::vector<long> steps;
    for (double t : opt.times) steps.push_back(step_of(c, t));
    out.distance.assign(opt.times.size(), 0.0);
    for (std::size_t s = 0; s < x0s.size(); ++s) {
        c.master_seed = derive_seed(cfg.master_seed, 200 + s);
        const auto st = states_at(m, x0s[s], c, steps);
        for (std::size_t j = 0; j < steps.size(); ++j) {
            if (st[j].empty()) continue;
            out.distance[j] = std::max(out.distance[j], distance(st[j], refA[1]));
        }
    }

    // log-linear fit over the points clearly above the noise floor
    std::vector<double> tx, ly;
    for (std::size_t j = 0; j < opt.times.size(); ++j) {
        if (out.distance[j] > 2.0 * out.noise_floor && out.distance[j] > 0.0) {
            tx.push_back(opt.times[j]);
            ly.push_back(std::log(out.distance[j]));
        }
    }
    out.n_fit = static_cast<long>(tx.size());
    if (tx.size() >= 2) {
        const LinearFit lf = least_squares(tx, ly);
        out.theta = std::min(1.0, std::exp(lf.slope));
        out.intercept = lf.intercept;
        out.r2 = lf.r2;
        if (lf.slope > 0.0) out.notes.push_back("distance grows with t; theta clamped to 1");
    } else {
        out.notes.push_back("fewer than two points above the noise floor; no rate fitted");
    }
    if (out.n_fit == static_cast<long>(opt.times.size())) {
        out.notes.push_back("distance never reaches the noise floor on the time grid");
    }
    out.non_ergodic = out.non_stationary || out.theta > 0.99;
    out.notes.push_back("theta is a rate for the " + out.surrogate + " surrogate of the f-norm, f = V + 1");
    return out;
}

nlohmann::ordered_json ErgodicityFit::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["probe"] = "ergodicity";
    j["surrogate"] = surrogate;
    j["theta"] = theta;
    j["intercept"] = intercept;
    j["r2"] = r2;
    j["n_fit"] = n_fit;
    j["noise_floor"] = noise_floor;
    j["ks_pvalue"] = ks_pvalue;
    j["non_stationary"] = non_stationary;
    j["non_ergodic"] = non_ergodic;
    j["times"] = times;
    j["distance"] = distance;
    j["notes"] = notes;
    return j;
}

// ---------------------------------------------------------------------------

std::vector<HitRow> irreducibility_probe(const Model& m, const Vec& x, double t, const std::vector<TargetBall>& targets,
                                         const SimConfig& cfg) {
    SimConfig c = cfg;
    c.horizon = t;
    c.store = StoreMode::Endpoints;
    const PathEnsemble e = simulate(m, x, c);
    std::vector<HitRow> out;
    for (const TargetBall& b : targets) {
        if (b.center.size() != m.d) throw InvalidArgument("target center has the wrong dimension");
        if (!(b.radius > 0.0)) throw InvalidArgument("target radius must be positive");
        HitRow r;
        r.center = b.center;
        r.radius = b.radius;
        for (long i = 0; i < e.n_paths(); ++i) {
            if (e.status[i] == PathStatus::NotRun) continue;
            ++r.n;
            if (e.status[i] == PathStatus::Alive && (e.endpoint(i) - b.center).norm() <= b.radius) ++r.hits;
        }
        r.estimate = r.n ? static_cast<double>(r.hits) / r.n : 0.0;
        std::tie(r.ci_lo, r.ci_hi) = wilson_interval(r.hits, r.n);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------

FeynmanKacResult feynman_kac(const CauchyProblem& p, double t, const Vec& x, const SimConfig& cfg) {
    if (!p.f) throw InvalidArgument("Cauchy problem needs a terminal payoff f");
    if (!(t <= p.T)) throw InvalidArgument("t must not exceed T");
    SimConfig c = cfg;
    c.horizon = p.T - t;
    const long N = c.n_paths;
    const long n = c.n_steps();
    // per path: discount integral, last rho, source integral, last integrand
    std::vector<double> I(N, 0.0), rho_prev(N, 0.0), G(N, 0.0), h_prev(N, 0.0), val(N, 0.0);
    std::vector<PathStatus> status(N, PathStatus::NotRun);
    std::vector<std::string> bad(N);
    simulate_visit(
        p.model, x, c,
        [&](long i, long k, const Vec& y) {
            if (!bad[i].empty()) return;
            const double s = t + c.time(k);
            const double r = p.rho ? p.rho(s, y) : 0.0;
            if (!(r >= 0.0)) {
                bad[i] = "killing rate is negative or not finite at s = " + std::to_string(s);
                return;
            }
            if (k > 0) I[i] += 0.5 * (rho_prev[i] + r) * (c.time(k) - c.time(k - 1));
            rho_prev[i] = r;
            if (p.g) {
                const double gv = p.g(s, y);
                if (!std::isfinite(gv)) {
                    bad[i] = "source g is not finite";
                    return;
                }
                const double h = std::exp(-I[i]) * gv;
                if (k > 0) G[i] += 0.5 * (h_prev[i] + h) * (c.time(k) - c.time(k - 1));
                h_prev[i] = h;
            }
            if (k == n) {
                const double fv = p.f(y);
                if (!std::isfinite(fv)) {
                    bad[i] = "payoff f is not finite";
                    return;
                }
                val[i] = std::exp(-I[i]) * fv - G[i];
            }
        },
        [&](long i, PathStatus st, double) { status[i] = st; });
    FeynmanKacResult out;
    std::vector<double> used;
    for (long i = 0; i < N; ++i) {
        if (status[i] == PathStatus::NotRun) continue;
        if (status[i] != PathStatus::Alive) {
            ++out.n_exploded;
            continue;
        }
        if (!bad[i].empty()) throw InvalidArgument(bad[i]);
        used.push_back(val[i]);
    }
    out.n_used = static_cast<long>(used.size());
    const long total = out.n_used + out.n_exploded;
    out.exploded_fraction = total ? static_cast<double>(out.n_exploded) / total : 0.0;
    if (out.n_exploded > 0) {
        out.warnings.push_back("ExplodedPaths: " + std::to_string(out.n_exploded) + " of " + std::to_string(total) +
                               " paths exploded and were excluded");
    }
    if (used.empty()) throw InvalidArgument("no path survived to T");
    out.estimate = mean(used);
    out.se = used.size() > 1 ? standard_error(used) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------

void write_feller_csv(const FellerProbe& p, std::ostream& os) {
    os << "separation,distance\n";
    char buf[64];
    for (const auto& r : p.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.separation, r.distance);
        os << buf;
    }
}

void write_strong_feller_csv(const StrongFellerProbe& p, std::ostream& os) {
    os << "separation,px,pz,diff,ratio,se\n";
    char buf[160];
    for (const auto& r : p.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.separation, r.px, r.pz, r.diff,
                      r.ratio, r.se);
        os << buf;
    }
}

void write_ergodicity_csv(const ErgodicityFit& f, std::ostream& os) {
    os << "t,distance\n";
    char buf[64];
    for (std::size_t j = 0; j < f.times.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.times[j], f.distance[j]);
        os << buf;
    }
}

void write_hits_csv(const std::vector<HitRow>& rows, std::ostream& os) {
    os << "center,radius,hits,n,estimate,ci_lo,ci_hi\n";
    char buf[160];
    for (const auto& r : rows) {
        for (int j = 0; j < r.center.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%s%.17g", j ? ";" : "", r.center[j]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%ld,%ld,%.17g,%.17g,%.17g\n", r.radius, r.hits, r.n, r.estimate,
                      r.ci_lo, r.ci_hi);
        os << buf;
    }
}

}  // namespace jumpsde
