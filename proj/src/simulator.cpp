#include "jumpsde/simulator.hpp"

#include "jumpsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <tuple>

namespace jumpsde {

const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "tamed-euler"; }

const char* to_string(StoreMode s) {
    switch (s) {
        case StoreMode::Full: return "full";
        case StoreMode::Endpoints: return "endpoints";
        case StoreMode::Running: return "running";
    }
    return "?";
}

const char* to_string(PathStatus s) {
    switch (s) {
        case PathStatus::Alive: return "alive";
        case PathStatus::Exploded: return "exploded";
        case PathStatus::NonFinite: return "nonfinite";
        case PathStatus::NotRun: return "notrun";
    }
    return "?";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "euler") return Scheme::Euler;
    if (s == "tamed-euler" || s == "tamed") return Scheme::TamedEuler;
    throw InvalidArgument("unknown scheme '" + s + "' (euler, tamed-euler)");
}

void SimConfig::validate(const Vec& x0) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon must be finite and >= 0");
    if (n_paths < 0) throw InvalidArgument("n_paths must be >= 0");
    if (!(explosion_radius > x0.norm())) throw InvalidArgument("explosion radius must exceed |x0|");
    if (!(small_jump_truncation >= 0.0)) throw InvalidArgument("small-jump truncation must be >= 0");
    if (store_every < 1) throw InvalidArgument("store_every must be >= 1");
    if (!x0.allFinite()) throw InvalidArgument("x0 must be finite");
}

long SimConfig::n_steps() const {
    if (horizon == 0.0) return 0;
    return static_cast<long>(std::ceil(horizon / dt - 1e-9));
}

double SimConfig::time(long k) const { return std::min(horizon, k * dt); }

std::vector<long> SimConfig::stored_steps() const {
    const long n = n_steps();
    std::vector<long> out;
    if (store == StoreMode::Endpoints) {
        out = {0, n};
        if (n == 0) out.pop_back();
        return out;
    }
    for (long k = 0; k <= n; k += store_every) out.push_back(k);
    if (out.back() != n) out.push_back(n);
    return out;
}

// ---------------------------------------------------------------------------

StepKernel::StepKernel(const Model& m, const SimConfig& cfg) : m_(&m), scheme_(cfg.scheme) {
    if (!m.has_jumps()) return;
    const LevyMeasure& nu = m.levy;
    // simulated region: everything, or |u| > eps when the mass is infinite
    LevyMeasure active = nu;
    double total = nu.mass();
    if (std::isinf(total)) {
        eps_ = cfg.small_jump_truncation;
        if (eps_ <= 0.0) throw InvalidArgument("infinite-activity Levy measure needs a positive truncation");
        active = nu.restrict(eps_, kInf);
        total = active.mass();
        if (std::isinf(total)) throw InfiniteLargeMass("Levy measure has infinite mass beyond the truncation radius");
    }
    rate_ = total;
    if (rate_ > 0.0) sampler_ = std::make_shared<MarkSampler>(active);

    // compensated region: the small part above eps, plus the large part
    const double thr = nu.threshold();
    const LevyMeasure small = nu.restrict(eps_, thr);
    if (!small.is_zero() && small.mass() > 0.0) comp_regions_.push_back(small);
    if (m.compensate_large) {
        const LevyMeasure large = nu.restrict(std::max(thr, eps_), kInf);
        if (!large.is_zero() && large.mass() > 0.0) comp_regions_.push_back(large);
    }
    compensate_ = !comp_regions_.empty();
    separable_ = m.jump.is_separable();
    if (compensate_ && separable_) {
        const int kd = m.jump.k_dim;
        kbar_ = Vec::Zero(kd);
        for (const auto& reg : comp_regions_) kbar_ += reg.integrate_vec(m.jump.k, kd, false);
        compensate_ = kbar_.cwiseAbs().maxCoeff() > 0.0;
    }
}

Vec StepKernel::compensator(const Vec& x) const {
    if (!compensate_) return Vec::Zero(m_->d);
    if (separable_) return -(m_->jump.J(x) * kbar_);
    Vec out = Vec::Zero(m_->d);
    for (const auto& reg : comp_regions_) {
        out -= reg.integrate_vec([&](const Vec& u) { return m_->jump(x, u); }, m_->d, false);
    }
    return out;
}

Vec StepKernel::drift(const Vec& x, double h) const {
    Vec b = m_->b(x);
    if (scheme_ == Scheme::TamedEuler) b /= (1.0 + h * b.norm());
    if (compensate_) b += compensator(x);
    return b;
}

// ---------------------------------------------------------------------------

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

bool parallel_blocks(long n, long block, int threads, const std::atomic<bool>* cancel,
                     const std::function<void(long, long)>& fn) {
    const long nblocks = (n + block - 1) / block;
    std::atomic<long> next{0};
    std::atomic<bool> stopped{false};
    const auto worker = [&] {
        while (true) {
            if (cancel && cancel->load()) {
                stopped = true;
                return;
            }
            const long b = next++;
            if (b >= nblocks) return;
            fn(b * block, std::min(n, (b + 1) * block));
        }
    };
    const int nt = static_cast<int>(std::min<long>(resolve_threads(threads), std::max<long>(1, nblocks)));
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(nt);
        for (int i = 0; i < nt; ++i) {
            pool.emplace_back([&, i] {
                try {
                    worker();
                } catch (...) {
                    errs[i] = std::current_exception();
                    next = nblocks;
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errs) {
            if (e) std::rethrow_exception(e);
        }
    }
    return !stopped;
}

namespace {

constexpr long kBlock = 64;

bool blown(const Vec& x, double R) { return !x.allFinite() || x.norm() > R; }

// One path on the grid; calls `store(k_index, x)` at stored steps.
template <class Store>
void run_path(const StepKernel& K, const Vec& x0, const SimConfig& cfg, long index, const std::vector<long>& keep,
              Store&& store, PathStatus& status, double& event_time, Vec* w_end) {
    const Model& m = K.model();
    PathStreams rs(cfg.master_seed, static_cast<std::uint64_t>(index));
    const long n = cfg.n_steps();
    const int q = m.noise_dim;
    Vec x = x0;
    Vec dW(q);
    Vec W = Vec::Zero(q);
    status = PathStatus::Alive;
    event_time = std::numeric_limits<double>::infinity();
    double next_jump = K.has_jumps() ? rs.jump_times.exponential(K.jump_rate()) : kInf;
    std::size_t ki = 0;
    if (!keep.empty() && keep[0] == 0) store(ki++, x);

    const auto mark_dead = [&](double t) {
        status = x.allFinite() ? PathStatus::Exploded : PathStatus::NonFinite;
        event_time = t;
    };

    for (long k = 0; k < n; ++k) {
        const double t0 = cfg.time(k);
        const double t1 = cfg.time(k + 1);
        const double h = t1 - t0;
        if (status == PathStatus::Alive) {
            if (m.has_diffusion()) {
                const double sh = std::sqrt(h);
                for (int i = 0; i < q; ++i) dW[i] = sh * rs.brownian.normal();
                W += dW;
            }
            double s = t0;
            // continuous sub-steps between the jump times inside (t0, t1]
            while (status == PathStatus::Alive) {
                const double e = std::min(next_jump, t1);
                const double l = e - s;
                if (l > 0.0) {
                    Vec inc = K.drift(x, l) * l;
                    if (m.has_diffusion()) inc += m.sigma(x) * (dW * (l / h));
                    x += inc;
                    if (blown(x, cfg.explosion_radius)) {
                        mark_dead(e);
                        break;
                    }
                }
                s = e;
                if (next_jump > t1) break;
                const Vec u = K.sample_mark(rs.jump_marks);
                x += m.c(x, u);
                if (blown(x, cfg.explosion_radius)) {
                    mark_dead(next_jump);
                    break;
                }
                next_jump += rs.jump_times.exponential(K.jump_rate());
            }
        }
        if (ki < keep.size() && keep[ki] == k + 1) store(ki++, x);
    }
    if (w_end) *w_end = W;
}

}  // namespace

Vec PathEnsemble::endpoint(long i) const {
    if (full()) return state(i, times.size() - 1);
    return Eigen::Map<const Vec>(states.data() + i * d, d);
}

Vec PathEnsemble::state(long i, std::size_t k) const {
    if (!full()) throw InvalidArgument("ensemble does not store full paths");
    return Eigen::Map<const Vec>(states.data() + (i * times.size() + k) * d, d);
}

Vec PathEnsemble::brownian(long i) const {
    if (brownian_end.empty()) throw InvalidArgument("Brownian endpoints were not recorded");
    return Eigen::Map<const Vec>(brownian_end.data() + i * noise_dim, noise_dim);
}

std::vector<Vec> PathEnsemble::endpoints(bool alive_only) const {
    std::vector<Vec> out;
    out.reserve(status.size());
    for (long i = 0; i < n_paths(); ++i) {
        if (status[i] == PathStatus::NotRun) continue;
        if (alive_only && status[i] != PathStatus::Alive) continue;
        out.push_back(endpoint(i));
    }
    return out;
}

PathEnsemble simulate(const Model& m, const Vec& x0, const SimConfig& cfg) {
    cfg.validate(x0);
    if (x0.size() != m.d) throw InvalidArgument("x0 has dimension " + std::to_string(x0.size()) + ", model has " +
                                                std::to_string(m.d));
    const StepKernel K(m, cfg);
    PathEnsemble e;
    e.d = m.d;
    e.noise_dim = m.noise_dim;
    e.cfg = cfg;
    e.x0 = x0;
    const long N = cfg.n_paths;
    const std::vector<long> keep = cfg.stored_steps();
    for (long k : keep) e.times.push_back(cfg.time(k));
    const std::size_t nt = keep.size();
    const int d = m.d;
    e.status.assign(N, PathStatus::NotRun);
    e.event_time.assign(N, std::numeric_limits<double>::infinity());
    if (cfg.record_brownian) e.brownian_end.assign(N * m.noise_dim, 0.0);
    const bool full = cfg.store == StoreMode::Full;
    const bool running = cfg.store == StoreMode::Running;
    e.states.assign(full ? N * nt * d : (running ? 0 : N * d), 0.0);

    // running sums per block, reduced in block order for schedule independence
    const long nblocks = (N + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> bsum, bsq;
    std::vector<std::vector<long>> bcnt;
    if (running) {
        bsum.assign(nblocks, std::vector<double>(nt * d, 0.0));
        bsq.assign(nblocks, std::vector<double>(nt * d, 0.0));
        bcnt.assign(nblocks, std::vector<long>(nt, 0));
    }

    e.cancelled = !parallel_blocks(N, kBlock, cfg.threads, cfg.cancel, [&](long lo, long hi) {
        const long b = lo / kBlock;
        std::vector<double> path(nt * d);
        std::vector<char> alive(nt, 0);
        for (long i = lo; i < hi; ++i) {
            PathStatus st;
            double te;
            Vec w;
            run_path(
                K, x0, cfg, i, keep,
                [&](std::size_t k, const Vec& x) {
                    std::copy(x.data(), x.data() + d, path.begin() + k * d);
                    alive[k] = 1;
                },
                st, te, cfg.record_brownian ? &w : nullptr);
            // a frozen path keeps its last state at later stored times
            for (std::size_t k = 0; k < nt; ++k) {
                const bool dead_here = st != PathStatus::Alive && e.times[k] >= te;
                if (running) {
                    if (dead_here) continue;
                    ++bcnt[b][k];
                    for (int j = 0; j < d; ++j) {
                        const double v = path[k * d + j];
                        bsum[b][k * d + j] += v;
                        bsq[b][k * d + j] += v * v;
                    }
                }
            }
            if (full) std::copy(path.begin(), path.end(), e.states.begin() + i * nt * d);
            if (!full && !running) std::copy(path.end() - d, path.end(), e.states.begin() + i * d);
            e.status[i] = st;
            e.event_time[i] = te;
            if (cfg.record_brownian) std::copy(w.data(), w.data() + w.size(), e.brownian_end.begin() + i * m.noise_dim);
        }
    });

    if (running) {
        e.run_count.assign(nt, 0);
        e.run_mean.assign(nt * d, 0.0);
        e.run_var.assign(nt * d, 0.0);
        std::vector<double> s(nt * d, 0.0), s2(nt * d, 0.0);
        for (long b = 0; b < nblocks; ++b) {
            for (std::size_t k = 0; k < nt; ++k) e.run_count[k] += bcnt[b][k];
            for (std::size_t j = 0; j < nt * d; ++j) {
                s[j] += bsum[b][j];
                s2[j] += bsq[b][j];
            }
        }
        for (std::size_t k = 0; k < nt; ++k) {
            const double c = static_cast<double>(e.run_count[k]);
            for (int j = 0; j < d; ++j) {
                if (c == 0) continue;
                const double mu = s[k * d + j] / c;
                e.run_mean[k * d + j] = mu;
                e.run_var[k * d + j] = c > 1 ? std::max(0.0, (s2[k * d + j] - c * mu * mu) / (c - 1)) : 0.0;
            }
        }
    }
    return e;
}

bool simulate_visit(const Model& m, const Vec& x0, const SimConfig& cfg, const PathVisitor& visit,
                    const PathDone& done) {
    cfg.validate(x0);
    if (x0.size() != m.d) throw InvalidArgument("x0 dimension does not match the model");
    SimConfig c = cfg;
    c.store = StoreMode::Full;
    c.store_every = 1;
    const StepKernel K(m, c);
    const std::vector<long> keep = c.stored_steps();
    return parallel_blocks(c.n_paths, kBlock, c.threads, c.cancel, [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            PathStatus st;
            double te;
            run_path(
                K, x0, c, i, keep, [&](std::size_t k, const Vec& x) { visit(i, keep[k], x); }, st, te, nullptr);
            if (done) done(i, st, te);
        }
    });
}

Trajectory replay(const Model& m, const Vec& x0, const SimConfig& cfg, long index) {
    cfg.validate(x0);
    SimConfig c = cfg;
    if (c.store == StoreMode::Endpoints || c.store == StoreMode::Running) c.store = StoreMode::Full;
    const StepKernel K(m, c);
    const std::vector<long> keep = c.stored_steps();
    Trajectory tr;
    for (long k : keep) tr.times.push_back(c.time(k));
    tr.states.resize(keep.size());
    Vec w;
    run_path(
        K, x0, c, index, keep, [&](std::size_t k, const Vec& x) { tr.states[k] = x; }, tr.status, tr.event_time,
        &w);
    tr.brownian_end = w;
    return tr;
}

// ---------------------------------------------------------------------------

Vec closed_form_solution(const Model& m, const Vec& x0, double T, const Vec& W) {
    switch (m.closed_form) {
        case ClosedForm::Zero: return x0;
        case ClosedForm::Brownian: return x0 + m.cf_s * W;
        case ClosedForm::LinearODE: return x0 * std::exp(m.cf_a * T);
        case ClosedForm::Geometric: {
            Vec out(x0.size());
            for (int j = 0; j < x0.size(); ++j) {
                out[j] = x0[j] * std::exp((m.cf_a - 0.5 * m.cf_s * m.cf_s) * T + m.cf_s * W[j]);
            }
            return out;
        }
        case ClosedForm::None: break;
    }
    throw NoClosedForm(m.name + " has no closed-form strong solution");
}

StrongErrorTable strong_error(const Model& m, const Vec& x0, const SimConfig& base, const std::vector<double>& dts) {
    if (m.closed_form == ClosedForm::None) throw NoClosedForm(m.name + " has no closed-form strong solution");
    if (dts.size() < 2) throw InvalidArgument("strong_error needs at least two step sizes");
    StrongErrorTable out;
    std::vector<double> lx, ly;
    for (double dt : dts) {
        SimConfig c = base;
        c.dt = dt;
        c.store = StoreMode::Endpoints;
        c.record_brownian = true;
        const PathEnsemble e = simulate(m, x0, c);
        std::vector<double> sq;
        for (long i = 0; i < e.n_paths(); ++i) {
            if (e.status[i] != PathStatus::Alive) continue;
            const Vec exact = closed_form_solution(m, x0, c.horizon, e.brownian(i));
            sq.push_back((e.endpoint(i) - exact).squaredNorm());
        }
        StrongErrorRow row;
        row.dt = dt;
        const double ms = mean(sq);
        row.rms = std::sqrt(ms);
        row.se = ms > 0.0 ? standard_error(sq) / (2.0 * row.rms) : 0.0;
        out.rows.push_back(row);
        if (row.rms > 0.0) {
            lx.push_back(std::log(dt));
            ly.push_back(std::log(row.rms));
        }
    }
    if (lx.size() >= 2) {
        const LinearFit f = least_squares(lx, ly);
        out.slope = f.slope;
        out.intercept = f.intercept;
        out.r2 = f.r2;
    }
    return out;
}

ExplosionEstimate explosion_summary(const PathEnsemble& e) {
    ExplosionEstimate r;
    double st = 0.0;
    for (long i = 0; i < e.n_paths(); ++i) {
        if (e.status[i] == PathStatus::NotRun) continue;
        ++r.n;
        if (e.status[i] == PathStatus::Exploded || e.status[i] == PathStatus::NonFinite) {
            ++r.exploded;
            const double t = e.event_time[i];
            st += t;
            r.min_time = r.exploded == 1 ? t : std::min(r.min_time, t);
            r.max_time = r.exploded == 1 ? t : std::max(r.max_time, t);
        }
    }
    r.estimate = r.n ? double(r.exploded) / r.n : 0.0;
    std::tie(r.ci_lo, r.ci_hi) = wilson_interval(r.exploded, r.n);
    if (r.exploded) r.mean_time = st / r.exploded;
    return r;
}

ExplosionEstimate explosion_probability(const Model& m, const Vec& x0, const SimConfig& cfg) {
    SimConfig c = cfg;
    c.store = StoreMode::Endpoints;
    return explosion_summary(simulate(m, x0, c));
}

// ---------------------------------------------------------------------------

void write_paths_csv(const PathEnsemble& e, std::ostream& os) {
    os << "path_id,t";
    for (int j = 0; j < e.d; ++j) os << ",x_" << j + 1;
    os << ",status\n";
    char buf[64];
    const auto row = [&](long i, double t, const Vec& x, PathStatus st) {
        os << i;
        std::snprintf(buf, sizeof buf, ",%.17g", t);
        os << buf;
        for (int j = 0; j < e.d; ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", x[j]);
            os << buf;
        }
        os << ',' << to_string(st) << '\n';
    };
    for (long i = 0; i < e.n_paths(); ++i) {
        if (e.status[i] == PathStatus::NotRun) continue;
        if (e.full()) {
            for (std::size_t k = 0; k < e.times.size(); ++k) {
                const bool dead = e.status[i] != PathStatus::Alive && e.times[k] >= e.event_time[i];
                row(i, e.times[k], e.state(i, k), dead ? e.status[i] : PathStatus::Alive);
            }
        } else if (e.cfg.store == StoreMode::Endpoints) {
            row(i, e.times.back(), e.endpoint(i), e.status[i]);
        }
    }
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw InvalidArgument("truncated ensemble file");
    return v;
}

}  // namespace

void write_ensemble_binary(const PathEnsemble& e, std::ostream& os) {
    if (e.cfg.store == StoreMode::Running) throw InvalidArgument("running-statistics ensembles have no paths to write");
    os.write("JSDE", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.d));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(e.n_paths()));
    const std::size_t nt = e.full() ? e.times.size() : 1;
    put<std::uint64_t>(os, nt);
    if (e.full()) {
        for (double t : e.times) put(os, t);
    } else {
        put(os, e.times.back());
    }
    for (long i = 0; i < e.n_paths(); ++i) {
        put<std::uint8_t>(os, static_cast<std::uint8_t>(e.status[i]));
        put(os, e.event_time[i]);
        const double* p = e.states.data() + i * nt * e.d;
        os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(nt * e.d * sizeof(double)));
    }
}

PathEnsemble read_ensemble_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "JSDE", 4) != 0) throw InvalidArgument("not a JSDE ensemble file");
    const auto version = get<std::uint32_t>(is);
    if (version != 1) throw InvalidArgument("unsupported JSDE version " + std::to_string(version));
    PathEnsemble e;
    e.d = static_cast<int>(get<std::uint32_t>(is));
    const auto n = static_cast<long>(get<std::uint64_t>(is));
    const auto nt = static_cast<std::size_t>(get<std::uint64_t>(is));
    e.times.resize(nt);
    for (auto& t : e.times) t = get<double>(is);
    e.cfg.store = nt > 1 ? StoreMode::Full : StoreMode::Endpoints;
    e.cfg.horizon = e.times.empty() ? 0.0 : e.times.back();
    if (nt == 1) e.times.insert(e.times.begin(), 0.0);
    e.status.resize(n);
    e.event_time.resize(n);
    e.states.resize(n * nt * e.d);
    for (long i = 0; i < n; ++i) {
        e.status[i] = static_cast<PathStatus>(get<std::uint8_t>(is));
        e.event_time[i] = get<double>(is);
        if (!is.read(reinterpret_cast<char*>(e.states.data() + i * nt * e.d),
                     static_cast<std::streamsize>(nt * e.d * sizeof(double)))) {
            throw InvalidArgument("truncated ensemble file");
        }
    }
    return e;
}

}  // namespace jumpsde
