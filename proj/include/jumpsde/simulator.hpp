#pragma once

#include "jumpsde/levy_measure.hpp"
#include "jumpsde/model.hpp"
#include "jumpsde/rng.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

namespace jumpsde {

enum class Scheme { Euler, TamedEuler };
enum class StoreMode { Full, Endpoints, Running };
enum class PathStatus : std::uint8_t { Alive = 0, Exploded = 1, NonFinite = 2, NotRun = 3 };

const char* to_string(Scheme s);
const char* to_string(StoreMode s);
const char* to_string(PathStatus s);
Scheme scheme_from_string(const std::string& s);

struct SimConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    long n_paths = 1000;
    Scheme scheme = Scheme::TamedEuler;
    double explosion_radius = 1e8;
    /// Jumps with |u| <= eps are dropped (their compensator is kept) when
    /// the Levy measure has infinite mass.
    double small_jump_truncation = 1e-2;
    std::uint64_t master_seed = 0;
    StoreMode store = StoreMode::Endpoints;
    int store_every = 1;   ///< Full/Running: keep every k-th grid time (plus T)
    int threads = 0;       ///< 0: hardware concurrency
    bool record_brownian = false;
    /// Checked between blocks of paths; paths not started are NotRun.
    const std::atomic<bool>* cancel = nullptr;

    /// Throws InvalidArgument.
    void validate(const Vec& x0) const;
    long n_steps() const;
    /// Grid time t_k = min(k dt, T).
    double time(long k) const;
    std::vector<long> stored_steps() const;
};

/// Precomputed per-model pieces of one Euler step: tamed drift, the
/// compensator of the simulated jumps, and the Poisson jump source.
class StepKernel {
public:
    StepKernel(const Model& m, const SimConfig& cfg);

    const Model& model() const { return *m_; }
    /// b or b / (1 + h |b|), plus the compensator drift.
    Vec drift(const Vec& x, double h) const;
    Mat sigma(const Vec& x) const { return m_->sigma(x); }
    /// -int c(x, u) nu(du) over the compensated part of the simulated region
    /// (zero vector when nothing is compensated).
    Vec compensator(const Vec& x) const;
    bool has_jumps() const { return rate_ > 0.0; }
    double jump_rate() const { return rate_; }
    double truncation() const { return eps_; }
    Vec sample_mark(Stream& s) const { return sampler_->sample(s); }

private:
    const Model* m_;
    Scheme scheme_;
    double eps_ = 0.0;
    double rate_ = 0.0;
    std::shared_ptr<MarkSampler> sampler_;
    bool compensate_ = false;
    bool separable_ = false;
    Vec kbar_;                  // int k dnu over the compensated region
    std::vector<LevyMeasure> comp_regions_;
};

/// N trajectories and their per-path status. States are indexed by
/// (path, stored time, coordinate).
struct PathEnsemble {
    int d = 0;
    int noise_dim = 0;
    SimConfig cfg;
    Vec x0;
    std::vector<double> times;      ///< stored grid (Full/Running), or {0, T}
    std::vector<double> states;     ///< Full: n_paths * times * d; Endpoints: n_paths * d
    std::vector<PathStatus> status;
    std::vector<double> event_time; ///< t* for exploded/non-finite paths, else +inf
    std::vector<double> brownian_end; ///< W(T) per path when recorded
    // Running: per stored time, over paths alive at that time
    std::vector<long> run_count;
    std::vector<double> run_mean;   ///< times * d
    std::vector<double> run_var;    ///< times * d
    bool cancelled = false;

    long n_paths() const { return static_cast<long>(status.size()); }
    bool full() const { return cfg.store == StoreMode::Full; }
    Vec endpoint(long i) const;
    Vec state(long i, std::size_t k) const;
    Vec brownian(long i) const;
    std::vector<Vec> endpoints(bool alive_only = false) const;
};

PathEnsemble simulate(const Model& m, const Vec& x0, const SimConfig& cfg);

/// Runs the paths of simulate(m, x0, cfg) without storing them. visit(i, k, x)
/// is called at every grid step k = 0..n_steps (a dead path repeats its
/// frozen state), then done(i, status, event_time) once. Calls for one path come from one thread
/// in step order; different paths may run concurrently. Returns false when
/// cancelled.
using PathVisitor = std::function<void(long path, long step, const Vec& x)>;
using PathDone = std::function<void(long path, PathStatus status, double event_time)>;
bool simulate_visit(const Model& m, const Vec& x0, const SimConfig& cfg, const PathVisitor& visit,
                    const PathDone& done = {});

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    PathStatus status = PathStatus::Alive;
    double event_time = std::numeric_limits<double>::infinity();
    Vec brownian_end;
};
/// Re-runs path `index` of simulate(m, x0, cfg) on the full stored grid.
Trajectory replay(const Model& m, const Vec& x0, const SimConfig& cfg, long index);

struct StrongErrorRow {
    double dt = 0.0;
    double rms = 0.0;
    double se = 0.0;   ///< standard error of the mean squared error, propagated
};
struct StrongErrorTable {
    std::vector<StrongErrorRow> rows;
    double slope = 0.0;      ///< fitted log-log order
    double intercept = 0.0;
    double r2 = 0.0;
};
/// Root-mean-square endpoint error against the closed-form strong solution
/// driven by the same Brownian path. Throws NoClosedForm.
StrongErrorTable strong_error(const Model& m, const Vec& x0, const SimConfig& base, const std::vector<double>& dts);
/// Closed-form X(T) given W(T), for the tagged built-ins.
Vec closed_form_solution(const Model& m, const Vec& x0, double T, const Vec& W);

struct ExplosionEstimate {
    long exploded = 0;
    long n = 0;
    double estimate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double mean_time = std::numeric_limits<double>::quiet_NaN();  ///< over exploded paths
    double min_time = std::numeric_limits<double>::quiet_NaN();
    double max_time = std::numeric_limits<double>::quiet_NaN();
};
ExplosionEstimate explosion_probability(const Model& m, const Vec& x0, const SimConfig& cfg);
ExplosionEstimate explosion_summary(const PathEnsemble& e);

/// path_id,t,x_1..x_d,status (Full: every stored time; otherwise endpoints).
void write_paths_csv(const PathEnsemble& e, std::ostream& os);
/// Little-endian binary: "JSDE", u32 version, u32 d, u64 n_paths,
/// u64 n_times, f64 times[n_times], then per path u8 status, f64 t*,
/// f64 states[n_times * d].
void write_ensemble_binary(const PathEnsemble& e, std::ostream& os);
PathEnsemble read_ensemble_binary(std::istream& is);

/// Runs fn(begin, end) over [0, n) in fixed blocks on `threads` workers.
/// Blocks are assigned dynamically but each index is processed by exactly
/// one call, so per-index outputs do not depend on the schedule. Returns
/// false when the cancel flag stopped it early.
bool parallel_blocks(long n, long block, int threads, const std::atomic<bool>* cancel,
                     const std::function<void(long, long)>& fn);
int resolve_threads(int threads);

}  // namespace jumpsde
