// jumpsde: command-line front end over scenario files.
//
// Exit codes: 0 success, 2 a checked condition was violated, 1 errors
// (including an interrupted run, after its partial artifacts are written).

#include "CLI11.hpp"
#include "json.hpp"

#include "jumpsde/analysis.hpp"
#include "jumpsde/builtin.hpp"
#include "jumpsde/coupling.hpp"
#include "jumpsde/scenario.hpp"
#include "jumpsde/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace jumpsde;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

const char* kFormats = R"(Artifacts (CSV: '.' decimal, '\n' line endings, header row):
  simulate         paths.csv     path_id,t,x_1..x_d,status
                   ensemble.bin  with --binary (see write_ensemble_binary)
  couple           coupling.csv  pair_id,T,max_separation,glued (T: coupling time, inf if not glued)
  check            check.json    one report per check
  ergodicity       ergodicity.csv t,distance
  irreducibility   hits.csv      center,radius,hits,n,estimate,ci_lo,ci_hi (center ';'-joined)
  fk               fk.json
  levy-sample      levy.csv      u_1..u_k,norm
Every command also writes summary.json (schema_version, command, results)
and scenario.cfg, the normalized scenario with all overrides applied.

Exit codes: 0 success, 2 check violated, 1 error or interrupt.)";

struct Common {
    std::string scenario;
    std::string out = "jumpsde-out";
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<std::string> scheme;
    std::optional<int> threads;
};

void add_common(CLI::App* sub, Common& c, bool scenario_required = true) {
    auto* s = sub->add_option("--scenario,-s", c.scenario, "scenario file");
    if (scenario_required) s->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", c.out, "artifact directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "master seed (overrides sim.seed)");
    sub->add_option("--paths", c.paths, "number of paths (overrides sim.paths)");
    sub->add_option("--dt", c.dt, "time step (overrides sim.dt)");
    sub->add_option("--horizon", c.horizon, "time horizon (overrides sim.horizon)");
    sub->add_option("--scheme", c.scheme, "euler or tamed-euler (overrides sim.scheme)");
    sub->add_option("--threads", c.threads, "worker threads, 0 for all cores (overrides sim.threads)");
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// Parses the scenario and applies the command-line overrides to [sim].
Scenario load(const Common& c) {
    Scenario s = parse_scenario(read_file(c.scenario));
    auto& sim = s.values["sim"];
    if (c.seed) sim["seed"] = std::to_string(*c.seed);
    if (c.paths) sim["paths"] = std::to_string(*c.paths);
    if (c.dt) sim["dt"] = format_number(*c.dt);
    if (c.horizon) sim["horizon"] = format_number(*c.horizon);
    if (c.scheme) {
        scheme_from_string(*c.scheme);
        sim["scheme"] = *c.scheme;
    }
    if (c.threads) sim["threads"] = std::to_string(*c.threads);
    return s;
}

SimConfig sim_config(const Scenario& s) {
    SimConfig cfg = s.sim();
    cfg.cancel = &g_cancel;
    return cfg;
}

class Artifacts {
public:
    explicit Artifacts(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw InvalidArgument("cannot write '" + (dir_ / name).string() + "'");
        os.precision(17);
        written_.push_back(name);
        return os;
    }
    void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << "\n"; }
    void write_text(const std::string& name, const std::string& text) { open(name) << text; }
    void list(std::ostream& os) const {
        os << "artifacts in " << dir_.string() << ":";
        for (const auto& n : written_) os << " " << n;
        os << "\n";
    }

private:
    fs::path dir_;
    std::vector<std::string> written_;
};

json summary_header(const std::string& command, const Scenario& s) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["model"] = s.model().name;
    j["d"] = s.dim();
    j["seed"] = s.integer("sim", "seed");
    return j;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vec& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
    return a;
}

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

int finish(Artifacts& out, bool cancelled) {
    out.list(std::cout);
    if (cancelled) {
        std::cerr << "interrupted: partial artifacts written\n";
        return 1;
    }
    return 0;
}

TestFunction test_function(const std::string& name) {
    if (name == "abs2") return TestFunction::abs2();
    if (name == "quartic") return TestFunction::quartic();
    throw InvalidArgument("unknown test function '" + name + "' (abs2, quartic)");
}

ModulusFunction modulus(const Scenario& s, ModRole role) {
    const bool given = s.has("check") && s.values.at("check").count("modulus");
    const std::string fam = given ? s.get("check", "modulus") : (role == ModRole::Zeta ? "constant" : "linear");
    const double c = s.has("check") ? s.number("check", "modulus_c") : 1.0;
    if (fam == "constant") return ModulusFunction::constant(c, role);
    if (fam == "linear") return ModulusFunction::linear(c, role);
    if (fam == "power") return ModulusFunction::power(c, s.number("check", "modulus_p"), role);
    if (fam == "r_log_inv") return ModulusFunction::r_log_inv(c, role);
    if (fam == "r_loglog_inv") return ModulusFunction::r_loglog_inv(c, role);
    if (fam == "r_log_inv_loglog_inv") return ModulusFunction::r_log_inv_loglog_inv(c, role);
    if (fam == "log_growth") return ModulusFunction::log_growth();
    return ModulusFunction::loglog_growth();
}

ProbeSet probes(const Scenario& s, bool pairs) {
    const int d = s.dim();
    const long n = s.integer("check", "count");
    const double R = s.number("check", "radius");
    const auto seed = static_cast<std::uint64_t>(s.integer("check", "probe_seed"));
    const std::string kind = s.get("check", "probes");
    if (pairs) return ProbeSet::pairs(d, n, R, s.number("check", "delta0"), seed, s.number("check", "min_sep"));
    if (kind == "grid") return ProbeSet::grid(d, n, R);
    return ProbeSet::ball(d, n, R, seed);
}

std::vector<double> time_grid(double t_max, double step) {
    std::vector<double> t;
    const long n = static_cast<long>(std::llround(t_max / step));
    for (long k = 0; k <= n; ++k) t.push_back(std::min(t_max, k * step));
    return t;
}

// ---------------------------------------------------------------------------

int cmd_examples(const std::string& emit) {
    if (!emit.empty()) {
        const Model m = builtin_by_name(emit, 2);
        std::string x0;
        for (int i = 0; i < m.d; ++i) x0 += (i ? ", " : "") + std::string("1");
        std::cout << normalize_scenario("[model]\nbuiltin = " + emit + "\nd = " + std::to_string(m.d) +
                                        "\n[sim]\nx0 = " + x0 + "\n");
        return 0;
    }
    for (const Model& m : builtin_models()) {
        std::cout << m.name << "  (d = " << m.d << ")\n    " << m.origin << "\n";
    }
    std::cout << "also available: OU, Brownian, Zero, Geometric, LinearODE (any d), ConfluenceDemo, NonFellerDemo\n";
    return 0;
}

int cmd_simulate(const Common& c, int store_every, bool binary) {
    const Scenario s = load(c);
    const Model m = s.model();
    SimConfig cfg = sim_config(s);
    if (store_every > 0) {
        cfg.store = StoreMode::Full;
        cfg.store_every = store_every;
    }
    const PathEnsemble e = simulate(m, s.x0(), cfg);
    Artifacts out(c.out);
    out.write_text("scenario.cfg", emit_scenario(s));
    {
        auto os = out.open("paths.csv");
        write_paths_csv(e, os);
    }
    if (binary) {
        auto os = out.open("ensemble.bin");
        write_ensemble_binary(e, os);
    }
    const ExplosionEstimate ex = explosion_summary(e);
    const auto alive = e.endpoints(true);
    Vec mean = Vec::Zero(m.d);
    for (const auto& x : alive) mean += x;
    if (!alive.empty()) mean /= static_cast<double>(alive.size());

    json j = summary_header("simulate", s);
    j["n_paths"] = e.n_paths();
    j["completed"] = static_cast<long>(
        std::count_if(e.status.begin(), e.status.end(), [](PathStatus st) { return st != PathStatus::NotRun; }));
    j["alive"] = static_cast<long>(alive.size());
    j["exploded"] = ex.exploded;
    j["explosion_ci"] = {num(ex.ci_lo), num(ex.ci_hi)};
    j["first_explosion_time"] = num(ex.min_time);
    j["mean_endpoint"] = vec_json(mean);
    j["cancelled"] = e.cancelled;
    out.write_json("summary.json", j);

    std::cout << m.name << ": " << e.n_paths() << " paths to T = " << fmt(cfg.horizon) << " with dt = " << fmt(cfg.dt)
              << " (" << to_string(cfg.scheme) << ")\n";
    std::cout << "exploded " << ex.exploded << "/" << ex.n << ", 95% CI [" << fmt(ex.ci_lo, 3) << ", "
              << fmt(ex.ci_hi, 3) << "]";
    if (ex.exploded > 0) std::cout << ", first at t = " << fmt(ex.min_time, 4);
    std::cout << "\n";
    return finish(out, e.cancelled);
}

int cmd_couple(const Common& c) {
    const Scenario s = load(c);
    if (!s.has("coupling")) throw InvalidArgument("couple needs a [coupling] section");
    const Model m = s.model();
    const SimConfig cfg = sim_config(s);
    CouplingScheme scheme;
    scheme.kind = coupling_from_string(s.get("coupling", "kind"));
    scheme.lambda0 = s.number("coupling", "lambda0");
    scheme.glue_radius = s.number("coupling", "glue_radius");
    const CoupledEnsemble e = couple(m, s.x0(), s.vector("coupling", "z0"), scheme, cfg);

    Artifacts out(c.out);
    out.write_text("scenario.cfg", emit_scenario(s));
    {
        auto os = out.open("coupling.csv");
        write_coupling_csv(e, os);
    }
    long glued = 0;
    double min_sep = std::numeric_limits<double>::infinity();
    for (long i = 0; i < e.n_pairs(); ++i) {
        glued += e.glued(i) ? 1 : 0;
        min_sep = std::min(min_sep, e.min_separation[i]);
    }
    json j = summary_header("couple", s);
    j["kind"] = to_string(scheme.kind);
    j["n_pairs"] = e.n_pairs();
    j["glued"] = glued;
    j["min_separation"] = num(min_sep);
    j["cancelled"] = e.cancelled;
    out.write_json("summary.json", j);
    std::cout << to_string(scheme.kind) << " coupling of " << m.name << ": " << glued << "/" << e.n_pairs()
              << " pairs glued (radius " << fmt(scheme.glue_radius, 3) << "), min separation " << fmt(min_sep, 4)
              << "\n";
    return finish(out, e.cancelled);
}

struct CheckFlags {
    bool nonexplosion = false;
    bool pathwise_a = false;
    bool pathwise_b = false;
    bool feller = false;
    bool strong_feller = false;
    bool nonconfluence = false;
    std::string drift_ergodicity;   // "V=abs2"
};

int cmd_check(const Common& c, CheckFlags f) {
    Scenario s = load(c);
    if (!s.has("check")) {
        s = parse_scenario(emit_scenario(s) + "\n[check]\n");
    }
    const Model m = s.model();
    VerifyOptions opt;
    opt.threads = static_cast<int>(s.integer("sim", "threads"));
    opt.seed = static_cast<std::uint64_t>(s.integer("sim", "seed"));
    const auto kappa = s.optional_number("check", "kappa");
    if (!f.nonexplosion && !f.pathwise_a && !f.pathwise_b && !f.feller && !f.strong_feller && !f.nonconfluence &&
        f.drift_ergodicity.empty()) {
        f.nonexplosion = f.pathwise_b = true;
    }

    std::vector<CheckReport> reports;
    if (f.nonexplosion) reports.push_back(check_nonexplosion(m, modulus(s, ModRole::Zeta), kappa, probes(s, false), opt));
    if (f.pathwise_a) reports.push_back(check_pathwise_A(m, modulus(s, ModRole::Rho), kappa, probes(s, true), opt));
    if (f.pathwise_b) reports.push_back(check_pathwise_B(m, modulus(s, ModRole::Varrho), kappa, probes(s, true), opt));
    if (f.feller) reports.push_back(check_feller(m, modulus(s, ModRole::Varrho), kappa, probes(s, true), opt));
    if (f.strong_feller) {
        const ProbeSet ps = probes(s, true);
        double lambda0 = 0.0;
        if (auto l = s.optional_number("check", "lambda0")) {
            lambda0 = *l;
        } else {
            lambda0 = estimate_lambda0(m, ps.points());
        }
        reports.push_back(check_strong_feller(m, lambda0, modulus(s, ModRole::Vartheta), kappa, ps, opt));
    }
    if (f.nonconfluence) {
        reports.push_back(check_nonconfluence(m, RadialFunction::inverse_square(), std::nullopt, probes(s, true), opt));
    }
    if (!f.drift_ergodicity.empty()) {
        std::string v = f.drift_ergodicity;
        if (v.rfind("V=", 0) == 0) v = v.substr(2);
        reports.push_back(check_drift_ergodicity(m, test_function(v), std::nullopt, std::nullopt, probes(s, false), opt));
    }

    Artifacts out(c.out);
    out.write_text("scenario.cfg", emit_scenario(s));
    json j = summary_header("check", s);
    json arr = json::array();
    bool violated = false;
    for (const auto& r : reports) {
        arr.push_back(r.to_json());
        violated = violated || r.status == CheckStatus::Violated;
        std::cout << r.check << ": " << to_string(r.status) << ", margin " << fmt(r.margin, 4) << " over "
                  << r.n_probes << " probes";
        if (r.n_violated > 0) std::cout << " (" << r.n_violated << " violated)";
        std::cout << "\n";
        if (r.params.contains("LV_origin") && r.params["LV_origin"].is_number()) {
            std::cout << "  LV(0) = " << fmt(r.params["LV_origin"].get<double>()) << "\n";
        }
        for (const auto& n : r.notes) std::cout << "  note: " << n << "\n";
    }
    j["reports"] = arr;
    j["violated"] = violated;
    out.write_json("check.json", j);
    out.list(std::cout);
    return violated ? 2 : 0;
}

int cmd_ergodicity(const Common& c) {
    const Scenario s0 = load(c);
    const Scenario s = s0.has("ergodicity") ? s0 : parse_scenario(emit_scenario(s0) + "\n[ergodicity]\n");
    const Model m = s.model();
    const SimConfig cfg = sim_config(s);
    ErgodicityOptions o;
    o.times = time_grid(s.number("ergodicity", "t_max"), s.number("ergodicity", "t_step"));
    o.reference_horizon = s.number("ergodicity", "reference_horizon");
    o.cells_per_axis = static_cast<int>(s.integer("ergodicity", "cells"));
    const ErgodicityFit fit = ergodicity_fit(m, {s.x0()}, test_function(s.get("ergodicity", "V")), o, cfg);

    Artifacts out(c.out);
    out.write_text("scenario.cfg", emit_scenario(s));
    {
        auto os = out.open("ergodicity.csv");
        write_ergodicity_csv(fit, os);
    }
    json j = summary_header("ergodicity", s);
    j["fit"] = fit.to_json();
    out.write_json("summary.json", j);
    std::cout << m.name << ": theta = " << fmt(fit.theta, 4) << ", R^2 = " << fmt(fit.r2, 3) << " on " << fit.n_fit
              << " points, noise floor " << fmt(fit.noise_floor, 3) << (fit.non_ergodic ? ", non-ergodic" : "")
              << (fit.non_stationary ? ", reference not stationary" : "") << "\n";
    for (const auto& n : fit.notes) std::cout << "  note: " << n << "\n";
    return finish(out, g_cancel.load());
}

int cmd_irreducibility(const Common& c) {
    const Scenario s = load(c);
    if (!s.has("irreducibility")) throw InvalidArgument("irreducibility needs an [irreducibility] section");
    const Model m = s.model();
    std::vector<TargetBall> targets;
    for (const auto& [a, r] : parse_point_list(s.get("irreducibility", "targets"), s.dim())) targets.push_back({a, r});
    const double t = s.number("irreducibility", "t");
    const auto rows = irreducibility_probe(m, s.x0(), t, targets, sim_config(s));

    Artifacts out(c.out);
    out.write_text("scenario.cfg", emit_scenario(s));
    {
        auto os = out.open("hits.csv");
        write_hits_csv(rows, os);
    }
    json j = summary_header("irreducibility", s);
    j["t"] = t;
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"center", vec_json(r.center)}, {"radius", r.radius}, {"hits", r.hits}, {"n", r.n},
                       {"estimate", r.estimate}, {"ci_lo", r.ci_lo}, {"ci_hi", r.ci_hi}});
        std::cout << "ball r = " << fmt(r.radius, 3) << ": " << r.hits << "/" << r.n << " hits, 95% CI ["
                  << fmt(r.ci_lo, 3) << ", " << fmt(r.ci_hi, 3) << "]\n";
    }
    j["targets"] = arr;
    out.write_json("summary.json", j);
    return finish(out, g_cancel.load());
}

int cmd_fk(const Common& c, std::optional<double> t_flag, const std::string& x_flag) {
    Scenario s = load(c);
    if (!s.has("fk")) throw InvalidArgument("fk needs an [fk] section");
    if (t_flag) s.values["fk"]["t"] = format_number(*t_flag);
    if (!x_flag.empty()) s.values["fk"]["x"] = x_flag;
    s = parse_scenario(emit_scenario(s));   // re-validates the overrides
    CauchyProblem p;
    p.model = s.model();
    p.T = s.number("fk", "T");
    const Expr f = s.expr("fk", "f"), rho = s.expr("fk", "rho", true), g = s.expr("fk", "g", true);
    p.f = [f](const Vec& x) { return f(x); };
    if (!rho.is_constant() || rho(Vec::Zero(s.dim())) != 0.0) p.rho = [rho](double t, const Vec& x) { return rho(x, t); };
    if (!g.is_constant() || g(Vec::Zero(s.dim())) != 0.0) p.g = [g](double t, const Vec& x) { return g(x, t); };
    const double t = s.number("fk", "t");
    const Vec x = s.vector("fk", "x");
    const FeynmanKacResult r = feynman_kac(p, t, x, sim_config(s));

    Artifacts out(c.out);
    out.write_text("scenario.cfg", emit_scenario(s));
    json j = summary_header("fk", s);
    j["T"] = p.T;
    j["t"] = t;
    j["x"] = vec_json(x);
    j["estimate"] = num(r.estimate);
    j["se"] = num(r.se);
    j["n_used"] = r.n_used;
    j["n_exploded"] = r.n_exploded;
    j["warnings"] = r.warnings;
    out.write_json("fk.json", j);
    std::cout << "u(" << fmt(t) << ", x) = " << fmt(r.estimate, 8) << " +- " << fmt(r.se, 3) << " (" << r.n_used
              << " paths)\n";
    for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
    return finish(out, g_cancel.load());
}

int cmd_levy_sample(const Common& c, long n) {
    const Scenario s = load(c);
    const Model m = s.model();
    if (m.levy.is_zero()) throw InvalidArgument("the model has no Levy measure");
    const double eps = s.number("sim", "truncation");
    const LevyMeasure window = m.levy.mass() < kInf ? m.levy : m.levy.restrict(eps, kInf);
    const MarkSampler sampler(window);
    const long count = n > 0 ? n : s.integer("sim", "paths");
    Stream st(static_cast<std::uint64_t>(s.integer("sim", "seed")), 0, Substream::Auxiliary);

    Artifacts out(c.out);
    out.write_text("scenario.cfg", emit_scenario(s));
    auto os = out.open("levy.csv");
    const int k = window.mark_dim();
    for (int j = 0; j < k; ++j) os << "u_" << j + 1 << ",";
    os << "norm\n";
    long written = 0;
    for (; written < count && !g_cancel.load(); ++written) {
        const Vec u = sampler.sample(st);
        for (int j = 0; j < k; ++j) os << u[j] << ",";
        os << u.norm() << "\n";
    }
    json j = summary_header("levy-sample", s);
    j["samples"] = written;
    j["window_mass"] = num(sampler.mass());
    j["truncation"] = m.levy.mass() < kInf ? 0.0 : eps;
    out.write_json("summary.json", j);
    std::cout << written << " marks from a window of mass " << fmt(sampler.mass()) << "\n";
    return finish(out, g_cancel.load());
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_sigint);

    CLI::App app{"Simulation, coupling and assumption checks for jump SDEs"};
    app.footer(kFormats);
    app.require_subcommand(1);

    Common common;
    std::string emit;
    auto* ex = app.add_subcommand("examples", "list the built-in models");
    ex->add_option("--emit", emit, "print a scenario template for a built-in");

    int store_every = 0;
    bool binary = false;
    auto* sim = app.add_subcommand("simulate", "simulate paths");
    add_common(sim, common);
    sim->add_option("--store-every", store_every, "store every k-th grid time instead of endpoints only");
    sim->add_flag("--binary", binary, "also write ensemble.bin");

    auto* cpl = app.add_subcommand("couple", "simulate coupled pairs");
    add_common(cpl, common);

    CheckFlags cf;
    auto* chk = app.add_subcommand("check", "evaluate assumption inequalities on probe sets");
    add_common(chk, common);
    chk->add_flag("--nonexplosion", cf.nonexplosion, "growth condition");
    chk->add_flag("--pathwise-a", cf.pathwise_a, "pathwise uniqueness, split form");
    chk->add_flag("--pathwise-b", cf.pathwise_b, "pathwise uniqueness, combined form");
    chk->add_flag("--feller", cf.feller, "Feller condition");
    chk->add_flag("--strong-feller", cf.strong_feller, "strong Feller condition");
    chk->add_flag("--nonconfluence", cf.nonconfluence, "non-confluence with V = r^-2");
    chk->add_option("--drift-ergodicity", cf.drift_ergodicity, "Lyapunov drift condition, V=abs2 or V=quartic");

    auto* erg = app.add_subcommand("ergodicity", "fit the convergence rate to the long-run law");
    add_common(erg, common);

    auto* irr = app.add_subcommand("irreducibility", "hitting probabilities of target balls");
    add_common(irr, common);

    std::optional<double> fk_t;
    std::string fk_x;
    auto* fk = app.add_subcommand("fk", "Feynman-Kac estimate of the Cauchy problem");
    add_common(fk, common);
    fk->add_option("--t", fk_t, "start time (overrides fk.t)");
    fk->add_option("--x", fk_x, "start point a,b,... (overrides fk.x)");

    long n_marks = 0;
    auto* lev = app.add_subcommand("levy-sample", "sample marks from the Levy measure");
    add_common(lev, common);
    lev->add_option("--n", n_marks, "number of marks (default sim.paths)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*ex) return cmd_examples(emit);
        if (*sim) return cmd_simulate(common, store_every, binary);
        if (*cpl) return cmd_couple(common);
        if (*chk) return cmd_check(common, cf);
        if (*erg) return cmd_ergodicity(common);
        if (*irr) return cmd_irreducibility(common);
        if (*fk) return cmd_fk(common, fk_t, fk_x);
        if (*lev) return cmd_levy_sample(common, n_marks);
    } catch (const ExprError& e) {
        std::cerr << "error [" << e.module() << "] " << common.scenario << ": " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
