#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jumpsde/analysis.hpp"
#include "jumpsde/builtin.hpp"
#include "jumpsde/scenario.hpp"
#include "jumpsde/verifier.hpp"

namespace py = pybind11;
using namespace jumpsde;

namespace {

SimConfig make_config(double dt, double horizon, long n_paths, std::uint64_t seed, const std::string& scheme,
                      int threads) {
    SimConfig c;
    c.dt = dt;
    c.horizon = horizon;
    c.n_paths = n_paths;
    c.master_seed = seed;
    c.scheme = scheme_from_string(scheme);
    c.threads = threads;
    return c;
}

TestFunction test_function(const std::string& name) {
    if (name == "abs2") return TestFunction::abs2();
    if (name == "quartic") return TestFunction::quartic();
    throw InvalidArgument("unknown test function '" + name + "' (abs2, quartic)");
}

Mat rows_of(const std::vector<Vec>& pts, int d) {
    Mat out(static_cast<long>(pts.size()), d);
    for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<long>(i)) = pts[i].transpose();
    return out;
}

std::vector<Vec> points_of(const Mat& a) {
    std::vector<Vec> out;
    for (long i = 0; i < a.rows(); ++i) out.push_back(a.row(i).transpose());
    return out;
}

}  // namespace

PYBIND11_MODULE(_jumpsde, mod) {
    mod.doc() = "Simulation and assumption checks for jump SDEs";

    py::register_exception<Error>(mod, "Error", PyExc_RuntimeError);

    py::class_<Model>(mod, "Model")
        .def_readonly("name", &Model::name)
        .def_readonly("origin", &Model::origin)
        .def_readonly("d", &Model::d)
        .def_readonly("noise_dim", &Model::noise_dim)
        .def("drift", &Model::b, py::arg("x"))
        .def("sigma", &Model::sigma, py::arg("x"))
        .def("__repr__", [](const Model& m) { return "<Model " + m.name + " d=" + std::to_string(m.d) + ">"; });

    mod.def("builtin_names", &builtin_names);
    mod.def("builtin", &builtin_by_name, py::arg("name"), py::arg("d") = 2);
    mod.def("normalize_scenario", &normalize_scenario, py::arg("text"));
    mod.def(
        "model_from_scenario", [](const std::string& text) { return parse_scenario(text).model(); }, py::arg("text"));
    mod.def(
        "eval_expr",
        [](const std::string& text, const Vec& x, double t) {
            return Expr::parse(text, {static_cast<int>(x.size()), true, false})(x, t);
        },
        py::arg("text"), py::arg("x"), py::arg("t") = 0.0);

    mod.def(
        "generator",
        [](const Model& m, const std::string& f, const Vec& x) { return apply_generator(m, test_function(f), x).value; },
        py::arg("model"), py::arg("f"), py::arg("x"));

    mod.def(
        "simulate",
        [](const Model& m, const Vec& x0, double dt, double horizon, long n_paths, std::uint64_t seed,
           const std::string& scheme, int threads) {
            const SimConfig cfg = make_config(dt, horizon, n_paths, seed, scheme, threads);
            PathEnsemble e;
            {
                py::gil_scoped_release release;
                e = simulate(m, x0, cfg);
            }
            std::vector<std::string> status;
            for (auto s : e.status) status.emplace_back(to_string(s));
            py::dict out;
            out["endpoints"] = rows_of(e.endpoints(false), m.d);
            out["status"] = status;
            out["event_time"] = e.event_time;
            return out;
        },
        py::arg("model"), py::arg("x0"), py::arg("dt") = 1e-3, py::arg("horizon") = 1.0, py::arg("n_paths") = 1000,
        py::arg("seed") = 0, py::arg("scheme") = "tamed-euler", py::arg("threads") = 0);

    mod.def(
        "explosion_probability",
        [](const Model& m, const Vec& x0, double dt, double horizon, long n_paths, std::uint64_t seed,
           const std::string& scheme) {
            ExplosionEstimate ex;
            {
                py::gil_scoped_release release;
                ex = explosion_probability(m, x0, make_config(dt, horizon, n_paths, seed, scheme, 0));
            }
            py::dict out;
            out["exploded"] = ex.exploded;
            out["n"] = ex.n;
            out["estimate"] = ex.estimate;
            out["ci"] = py::make_tuple(ex.ci_lo, ex.ci_hi);
            out["min_time"] = ex.min_time;
            return out;
        },
        py::arg("model"), py::arg("x0"), py::arg("dt") = 1e-3, py::arg("horizon") = 1.0, py::arg("n_paths") = 1000,
        py::arg("seed") = 0, py::arg("scheme") = "tamed-euler");

    mod.def(
        "wasserstein_bounded",
        [](const Mat& a, const Mat& b) {
            return wasserstein_bounded(EmpiricalLaw::uniform(points_of(a)), EmpiricalLaw::uniform(points_of(b)));
        },
        py::arg("a"), py::arg("b"));

    mod.def(
        "feynman_kac",
        [](const Model& m, double T, const std::string& f, const std::string& rho, double t, const Vec& x, double dt,
           long n_paths, std::uint64_t seed) {
            CauchyProblem p;
            p.model = m;
            p.T = T;
            const Expr fe = Expr::parse(f, {m.d});
            const Expr re = Expr::parse(rho, {m.d, true});
            p.f = [fe](const Vec& y) { return fe(y); };
            p.rho = [re](double s, const Vec& y) { return re(y, s); };
            FeynmanKacResult r;
            {
                py::gil_scoped_release release;
                SimConfig cfg = make_config(dt, T, n_paths, seed, "tamed-euler", 0);
                r = feynman_kac(p, t, x, cfg);
            }
            return py::make_tuple(r.estimate, r.se);
        },
        py::arg("model"), py::arg("T"), py::arg("f"), py::arg("rho") = "0", py::arg("t") = 0.0, py::arg("x"),
        py::arg("dt") = 1e-2, py::arg("n_paths") = 10000, py::arg("seed") = 0);

    mod.def(
        "check_drift_ergodicity",
        [](const Model& m, const std::string& V, long count, double radius, std::uint64_t seed) {
            const ProbeSet ps = ProbeSet::ball(m.d, count, radius, seed);
            return check_drift_ergodicity(m, test_function(V), std::nullopt, std::nullopt, ps).to_json().dump();
        },
        py::arg("model"), py::arg("V") = "abs2", py::arg("count") = 500, py::arg("radius") = 5.0, py::arg("seed") = 0);
}
