#pragma once

#include "jumpsde/model.hpp"
#include "jumpsde/simulator.hpp"
#include "jumpsde/test_function.hpp"

#include <iosfwd>
#include <limits>
#include <vector>

namespace jumpsde {

/// Symmetric PSD square root by spectral decomposition; eigenvalues in
/// [-tol, 0) are clamped to 0. Throws NotPSD below -tol.
Mat sqrt_spd(const Mat& a, double tol = 1e-10);

enum class CouplingKind { Synchronous, Reflection };
const char* to_string(CouplingKind k);
CouplingKind coupling_from_string(const std::string& s);

struct CouplingScheme {
    CouplingKind kind = CouplingKind::Synchronous;
    double lambda0 = 0.0;       ///< reflection only
    double glue_radius = 1e-8;
};

struct CoupledEnsemble {
    int d = 0;
    CouplingScheme scheme;
    SimConfig cfg;
    std::vector<double> times;          ///< stored grid when cfg.store == Full
    std::vector<double> x_states, z_states;  ///< Full: pairs * times * d; else pairs * d
    std::vector<double> coupling_time;  ///< +inf if not glued before T
    std::vector<double> max_separation;
    std::vector<double> min_separation;
    std::vector<PathStatus> x_status, z_status;
    bool cancelled = false;

    long n_pairs() const { return static_cast<long>(coupling_time.size()); }
    bool glued(long i) const { return std::isfinite(coupling_time[i]); }
    Vec x_end(long i) const;
    Vec z_end(long i) const;
};

/// Simulates (X, Z) from (x0, z0) on shared noise. Synchronous: same W and
/// same jump marks. Reflection: X gets sqrt(l0) dW1 + s(X) dW2 and Z gets
/// sqrt(l0) (I - 2 e e^T) dW1 + s(Z) dW2 with s = sqrt_spd(a - l0 I) and
/// e = (X - Z)/|X - Z|; marks are shared. Pairs glue when |X - Z| drops
/// below glue_radius (reflection also glues when the pair crosses, i.e.
/// <X - Z, e> <= 0 after a step). After gluing Z follows X.
CoupledEnsemble couple(const Model& m, const Vec& x0, const Vec& z0, const CouplingScheme& scheme,
                       const SimConfig& cfg);

/// Diffusion part of one coupled step for noise (w1, w2), each N(0, I)
/// scaled by the caller; returns the stacked 2d increment (dX; dZ).
Vec pair_diffusion_increment(const Model& m, const CouplingScheme& scheme, const Vec& x, const Vec& z, const Vec& w1,
                             const Vec& w2);
/// The 2d x 2d diffusion matrix [[a(x), g], [g^T, a(z)]] of the pair.
Mat pair_diffusion_matrix(const Model& m, const CouplingScheme& scheme, const Vec& x, const Vec& z);

/// Generator of the coupled pair applied to F(|x - z|):
/// F''/2 Abar + F'/(2r) (tr A - Abar + 2B) + shared-mark jump integral,
/// with A = a(x) + a(z) - g - g^T, Abar = e^T A e, B = <x - z, b(x) - b(z)>.
struct TwoPointValue {
    double value = 0.0;
    double diffusion = 0.0;   ///< second-order part
    double drift = 0.0;       ///< F'/r B
    double jump = 0.0;
    double quad_error = 0.0;
};
/// Basic (synchronous) coupling, g = sigma(x) sigma(z)^T. Throws
/// SingularRadius for |x - z| < 1e-12.
TwoPointValue basic_coupling_generator(const Model& m, const RadialFunction& V, const Vec& x, const Vec& z,
                                       const LevyQuadOptions& opt = {});
/// Coupling by reflection, g = l0 (I - 2 e e^T) + s(x) s(z)^T.
TwoPointValue reflection_generator(const Model& m, const RadialFunction& F, double lambda0, const Vec& x,
                                   const Vec& z, const LevyQuadOptions& opt = {});

/// 0.99 * min over the points of the smallest eigenvalue of a(x).
double estimate_lambda0(const Model& m, const std::vector<Vec>& points);

/// pair_id,T,max_separation,glued
void write_coupling_csv(const CoupledEnsemble& e, std::ostream& os);

}  // namespace jumpsde
