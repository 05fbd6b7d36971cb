#pragma once

#include "jumpsde/coupling.hpp"
#include "jumpsde/model.hpp"
#include "jumpsde/modulus.hpp"
#include "jumpsde/test_function.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jumpsde {

/// Where the inequalities are sampled. Point checks use points(); the
/// two-point (modulus) checks use pairs().
struct ProbeSet {
    enum class Kind { Grid, Ball, Pairs, Explicit };

    Kind kind = Kind::Ball;
    int d = 1;
    long count = 0;          ///< Grid: points per axis; otherwise number of probes
    double radius = 1.0;
    double delta0 = 0.1;     ///< Pairs: largest separation
    double min_sep = 1e-8;   ///< Pairs: smallest separation
    std::uint64_t seed = 0;
    std::vector<Vec> xs, zs; ///< Explicit probes (zs empty for point sets)

    /// count^d points of the cube [-R, R]^d.
    static ProbeSet grid(int d, long per_axis, double R);
    static ProbeSet ball(int d, long count, double R, std::uint64_t seed = 0);
    /// |x| v |z| <= R, separations log-uniform (stratified) in [min_sep, delta0].
    static ProbeSet pairs(int d, long count, double R, double delta0, std::uint64_t seed = 0, double min_sep = 1e-8);
    static ProbeSet explicit_points(std::vector<Vec> xs);
    static ProbeSet explicit_pairs(std::vector<Vec> xs, std::vector<Vec> zs);

    std::vector<Vec> points() const;
    /// Throws InvalidArgument for point-only kinds.
    std::vector<std::pair<Vec, Vec>> pair_list() const;
    nlohmann::ordered_json describe() const;
};

enum class CheckStatus { Holds, Violated, Inconclusive };
/// "holds-on-probes", "violated", "inconclusive".
const char* to_string(CheckStatus s);

struct Witness {
    Vec x;
    Vec z;   ///< empty for point checks
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  ///< lhs - rhs
};

/// Outcome of one inequality check over a probe set. The margin is the
/// largest lhs - rhs seen (positive means violated at that probe); a probe
/// counts as violated when its margin exceeds 1e-9 + quadrature error +
/// a roundoff floor proportional to the size of the terms.
struct CheckReport {
    std::string check;
    CheckStatus status = CheckStatus::Holds;
    double margin = -std::numeric_limits<double>::infinity();
    std::optional<Witness> witness;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    std::vector<std::string> notes;
    std::vector<CheckReport> sub;
    long n_probes = 0;
    long n_violated = 0;
    long n_failed = 0;   ///< probes where quadrature failed

    bool holds() const { return status == CheckStatus::Holds; }
    nlohmann::ordered_json to_json() const;
};

constexpr int kReportSchemaVersion = 1;

struct VerifyOptions {
    double tol = 1e-9;
    int threads = 0;
    LevyQuadOptions quad;
    /// Integrate the jump terms over the small part only (large jumps are
    /// then added by interlacing).
    bool small_jumps_only = false;
    /// check_nonconfluence: jump-injectivity constant and marks per pair.
    double delta = 0.5;
    int n_marks = 256;
    double mark_truncation = 1e-3;
    std::uint64_t seed = 0;
};

/// 2<x,b> + |sigma|^2 + int |c|^2 dnu <= kappa (|x|^2 zeta(|x|^2) + 1).
/// Without kappa the smallest workable one is fitted and reported.
CheckReport check_nonexplosion(const Model& m, const ModulusFunction& zeta, std::optional<double> kappa,
                               const ProbeSet& probes, const VerifyOptions& opt = {});

/// 2<z-x, b(z)-b(x)> + |sigma(z)-sigma(x)|^2 <= kR |z-x| rho(|z-x|) and
/// int |c(z,u)-c(x,u)| dnu <= kR rho(|z-x|).
CheckReport check_pathwise_A(const Model& m, const ModulusFunction& rho, std::optional<double> kappa_R,
                             const ProbeSet& probes, const VerifyOptions& opt = {});

/// 2<x-z, b(x)-b(z)> + |sigma(x)-sigma(z)|^2 + int |dc|^2 dnu <= kR varrho(|x-z|^2).
CheckReport check_pathwise_B(const Model& m, const ModulusFunction& varrho, std::optional<double> kappa_R,
                             const ProbeSet& probes, const VerifyOptions& opt = {});

/// int |dc|^2 ^ 4|x-z||dc| dnu + 2<x-z, db> + |dsigma|^2 <= 2 kR |x-z| varrho(|x-z|).
CheckReport check_feller(const Model& m, const ModulusFunction& varrho, std::optional<double> kappa_R,
                         const ProbeSet& probes, const VerifyOptions& opt = {});

/// (i) lambda_min(a(x)) >= lambda0 and (ii) the capped-jump inequality with
/// sigma replaced by sigma_l0 = sqrt(a - lambda0 I) and 2 k0 |x-z| vartheta(|x-z|)
/// on the right.
CheckReport check_strong_feller(const Model& m, double lambda0, const ModulusFunction& vartheta,
                                std::optional<double> kappa0, const ProbeSet& probes, const VerifyOptions& opt = {});

/// psi(V(|x-z|)) >= basic_coupling_generator(V)(x, z), plus the sampled
/// frequency of marks with |x - z + dc| <= delta |x - z|. Without psi a
/// linear psi(v) = K v is fitted.
CheckReport check_nonconfluence(const Model& m, const RadialFunction& V, std::optional<ModulusFunction> psi,
                                const ProbeSet& probes, const VerifyOptions& opt = {});

/// L V + alpha V - beta <= 0. Without alpha, alpha is half the smallest
/// -LV/V on the outer probe shell (|x| >= 0.8 max |x|); without beta,
/// beta = max(LV + alpha V). Reports LV(0) as `LV_origin`.
CheckReport check_drift_ergodicity(const Model& m, const TestFunction& V, std::optional<double> alpha,
                                   std::optional<double> beta, const ProbeSet& points, const VerifyOptions& opt = {});

/// Conditions for the psi front-end dX = psi(X-) dL.
struct LevyDrivenConditions {
    std::optional<ModulusFunction> zeta;     ///< growth |psi|^2 <= K (|x|^2 zeta + 1)
    std::optional<ModulusFunction> varrho;   ///< |psi(x)-psi(z)|^2 <= K varrho(|x-z|^2)
    std::optional<double> lambda0;           ///< <xi, psi Q psi^T xi> >= lambda0 |xi|^2
    std::optional<double> K;                 ///< fitted when absent
};
CheckReport check_levy_driven(const std::function<Mat(const Vec&)>& psi, const Mat& Q,
                              const LevyDrivenConditions& cond, const ProbeSet& pairs,
                              const VerifyOptions& opt = {});

/// V(|x+y|) - V(|x|) - DV(x).y <= K (|y|^2 v |x.y|) / |x|^4 for V = r^-2,
/// K = max(2, 2/delta^2), whenever |x + y| >= delta |x|.
struct InverseSquareBound {
    double lhs = 0.0;
    double rhs = 0.0;
    double K = 0.0;
    bool applicable = false;   ///< |x + y| >= delta |x| and x != 0
};
InverseSquareBound inverse_square_bound(const Vec& x, const Vec& y, double delta);

}  // namespace jumpsde
